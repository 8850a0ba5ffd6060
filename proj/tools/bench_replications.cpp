// Times the replication harness against its serial reference on the same
// plan and verifies the two produce identical results, so the parallel path
// can never drift from the tested one.
//
// usage: bench_replications [n] [replications] [workers]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "isrisk/experiments.hpp"

namespace {

bool same_value(double a, double b) {
    return (std::isnan(a) && std::isnan(b)) || a == b;
}

bool same_result(const isrisk::ExperimentResult& a, const isrisk::ExperimentResult& b) {
    if (a.rows.size() != b.rows.size()) return false;
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const isrisk::RunRow& x = a.rows[i];
        const isrisk::RunRow& y = b.rows[i];
        if (x.n != y.n || x.mass_deficient != y.mass_deficient) return false;
        if (!same_value(x.mean_error, y.mean_error)) return false;
        if (!same_value(x.var_sqrt_n_error, y.var_sqrt_n_error)) return false;
        if (x.cells.size() != y.cells.size()) return false;
        for (std::size_t j = 0; j < x.cells.size(); ++j) {
            if (x.cells[j].exceedances != y.cells[j].exceedances) return false;
            if (!same_value(x.cells[j].p_hat, y.cells[j].p_hat)) return false;
        }
    }
    return true;
}

template <typename Run>
double timed(Run&& run, isrisk::ExperimentResult& out) {
    auto t0 = std::chrono::steady_clock::now();
    out = run();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

int main(int argc, char** argv) {
    std::size_t n = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000;
    std::size_t replications = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 200;
    int workers = argc > 3 ? std::atoi(argv[3]) : 0;

    isrisk::AnalyticDistribution mu = isrisk::AnalyticDistribution::exponential(1.0);
    isrisk::AnalyticDistribution nu = isrisk::AnalyticDistribution::exponential(0.5);
    isrisk::ExperimentPlan plan(mu, isrisk::make_scheme(mu, nu),
                                isrisk::TargetSpec::expected_shortfall(0.05));
    plan.n_grid = {n};
    plan.replications = replications;
    plan.delta_grid = {0.5, 1.0};
    plan.seed = 7;

    std::printf("replication harness: n=%zu R=%zu workers=%d\n", n, replications, workers);

    isrisk::ExperimentResult serial, parallel;
    double t_serial = timed([&] { return isrisk::run_experiment_serial(plan); }, serial);
    std::printf("  serial reference: %8.3f s\n", t_serial);
    double t_parallel = timed([&] { return isrisk::run_experiment(plan, workers); }, parallel);
    std::printf("  parallel kernel:  %8.3f s  (speedup x%.2f)\n",
                t_parallel, t_serial / t_parallel);

    if (!same_result(serial, parallel)) {
        std::printf("MISMATCH: parallel result differs from the serial reference\n");
        return 1;
    }
    std::printf("  results identical across both paths\n");
    return 0;
}
