#include "isrisk/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "isrisk/errors.hpp"
#include "isrisk/rate_functions.hpp"

namespace isrisk {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Runs fn(r) for r in [0, count), in parallel when requested. Results must be
// written to per-index slots; the first exception wins and is rethrown after
// the loop so a bad replication cannot take down the process mid-region.
template <typename Body>
void for_each_replication(std::size_t count, bool parallel, int workers, Body&& fn) {
    std::exception_ptr eptr;
    std::mutex guard;
    auto wrapped = [&](std::size_t r) {
        try {
            fn(r);
        } catch (...) {
            std::lock_guard<std::mutex> lock(guard);
            if (!eptr) eptr = std::current_exception();
        }
    };
#ifdef _OPENMP
    if (parallel) {
        int threads = workers > 0 ? workers : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
        for (long long r = 0; r < static_cast<long long>(count); ++r) {
            wrapped(static_cast<std::size_t>(r));
        }
        if (eptr) std::rethrow_exception(eptr);
        return;
    }
#else
    (void)parallel;
    (void)workers;
#endif
    for (std::size_t r = 0; r < count; ++r) wrapped(r);
    if (eptr) std::rethrow_exception(eptr);
}

ExperimentResult run_impl(const ExperimentPlan& plan, bool parallel, int workers) {
    plan.validate();
    CheckResult feasibility = check_scheme_feasibility(plan.scheme);
    if (feasibility.verdict == Verdict::fail && !plan.allow_infeasible) {
        throw infeasible_error("scheme " + plan.scheme.label() + ": " + feasibility.reason);
    }

    ExperimentResult out;
    out.target = plan.target;
    out.truth = plan.target.truth(plan.mu);
    out.replications = plan.replications;
    out.deltas = plan.delta_grid;

    const std::size_t R = plan.replications;
    std::vector<double> errors(R);
    std::vector<unsigned char> deficient(R);

    for (std::size_t n : plan.n_grid) {
        auto t0 = std::chrono::steady_clock::now();
        for_each_replication(R, parallel, workers, [&](std::size_t r) {
            RandomStream stream(plan.seed, r);
            std::vector<double> draws = sample(plan.scheme.sampler(), stream, n);
            WeightedSample ws = build_weighted_sample(draws, plan.scheme);
            bool bad = false;
            double est = plan.target.estimate(ws, bad);
            deficient[r] = bad ? 1 : 0;
            errors[r] = bad ? kNaN : est - out.truth;
        });

        RunRow row;
        row.n = n;
        row.lambda_n = plan.lambda.lambda(static_cast<double>(n));
        row.b_n = plan.lambda.b(static_cast<double>(n));

        std::size_t valid = 0;
        double sum = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            if (deficient[r]) {
                ++row.mass_deficient;
                if (plan.record_deficient_indices) row.deficient_replications.push_back(r);
            } else {
                ++valid;
                sum += errors[r];
            }
        }
        row.mean_error = valid ? sum / static_cast<double>(valid) : kNaN;
        if (valid >= 2) {
            double ss = 0.0;
            for (std::size_t r = 0; r < R; ++r) {
                if (deficient[r]) continue;
                double d = errors[r] - row.mean_error;
                ss += d * d;
            }
            row.var_sqrt_n_error = static_cast<double>(n) * ss / static_cast<double>(valid - 1);
        } else {
            row.var_sqrt_n_error = kNaN;
        }

        for (double delta : plan.delta_grid) {
            DeltaCell cell;
            cell.delta = delta;
            for (std::size_t r = 0; r < R; ++r) {
                if (!deficient[r] && row.b_n * std::abs(errors[r]) >= delta) ++cell.exceedances;
            }
            if (cell.exceedances > 0) {
                cell.censored = false;
                cell.p_hat = static_cast<double>(cell.exceedances) / static_cast<double>(R);
                cell.scaled_log = std::log(cell.p_hat) / (row.lambda_n * row.lambda_n);
            } else {
                cell.censored = true;
                cell.p_hat = kNaN;
                cell.scaled_log = kNaN;
            }
            row.cells.push_back(cell);
        }

        row.wall_seconds = std::chrono::duration<double>(
            std::chrono::steady_clock::now() - t0).count();
        out.rows.push_back(std::move(row));
    }
    return out;
}

} // namespace

TargetSpec TargetSpec::tail(double t) {
    TargetSpec s;
    s.kind = TargetKind::tail;
    s.threshold = t;
    return s;
}

TargetSpec TargetSpec::quantile(double p) {
    TargetSpec s;
    s.kind = TargetKind::quantile;
    s.p = p;
    return s;
}

TargetSpec TargetSpec::expected_shortfall(double p) {
    TargetSpec s;
    s.kind = TargetKind::expected_shortfall;
    s.p = p;
    return s;
}

TargetSpec TargetSpec::truncated_es(double q, double p) {
    TargetSpec s;
    s.kind = TargetKind::truncated_es;
    s.q = q;
    s.p = p;
    return s;
}

void TargetSpec::validate() const {
    switch (kind) {
    case TargetKind::tail:
        if (!std::isfinite(threshold)) throw config_error("tail threshold must be finite");
        return;
    case TargetKind::quantile:
    case TargetKind::expected_shortfall:
        if (!(p > 0.0 && p < 1.0)) throw config_error("target level p must lie in (0,1)");
        return;
    case TargetKind::truncated_es:
        if (!(p > 0.0 && p < 1.0)) throw config_error("target level p must lie in (0,1)");
        if (!(q > 0.0 && q < p)) throw config_error("truncation level must satisfy 0 < q < p");
        return;
    }
    throw config_error("unknown target kind");
}

double TargetSpec::truth(const AnalyticDistribution& mu) const {
    switch (kind) {
    case TargetKind::tail: return mu.tail(threshold);
    case TargetKind::quantile: return mu.quantile(p);
    case TargetKind::expected_shortfall: return mu.expected_shortfall(p);
    case TargetKind::truncated_es: return mu.truncated_expected_shortfall(q, p);
    }
    throw config_error("unknown target kind");
}

double TargetSpec::estimate(const WeightedSample& ws, bool& mass_deficient) const {
    mass_deficient = false;
    switch (kind) {
    case TargetKind::tail:
        return empirical_tail(ws, threshold);
    case TargetKind::quantile: {
        QuantileResult r = empirical_quantile(ws, p);
        mass_deficient = r.mass_deficient;
        return mass_deficient ? kNaN : r.value;
    }
    case TargetKind::expected_shortfall:
        if (p >= ws.total_mass()) {
            mass_deficient = true;
            return kNaN;
        }
        return isrisk::expected_shortfall(ws, p);
    case TargetKind::truncated_es:
        if (p >= ws.total_mass()) {
            mass_deficient = true;
            return kNaN;
        }
        return isrisk::truncated_expected_shortfall(ws, q, p);
    }
    throw config_error("unknown target kind");
}

std::string TargetSpec::label() const {
    switch (kind) {
    case TargetKind::tail: return "tail(" + fmt(threshold) + ")";
    case TargetKind::quantile: return "quantile(" + fmt(p) + ")";
    case TargetKind::expected_shortfall: return "expected_shortfall(" + fmt(p) + ")";
    case TargetKind::truncated_es: return "truncated_es(" + fmt(q) + "," + fmt(p) + ")";
    }
    return "?";
}

void ExperimentPlan::validate() const {
    target.validate();
    lambda.validate();
    if (n_grid.empty()) throw config_error("n_grid must be nonempty");
    for (std::size_t i = 0; i < n_grid.size(); ++i) {
        if (n_grid[i] == 0) throw config_error("n_grid entries must be positive");
        if (i > 0 && n_grid[i] <= n_grid[i - 1]) {
            throw config_error("n_grid must be strictly increasing");
        }
    }
    if (replications == 0) throw config_error("replications must be positive");
    for (double d : delta_grid) {
        if (!(d > 0.0)) throw config_error("delta grid entries must be positive");
    }
}

ExperimentResult run_experiment(const ExperimentPlan& plan, int workers) {
    return run_impl(plan, true, workers);
}

ExperimentResult run_experiment_serial(const ExperimentPlan& plan) {
    return run_impl(plan, false, 0);
}

std::string to_delimited(const ExperimentResult& result) {
    std::string out = "# n\tlambda_n\tb_n\ttarget\tmean_error\tvar_sqrt_n_error";
    for (std::size_t i = 1; i <= result.deltas.size(); ++i) {
        out += "\tp_hat_" + std::to_string(i) + "\tscaled_log_" + std::to_string(i);
    }
    for (std::size_t i = 1; i <= result.deltas.size(); ++i) {
        out += "\tcensored_" + std::to_string(i);
    }
    out += "\tmass_deficient\n";
    for (const RunRow& row : result.rows) {
        out += std::to_string(row.n);
        out += "\t" + fmt(row.lambda_n) + "\t" + fmt(row.b_n) + "\t" + fmt(result.truth);
        out += "\t" + fmt(row.mean_error) + "\t" + fmt(row.var_sqrt_n_error);
        for (const DeltaCell& cell : row.cells) {
            out += "\t" + fmt(cell.p_hat) + "\t" + fmt(cell.scaled_log);
        }
        for (const DeltaCell& cell : row.cells) {
            out += cell.censored ? "\t1" : "\t0";
        }
        out += "\t" + std::to_string(row.mass_deficient) + "\n";
    }
    return out;
}

TrendReport mdp_decay_check(const ExperimentResult& result, double rate_value, double delta) {
    std::size_t column = result.deltas.size();
    for (std::size_t i = 0; i < result.deltas.size(); ++i) {
        if (std::abs(result.deltas[i] - delta) <= 1e-12 * std::max(1.0, std::abs(delta))) {
            column = i;
            break;
        }
    }
    if (column == result.deltas.size()) {
        throw std::domain_error("delta does not match any column of the result");
    }
    TrendReport report;
    report.delta = delta;
    report.resolution = result.replications
        ? 1.0 / static_cast<double>(result.replications) : 0.0;
    for (const RunRow& row : result.rows) {
        const DeltaCell& cell = row.cells.at(column);
        if (cell.censored || !(cell.p_hat > 0.0)) continue;
        double scaled = std::log(cell.p_hat) / (row.lambda_n * row.lambda_n);
        report.scaled.emplace_back(static_cast<double>(row.n), scaled);
    }
    if (report.scaled.size() < 3) {
        report.verdict = Verdict::inconclusive;
        report.gap_at_largest = kNaN;
        report.note = "fewer than 3 resolvable points; probability floor 1/R = "
                      + fmt(report.resolution);
        return report;
    }
    // Trend toward the limit: the distance |scaled - (-rate_value)| must shrink
    // monotonically over the resolvable points.  When the sequence sits above the
    // limit this is plain non-increase of the scaled values themselves.
    bool monotone = true;
    for (std::size_t i = 1; i < report.scaled.size(); ++i) {
        double prev = std::abs(report.scaled[i - 1].second + rate_value);
        double next = std::abs(report.scaled[i].second + rate_value);
        if (next > prev + 1e-12) monotone = false;
    }
    report.verdict = monotone ? Verdict::pass : Verdict::fail;
    report.gap_at_largest = report.scaled.back().second + rate_value;
    report.note = monotone
        ? "gap to the rate bound non-increasing (trend only, not convergence)"
        : "gap to the rate bound not monotone";
    return report;
}

ExpApproxReport exp_approx_diagnostics(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                                       double p, double q, double delta, std::size_t n,
                                       std::size_t replications, std::uint64_t seed,
                                       const LambdaSpec& lambda, int workers) {
    if (!(p > 0.0 && p < 1.0)) throw config_error("p must lie in (0,1)");
    if (!(q > 0.0 && q < p)) throw config_error("need 0 < q < p");
    if (!(delta > 0.0)) throw config_error("delta must be positive");
    if (n == 0 || replications == 0) throw config_error("n and replications must be positive");
    lambda.validate();

    double tq = mu.quantile(q);
    double tail_area_truth = mu.upper_tail_integral(tq);
    double partial_truth = q * mu.expected_shortfall(q);  // integral of T^{-1} over (0,q)
    double b_n = lambda.b(static_cast<double>(n));

    const std::size_t R = replications;
    // Per-replication event indicators: gap, quantile, integral, product,
    // product split, quantile split, deficiency.
    std::vector<unsigned char> hits(R * 7, 0);
    for_each_replication(R, true, workers, [&](std::size_t r) {
        RandomStream stream(seed, r);
        std::vector<double> draws = sample(scheme.sampler(), stream, n);
        WeightedSample ws = build_weighted_sample(draws, scheme);
        unsigned char* slot = &hits[r * 7];
        QuantileResult qr = empirical_quantile(ws, q);
        if (qr.mass_deficient) {
            slot[6] = 1;
            return;
        }
        double dq = std::abs(qr.value - tq);
        double that_tq = empirical_tail(ws, tq);
        double tail_area_hat = 0.0;
        for (std::size_t k = 0; k < ws.atom_count(); ++k) {
            if (ws.values()[k] > tq) tail_area_hat += ws.weights()[k] * (ws.values()[k] - tq);
        }
        tail_area_hat /= static_cast<double>(ws.n());
        double gap_stat = b_n / p * std::abs(quantile_integral(ws, 0.0, q) - partial_truth);
        double quantile_stat = b_n * q / p * dq;
        double integral_stat = b_n / p * std::abs(tail_area_hat - tail_area_truth);
        double product_stat = b_n / p * that_tq * dq;
        double split_stat = b_n / p * std::abs(that_tq - q) * dq;
        slot[0] = gap_stat >= delta;
        slot[1] = quantile_stat >= delta / 4.0;
        slot[2] = integral_stat >= delta / 4.0;
        slot[3] = product_stat >= delta / 4.0;
        slot[4] = split_stat >= delta / 8.0;
        slot[5] = quantile_stat >= delta / 8.0;
    });

    std::size_t counts[7] = {0, 0, 0, 0, 0, 0, 0};
    for (std::size_t r = 0; r < R; ++r) {
        for (int j = 0; j < 7; ++j) counts[j] += hits[r * 7 + j];
    }
    ExpApproxReport report;
    report.p = p;
    report.q = q;
    report.delta = delta;
    report.n = n;
    report.replications = R;
    report.resolution = 1.0 / static_cast<double>(R);
    double denom = static_cast<double>(R);
    report.p_gap = static_cast<double>(counts[0]) / denom;
    report.p_quantile = static_cast<double>(counts[1]) / denom;
    report.p_integral = static_cast<double>(counts[2]) / denom;
    report.p_product = static_cast<double>(counts[3]) / denom;
    report.p_product_split = static_cast<double>(counts[4]) / denom;
    report.p_quantile_split = static_cast<double>(counts[5]) / denom;
    report.mass_deficient = counts[6];
    return report;
}

double target_variance(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                       const TargetSpec& target, const QuadOptions& opts) {
    target.validate();
    auto weight_sq_above = [&](double cut) {
        return expectation(scheme.sampler(), [&](double x) {
            double w = scheme.weight(x);
            return w * w;
        }, cut, kInf, opts);
    };
    switch (target.kind) {
    case TargetKind::tail: {
        double level = mu.tail(target.threshold);
        double v = weight_sq_above(target.threshold) - level * level;
        return v < 0.0 ? 0.0 : v;
    }
    case TargetKind::quantile: {
        double tp = mu.quantile(target.p);
        double f = mu.density(tp);
        if (!(f > 0.0)) throw numeric_error("density vanishes at the target quantile");
        double v = weight_sq_above(tp) - target.p * target.p;
        return (v < 0.0 ? 0.0 : v) / (f * f);
    }
    case TargetKind::expected_shortfall:
        return sigma_p_squared(mu, scheme, target.p, opts);
    case TargetKind::truncated_es:
        return sigma_qp_squared(mu, scheme, target.q, target.p, opts);
    }
    throw config_error("unknown target kind");
}

SchemeRanking compare_schemes(const AnalyticDistribution& mu,
                              const std::vector<SamplingScheme>& schemes,
                              const TargetSpec& target, std::size_t n, std::size_t replications,
                              std::uint64_t seed, int workers, const QuadOptions& opts) {
    if (schemes.size() < 2) throw std::domain_error("need at least two schemes to compare");
    SchemeRanking ranking;
    for (const SamplingScheme& scheme : schemes) {
        SchemeRanking::Entry entry;
        entry.label = scheme.label();
        CheckResult feasibility = check_scheme_feasibility(scheme);
        if (feasibility.verdict == Verdict::fail) {
            entry.feasible = false;
            entry.note = "excluded: " + feasibility.reason;
            entry.theoretical_variance = kNaN;
            entry.empirical_variance = kNaN;
            ranking.entries.push_back(std::move(entry));
            continue;
        }
        entry.feasible = true;
        entry.note = feasibility.reason;
        entry.theoretical_variance = target_variance(mu, scheme, target, opts);
        ExperimentPlan plan(mu, scheme, target);
        plan.n_grid = {n};
        plan.replications = replications;
        plan.seed = seed;
        ExperimentResult result = run_experiment(plan, workers);
        entry.empirical_variance = result.rows.front().var_sqrt_n_error;
        entry.mass_deficient = result.rows.front().mass_deficient;
        ranking.entries.push_back(std::move(entry));
    }
    std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                     [](const SchemeRanking::Entry& a, const SchemeRanking::Entry& b) {
                         if (a.feasible != b.feasible) return a.feasible;
                         if (!a.feasible) return false;
                         return a.theoretical_variance < b.theoretical_variance;
                     });
    return ranking;
}

} // namespace isrisk
