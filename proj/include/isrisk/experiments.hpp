#ifndef ISRISK_EXPERIMENTS_HPP
#define ISRISK_EXPERIMENTS_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "isrisk/assumption_audit.hpp"
#include "isrisk/distribution.hpp"
#include "isrisk/quadrature.hpp"
#include "isrisk/scheme.hpp"
#include "isrisk/weighted_sample.hpp"

namespace isrisk {

enum class TargetKind { tail, quantile, expected_shortfall, truncated_es };

// What a replication estimates, together with its analytic truth.
struct TargetSpec {
    TargetKind kind = TargetKind::tail;
    double threshold = 0.0;  // tail target only
    double p = 0.0;          // quantile and shortfall levels
    double q = 0.0;          // truncation level, truncated_es only

    static TargetSpec tail(double t);
    static TargetSpec quantile(double p);
    static TargetSpec expected_shortfall(double p);
    static TargetSpec truncated_es(double q, double p);

    void validate() const;  // throws config_error
    // Analytic value under mu; throws numeric_error when no closed form
    // exists (infinite mean).
    double truth(const AnalyticDistribution& mu) const;
    // Estimator applied to one weighted sample. Sets mass_deficient (and
    // returns NaN) when the sample cannot resolve the requested level.
    double estimate(const WeightedSample& ws, bool& mass_deficient) const;
    std::string label() const;
};

struct ExperimentPlan {
    ExperimentPlan(AnalyticDistribution mu_, SamplingScheme scheme_, TargetSpec target_)
        : mu(std::move(mu_)), scheme(std::move(scheme_)), target(target_) {}

    AnalyticDistribution mu;
    SamplingScheme scheme;
    TargetSpec target;
    std::vector<std::size_t> n_grid;  // strictly increasing
    LambdaSpec lambda;
    std::size_t replications = 100;
    std::vector<double> delta_grid;   // thresholds for deviation probabilities
    std::uint64_t seed = 1;
    bool record_deficient_indices = false;
    bool allow_infeasible = false;

    void validate() const;  // throws config_error
};

struct DeltaCell {
    double delta = 0.0;
    std::size_t exceedances = 0;  // among non-deficient replications
    // count/R when at least one exceedance was seen; NaN (censored) below
    // the 1/R resolution floor. Probabilities are never reported as 0.
    double p_hat = 0.0;
    double scaled_log = 0.0;      // log(p_hat) / lambda_n^2
    bool censored = true;
};

struct RunRow {
    std::size_t n = 0;
    double lambda_n = 0.0;
    double b_n = 0.0;
    double mean_error = 0.0;
    double var_sqrt_n_error = 0.0;  // sample variance of sqrt(n) * error
    std::vector<DeltaCell> cells;   // one per delta, plan order
    std::size_t mass_deficient = 0;
    std::vector<std::size_t> deficient_replications;  // filled on request
    double wall_seconds = 0.0;      // excluded from determinism guarantees
};

struct ExperimentResult {
    TargetSpec target;
    double truth = 0.0;
    std::size_t replications = 0;
    std::vector<double> deltas;
    std::vector<RunRow> rows;
};

// Draws replications with per-replication streams (stream_index = replication
// index, shared across the n grid), so results are identical for any worker
// count and bit-for-bit reproducible from the seed. Mass-deficient
// replications are excluded from error moments and exceedance numerators but
// the probability denominator stays at R. workers = 0 uses the runtime
// default; run_experiment_serial never touches the parallel runtime and is
// the reference the parallel path is benchmarked against.
ExperimentResult run_experiment(const ExperimentPlan& plan, int workers = 0);
ExperimentResult run_experiment_serial(const ExperimentPlan& plan);

// Tab-separated table, one row per n: n, lambda_n, b_n, target, mean_error,
// var_sqrt_n_error, then p_hat_i and scaled_log_i per delta, then censored_i
// flags, then the mass-deficiency count.
std::string to_delimited(const ExperimentResult& result);

struct TrendReport {
    double delta = 0.0;
    std::vector<std::pair<double, double>> scaled;  // (n, log(p_hat)/lambda_n^2)
    Verdict verdict = Verdict::inconclusive;
    double gap_at_largest = 0.0;  // scaled value at largest n minus (-rate)
    double resolution = 0.0;      // 1/R probability floor
    std::string note;
};

// Monotone-trend summary of the scaled log-probabilities for one delta
// column against a theoretical rate value. Pass means the distance to
// -rate_value is non-increasing over the resolvable grid points (plain
// non-increase of the scaled values when they sit above the bound); fewer
// than three resolvable points is inconclusive. This reports a trend,
// never convergence.
TrendReport mdp_decay_check(const ExperimentResult& result, double rate_value, double delta);

struct ExpApproxReport {
    double p = 0.0;
    double q = 0.0;
    double delta = 0.0;
    std::size_t n = 0;
    std::size_t replications = 0;
    double resolution = 0.0;
    // Truncation gap event at threshold delta and its three pathwise pieces
    // at delta/4: the quantile deviation at q, the integrated tail deviation
    // above T^{-1}(q), and the product term. By construction
    // p_gap <= p_quantile + p_integral + p_product replication by
    // replication.
    double p_gap = 0.0;
    double p_quantile = 0.0;
    double p_integral = 0.0;
    double p_product = 0.0;
    // The product term's own split at delta/8.
    double p_product_split = 0.0;
    double p_quantile_split = 0.0;
    std::size_t mass_deficient = 0;
};

ExpApproxReport exp_approx_diagnostics(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                                       double p, double q, double delta, std::size_t n,
                                       std::size_t replications, std::uint64_t seed,
                                       const LambdaSpec& lambda = {}, int workers = 0);

// Asymptotic variance governing the deviation decay of the given target
// under the given scheme; smaller variance means a larger rate.
double target_variance(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                       const TargetSpec& target, const QuadOptions& opts = {});

struct SchemeRanking {
    struct Entry {
        std::string label;
        bool feasible = false;
        std::string note;
        double theoretical_variance = 0.0;
        double empirical_variance = 0.0;  // sqrt(n)-scaled, from R replications
        std::size_t mass_deficient = 0;
    };
    // Feasible schemes first, ascending theoretical variance (best sampler
    // first); infeasible schemes trail with their exclusion reason.
    std::vector<Entry> entries;
};

SchemeRanking compare_schemes(const AnalyticDistribution& mu,
                              const std::vector<SamplingScheme>& schemes,
                              const TargetSpec& target, std::size_t n, std::size_t replications,
                              std::uint64_t seed, int workers = 0, const QuadOptions& opts = {});

} // namespace isrisk

#endif
