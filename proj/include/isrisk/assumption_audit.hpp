#ifndef ISRISK_ASSUMPTION_AUDIT_HPP
#define ISRISK_ASSUMPTION_AUDIT_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "isrisk/distribution.hpp"
#include "isrisk/quadrature.hpp"
#include "isrisk/scheme.hpp"

namespace isrisk {

// Scaling regime lambda_n = n^beta between the CLT (beta = 0) and LDP
// (beta = 1/2) scales, with b_n = sqrt(n)/lambda_n = n^{1/2-beta}. The growth
// condition lambda_{nk} <= growth_A * k^{1/2-growth_delta} * lambda_n, with
// growth_A >= 1 and growth_delta in (0,1), is what check_lambda_condition
// audits; for a pure power it reduces to beta <= 1/2 - growth_delta.
struct LambdaSpec {
    double beta = 0.25;
    double growth_A = 1.0;
    double growth_delta = 0.25;

    void validate() const;  // throws config_error on out-of-range constants
    double lambda(double n) const;
    double b(double n) const;
};

enum class Verdict { pass, fail, inconclusive };
std::string to_string(Verdict v);

struct CheckResult {
    std::string name;
    Verdict verdict = Verdict::inconclusive;
    std::string reason;
    // (grid point, diagnostic ratio) pairs in grid order; empty for checks
    // that are purely analytic.
    std::vector<std::pair<double, double>> diagnostics;
    // Fitted d log(ratio) / d log(q) over the last four grid points. Positive
    // means the ratio vanishes as q -> 0.
    std::optional<double> fitted_exponent;
};

// The six audited hypotheses behind the deviation asymptotics:
//   lambda_condition  growth condition on the scaling sequence
//   scheme_feasibility  bounded weight, or finite exponential weight moments
//   a1  finite second moment under the nominal law
//   a2  q^2 / f(T^{-1}(q)) -> 0 along the truncation grid
//   a3  finite E_nu[(X w(X))^2], the weighted second moment
//   a4  q^2 E_nu[w^2 1{X > T^{-1}(q)}] / f(T^{-1}(q))^2 -> 0
struct AuditReport {
    CheckResult lambda_condition;
    CheckResult scheme_feasibility;
    CheckResult a1;
    CheckResult a2;
    CheckResult a3;
    CheckResult a4;

    bool any_fail() const;
    bool all_pass() const;
    std::vector<const CheckResult*> checks() const;
};

// Analytic verdict (beta <= 1/2 - growth_delta for power-law lambda_n)
// cross-checked by a sweep over n = 2..2^10, k = 2..k_max; disagreement
// between the two routes downgrades to inconclusive.
Verdict check_lambda_condition(const LambdaSpec& spec, int k_max = 64);
CheckResult check_lambda_condition_result(const LambdaSpec& spec, int k_max = 64);

// Bounded-weight route first, exponential-moment route second; same-family
// pairs with neither are certified infeasible at construction, anything else
// gets a numeric probe of E_nu[exp(w)] and stays inconclusive.
CheckResult check_scheme_feasibility(const SamplingScheme& scheme,
                                     const QuadOptions& opts = {});

// A1-A4 on a strictly decreasing probability grid. The vanishing-ratio checks
// (a2, a4) pass only when the ratio is strictly decreasing over the last four
// grid points and the fitted exponent exceeds exponent_threshold; quadrature
// failures make a check inconclusive, never a pass. Only the four assumption
// slots of the report are filled; run_audit assembles the full report.
AuditReport check_A1_A4(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                        const std::vector<double>& q_grid, const QuadOptions& opts = {},
                        double exponent_threshold = 0.05);

AuditReport run_audit(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                      const LambdaSpec& lambda, const std::vector<double>& q_grid,
                      int k_max = 64, const QuadOptions& opts = {},
                      double exponent_threshold = 0.05);

struct KaramataReport {
    // (x, x * f(x) / T(x)) along the grid.
    std::vector<std::pair<double, double>> sequence;
    double index_estimate = 0.0;
    Verdict verdict = Verdict::inconclusive;
    std::string note;
};

// Regular-variation probe: for a power tail of index alpha the ratio x*f/T is
// exactly alpha; a drifting ratio flags a tail outside the power class, and
// underflowing tail values leave the probe inconclusive.
KaramataReport karamata_diagnostic(const AnalyticDistribution& mu,
                                   const std::vector<double>& x_grid);

} // namespace isrisk

#endif
