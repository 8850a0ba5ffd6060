#ifndef ISRISK_RATE_FUNCTIONS_HPP
#define ISRISK_RATE_FUNCTIONS_HPP

#include <functional>
#include <string>
#include <vector>

#include "isrisk/quadrature.hpp"
#include "isrisk/scheme.hpp"

namespace isrisk {

// Asymptotic variance of the shortfall deviation at level p under the scheme:
//   sigma_p^2(w) = (1/p^2) [ E_nu[((X-tp)^+ w)^2] - (E_mu[(X-tp)^+])^2 ],
// tp = T^{-1}(p). Gaussian-equivalent scale of b_n * (es_hat - es).
double sigma_p_squared(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                       double p, const QuadOptions& opts = {});

// Truncated-shortfall variance with truncation at q < p, the three-term form:
//   p^2 sigma_{q,p}^2 = (tq-tp)^2 * I1 + I2 - (I3 + q(tq-tp))^2,
// I1 the tail integral of w under nu above tq (first power of w as printed;
// it equals q by the change of measure, which tests assert), I2 the second
// moment of (x-tp) under w^2 nu on (tp,tq), I3 the first moment of (x-tp)
// under mu on (tp,tq). Increasing toward sigma_p^2 as q -> 0.
double sigma_qp_squared(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                        double q, double p, const QuadOptions& opts = {});

// Decay-rate function for shortfall deviations: I(z) = z^2 / (2 sigma_p^2).
double es_rate(const AnalyticDistribution& mu, const SamplingScheme& scheme,
               double p, double z, const QuadOptions& opts = {});

// Efficiency constants for deviations at the tail level q with margin delta.
// kappa1 scores the quantile deviation, kappa2 the integrated tail deviation,
// kappa3 the plain tail-probability deviation. All three are closed forms in
// a handful of moment integrals evaluated by quadrature.
double kappa1(const AnalyticDistribution& mu, const SamplingScheme& scheme,
              double q, double delta, const QuadOptions& opts = {});
double kappa2(const AnalyticDistribution& mu, const SamplingScheme& scheme,
              double q, double delta, const QuadOptions& opts = {});
double kappa3(const AnalyticDistribution& mu, const SamplingScheme& scheme,
              double q, double delta, const QuadOptions& opts = {});

// A perturbation direction h of the sampler, with (1/2) * E_nu[h^2] as its
// cost. Breakpoints mark discontinuities so quadrature can split there.
struct PerturbationDensity {
    std::function<double(double)> h;
    std::vector<double> breakpoints;
    std::string description;
};

enum class PerturbationTarget {
    quantile_deviation,         // kappa1: constraint on (q/f(tq)) * w * 1{x > tq}
    integrated_tail_deviation,  // kappa2: constraint on (x - tq)^+ * w
    tail_deviation              // kappa3: constraint on w * 1{x > tq}
};

// Cheapest centered perturbation meeting the target constraint with margin
// delta: h* = -l1 - l2 * a(x) with l2 = delta / Var_nu(a), l1 = -l2 E_nu[a].
// Satisfies E_nu[h*] = 0 and <a, h*> = -delta exactly, and its cost equals
// the matching kappa by construction.
PerturbationDensity optimal_perturbation(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                                         double q, double delta,
                                         PerturbationTarget target = PerturbationTarget::quantile_deviation,
                                         const QuadOptions& opts = {});

// (1/2) * E_nu[h^2] by quadrature over the sampler support.
double perturbation_rate(const SamplingScheme& scheme, const PerturbationDensity& h,
                         const QuadOptions& opts = {});

// E_nu[a * h] for the constraint functional of the given target; exposed so
// feasibility of candidate perturbations can be checked directly.
double perturbation_constraint(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                               double q, PerturbationTarget target, const PerturbationDensity& h,
                               const QuadOptions& opts = {});
double perturbation_centering(const SamplingScheme& scheme, const PerturbationDensity& h,
                              const QuadOptions& opts = {});

// Variance of the shortfall influence function at confidence alpha,
//   Z = (1/(1-alpha)) (X - T^{-1}(1-alpha))^+ - (1/(1-alpha)) * intregral of T above T^{-1}(1-alpha),
// computed as one expectation of Z^2 under mu. Equals sigma_p_squared at
// p = 1-alpha with the unit scheme; the two routes share no algebra.
double gao_wang_variance(const AnalyticDistribution& mu, double alpha, const QuadOptions& opts = {});
double gao_wang_mean(const AnalyticDistribution& mu, double alpha, const QuadOptions& opts = {});

// Two-sided confidence half-width sqrt(2 ln(1/significance) * variance / n)
// from inverting the deviation rate; the speed lambda_n cancels against b_n.
double mdp_half_width(double variance, double n, double significance);
double mdp_confidence_interval(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                               double p, double n, double significance, const QuadOptions& opts = {});

} // namespace isrisk

#endif
