#ifndef ISRISK_SCHEME_HPP
#define ISRISK_SCHEME_HPP

#include <optional>
#include <string>

#include "isrisk/distribution.hpp"

namespace isrisk {

enum class WeightKind { unit, exponential_tilt, scale_shift, density_ratio };

// Change of measure from the nominal law mu to the sampler nu, with the
// likelihood ratio w = dmu/dnu evaluated pointwise. Immutable and safe to
// share across threads. Boundedness of w and finiteness of E_nu[exp(a*w)]
// are certified analytically per family pair at construction, never probed
// numerically: for every pair in scope an unbounded w has at least polynomial
// tails under nu, so exponential moments are finite exactly when w is bounded.
class SamplingScheme {
public:
    // Throws infeasible_error when mu puts mass where nu has none.
    static SamplingScheme make(const AnalyticDistribution& nominal,
                               const AnalyticDistribution& sampler);

    // Same pair, but forced through the generic log-density-difference path.
    // Algebraically equal to make()'s specialized evaluators; kept so tests
    // can assert that rate quantities do not depend on the evaluator route.
    static SamplingScheme make_density_ratio(const AnalyticDistribution& nominal,
                                             const AnalyticDistribution& sampler);

    // w(x) = dmu/dnu at x. Off the sampler support the value is 0 and
    // *off_support is set; inside nu's support but outside mu's the honest
    // ratio 0 is returned without the flag.
    double weight(double x, bool* off_support = nullptr) const;

    const AnalyticDistribution& nominal() const { return nominal_; }
    const AnalyticDistribution& sampler() const { return sampler_; }
    WeightKind kind() const { return kind_; }
    std::optional<double> weight_bound() const { return weight_bound_; }
    bool exp_moments_finite() const { return exp_moments_finite_; }

    // Analytic finiteness of E_nu[(X w)^2] = E_mu[X^2 w], the moment behind
    // the shortfall variance.
    bool weighted_second_moment_finite() const { return weighted_second_moment_finite_; }

    bool is_unit() const { return kind_ == WeightKind::unit; }
    std::string label() const;

private:
    SamplingScheme(AnalyticDistribution nominal, AnalyticDistribution sampler)
        : nominal_(nominal), sampler_(sampler) {}
    void classify();

    AnalyticDistribution nominal_;
    AnalyticDistribution sampler_;
    WeightKind kind_ = WeightKind::density_ratio;
    std::optional<double> weight_bound_;
    bool exp_moments_finite_ = false;
    bool weighted_second_moment_finite_ = false;
};

SamplingScheme make_scheme(const AnalyticDistribution& nominal,
                           const AnalyticDistribution& sampler);

} // namespace isrisk

#endif
