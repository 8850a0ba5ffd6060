#include "isrisk/scheme.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "isrisk/errors.hpp"

namespace isrisk {

namespace {

bool support_contained(const AnalyticDistribution& mu, const AnalyticDistribution& nu) {
    return mu.support_lower() >= nu.support_lower();
}

} // namespace

SamplingScheme SamplingScheme::make(const AnalyticDistribution& nominal,
                                    const AnalyticDistribution& sampler) {
    if (!support_contained(nominal, sampler)) {
        throw infeasible_error("support violation: nominal law " + nominal.label() +
                               " has mass below the sampler support of " + sampler.label());
    }
    SamplingScheme s(nominal, sampler);
    s.classify();
    return s;
}

SamplingScheme SamplingScheme::make_density_ratio(const AnalyticDistribution& nominal,
                                                  const AnalyticDistribution& sampler) {
    SamplingScheme s = make(nominal, sampler);
    s.kind_ = WeightKind::density_ratio;
    return s;
}

void SamplingScheme::classify() {
    const auto& mu = nominal_;
    const auto& nu = sampler_;

    if (mu == nu) {
        kind_ = WeightKind::unit;
        weight_bound_ = 1.0;
        exp_moments_finite_ = true;
        weighted_second_moment_finite_ = mu.second_moment_finite();
        return;
    }

    if (mu.family() == Family::exponential && nu.family() == Family::exponential) {
        // w(x) = (l1/l2) exp(-(l1-l2)x): monotone, so the bound sits at x = 0
        // when the sampler is the heavier tail and nowhere otherwise.
        double l1 = mu.param_a(), l2 = nu.param_a();
        kind_ = WeightKind::exponential_tilt;
        if (l2 < l1) weight_bound_ = l1 / l2;
        weighted_second_moment_finite_ = l2 < 2.0 * l1;
    } else if (mu.family() == Family::pareto && nu.family() == Family::pareto) {
        double a1 = mu.param_a(), x1 = mu.param_b();
        double a2 = nu.param_a(), x2 = nu.param_b();
        kind_ = WeightKind::scale_shift;
        // w(x) proportional to x^(a2-a1) on [x1, inf).
        if (a2 <= a1) {
            weight_bound_ = (a1 / a2) * std::pow(x1 / x2, a2);
        }
        weighted_second_moment_finite_ = 2.0 * a1 - a2 > 2.0;
    } else if (mu.family() == Family::normal && nu.family() == Family::normal) {
        double m1 = mu.param_a(), s1 = mu.param_b();
        double m2 = nu.param_a(), s2 = nu.param_b();
        kind_ = WeightKind::scale_shift;
        if (s2 > s1) {
            // Log-ratio is concave quadratic; maximize it in closed form.
            double xstar = (m1 * s2 * s2 - m2 * s1 * s1) / (s2 * s2 - s1 * s1);
            weight_bound_ = std::exp(mu.log_density(xstar) - nu.log_density(xstar));
        }
        weighted_second_moment_finite_ = s2 * s2 > 0.5 * s1 * s1;
    } else if (mu.family() == Family::lognormal && nu.family() == Family::lognormal) {
        // Same analysis as the normal pair after y = log x; the 1/x factors cancel.
        double m1 = mu.param_a(), s1 = mu.param_b();
        double m2 = nu.param_a(), s2 = nu.param_b();
        kind_ = WeightKind::scale_shift;
        if (s2 > s1) {
            double ystar = (m1 * s2 * s2 - m2 * s1 * s1) / (s2 * s2 - s1 * s1);
            double xstar = std::exp(ystar);
            weight_bound_ = std::exp(mu.log_density(xstar) - nu.log_density(xstar));
        }
        weighted_second_moment_finite_ = s2 * s2 > 0.5 * s1 * s1;
    } else {
        // Cross-family pair with valid supports. For every such combination of
        // the four families the log-ratio grows without bound in some
        // direction, and w(X) has at least polynomial tails under nu.
        kind_ = WeightKind::density_ratio;
        weighted_second_moment_finite_ = false;
    }

    exp_moments_finite_ = weight_bound_.has_value();
}

double SamplingScheme::weight(double x, bool* off_support) const {
    if (off_support) *off_support = false;
    if (x < sampler_.support_lower() ||
        (sampler_.family() == Family::lognormal && x <= 0.0)) {
        if (off_support) *off_support = true;
        return 0.0;
    }
    switch (kind_) {
    case WeightKind::unit:
        return 1.0;
    case WeightKind::exponential_tilt: {
        double l1 = nominal_.param_a(), l2 = sampler_.param_a();
        return (l1 / l2) * std::exp(-(l1 - l2) * x);
    }
    case WeightKind::scale_shift:
    case WeightKind::density_ratio: {
        double num = nominal_.log_density(x);
        if (num == -std::numeric_limits<double>::infinity()) return 0.0;
        return std::exp(num - sampler_.log_density(x));
    }
    }
    return 0.0;
}

std::string SamplingScheme::label() const {
    if (is_unit()) return "unit";
    if (kind_ == WeightKind::exponential_tilt) {
        std::ostringstream os;
        os << "tilt(" << sampler_.param_a() / nominal_.param_a() << ")";
        return os.str();
    }
    return nominal_.label() + "/" + sampler_.label();
}

SamplingScheme make_scheme(const AnalyticDistribution& nominal,
                           const AnalyticDistribution& sampler) {
    return SamplingScheme::make(nominal, sampler);
}

} // namespace isrisk
