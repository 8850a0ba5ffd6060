#include "isrisk/distribution.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "isrisk/errors.hpp"

namespace isrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454836;  // ln(2*pi)

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be positive and finite");
    }
}

} // namespace

double standard_normal_tail(double z) {
    return 0.5 * std::erfc(z * 0.7071067811865475244);
}

double standard_normal_density(double z) {
    return std::exp(-0.5 * z * z - 0.5 * kLog2Pi);
}

// Bisection on the monotone tail of the standard normal. The bracket is
// expanded geometrically first, then halved until it collapses at double
// resolution, which keeps |T(z) - p| at the 1e-12 scale required even for
// p deep in the tail (the bracket criterion is relative in z, not in p).
namespace {

double upper_quantile_bisect(double p) {
    double lo = -1.0, hi = 1.0;
    while (standard_normal_tail(lo) < p) lo *= 2.0;   // tail(lo) >= p
    while (standard_normal_tail(hi) > p) hi *= 2.0;   // tail(hi) <= p
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (standard_normal_tail(mid) > p) lo = mid; else hi = mid;
        if (hi - lo <= 1e-16 * (std::fabs(lo) + std::fabs(hi)) + 1e-300) break;
    }
    return 0.5 * (lo + hi);
}

// Rational approximation of the normal quantile (Acklam's coefficients,
// |relative error| < 1.15e-9), here oriented to the upper tail.
double upper_quantile_estimate(double p) {
    if (p < 0.02425) {
        double q = std::sqrt(-2.0 * std::log(p));
        return (((((-7.784894002430293e-03 * q - 3.223964580411365e-01) * q
                   - 2.400758277161838e+00) * q - 2.549732539343734e+00) * q
                   + 4.374664141464968e+00) * q + 2.938163982698783e+00)
               / ((((7.784695709041462e-03 * q + 3.224671290700398e-01) * q
                   + 2.445134137142996e+00) * q + 3.754408661907416e+00) * q + 1.0)
               * -1.0;
    }
    double q = p - 0.5;
    double r = q * q;
    return -(((((-3.969683028665376e+01 * r + 2.209460984245205e+02) * r
                - 2.759285104469687e+02) * r + 1.383577518672690e+02) * r
                - 3.066479806614716e+01) * r + 2.506628277459239e+00) * q
           / (((((-5.447609879822406e+01 * r + 1.615858368580409e+02) * r
                - 1.556989798598866e+02) * r + 6.680131188771972e+01) * r
                - 1.328068155288572e+01) * r + 1.0);
}

} // namespace

double standard_normal_upper_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile level must lie in (0,1)");
    // 1 - p is exact for p >= 0.5, so the reflection loses nothing.
    if (p > 0.5) return -standard_normal_upper_quantile(1.0 - p);
    double z = upper_quantile_estimate(p);
    if (!std::isfinite(z)) return upper_quantile_bisect(p);
    // Two Newton corrections through the tail function bring the estimate to
    // full precision; the density only underflows beyond |z| ~ 38 where the
    // initial estimate already stands.
    for (int i = 0; i < 2; ++i) {
        double density = standard_normal_density(z);
        if (!(density > 0.0)) break;
        z += (standard_normal_tail(z) - p) / density;
    }
    return std::isfinite(z) ? z : upper_quantile_bisect(p);
}

AnalyticDistribution AnalyticDistribution::exponential(double rate) {
    require_positive(rate, "exponential rate");
    return AnalyticDistribution(Family::exponential, rate, 0.0);
}

AnalyticDistribution AnalyticDistribution::pareto(double index, double scale) {
    require_positive(index, "pareto index");
    require_positive(scale, "pareto scale");
    return AnalyticDistribution(Family::pareto, index, scale);
}

AnalyticDistribution AnalyticDistribution::normal(double mean, double stdev) {
    require_positive(stdev, "normal stdev");
    if (!std::isfinite(mean)) throw std::invalid_argument("normal mean must be finite");
    return AnalyticDistribution(Family::normal, mean, stdev);
}

AnalyticDistribution AnalyticDistribution::lognormal(double logmean, double logsd) {
    require_positive(logsd, "lognormal logsd");
    if (!std::isfinite(logmean)) throw std::invalid_argument("lognormal logmean must be finite");
    return AnalyticDistribution(Family::lognormal, logmean, logsd);
}

double AnalyticDistribution::tail(double t) const {
    switch (family_) {
    case Family::exponential:
        return t <= 0.0 ? 1.0 : std::exp(-a_ * t);
    case Family::pareto:
        return t <= b_ ? 1.0 : std::pow(b_ / t, a_);
    case Family::normal:
        return standard_normal_tail((t - a_) / b_);
    case Family::lognormal:
        return t <= 0.0 ? 1.0 : standard_normal_tail((std::log(t) - a_) / b_);
    }
    return 0.0;
}

double AnalyticDistribution::cdf(double t) const {
    switch (family_) {
    case Family::exponential:
        return t <= 0.0 ? 0.0 : -std::expm1(-a_ * t);
    case Family::pareto:
        return t <= b_ ? 0.0 : 1.0 - std::pow(b_ / t, a_);
    case Family::normal:
        return standard_normal_tail((a_ - t) / b_);
    case Family::lognormal:
        return t <= 0.0 ? 0.0 : standard_normal_tail((a_ - std::log(t)) / b_);
    }
    return 1.0;
}

double AnalyticDistribution::density(double t) const {
    switch (family_) {
    case Family::exponential:
        return t < 0.0 ? 0.0 : a_ * std::exp(-a_ * t);
    case Family::pareto:
        return t < b_ ? 0.0 : a_ * std::pow(b_, a_) * std::pow(t, -a_ - 1.0);
    case Family::normal:
        return standard_normal_density((t - a_) / b_) / b_;
    case Family::lognormal:
        return t <= 0.0 ? 0.0 : standard_normal_density((std::log(t) - a_) / b_) / (t * b_);
    }
    return 0.0;
}

double AnalyticDistribution::log_density(double t) const {
    switch (family_) {
    case Family::exponential:
        return t < 0.0 ? -kInf : std::log(a_) - a_ * t;
    case Family::pareto:
        return t < b_ ? -kInf : std::log(a_) + a_ * std::log(b_) - (a_ + 1.0) * std::log(t);
    case Family::normal: {
        double z = (t - a_) / b_;
        return -0.5 * z * z - 0.5 * kLog2Pi - std::log(b_);
    }
    case Family::lognormal: {
        if (t <= 0.0) return -kInf;
        double z = (std::log(t) - a_) / b_;
        return -0.5 * z * z - 0.5 * kLog2Pi - std::log(b_) - std::log(t);
    }
    }
    return -kInf;
}

double AnalyticDistribution::quantile(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile level must lie in (0,1)");
    switch (family_) {
    case Family::exponential:
        return -std::log(p) / a_;
    case Family::pareto:
        return b_ * std::pow(p, -1.0 / a_);
    case Family::normal:
        return a_ + b_ * standard_normal_upper_quantile(p);
    case Family::lognormal:
        return std::exp(a_ + b_ * standard_normal_upper_quantile(p));
    }
    return 0.0;
}

double AnalyticDistribution::lower_quantile(double u) const {
    if (!(u > 0.0 && u < 1.0)) throw std::domain_error("quantile level must lie in (0,1)");
    switch (family_) {
    case Family::exponential:
        return -std::log1p(-u) / a_;  // log1p keeps precision for u near 0
    case Family::pareto:
        return b_ * std::pow(1.0 - u, -1.0 / a_);
    case Family::normal:
        return a_ - b_ * standard_normal_upper_quantile(u);
    case Family::lognormal:
        return std::exp(a_ - b_ * standard_normal_upper_quantile(u));
    }
    return 0.0;
}

double AnalyticDistribution::support_lower() const {
    switch (family_) {
    case Family::exponential: return 0.0;
    case Family::pareto:      return b_;
    case Family::normal:      return -kInf;
    case Family::lognormal:   return 0.0;
    }
    return -kInf;
}

double AnalyticDistribution::support_upper() const { return kInf; }

double AnalyticDistribution::mean() const {
    switch (family_) {
    case Family::exponential:
        return 1.0 / a_;
    case Family::pareto:
        if (a_ <= 1.0) throw numeric_error("pareto mean is infinite for index <= 1");
        return a_ * b_ / (a_ - 1.0);
    case Family::normal:
        return a_;
    case Family::lognormal:
        return std::exp(a_ + 0.5 * b_ * b_);
    }
    return 0.0;
}

bool AnalyticDistribution::second_moment_finite() const {
    return family_ != Family::pareto || a_ > 2.0;
}

bool AnalyticDistribution::first_moment_finite() const {
    return family_ != Family::pareto || a_ > 1.0;
}

double AnalyticDistribution::upper_tail_integral(double a) const {
    switch (family_) {
    case Family::exponential:
        if (a <= 0.0) return -a + 1.0 / a_;
        return std::exp(-a_ * a) / a_;
    case Family::pareto: {
        if (a_ <= 1.0) throw numeric_error("pareto tail integral diverges for index <= 1");
        if (a <= b_) return (b_ - a) + b_ / (a_ - 1.0);
        return std::pow(b_ / a, a_) * a / (a_ - 1.0);
    }
    case Family::normal: {
        double z = (a - a_) / b_;
        return b_ * (standard_normal_density(z) - z * standard_normal_tail(z));
    }
    case Family::lognormal: {
        double m = std::exp(a_ + 0.5 * b_ * b_);
        if (a <= 0.0) return m - a;
        double y = (std::log(a) - a_) / b_;
        return m * standard_normal_tail(y - b_) - a * standard_normal_tail(y);
    }
    }
    return 0.0;
}

double AnalyticDistribution::expected_shortfall(double p) const {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("shortfall level must lie in (0,1)");
    if (!first_moment_finite()) throw numeric_error("expected shortfall undefined: infinite mean");
    // Area identity: integral of T^{-1} over (0,p) = p*T^{-1}(p) + integral of T above T^{-1}(p).
    double tp = quantile(p);
    return tp + upper_tail_integral(tp) / p;
}

double AnalyticDistribution::truncated_expected_shortfall(double q, double p) const {
    if (!(q > 0.0 && q < p)) throw std::domain_error("need 0 < q < p");
    if (p >= 1.0) throw std::domain_error("shortfall level must lie in (0,1)");
    double full = expected_shortfall(p) * p;
    double head = expected_shortfall(q) * q;
    return (full - head) / p;
}

std::string AnalyticDistribution::label() const {
    std::ostringstream os;
    switch (family_) {
    case Family::exponential: os << "exponential(" << a_ << ")"; break;
    case Family::pareto:      os << "pareto(" << a_ << "," << b_ << ")"; break;
    case Family::normal:      os << "normal(" << a_ << "," << b_ << ")"; break;
    case Family::lognormal:   os << "lognormal(" << a_ << "," << b_ << ")"; break;
    }
    return os.str();
}

std::vector<double> sample(const AnalyticDistribution& model, RandomStream& stream, std::size_t n) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = model.quantile(stream.next_uniform());
    }
    return xs;
}

} // namespace isrisk
