#ifndef ISRISK_DISTRIBUTION_HPP
#define ISRISK_DISTRIBUTION_HPP

#include <cstddef>
#include <string>
#include <vector>

#include "isrisk/random.hpp"

namespace isrisk {

enum class Family { exponential, pareto, normal, lognormal };

// Continuous law with closed-form tail T(t) = P(X > t). Everything downstream
// works on the tail scale: quantile() is the upper-tail inverse T^{-1}, and
// T(T^{-1}(p)) = p holds to near machine precision for every family, which the
// estimators rely on.
class AnalyticDistribution {
public:
    static AnalyticDistribution exponential(double rate);
    static AnalyticDistribution pareto(double index, double scale);
    static AnalyticDistribution normal(double mean, double stdev);
    static AnalyticDistribution lognormal(double logmean, double logsd);

    Family family() const { return family_; }
    double param_a() const { return a_; }  // rate | index | mean | logmean
    double param_b() const { return b_; }  // -    | scale | stdev | logsd

    double tail(double t) const;      // T(t) = P(X > t), right-continuous, onto (0,1)
    double cdf(double t) const;
    double density(double t) const;   // 0 off support
    double log_density(double t) const;  // -inf off support

    // Upper-tail inverse T^{-1}(p) = inf{ u : T(u) <= p }. Throws
    // std::domain_error unless 0 < p < 1. Closed form for exponential and
    // pareto; bracketed bisection on the tail for normal and lognormal.
    double quantile(double p) const;

    // Ordinary quantile F^{-1}(u), used for lower-tail integral substitutions.
    double lower_quantile(double u) const;

    double support_lower() const;
    double support_upper() const;

    double mean() const;                  // throws numeric_error when infinite
    bool second_moment_finite() const;
    bool first_moment_finite() const;

    // E[(X - a)^+] = integral of T over (a, inf), in closed form.
    double upper_tail_integral(double a) const;

    // gamma_p = (1/p) * integral of T^{-1} over (0, p); the tail average above
    // the p-quantile. Throws numeric_error when the mean does not exist.
    double expected_shortfall(double p) const;
    double truncated_expected_shortfall(double q, double p) const;

    std::string label() const;

    bool operator==(const AnalyticDistribution& o) const {
        return family_ == o.family_ && a_ == o.a_ && b_ == o.b_;
    }

private:
    AnalyticDistribution(Family f, double a, double b) : family_(f), a_(a), b_(b) {}
    Family family_;
    double a_;
    double b_;
};

// n iid draws by inverse transform on the tail scale: X = T^{-1}(U). Using the
// same uniforms under different laws couples nominal and sampler draws.
std::vector<double> sample(const AnalyticDistribution& model, RandomStream& stream, std::size_t n);

// Upper-tail quantile of the standard normal, shared by normal and lognormal.
double standard_normal_upper_quantile(double p);
double standard_normal_tail(double z);
double standard_normal_density(double z);

} // namespace isrisk

#endif
