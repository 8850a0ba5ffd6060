#ifndef ISRISK_QUADRATURE_HPP
#define ISRISK_QUADRATURE_HPP

#include <functional>
#include <vector>

#include "isrisk/distribution.hpp"

namespace isrisk {

struct QuadOptions {
    double abs_tol = 1e-12;
    double rel_tol = 1e-9;
};

using Fn = std::function<double(double)>;

// Adaptive Gauss-Kronrod 7-15 on a finite interval. Throws numeric_error when
// the requested tolerance is unreachable or the integrand is non-finite.
double integrate(const Fn& f, double a, double b, const QuadOptions& opts = {});

// Expectation integral of g under `measure` over (a, b); either end may be
// infinite. Finite pieces run Gauss-Kronrod on g*f directly. The upper tail
// uses the substitution x = T^{-1}(e^{-s}), which turns the integral into
// one of g(x(s))*e^{-s} over growing windows in s; the lower tail (normal
// family only) mirrors it through F^{-1}. Window sums that fail to decay
// geometrically raise numeric_error: divergent moment integrals are reported,
// never returned as large numbers.
double expectation(const AnalyticDistribution& measure, const Fn& g,
                   double a, double b, const QuadOptions& opts = {},
                   const std::vector<double>& breakpoints = {});

// Improper plain integrals via the rational map x = a + r/(1-r); used where
// an integrand is not naturally an expectation (for example tail-function
// integrals). The integrand must decay fast enough that h(x)/(1-r)^2 stays
// bounded, which holds for every tail in scope.
double integrate_upper(const Fn& h, double a, const QuadOptions& opts = {});
double integrate_lower(const Fn& h, double b, const QuadOptions& opts = {});

} // namespace isrisk

#endif
