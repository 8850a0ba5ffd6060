#include "isrisk/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "isrisk/errors.hpp"

namespace isrisk {

namespace {

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
constexpr double kWgk[8] = {
    0.02293532201052922, 0.06309209262997855, 0.10479001032225018, 0.14065325971552591,
    0.16900472663926790, 0.19035057806478540, 0.20443294007529889, 0.20948214108472782};
constexpr double kWg[4] = {
    0.12948496616886969, 0.27970539148927666, 0.38183005050511894, 0.41795918367346938};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

Panel gauss_kronrod(const Fn& f, double a, double b) {
    double c = 0.5 * (a + b);
    double h = 0.5 * (b - a);
    double fc = f(c);
    double kron = kWgk[7] * fc;
    double gauss = kWg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        double dx = h * kXgk[i];
        double fsum = f(c - dx) + f(c + dx);
        kron += kWgk[i] * fsum;
        if (i % 2 == 1) gauss += kWg[i / 2] * fsum;
    }
    kron *= h;
    gauss *= h;
    if (!std::isfinite(kron)) throw numeric_error("non-finite integrand in quadrature panel");
    return Panel{a, b, kron, std::fabs(kron - gauss)};
}

} // namespace

double integrate(const Fn& f, double a, double b, const QuadOptions& opts) {
    if (a == b) return 0.0;
    if (!(a < b)) throw numeric_error("integrate: inverted interval");
    std::priority_queue<Panel> panels;
    panels.push(gauss_kronrod(f, a, b));
    double total = panels.top().value;
    double err = panels.top().error;
    int splits = 0;
    while (err > std::max(opts.abs_tol, opts.rel_tol * std::fabs(total))) {
        if (++splits > 4000) throw numeric_error("quadrature failed to converge");
        Panel worst = panels.top();
        panels.pop();
        double mid = 0.5 * (worst.a + worst.b);
        if (mid == worst.a || mid == worst.b) {
            // Interval at double resolution; accept its current estimate.
            err -= worst.error;
            worst.error = 0.0;
            panels.push(worst);
            continue;
        }
        Panel left = gauss_kronrod(f, worst.a, mid);
        Panel right = gauss_kronrod(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
    }
    return total;
}

namespace {

// Semi-infinite expectation tail by windows in s after x = T^{-1}(e^{-s}).
// `quant` maps a tail level to the substitution point (upper tail uses the
// upper-tail inverse, the mirrored lower tail uses F^{-1}).
double tail_windows(const Fn& g, const std::function<double(double)>& quant,
                    double s0, const QuadOptions& opts) {
    const double width = 12.0;
    QuadOptions inner{opts.abs_tol * 0.05, opts.rel_tol * 0.1};
    auto integrand = [&](double s) {
        double u = std::exp(-s);
        if (u <= 0.0) return 0.0;
        double x = quant(u);
        if (!std::isfinite(x)) throw numeric_error("divergent tail integral: substitution overflow");
        return g(x) * u;
    };
    double acc = 0.0;
    double prev = std::numeric_limits<double>::infinity();
    for (int j = 0; j < 48; ++j) {
        double lo = s0 + width * j;
        double hi = lo + width;
        double piece = integrate(integrand, lo, hi, inner);
        if (!std::isfinite(piece)) throw numeric_error("divergent tail integral");
        acc += piece;
        double tol = std::max(opts.abs_tol, opts.rel_tol * std::fabs(acc));
        double ap = std::fabs(piece);
        if (ap <= 0.02 * tol && j > 0) return acc;
        if (j > 0 && std::isfinite(prev) && prev > 0.0) {
            double r = ap / prev;
            if (r >= 1.0 && j >= 4 && ap > tol) {
                throw numeric_error("divergent tail integral: window sums not decaying");
            }
            if (r < 0.95) {
                double remainder = ap * r / (1.0 - r);
                if (remainder <= 0.05 * tol) return acc;
            }
        }
        prev = ap;
    }
    throw numeric_error("tail integral did not settle within the window budget");
}

} // namespace

double expectation(const AnalyticDistribution& measure, const Fn& g,
                   double a, double b, const QuadOptions& opts,
                   const std::vector<double>& breakpoints) {
    double lo = std::max(a, measure.support_lower());
    double hi = std::min(b, measure.support_upper());
    if (!(lo < hi)) return 0.0;

    std::vector<double> knots;
    for (double t : breakpoints) {
        if (t > lo && t < hi && std::isfinite(t)) knots.push_back(t);
    }
    std::sort(knots.begin(), knots.end());
    knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

    double total = 0.0;
    auto weighted = [&](double x) { return g(x) * measure.density(x); };

    double finite_lo = lo;
    if (std::isinf(lo)) {
        // Lower-infinite piece through the cdf: x = F^{-1}(e^{-s}).
        double cut = knots.empty() ? std::min(hi, measure.lower_quantile(0.25)) : knots.front();
        if (std::isinf(cut)) cut = measure.lower_quantile(0.25);
        double Fcut = measure.cdf(cut);
        if (Fcut > 0.0) {
            double s0 = -std::log(Fcut);
            total += tail_windows(g, [&](double u) { return measure.lower_quantile(u); }, s0, opts);
        }
        finite_lo = cut;
    }

    double finite_hi = hi;
    bool upper_inf = std::isinf(hi);
    if (upper_inf) {
        double cut = knots.empty() ? finite_lo : knots.back();
        double Tcut = measure.tail(cut);
        if (Tcut > 0.0) {
            double s0 = -std::log(Tcut);
            total += tail_windows(g, [&](double u) { return measure.quantile(u); }, s0, opts);
        }
        finite_hi = cut;
    }

    // Finite pieces between consecutive knots.
    std::vector<double> edges;
    edges.push_back(finite_lo);
    for (double t : knots) {
        if (t > finite_lo && t < finite_hi) edges.push_back(t);
    }
    edges.push_back(finite_hi);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        if (edges[i] < edges[i + 1]) {
            total += integrate(weighted, edges[i], edges[i + 1], opts);
        }
    }
    return total;
}

double integrate_upper(const Fn& h, double a, const QuadOptions& opts) {
    auto mapped = [&](double r) {
        double d = 1.0 - r;
        double x = a + r / d;
        if (!std::isfinite(x)) return 0.0;
        return h(x) / (d * d);
    };
    return integrate(mapped, 0.0, 1.0, opts);
}

double integrate_lower(const Fn& h, double b, const QuadOptions& opts) {
    auto mapped = [&](double r) {
        double d = 1.0 - r;
        double x = b - r / d;
        if (!std::isfinite(x)) return 0.0;
        return h(x) / (d * d);
    };
    return integrate(mapped, 0.0, 1.0, opts);
}

} // namespace isrisk
