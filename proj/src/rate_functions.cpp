#include "isrisk/rate_functions.hpp"

#include <cmath>
#include <limits>

#include "isrisk/errors.hpp"

namespace isrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_level(double p, const char* name) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error(std::string(name) + " must lie in (0,1)");
}

double positive_density_at(const AnalyticDistribution& mu, double t) {
    double f = mu.density(t);
    if (!(f > 0.0)) throw numeric_error("density vanishes at the required quantile");
    return f;
}

// Constraint integrand a(x) for a perturbation target; zero below tq.
Fn constraint_integrand(const SamplingScheme& scheme, double q, double tq, double f_tq,
                        PerturbationTarget target) {
    switch (target) {
    case PerturbationTarget::quantile_deviation: {
        double c = q / f_tq;
        return [&scheme, c, tq](double x) { return x > tq ? c * scheme.weight(x) : 0.0; };
    }
    case PerturbationTarget::integrated_tail_deviation:
        return [&scheme, tq](double x) { return x > tq ? (x - tq) * scheme.weight(x) : 0.0; };
    case PerturbationTarget::tail_deviation:
        return [&scheme, tq](double x) { return x > tq ? scheme.weight(x) : 0.0; };
    }
    return {};
}

} // namespace

double sigma_p_squared(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                       double p, const QuadOptions& opts) {
    require_level(p, "p");
    double tp = mu.quantile(p);
    const auto& nu = scheme.sampler();
    double second = expectation(nu, [&](double x) {
        double d = (x - tp) * scheme.weight(x);
        return d * d;
    }, tp, kInf, opts);
    double first = expectation(mu, [&](double x) { return x - tp; }, tp, kInf, opts);
    double v = (second - first * first) / (p * p);
    return v < 0.0 ? 0.0 : v;
}

double sigma_qp_squared(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                        double q, double p, const QuadOptions& opts) {
    require_level(p, "p");
    if (!(q > 0.0 && q < p)) throw std::domain_error("need 0 < q < p");
    double tp = mu.quantile(p);
    double tq = mu.quantile(q);
    positive_density_at(mu, tp);
    positive_density_at(mu, tq);
    const auto& nu = scheme.sampler();
    // First term integrates the first power of w, as the three-term form is
    // stated; by the change of measure it equals q, and tests pin the two
    // evaluations against each other rather than substituting one silently.
    double i1 = expectation(nu, [&](double x) { return scheme.weight(x); }, tq, kInf, opts);
    double i2 = expectation(nu, [&](double x) {
        double d = (x - tp) * scheme.weight(x);
        return d * d;
    }, tp, tq, opts);
    double i3 = expectation(mu, [&](double x) { return x - tp; }, tp, tq, opts);
    double gap = tq - tp;
    double v = (gap * gap * i1 + i2 - (i3 + q * gap) * (i3 + q * gap)) / (p * p);
    return v < 0.0 ? 0.0 : v;
}

double es_rate(const AnalyticDistribution& mu, const SamplingScheme& scheme,
               double p, double z, const QuadOptions& opts) {
    double v = sigma_p_squared(mu, scheme, p, opts);
    if (!(v > 0.0)) throw numeric_error("es_rate: zero shortfall variance");
    return z * z / (2.0 * v);
}

double kappa1(const AnalyticDistribution& mu, const SamplingScheme& scheme,
              double q, double delta, const QuadOptions& opts) {
    require_level(q, "q");
    if (delta < 0.0) throw std::domain_error("delta must be nonnegative");
    double tq = mu.quantile(q);
    double f = positive_density_at(mu, tq);
    double w2 = expectation(scheme.sampler(), [&](double x) {
        double w = scheme.weight(x);
        return w * w;
    }, tq, kInf, opts);
    double denom = w2 - q * q;
    if (!(denom > 0.0)) throw numeric_error("kappa1: degenerate tail variance");
    return 0.5 * delta * delta * f * f / (q * q * denom);
}

double kappa2(const AnalyticDistribution& mu, const SamplingScheme& scheme,
              double q, double delta, const QuadOptions& opts) {
    require_level(q, "q");
    if (delta < 0.0) throw std::domain_error("delta must be nonnegative");
    double tq = mu.quantile(q);
    const auto& nu = scheme.sampler();
    // Four-term denominator; the cross moments come from swapping the order
    // of the tail integral and the expectation, leaving plain moments of
    // w^2 nu above tq.
    auto w2g = [&](const Fn& g) {
        return expectation(nu, [&](double x) {
            double w = scheme.weight(x);
            return g(x) * w * w;
        }, tq, kInf, opts);
    };
    double m0 = w2g([](double) { return 1.0; });
    double m1 = w2g([](double x) { return x; });
    double m2 = w2g([](double x) { return x * x; });
    double mmu = expectation(mu, [](double x) { return x; }, tq, kInf, opts);
    double denom = tq * tq * m0 - 2.0 * tq * m1 + m2 - (mmu - q * tq) * (mmu - q * tq);
    if (!(denom > 0.0)) throw numeric_error("kappa2: degenerate integrated-tail variance");
    return 0.5 * delta * delta / denom;
}

double kappa3(const AnalyticDistribution& mu, const SamplingScheme& scheme,
              double q, double delta, const QuadOptions& opts) {
    require_level(q, "q");
    if (delta < 0.0) throw std::domain_error("delta must be nonnegative");
    double tq = mu.quantile(q);
    double w2 = expectation(scheme.sampler(), [&](double x) {
        double w = scheme.weight(x);
        return w * w;
    }, tq, kInf, opts);
    double denom = w2 - q * q;
    if (!(denom > 0.0)) throw numeric_error("kappa3: degenerate tail variance");
    return 0.5 * delta * delta / denom;
}

PerturbationDensity optimal_perturbation(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                                         double q, double delta, PerturbationTarget target,
                                         const QuadOptions& opts) {
    require_level(q, "q");
    if (delta < 0.0) throw std::domain_error("delta must be nonnegative");
    double tq = mu.quantile(q);
    double f = positive_density_at(mu, tq);
    Fn a = constraint_integrand(scheme, q, tq, f, target);
    const auto& nu = scheme.sampler();
    double ea = expectation(nu, a, tq, kInf, opts);
    double ea2 = expectation(nu, [&](double x) { double v = a(x); return v * v; }, tq, kInf, opts);
    double var = ea2 - ea * ea;
    if (!(var > 0.0)) throw numeric_error("optimal_perturbation: degenerate constraint variance");
    double l2 = delta / var;
    double l1 = -l2 * ea;
    // Capture the scheme by value: the perturbation must outlive the caller's
    // scheme object.
    SamplingScheme sc = scheme;
    double c = q / f;
    PerturbationDensity out;
    out.breakpoints = {tq};
    out.description = "optimal perturbation at q=" + std::to_string(q);
    switch (target) {
    case PerturbationTarget::quantile_deviation:
        out.h = [sc, c, tq, l1, l2](double x) {
            return -l1 - (x > tq ? l2 * c * sc.weight(x) : 0.0);
        };
        break;
    case PerturbationTarget::integrated_tail_deviation:
        out.h = [sc, tq, l1, l2](double x) {
            return -l1 - (x > tq ? l2 * (x - tq) * sc.weight(x) : 0.0);
        };
        break;
    case PerturbationTarget::tail_deviation:
        out.h = [sc, tq, l1, l2](double x) {
            return -l1 - (x > tq ? l2 * sc.weight(x) : 0.0);
        };
        break;
    }
    return out;
}

double perturbation_rate(const SamplingScheme& scheme, const PerturbationDensity& h,
                         const QuadOptions& opts) {
    const auto& nu = scheme.sampler();
    double e2 = expectation(nu, [&](double x) { double v = h.h(x); return v * v; },
                            -kInf, kInf, opts, h.breakpoints);
    return 0.5 * e2;
}

double perturbation_constraint(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                               double q, PerturbationTarget target, const PerturbationDensity& h,
                               const QuadOptions& opts) {
    double tq = mu.quantile(q);
    double f = positive_density_at(mu, tq);
    Fn a = constraint_integrand(scheme, q, tq, f, target);
    std::vector<double> brk = h.breakpoints;
    brk.push_back(tq);
    return expectation(scheme.sampler(), [&](double x) { return a(x) * h.h(x); },
                       tq, kInf, opts, brk);
}

double perturbation_centering(const SamplingScheme& scheme, const PerturbationDensity& h,
                              const QuadOptions& opts) {
    return expectation(scheme.sampler(), h.h, -kInf, kInf, opts, h.breakpoints);
}

namespace {

double gao_wang_expect(const AnalyticDistribution& mu, double alpha, int power,
                       const QuadOptions& opts) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("alpha must lie in (0,1)");
    double p = 1.0 - alpha;
    double tstar = mu.quantile(p);
    // Offset from the raw tail-function integral; no partial-moment identity
    // is reused here so the value can serve as a cross-check of sigma_p.
    double tail_area = integrate_upper([&](double x) { return mu.tail(x); }, tstar, opts);
    double c0 = tail_area / p;
    auto z = [=](double x) { return (x > tstar ? (x - tstar) / p : 0.0) - c0; };
    return expectation(mu, [&](double x) {
        double v = z(x);
        return power == 2 ? v * v : v;
    }, -kInf, kInf, opts, {tstar});
}

} // namespace

double gao_wang_variance(const AnalyticDistribution& mu, double alpha, const QuadOptions& opts) {
    return gao_wang_expect(mu, alpha, 2, opts);
}

double gao_wang_mean(const AnalyticDistribution& mu, double alpha, const QuadOptions& opts) {
    return gao_wang_expect(mu, alpha, 1, opts);
}

double mdp_half_width(double variance, double n, double significance) {
    if (!(significance > 0.0 && significance < 1.0)) {
        throw std::domain_error("significance must lie in (0,1)");
    }
    if (!(n > 0.0)) throw std::domain_error("n must be positive");
    if (!(variance > 0.0)) throw numeric_error("confidence interval needs positive variance");
    return std::sqrt(2.0 * std::log(1.0 / significance) * variance / n);
}

double mdp_confidence_interval(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                               double p, double n, double significance, const QuadOptions& opts) {
    return mdp_half_width(sigma_p_squared(mu, scheme, p, opts), n, significance);
}

} // namespace isrisk
