#include "isrisk/assumption_audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "isrisk/errors.hpp"

namespace isrisk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// Least-squares slope of log(ratio) against log(q) over the last up-to-four
// grid points, plus strict monotone decrease of the ratio over the same span.
struct TailFit {
    bool usable = false;
    bool decreasing = false;
    double exponent = 0.0;
};

TailFit fit_tail(const std::vector<std::pair<double, double>>& diag) {
    TailFit out;
    if (diag.size() < 2) return out;
    std::size_t k = std::min<std::size_t>(4, diag.size());
    std::size_t lo = diag.size() - k;
    out.decreasing = true;
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = lo; i < diag.size(); ++i) {
        if (!(diag[i].second > 0.0) || !std::isfinite(diag[i].second)) return out;
        if (i > lo && !(diag[i].second < diag[i - 1].second)) out.decreasing = false;
        sx += std::log(diag[i].first);
        sy += std::log(diag[i].second);
    }
    double mx = sx / k, my = sy / k, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = lo; i < diag.size(); ++i) {
        double dx = std::log(diag[i].first) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(diag[i].second) - my);
    }
    if (!(sxx > 0.0)) return out;
    out.usable = true;
    out.exponent = sxy / sxx;
    return out;
}

void judge_vanishing(CheckResult& check, double threshold) {
    TailFit fit = fit_tail(check.diagnostics);
    if (!fit.usable) {
        check.verdict = Verdict::inconclusive;
        check.reason = "ratio sequence too short or degenerate for a trend fit";
        return;
    }
    check.fitted_exponent = fit.exponent;
    if (fit.decreasing && fit.exponent > threshold) {
        check.verdict = Verdict::pass;
        check.reason = "ratio vanishes like q^" + fmt(fit.exponent);
    } else {
        check.verdict = Verdict::fail;
        check.reason = fit.decreasing
            ? "ratio decays too slowly (fitted exponent " + fmt(fit.exponent) + ")"
            : "ratio not monotone decreasing over the last grid points";
    }
}

void require_q_grid(const std::vector<double>& q_grid) {
    if (q_grid.size() < 2) throw std::domain_error("q_grid needs at least two points");
    for (std::size_t i = 0; i < q_grid.size(); ++i) {
        if (!(q_grid[i] > 0.0 && q_grid[i] < 1.0)) {
            throw std::domain_error("q_grid values must lie in (0,1)");
        }
        if (i > 0 && !(q_grid[i] < q_grid[i - 1])) {
            throw std::domain_error("q_grid must be strictly decreasing");
        }
    }
}

} // namespace

void LambdaSpec::validate() const {
    if (!(beta > 0.0 && beta < 0.5)) {
        throw config_error("lambda exponent beta must lie in (0, 1/2)");
    }
    if (!(growth_A >= 1.0)) throw config_error("growth constant A must be >= 1");
    if (!(growth_delta > 0.0 && growth_delta < 1.0)) {
        throw config_error("growth constant delta must lie in (0,1)");
    }
}

double LambdaSpec::lambda(double n) const { return std::pow(n, beta); }
double LambdaSpec::b(double n) const { return std::pow(n, 0.5 - beta); }

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "?";
}

bool AuditReport::any_fail() const {
    for (const CheckResult* c : checks()) {
        if (c->verdict == Verdict::fail) return true;
    }
    return false;
}

bool AuditReport::all_pass() const {
    for (const CheckResult* c : checks()) {
        if (c->verdict != Verdict::pass) return false;
    }
    return true;
}

std::vector<const CheckResult*> AuditReport::checks() const {
    return {&lambda_condition, &scheme_feasibility, &a1, &a2, &a3, &a4};
}

CheckResult check_lambda_condition_result(const LambdaSpec& spec, int k_max) {
    spec.validate();
    CheckResult out;
    out.name = "lambda_condition";
    bool analytic = spec.beta <= 0.5 - spec.growth_delta + 1e-15;
    bool numeric = true;
    double slack = 1.0 + 1e-12;
    for (double n = 2.0; n <= 1024.0 && numeric; n *= 2.0) {
        for (int k = 2; k <= k_max; ++k) {
            double lhs = spec.lambda(n * k);
            double rhs = spec.growth_A * std::pow(double(k), 0.5 - spec.growth_delta)
                         * spec.lambda(n);
            if (lhs > rhs * slack) {
                numeric = false;
                break;
            }
        }
    }
    if (analytic != numeric) {
        out.verdict = Verdict::inconclusive;
        out.reason = "analytic and sweep verdicts disagree";
    } else if (analytic) {
        out.verdict = Verdict::pass;
        out.reason = "beta = " + fmt(spec.beta) + " <= 1/2 - delta = "
                     + fmt(0.5 - spec.growth_delta);
    } else {
        out.verdict = Verdict::fail;
        out.reason = "beta = " + fmt(spec.beta) + " exceeds 1/2 - delta = "
                     + fmt(0.5 - spec.growth_delta);
    }
    return out;
}

Verdict check_lambda_condition(const LambdaSpec& spec, int k_max) {
    return check_lambda_condition_result(spec, k_max).verdict;
}

CheckResult check_scheme_feasibility(const SamplingScheme& scheme, const QuadOptions& opts) {
    CheckResult out;
    out.name = "scheme_feasibility";
    if (scheme.weight_bound()) {
        out.verdict = Verdict::pass;
        out.reason = "bounded weight route: w <= " + fmt(*scheme.weight_bound());
        return out;
    }
    if (scheme.exp_moments_finite()) {
        out.verdict = Verdict::pass;
        out.reason = "exponential weight moments certified finite";
        return out;
    }
    if (scheme.kind() != WeightKind::density_ratio) {
        // Within a family, an unbounded weight grows at least exponentially
        // against a tail that cannot pay for it, so E_nu[exp(a w)] = inf for
        // every a > 0.
        out.verdict = Verdict::fail;
        out.reason = "weight unbounded; exponential weight moments diverge";
        return out;
    }
    out.verdict = Verdict::inconclusive;
    try {
        double probe = expectation(scheme.sampler(), [&](double x) {
            return std::exp(scheme.weight(x));
        }, -kInf, kInf, opts);
        out.reason = "no analytic certificate; probe E_nu[exp(w)] = " + fmt(probe);
        out.diagnostics.emplace_back(1.0, probe);
    } catch (const numeric_error&) {
        out.reason = "no analytic certificate; probe of E_nu[exp(w)] diverged";
    }
    return out;
}

AuditReport check_A1_A4(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                        const std::vector<double>& q_grid, const QuadOptions& opts,
                        double exponent_threshold) {
    require_q_grid(q_grid);
    AuditReport report;

    report.a1.name = "A1";
    if (!mu.second_moment_finite()) {
        report.a1.verdict = Verdict::fail;
        report.a1.reason = "nominal second moment diverges";
    } else {
        try {
            double m2 = expectation(mu, [](double x) { return x * x; }, -kInf, kInf, opts);
            report.a1.verdict = Verdict::pass;
            report.a1.reason = "E[X^2] = " + fmt(m2);
            report.a1.diagnostics.emplace_back(2.0, m2);
        } catch (const numeric_error&) {
            report.a1.verdict = Verdict::inconclusive;
            report.a1.reason = "second moment certified finite but quadrature failed";
        }
    }

    report.a3.name = "A3";
    auto xw_sq = [&](double x) {
        double v = x * scheme.weight(x);
        return v * v;
    };
    if (scheme.weighted_second_moment_finite()) {
        try {
            double m = expectation(scheme.sampler(), xw_sq, -kInf, kInf, opts);
            report.a3.verdict = Verdict::pass;
            report.a3.reason = "E_nu[(Xw)^2] = " + fmt(m);
            report.a3.diagnostics.emplace_back(2.0, m);
        } catch (const numeric_error&) {
            report.a3.verdict = Verdict::inconclusive;
            report.a3.reason = "weighted second moment certified finite but quadrature failed";
        }
    } else if (scheme.kind() != WeightKind::density_ratio) {
        report.a3.verdict = Verdict::fail;
        report.a3.reason = "weighted second moment diverges";
    } else {
        // No analytic certificate either way: a convergent probe passes, a
        // failed probe cannot distinguish divergence from slow decay.
        try {
            double m = expectation(scheme.sampler(), xw_sq, -kInf, kInf, opts);
            report.a3.verdict = Verdict::pass;
            report.a3.reason = "quadrature probe converged: E_nu[(Xw)^2] = " + fmt(m);
            report.a3.diagnostics.emplace_back(2.0, m);
        } catch (const numeric_error&) {
            report.a3.verdict = Verdict::inconclusive;
            report.a3.reason = "no certificate and the moment probe diverged";
        }
    }

    report.a2.name = "A2";
    report.a4.name = "A4";
    bool a2_ok = true;
    bool a4_ok = true;
    for (double q : q_grid) {
        double tq = mu.quantile(q);
        if (std::abs(mu.tail(tq) - q) > 1e-9 * q) {
            report.a2.verdict = Verdict::inconclusive;
            report.a2.reason = "tail inversion drift at q = " + fmt(q);
            report.a4.verdict = report.a2.verdict;
            report.a4.reason = report.a2.reason;
            return report;
        }
        double f = mu.density(tq);
        if (!(f > 0.0)) {
            report.a2.verdict = Verdict::inconclusive;
            report.a2.reason = "density underflow at q = " + fmt(q);
            a2_ok = false;
            a4_ok = false;
            report.a4.verdict = report.a2.verdict;
            report.a4.reason = report.a2.reason;
            break;
        }
        report.a2.diagnostics.emplace_back(q, q * q / f);
        if (!a4_ok) continue;
        try {
            double w2 = expectation(scheme.sampler(), [&](double x) {
                double w = scheme.weight(x);
                return w * w;
            }, tq, kInf, opts);
            report.a4.diagnostics.emplace_back(q, q * q * w2 / (f * f));
        } catch (const numeric_error&) {
            report.a4.verdict = Verdict::inconclusive;
            report.a4.reason = "tail weight moment quadrature failed at q = " + fmt(q);
            a4_ok = false;
        }
    }
    if (a2_ok) judge_vanishing(report.a2, exponent_threshold);
    if (a4_ok) judge_vanishing(report.a4, exponent_threshold);
    return report;
}

AuditReport run_audit(const AnalyticDistribution& mu, const SamplingScheme& scheme,
                      const LambdaSpec& lambda, const std::vector<double>& q_grid,
                      int k_max, const QuadOptions& opts, double exponent_threshold) {
    AuditReport report = check_A1_A4(mu, scheme, q_grid, opts, exponent_threshold);
    report.lambda_condition = check_lambda_condition_result(lambda, k_max);
    report.scheme_feasibility = check_scheme_feasibility(scheme, opts);
    return report;
}

KaramataReport karamata_diagnostic(const AnalyticDistribution& mu,
                                   const std::vector<double>& x_grid) {
    if (x_grid.empty()) throw std::domain_error("x_grid must be nonempty");
    KaramataReport out;
    for (double x : x_grid) {
        double t = mu.tail(x);
        double f = mu.density(x);
        if (!(t > 0.0) || !std::isfinite(f)) {
            out.verdict = Verdict::inconclusive;
            out.note = "tail underflow at x = " + fmt(x);
            return out;
        }
        out.sequence.emplace_back(x, x * f / t);
    }
    std::size_t k = std::min<std::size_t>(4, out.sequence.size());
    double acc = 0.0;
    for (std::size_t i = out.sequence.size() - k; i < out.sequence.size(); ++i) {
        acc += out.sequence[i].second;
    }
    out.index_estimate = acc / k;
    double spread = 0.0;
    for (std::size_t i = out.sequence.size() - k; i < out.sequence.size(); ++i) {
        spread = std::max(spread, std::abs(out.sequence[i].second - out.index_estimate));
    }
    if (spread <= 0.01 * std::max(1.0, std::abs(out.index_estimate))) {
        out.verdict = Verdict::pass;
        out.note = "ratio stable; tail index estimate " + fmt(out.index_estimate);
    } else {
        out.verdict = Verdict::fail;
        out.note = "ratio drifts over the grid; tail is not regularly varying";
    }
    return out;
}

} // namespace isrisk
