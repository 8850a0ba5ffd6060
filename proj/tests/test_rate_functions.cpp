#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "isrisk/distribution.hpp"
#include "isrisk/errors.hpp"
#include "isrisk/rate_functions.hpp"
#include "isrisk/scheme.hpp"
#include "oracles.hpp"

using namespace isrisk;

namespace {

AnalyticDistribution expo() { return AnalyticDistribution::exponential(1.0); }
SamplingScheme unit() { return make_scheme(expo(), expo()); }
SamplingScheme tilt(double theta) { return make_scheme(expo(), AnalyticDistribution::exponential(theta)); }

// Exponential/unit truncated-shortfall variance in closed form, derived by
// integrating the three terms with tq = -ln q, tp = -ln p.
double closed_sigma_qp(double q, double p) {
    double L = std::log(p / q);
    return (2.0 * p - 2.0 * q * L - 2.0 * q - (p - q) * (p - q)) / (p * p);
}

} // namespace

TEST_CASE("shortfall variance closed forms") {
    CHECK(std::abs(sigma_p_squared(expo(), unit(), 0.05) - 39.0) < 1e-6);
    CHECK(std::abs(sigma_p_squared(expo(), unit(), 0.5) - 3.0) < 1e-6);
    for (double p : {0.05, 0.2, 0.5, 0.9}) {
        CHECK(sigma_p_squared(expo(), unit(), p) == doctest::Approx(2.0 / p - 1.0).epsilon(1e-9));
    }
    // No dispersion beyond the quantile for a near-degenerate law.
    auto spike = AnalyticDistribution::normal(2.0, 1e-8);
    CHECK(std::abs(sigma_p_squared(spike, make_scheme(spike, spike), 0.3)) < 1e-6);
}

TEST_CASE("shortfall variance against independent quadrature") {
    struct Case { AnalyticDistribution mu; SamplingScheme scheme; double p; };
    std::vector<Case> cases = {
        {expo(), unit(), 0.05},
        {expo(), tilt(0.5), 0.05},
        {AnalyticDistribution::pareto(3.0, 1.0),
         make_scheme(AnalyticDistribution::pareto(3.0, 1.0), AnalyticDistribution::pareto(3.0, 1.0)),
         0.1},
    };
    for (const auto& c : cases) {
        double tp = c.mu.quantile(c.p);
        const auto& nu = c.scheme.sampler();
        double second = oracle::simpson_upper([&](double x) {
            double w = c.scheme.weight(x);
            return (x - tp) * (x - tp) * w * w * nu.density(x);
        }, tp, 1e-13);
        double first = oracle::simpson_upper([&](double x) {
            return (x - tp) * c.mu.density(x);
        }, tp, 1e-13);
        double ref = (second - first * first) / (c.p * c.p);
        CHECK(sigma_p_squared(c.mu, c.scheme, c.p) == doctest::Approx(ref).epsilon(1e-8));
    }
}

TEST_CASE("shortfall variance reports divergence") {
    auto par = AnalyticDistribution::pareto(1.5, 1.0);
    CHECK_THROWS_AS((void)sigma_p_squared(par, make_scheme(par, par), 0.1), numeric_error);
    CHECK_THROWS_AS((void)sigma_p_squared(expo(), tilt(2.0), 0.05), numeric_error);
}

TEST_CASE("truncated variance closed form and limits") {
    CHECK(std::abs(sigma_qp_squared(expo(), unit(), 0.01, 0.05) - 18.4845) < 1e-3);
    CHECK(std::abs(sigma_qp_squared(expo(), unit(), 0.001, 0.05) - 35.111) < 1e-2);
    CHECK(sigma_qp_squared(expo(), unit(), 0.01, 0.05)
          == doctest::Approx(closed_sigma_qp(0.01, 0.05)).epsilon(1e-9));
    CHECK(sigma_qp_squared(expo(), unit(), 0.001, 0.05)
          == doctest::Approx(closed_sigma_qp(0.001, 0.05)).epsilon(1e-9));

    // Vanishing truncation window collapses every term.
    CHECK(std::abs(sigma_qp_squared(expo(), unit(), 0.05 * (1.0 - 1e-9), 0.05)) < 1e-6);

    // Increasing toward the full variance with the final gap under 1%.
    double prev = 0.0;
    double limit = sigma_p_squared(expo(), unit(), 0.05);
    double last = 0.0;
    for (int k = 2; k <= 6; ++k) {
        last = sigma_qp_squared(expo(), unit(), std::pow(10.0, -k), 0.05);
        CHECK(last > prev);
        CHECK(last < limit);
        prev = last;
    }
    CHECK((limit - last) / limit < 0.01);
}

TEST_CASE("truncated variance for a tilted scheme against quadrature") {
    auto scheme = tilt(0.5);
    double q = 0.02, p = 0.1;
    double tq = expo().quantile(q);
    double tp = expo().quantile(p);
    const auto& nu = scheme.sampler();
    double first = oracle::simpson_upper([&](double x) {
        return scheme.weight(x) * nu.density(x);
    }, tq, 1e-13);
    CHECK(std::abs(first - q) < 1e-9);  // change-of-measure identity
    double second = oracle::simpson([&](double x) {
        double w = scheme.weight(x);
        return (x - tp) * (x - tp) * w * w * nu.density(x);
    }, tp, tq, 1e-14);
    double third = oracle::simpson([&](double x) {
        return (x - tp) * expo().density(x);
    }, tp, tq, 1e-14);
    double ref = ((tq - tp) * (tq - tp) * first + second
                  - (third + q * (tq - tp)) * (third + q * (tq - tp))) / (p * p);
    CHECK(sigma_qp_squared(expo(), scheme, q, p) == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("tail weight integral equals the level for every scheme") {
    std::vector<std::pair<AnalyticDistribution, SamplingScheme>> cases = {
        {expo(), unit()},
        {expo(), tilt(0.5)},
        {AnalyticDistribution::pareto(3.0, 1.0),
         make_scheme(AnalyticDistribution::pareto(3.0, 1.0), AnalyticDistribution::pareto(2.0, 1.0))},
        {AnalyticDistribution::normal(0.0, 1.0),
         make_scheme(AnalyticDistribution::normal(0.0, 1.0), AnalyticDistribution::normal(0.0, 2.0))},
        {AnalyticDistribution::lognormal(0.0, 0.5),
         make_scheme(AnalyticDistribution::lognormal(0.0, 0.5), AnalyticDistribution::lognormal(0.0, 0.8))},
    };
    for (const auto& [mu, scheme] : cases) {
        for (double q : {0.2, 0.05}) {
            double tq = mu.quantile(q);
            const auto& nu = scheme.sampler();
            double mass = oracle::simpson_upper([&](double x) {
                return scheme.weight(x) * nu.density(x);
            }, tq, 1e-13);
            CHECK(std::abs(mass - q) < 1e-9);
        }
    }
}

TEST_CASE("deviation rate is quadratic and even") {
    CHECK(es_rate(expo(), unit(), 0.05, 0.0) == 0.0);
    CHECK(es_rate(expo(), unit(), 0.05, 1.0) == doctest::Approx(1.0 / 78.0).epsilon(1e-9));
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> unif(-10.0, 10.0);
    double base = es_rate(expo(), unit(), 0.05, 1.0);
    for (int i = 0; i < 100; ++i) {
        double z = unif(gen);
        CHECK(es_rate(expo(), unit(), 0.05, z) == es_rate(expo(), unit(), 0.05, -z));
        CHECK(es_rate(expo(), unit(), 0.05, z) == doctest::Approx(z * z * base).epsilon(1e-12));
    }
}

TEST_CASE("efficiency constants in closed form") {
    CHECK(std::abs(kappa1(expo(), unit(), 0.1, 0.5) - 1.388889) < 1e-6);
    CHECK(kappa1(expo(), unit(), 0.1, 0.5) == doctest::Approx(0.125 / 0.09).epsilon(1e-9));

    // Unit-scheme tail constant is exactly quadratic over any base law.
    for (const auto& mu : {expo(), AnalyticDistribution::pareto(3.0, 1.0),
                           AnalyticDistribution::normal(0.0, 1.0)}) {
        auto u = make_scheme(mu, mu);
        for (double q : {0.05, 0.1, 0.2}) {
            for (double delta : {0.25, 0.5, 1.0}) {
                CHECK(kappa3(mu, u, q, delta)
                      == doctest::Approx(delta * delta / (2.0 * (q - q * q))).epsilon(1e-9));
            }
        }
    }
    CHECK(std::abs(kappa3(expo(), unit(), 0.1, 0.5) - 1.388889) < 1e-6);

    // Tilted tail constant against the analytic tail moment.
    double w2 = (4.0 / 3.0) * std::pow(10.0, -1.5);
    CHECK(kappa3(expo(), tilt(0.5), 0.1, 0.5)
          == doctest::Approx(0.125 / (w2 - 0.01)).epsilon(1e-9));
    CHECK(std::abs(kappa3(expo(), tilt(0.5), 0.1, 0.5) - 3.88637) < 1e-4);

    // Exponential base law: the quantile constant collapses onto the tail one.
    for (const auto& scheme : {unit(), tilt(0.5)}) {
        CHECK(kappa1(expo(), scheme, 0.1, 0.5)
              == doctest::Approx(kappa3(expo(), scheme, 0.1, 0.5)).epsilon(1e-9));
    }

    // Integrated-tail constant: unit/exponential reduces to the (X-tq)+ variance.
    CHECK(kappa2(expo(), unit(), 0.1, 0.5)
          == doctest::Approx(0.125 / (2.0 * 0.1 - 0.01)).epsilon(1e-9));
    CHECK(kappa2(expo(), unit(), 0.01, 0.5)
          == doctest::Approx(0.125 / (2.0 * 0.01 - 0.0001)).epsilon(1e-9));

    for (auto fn : {kappa1, kappa2, kappa3}) {
        CHECK(fn(expo(), unit(), 0.1, 0.0, {}) == 0.0);
        double once = fn(expo(), unit(), 0.1, 0.5, {});
        CHECK(fn(expo(), unit(), 0.1, 1.0, {}) == doctest::Approx(4.0 * once).epsilon(1e-12));
    }

    CHECK_THROWS_AS((void)kappa2(AnalyticDistribution::pareto(1.5, 1.0),
                                 make_scheme(AnalyticDistribution::pareto(1.5, 1.0),
                                             AnalyticDistribution::pareto(1.5, 1.0)),
                                 0.1, 0.5),
                    numeric_error);
}

TEST_CASE("efficiency constants grow without bound at small levels") {
    for (auto fn : {kappa1, kappa2, kappa3}) {
        double prev = 0.0;
        for (double q : {0.1, 0.05, 0.01, 1e-3, 1e-4}) {
            double v = fn(expo(), unit(), q, 0.5, {});
            CHECK(v > prev);
            prev = v;
        }
    }
    double prev = 0.0;
    auto par = AnalyticDistribution::pareto(3.0, 1.0);
    auto u = make_scheme(par, par);
    for (double q : {0.1, 0.05, 0.01, 1e-3, 1e-4}) {
        double v = kappa1(par, u, q, 0.5);
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("efficiency constants match the variational minimizer") {
    struct Case { SamplingScheme scheme; PerturbationTarget target; double tol; };
    std::vector<Case> cases = {
        {unit(), PerturbationTarget::quantile_deviation, 1e-5},
        {unit(), PerturbationTarget::tail_deviation, 1e-5},
        {unit(), PerturbationTarget::integrated_tail_deviation, 1e-4},
        {tilt(0.5), PerturbationTarget::quantile_deviation, 5e-5},
        {tilt(0.5), PerturbationTarget::tail_deviation, 5e-5},
        {tilt(0.5), PerturbationTarget::integrated_tail_deviation, 1e-4},
    };
    for (const auto& c : cases) {
        double q = 0.1, delta = 0.5;
        double kappa = 0.0;
        switch (c.target) {
        case PerturbationTarget::quantile_deviation: kappa = kappa1(expo(), c.scheme, q, delta); break;
        case PerturbationTarget::tail_deviation: kappa = kappa3(expo(), c.scheme, q, delta); break;
        case PerturbationTarget::integrated_tail_deviation: kappa = kappa2(expo(), c.scheme, q, delta); break;
        }
        double ref = oracle::variational_rate(expo(), c.scheme, q, delta, c.target);
        // The finite family minimizes over a subset, so it sits at or above
        // the true rate, within the mesh bias.
        CHECK(ref >= kappa - 1e-9);
        CHECK(std::abs(ref - kappa) < c.tol);
    }
}

TEST_CASE("optimal perturbations attain their constants") {
    for (const auto& scheme : {unit(), tilt(0.5)}) {
        double q = 0.1, delta = 0.5;
        struct Row { PerturbationTarget target; double kappa; };
        std::vector<Row> rows = {
            {PerturbationTarget::quantile_deviation, kappa1(expo(), scheme, q, delta)},
            {PerturbationTarget::integrated_tail_deviation, kappa2(expo(), scheme, q, delta)},
            {PerturbationTarget::tail_deviation, kappa3(expo(), scheme, q, delta)},
        };
        for (const auto& row : rows) {
            auto h = optimal_perturbation(expo(), scheme, q, delta, row.target);
            CHECK(std::abs(perturbation_rate(scheme, h) - row.kappa) < 1e-6 * std::max(1.0, row.kappa));
            CHECK(std::abs(perturbation_centering(scheme, h)) < 1e-8);
            CHECK(std::abs(perturbation_constraint(expo(), scheme, q, row.target, h) + delta) < 1e-8);
        }
    }

    auto zero = optimal_perturbation(expo(), unit(), 0.1, 0.0);
    for (double x : {0.1, 1.0, 3.0, 9.0}) CHECK(zero.h(x) == 0.0);
    CHECK(perturbation_rate(unit(), zero) == 0.0);
}

TEST_CASE("no feasible perturbation beats the constant") {
    std::mt19937_64 gen(1234);
    for (auto target : {PerturbationTarget::quantile_deviation, PerturbationTarget::tail_deviation}) {
        double q = 0.1, delta = 0.5;
        double kappa = target == PerturbationTarget::quantile_deviation
                           ? kappa1(expo(), unit(), q, delta)
                           : kappa3(expo(), unit(), q, delta);
        for (int i = 0; i < 25; ++i) {
            auto h = oracle::random_feasible_perturbation(expo(), unit(), q, delta, target, gen);
            CHECK(perturbation_rate(unit(), h) >= kappa - 1e-9);
        }
    }
}

TEST_CASE("perturbation energy scales quadratically") {
    PerturbationDensity zero{[](double) { return 0.0; }, {}, "zero"};
    CHECK(perturbation_rate(unit(), zero) == 0.0);

    PerturbationDensity lin{[](double x) { return x - 1.0; }, {}, "centered linear"};
    CHECK(perturbation_rate(unit(), lin) == doctest::Approx(0.5).epsilon(1e-9));

    PerturbationDensity scaled{[](double x) { return 3.0 * (x - 1.0); }, {}, "scaled"};
    CHECK(perturbation_rate(unit(), scaled) == doctest::Approx(4.5).epsilon(1e-9));
}

TEST_CASE("influence variance equals the unit shortfall variance") {
    std::vector<AnalyticDistribution> laws = {
        expo(), AnalyticDistribution::pareto(3.0, 1.0), AnalyticDistribution::normal(0.0, 1.0)};
    for (const auto& mu : laws) {
        auto u = make_scheme(mu, mu);
        for (double alpha : {0.5, 0.9, 0.95, 0.99}) {
            CHECK(std::abs(gao_wang_variance(mu, alpha) - sigma_p_squared(mu, u, 1.0 - alpha)) <= 1e-8);
        }
    }
    CHECK(std::abs(gao_wang_variance(expo(), 0.95) - 39.0) < 1e-6);
    CHECK(std::abs(gao_wang_variance(expo(), 0.5) - 3.0) < 1e-6);

    std::vector<AnalyticDistribution> centered_laws = {
        expo(), AnalyticDistribution::exponential(0.5), AnalyticDistribution::pareto(3.0, 1.0),
        AnalyticDistribution::normal(0.0, 1.0), AnalyticDistribution::lognormal(0.0, 0.5)};
    for (const auto& mu : centered_laws) {
        CHECK(std::abs(gao_wang_mean(mu, 0.9)) < 1e-9);
    }
}

TEST_CASE("confidence half-widths") {
    double hw = mdp_half_width(39.0, 1e4, 0.05);
    CHECK(std::abs(hw - 0.152862) < 1e-6);
    CHECK(hw == doctest::Approx(std::sqrt(39.0) * std::sqrt(2.0 * std::log(20.0)) / 100.0).epsilon(1e-12));
    CHECK(mdp_half_width(39.0, 1e4, 1.0 - 1e-12) < 1e-5);
    CHECK(mdp_half_width(39.0, 4e4, 0.05) == doctest::Approx(0.5 * hw).epsilon(1e-12));

    CHECK(mdp_confidence_interval(expo(), unit(), 0.05, 1e4, 0.05)
          == doctest::Approx(mdp_half_width(sigma_p_squared(expo(), unit(), 0.05), 1e4, 0.05))
                 .epsilon(1e-12));

    // The scaling exponent cancels: solving exp(-lambda^2 z^2/(2 sigma^2)) =
    // significance for z and dividing by b_n gives the same width for any beta.
    double sigma2 = 39.0, n = 1e4, sig = 0.05;
    for (double beta : {0.1, 0.25, 0.4}) {
        double lambda = std::pow(n, beta);
        double b = std::pow(n, 0.5 - beta);
        double z = std::sqrt(2.0 * std::log(1.0 / sig) * sigma2) / lambda;
        CHECK(mdp_half_width(sigma2, n, sig) == doctest::Approx(z / b).epsilon(1e-12));
    }
}

TEST_CASE("rate quantities ignore the weight evaluator route") {
    std::vector<std::pair<AnalyticDistribution, AnalyticDistribution>> pairs = {
        {expo(), AnalyticDistribution::exponential(0.5)},
        {AnalyticDistribution::pareto(3.0, 1.0), AnalyticDistribution::pareto(2.0, 1.0)},
    };
    for (const auto& [mu, nu] : pairs) {
        auto fast = make_scheme(mu, nu);
        auto generic = SamplingScheme::make_density_ratio(mu, nu);
        CHECK(sigma_p_squared(mu, fast, 0.1)
              == doctest::Approx(sigma_p_squared(mu, generic, 0.1)).epsilon(1e-9));
        CHECK(sigma_qp_squared(mu, fast, 0.02, 0.1)
              == doctest::Approx(sigma_qp_squared(mu, generic, 0.02, 0.1)).epsilon(1e-9));
        CHECK(kappa1(mu, fast, 0.1, 0.5)
              == doctest::Approx(kappa1(mu, generic, 0.1, 0.5)).epsilon(1e-9));
        CHECK(kappa3(mu, fast, 0.1, 0.5)
              == doctest::Approx(kappa3(mu, generic, 0.1, 0.5)).epsilon(1e-9));
    }
}
