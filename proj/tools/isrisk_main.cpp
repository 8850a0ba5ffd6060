// Command-line front end: estimation runs, rate computation, assumption
// audits, replication experiments, and scheme comparison, all driven by one
// JSON config file. Exit codes: 0 ok, 2 config, 3 infeasible, 4 numeric,
// 5 audit fail.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "isrisk/assumption_audit.hpp"
#include "isrisk/config.hpp"
#include "isrisk/errors.hpp"
#include "isrisk/experiments.hpp"
#include "isrisk/rate_functions.hpp"
#include "isrisk/weighted_sample.hpp"

namespace {

using isrisk::AnalyticDistribution;
using isrisk::AuditReport;
using isrisk::CheckResult;
using isrisk::SamplingScheme;
using isrisk::TargetSpec;
using isrisk::Verdict;
using nlohmann::json;

std::string fmt9(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

// All structured numeric output is rounded to 9 significant digits before it
// enters the JSON tree, so dump() never prints more.
double round9(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(fmt9(v).c_str(), nullptr);
}

struct Invocation {
    std::string config_path;
    std::string out_path;
    std::string format = "delimited";
    std::optional<std::uint64_t> seed_override;
    std::optional<int> workers_override;
};

struct RunContext {
    RunContext(AnalyticDistribution mu_, SamplingScheme scheme_)
        : mu(std::move(mu_)), scheme(std::move(scheme_)) {}
    AnalyticDistribution mu;
    SamplingScheme scheme;
    std::uint64_t seed = 1;
    int workers = 0;
    bool allow_infeasible = false;
    json root;
    bool structured = false;
};

RunContext make_context(const Invocation& inv) {
    json root = isrisk::load_config_file(inv.config_path);
    isrisk::reject_unknown_keys(root,
        {"nominal", "sampler", "seed", "workers", "allow_infeasible",
         "estimate", "rate", "audit", "experiment", "compare"}, "config");
    AnalyticDistribution mu =
        isrisk::parse_distribution(isrisk::require_key(root, "nominal", "config"), "nominal");
    AnalyticDistribution nu = isrisk::find_key(root, "sampler")
        ? isrisk::parse_distribution(*isrisk::find_key(root, "sampler"), "sampler")
        : mu;
    RunContext ctx(mu, isrisk::make_scheme(mu, nu));
    ctx.seed = inv.seed_override
        ? *inv.seed_override : isrisk::count_or(root, "seed", "config", 1);
    ctx.workers = inv.workers_override
        ? *inv.workers_override : static_cast<int>(isrisk::count_or(root, "workers", "config", 0));
    ctx.allow_infeasible = isrisk::flag_or(root, "allow_infeasible", "config", false);
    ctx.root = std::move(root);
    ctx.structured = inv.format == "structured";
    return ctx;
}

void emit(const Invocation& inv, const std::string& content) {
    if (inv.out_path.empty()) {
        std::fputs(content.c_str(), stdout);
        return;
    }
    std::ofstream out(inv.out_path, std::ios::binary);
    if (!out) throw isrisk::config_error("cannot open output file: " + inv.out_path);
    out << content;
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void require_feasible(const RunContext& ctx) {
    CheckResult feasibility = isrisk::check_scheme_feasibility(ctx.scheme);
    if (feasibility.verdict == Verdict::fail && !ctx.allow_infeasible) {
        throw isrisk::infeasible_error("scheme " + ctx.scheme.label() + ": "
                                       + feasibility.reason);
    }
}

std::vector<std::size_t> parse_n_grid(const json& section, const char* key,
                                      const std::string& where) {
    std::vector<std::size_t> out;
    for (double v : isrisk::require_number_array(section, key, where)) {
        if (!(v >= 1.0) || v != std::floor(v)) {
            throw isrisk::config_error(where + ": '" + key
                                       + "' must contain positive integers");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

int cmd_estimate(const Invocation& inv, RunContext& ctx) {
    const json& section = isrisk::require_key(ctx.root, "estimate", "config");
    isrisk::reject_unknown_keys(section,
        {"target", "threshold", "p", "q", "n", "significance"}, "estimate");
    TargetSpec target = isrisk::parse_target(section, "estimate");
    target.validate();
    std::uint64_t n = isrisk::require_count(section, "n", "estimate");
    if (n == 0) throw isrisk::config_error("estimate: n must be positive");
    double significance = isrisk::number_or(section, "significance", "estimate", 0.05);
    if (!(significance > 0.0 && significance < 1.0)) {
        throw isrisk::config_error("estimate: significance must lie in (0,1)");
    }
    require_feasible(ctx);

    double truth = target.truth(ctx.mu);
    isrisk::RandomStream stream(ctx.seed, 0);
    std::vector<double> draws = isrisk::sample(ctx.scheme.sampler(), stream, n);
    isrisk::WeightedSample ws = isrisk::build_weighted_sample(draws, ctx.scheme);
    bool deficient = false;
    double estimate = target.estimate(ws, deficient);
    if (deficient) {
        throw isrisk::mass_deficiency_error(
            "weighted sample mass " + fmt9(ws.total_mass())
            + " cannot resolve level " + fmt9(target.p));
    }
    double variance = isrisk::target_variance(ctx.mu, ctx.scheme, target);
    double half_width = isrisk::mdp_half_width(variance, static_cast<double>(n), significance);

    if (ctx.structured) {
        json j;
        j["command"] = "estimate";
        j["target"] = target.label();
        j["nominal"] = ctx.mu.label();
        j["sampler"] = ctx.scheme.sampler().label();
        j["scheme"] = ctx.scheme.label();
        j["n"] = n;
        j["seed"] = ctx.seed;
        j["estimate"] = round9(estimate);
        j["half_width"] = round9(half_width);
        j["significance"] = round9(significance);
        j["truth"] = round9(truth);
        j["error"] = round9(estimate - truth);
        j["total_mass"] = round9(ws.total_mass());
        j["atoms"] = ws.atom_count();
        emit(inv, dump_json(j));
    } else {
        std::string out = "# command=estimate target=" + target.label()
            + " nominal=" + ctx.mu.label() + " scheme=" + ctx.scheme.label() + "\n";
        out += "# estimate\thalf_width\ttruth\terror\ttotal_mass\tatoms\tn\tseed\n";
        out += fmt9(estimate) + "\t" + fmt9(half_width) + "\t" + fmt9(truth) + "\t"
            + fmt9(estimate - truth) + "\t" + fmt9(ws.total_mass()) + "\t"
            + std::to_string(ws.atom_count()) + "\t" + std::to_string(n) + "\t"
            + std::to_string(ctx.seed) + "\n";
        emit(inv, out);
    }
    return 0;
}

int cmd_rate(const Invocation& inv, RunContext& ctx) {
    const json& section = isrisk::require_key(ctx.root, "rate", "config");
    isrisk::reject_unknown_keys(section, {"p", "q_grid", "delta_grid", "z_grid"}, "rate");
    double p = isrisk::require_number(section, "p", "rate");
    std::vector<double> q_grid;
    if (isrisk::find_key(section, "q_grid")) {
        q_grid = isrisk::require_number_array(section, "q_grid", "rate");
    }
    std::vector<double> delta_grid;
    if (isrisk::find_key(section, "delta_grid")) {
        delta_grid = isrisk::require_number_array(section, "delta_grid", "rate");
    }
    std::vector<double> z_grid;
    if (isrisk::find_key(section, "z_grid")) {
        z_grid = isrisk::require_number_array(section, "z_grid", "rate");
    }

    double sigma_p_sq = isrisk::sigma_p_squared(ctx.mu, ctx.scheme, p);
    struct QpRow { double q, value; };
    std::vector<QpRow> qp_rows;
    for (double q : q_grid) {
        qp_rows.push_back({q, isrisk::sigma_qp_squared(ctx.mu, ctx.scheme, q, p)});
    }
    struct KappaRow { double q, delta, k1, k2, k3; };
    std::vector<KappaRow> kappa_rows;
    for (double q : q_grid) {
        for (double delta : delta_grid) {
            kappa_rows.push_back({q, delta,
                isrisk::kappa1(ctx.mu, ctx.scheme, q, delta),
                isrisk::kappa2(ctx.mu, ctx.scheme, q, delta),
                isrisk::kappa3(ctx.mu, ctx.scheme, q, delta)});
        }
    }
    struct ZRow { double z, value; };
    std::vector<ZRow> z_rows;
    for (double z : z_grid) {
        z_rows.push_back({z, isrisk::es_rate(ctx.mu, ctx.scheme, p, z)});
    }

    if (ctx.structured) {
        json j;
        j["command"] = "rate";
        j["nominal"] = ctx.mu.label();
        j["scheme"] = ctx.scheme.label();
        j["p"] = round9(p);
        j["sigma_p_sq"] = round9(sigma_p_sq);
        j["sigma_qp_sq"] = json::array();
        for (const QpRow& r : qp_rows) {
            j["sigma_qp_sq"].push_back({{"q", round9(r.q)}, {"value", round9(r.value)}});
        }
        j["kappa"] = json::array();
        for (const KappaRow& r : kappa_rows) {
            j["kappa"].push_back({{"q", round9(r.q)}, {"delta", round9(r.delta)},
                                  {"kappa1", round9(r.k1)}, {"kappa2", round9(r.k2)},
                                  {"kappa3", round9(r.k3)}});
        }
        j["es_rate"] = json::array();
        for (const ZRow& r : z_rows) {
            j["es_rate"].push_back({{"z", round9(r.z)}, {"value", round9(r.value)}});
        }
        emit(inv, dump_json(j));
    } else {
        std::string out = "# command=rate nominal=" + ctx.mu.label()
            + " scheme=" + ctx.scheme.label() + " p=" + fmt9(p) + "\n";
        out += "# quantity\tq\tdelta\tz\tvalue\n";
        out += "sigma_p_sq\tnan\tnan\tnan\t" + fmt9(sigma_p_sq) + "\n";
        for (const QpRow& r : qp_rows) {
            out += "sigma_qp_sq\t" + fmt9(r.q) + "\tnan\tnan\t" + fmt9(r.value) + "\n";
        }
        for (const KappaRow& r : kappa_rows) {
            out += "kappa1\t" + fmt9(r.q) + "\t" + fmt9(r.delta) + "\tnan\t" + fmt9(r.k1) + "\n";
            out += "kappa2\t" + fmt9(r.q) + "\t" + fmt9(r.delta) + "\tnan\t" + fmt9(r.k2) + "\n";
            out += "kappa3\t" + fmt9(r.q) + "\t" + fmt9(r.delta) + "\tnan\t" + fmt9(r.k3) + "\n";
        }
        for (const ZRow& r : z_rows) {
            out += "es_rate\tnan\tnan\t" + fmt9(r.z) + "\t" + fmt9(r.value) + "\n";
        }
        emit(inv, out);
    }
    return 0;
}

int cmd_audit(const Invocation& inv, RunContext& ctx) {
    const json& section = isrisk::require_key(ctx.root, "audit", "config");
    isrisk::reject_unknown_keys(section,
        {"q_grid", "lambda", "k_max", "exponent_threshold"}, "audit");
    std::vector<double> q_grid = {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
    if (isrisk::find_key(section, "q_grid")) {
        q_grid = isrisk::require_number_array(section, "q_grid", "audit");
    }
    isrisk::LambdaSpec lambda;
    if (const json* l = isrisk::find_key(section, "lambda")) {
        lambda = isrisk::parse_lambda(*l, "audit.lambda");
    }
    int k_max = static_cast<int>(isrisk::count_or(section, "k_max", "audit", 64));
    double threshold = isrisk::number_or(section, "exponent_threshold", "audit", 0.05);

    AuditReport report = isrisk::run_audit(ctx.mu, ctx.scheme, lambda, q_grid, k_max,
                                           {}, threshold);

    if (ctx.structured) {
        json j;
        j["command"] = "audit";
        j["nominal"] = ctx.mu.label();
        j["scheme"] = ctx.scheme.label();
        j["all_pass"] = report.all_pass();
        j["any_fail"] = report.any_fail();
        j["checks"] = json::array();
        for (const CheckResult* check : report.checks()) {
            json c;
            c["name"] = check->name;
            c["verdict"] = isrisk::to_string(check->verdict);
            c["reason"] = check->reason;
            if (check->fitted_exponent) {
                c["fitted_exponent"] = round9(*check->fitted_exponent);
            }
            c["diagnostics"] = json::array();
            for (const auto& [grid, ratio] : check->diagnostics) {
                c["diagnostics"].push_back({round9(grid), round9(ratio)});
            }
            j["checks"].push_back(std::move(c));
        }
        emit(inv, dump_json(j));
    } else {
        std::string out = "# command=audit nominal=" + ctx.mu.label()
            + " scheme=" + ctx.scheme.label() + "\n";
        out += "# check\tverdict\tfitted_exponent\treason\n";
        for (const CheckResult* check : report.checks()) {
            double exponent = check->fitted_exponent
                ? *check->fitted_exponent : std::nan("");
            out += check->name + "\t" + isrisk::to_string(check->verdict) + "\t"
                + fmt9(exponent) + "\t" + check->reason + "\n";
        }
        emit(inv, out);
    }
    return report.any_fail() ? 5 : 0;
}

int cmd_experiment(const Invocation& inv, RunContext& ctx) {
    const json& section = isrisk::require_key(ctx.root, "experiment", "config");
    isrisk::reject_unknown_keys(section,
        {"target", "threshold", "p", "q", "n_grid", "replications", "delta_grid",
         "lambda", "record_deficient"}, "experiment");
    isrisk::ExperimentPlan plan(ctx.mu, ctx.scheme,
                                isrisk::parse_target(section, "experiment"));
    plan.n_grid = parse_n_grid(section, "n_grid", "experiment");
    plan.replications = isrisk::count_or(section, "replications", "experiment", 100);
    if (isrisk::find_key(section, "delta_grid")) {
        plan.delta_grid = isrisk::require_number_array(section, "delta_grid", "experiment");
    }
    if (const json* l = isrisk::find_key(section, "lambda")) {
        plan.lambda = isrisk::parse_lambda(*l, "experiment.lambda");
    }
    plan.record_deficient_indices =
        isrisk::flag_or(section, "record_deficient", "experiment", false);
    plan.seed = ctx.seed;
    plan.allow_infeasible = ctx.allow_infeasible;

    isrisk::ExperimentResult result = isrisk::run_experiment(plan, ctx.workers);

    if (ctx.structured) {
        json j;
        j["command"] = "experiment";
        j["target"] = result.target.label();
        j["nominal"] = ctx.mu.label();
        j["scheme"] = ctx.scheme.label();
        j["truth"] = round9(result.truth);
        j["replications"] = result.replications;
        j["seed"] = plan.seed;
        j["deltas"] = json::array();
        for (double d : result.deltas) j["deltas"].push_back(round9(d));
        j["rows"] = json::array();
        for (const isrisk::RunRow& row : result.rows) {
            json r;
            r["n"] = row.n;
            r["lambda_n"] = round9(row.lambda_n);
            r["b_n"] = round9(row.b_n);
            r["mean_error"] = round9(row.mean_error);
            r["var_sqrt_n_error"] = round9(row.var_sqrt_n_error);
            r["mass_deficient"] = row.mass_deficient;
            r["cells"] = json::array();
            for (const isrisk::DeltaCell& cell : row.cells) {
                r["cells"].push_back({{"delta", round9(cell.delta)},
                                      {"exceedances", cell.exceedances},
                                      {"p_hat", round9(cell.p_hat)},
                                      {"scaled_log", round9(cell.scaled_log)},
                                      {"censored", cell.censored}});
            }
            if (plan.record_deficient_indices) {
                r["deficient_replications"] = row.deficient_replications;
            }
            j["rows"].push_back(std::move(r));
        }
        emit(inv, dump_json(j));
    } else {
        std::string out = "# command=experiment target=" + result.target.label()
            + " nominal=" + ctx.mu.label() + " scheme=" + ctx.scheme.label()
            + " R=" + std::to_string(result.replications)
            + " seed=" + std::to_string(plan.seed) + "\n";
        out += isrisk::to_delimited(result);
        emit(inv, out);
    }
    return 0;
}

int cmd_compare(const Invocation& inv, RunContext& ctx) {
    const json& section = isrisk::require_key(ctx.root, "compare", "config");
    isrisk::reject_unknown_keys(section,
        {"target", "threshold", "p", "q", "samplers", "n", "replications"}, "compare");
    TargetSpec target = isrisk::parse_target(section, "compare");
    const json& samplers = isrisk::require_key(section, "samplers", "compare");
    if (!samplers.is_array() || samplers.size() < 2) {
        throw isrisk::config_error("compare: 'samplers' must list at least two samplers");
    }
    std::vector<SamplingScheme> schemes;
    for (std::size_t i = 0; i < samplers.size(); ++i) {
        AnalyticDistribution nu = isrisk::parse_distribution(
            samplers[i], "compare.samplers[" + std::to_string(i) + "]");
        schemes.push_back(isrisk::make_scheme(ctx.mu, nu));
    }
    std::uint64_t n = isrisk::require_count(section, "n", "compare");
    if (n == 0) throw isrisk::config_error("compare: n must be positive");
    std::uint64_t replications = isrisk::count_or(section, "replications", "compare", 1000);

    isrisk::SchemeRanking ranking = isrisk::compare_schemes(
        ctx.mu, schemes, target, n, replications, ctx.seed, ctx.workers);

    if (ctx.structured) {
        json j;
        j["command"] = "compare";
        j["target"] = target.label();
        j["nominal"] = ctx.mu.label();
        j["n"] = n;
        j["replications"] = replications;
        j["entries"] = json::array();
        std::size_t rank = 1;
        for (const auto& entry : ranking.entries) {
            j["entries"].push_back({{"rank", rank++},
                                    {"scheme", entry.label},
                                    {"feasible", entry.feasible},
                                    {"theoretical_variance", round9(entry.theoretical_variance)},
                                    {"empirical_variance", round9(entry.empirical_variance)},
                                    {"mass_deficient", entry.mass_deficient},
                                    {"note", entry.note}});
        }
        emit(inv, dump_json(j));
    } else {
        std::string out = "# command=compare target=" + target.label()
            + " nominal=" + ctx.mu.label() + "\n";
        out += "# rank\tscheme\tfeasible\ttheoretical_variance\tempirical_variance"
               "\tmass_deficient\tnote\n";
        std::size_t rank = 1;
        for (const auto& entry : ranking.entries) {
            out += std::to_string(rank++) + "\t" + entry.label + "\t"
                + (entry.feasible ? "1" : "0") + "\t"
                + fmt9(entry.theoretical_variance) + "\t"
                + fmt9(entry.empirical_variance) + "\t"
                + std::to_string(entry.mass_deficient) + "\t" + entry.note + "\n";
        }
        emit(inv, out);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    const std::string families =
        "Families: exponential {rate}, pareto {index, scale}, normal {mean, stdev}, "
        "lognormal {logmean, logsd}.";
    const std::string global_keys =
        "Global config keys: nominal, sampler, seed, workers, allow_infeasible. " + families;

    CLI::App app{"Importance-sampling estimation of tail risk: point estimates, "
                 "deviation rates, assumption audits, and replication experiments.\n"
                 + global_keys};
    app.require_subcommand(1);

    Invocation inv;
    app.add_option("--config", inv.config_path, "Path to the JSON config file")
        ->required();
    std::uint64_t seed_value = 0;
    auto* seed_opt = app.add_option("--seed", seed_value,
                                    "Override the config seed");
    int workers_value = 0;
    auto* workers_opt = app.add_option("--workers", workers_value,
                                       "Worker threads for replications (0 = default)");
    app.add_option("--out", inv.out_path, "Write output to this file instead of stdout");
    app.add_option("--format", inv.format, "Output format")
        ->check(CLI::IsMember({"delimited", "structured"}))
        ->capture_default_str();

    CLI::App* estimate = app.add_subcommand(
        "estimate", "Point estimate with a deviation-based confidence half-width.\n"
        "Config section 'estimate' keys: target (tail | quantile | expected_shortfall | "
        "truncated_es), threshold, p, q, n, significance. " + global_keys);
    CLI::App* rate = app.add_subcommand(
        "rate", "Asymptotic variances and rate constants.\n"
        "Config section 'rate' keys: p, q_grid, delta_grid, z_grid. " + global_keys);
    CLI::App* audit = app.add_subcommand(
        "audit", "Check the hypotheses behind the deviation asymptotics.\n"
        "Config section 'audit' keys: q_grid, lambda {beta, A, delta}, k_max, "
        "exponent_threshold. " + global_keys);
    CLI::App* experiment = app.add_subcommand(
        "experiment", "Replication study of estimator errors and deviation decay.\n"
        "Config section 'experiment' keys: target, threshold, p, q, n_grid, replications, "
        "delta_grid, lambda {beta, A, delta}, record_deficient. " + global_keys);
    CLI::App* compare = app.add_subcommand(
        "compare", "Rank sampling schemes by asymptotic variance.\n"
        "Config section 'compare' keys: target, threshold, p, q, samplers, n, "
        "replications. " + global_keys);
    // Let the global flags appear after the subcommand too.
    for (CLI::App* sc : {estimate, rate, audit, experiment, compare}) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    if (seed_opt->count()) inv.seed_override = seed_value;
    if (workers_opt->count()) inv.workers_override = workers_value;

    try {
        RunContext ctx = make_context(inv);
        if (estimate->parsed()) return cmd_estimate(inv, ctx);
        if (rate->parsed()) return cmd_rate(inv, ctx);
        if (audit->parsed()) return cmd_audit(inv, ctx);
        if (experiment->parsed()) return cmd_experiment(inv, ctx);
        if (compare->parsed()) return cmd_compare(inv, ctx);
        std::fprintf(stderr, "error: no command selected\n");
        return 2;
    } catch (const isrisk::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const isrisk::infeasible_error& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 3;
    } catch (const isrisk::numeric_error& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 4;
    }
}
