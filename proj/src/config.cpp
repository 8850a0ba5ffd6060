#include "isrisk/config.hpp"

#include <fstream>

#include "isrisk/errors.hpp"

namespace isrisk {

using nlohmann::json;

json load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    if (!obj.is_object()) throw config_error(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) throw config_error(where + ": unknown key '" + it.key() + "'");
    }
}

const json& require_key(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw config_error(where + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw config_error(where + ": missing key '" + std::string(key) + "'");
    return *it;
}

const json* find_key(const json& obj, const char* key) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double require_number(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_number()) {
        throw config_error(where + ": key '" + std::string(key) + "' must be a number");
    }
    return v.get<double>();
}

double number_or(const json& obj, const char* key, const std::string& where, double fallback) {
    return find_key(obj, key) ? require_number(obj, key, where) : fallback;
}

std::uint64_t require_count(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw config_error(where + ": key '" + std::string(key)
                           + "' must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

std::uint64_t count_or(const json& obj, const char* key, const std::string& where,
                       std::uint64_t fallback) {
    return find_key(obj, key) ? require_count(obj, key, where) : fallback;
}

bool flag_or(const json& obj, const char* key, const std::string& where, bool fallback) {
    const json* v = find_key(obj, key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
        throw config_error(where + ": key '" + std::string(key) + "' must be a boolean");
    }
    return v->get<bool>();
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_string()) {
        throw config_error(where + ": key '" + std::string(key) + "' must be a string");
    }
    return v.get<std::string>();
}

std::vector<double> require_number_array(const json& obj, const char* key,
                                         const std::string& where) {
    const json& v = require_key(obj, key, where);
    if (!v.is_array()) {
        throw config_error(where + ": key '" + std::string(key) + "' must be an array");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const json& item : v) {
        if (!item.is_number()) {
            throw config_error(where + ": key '" + std::string(key)
                               + "' must contain only numbers");
        }
        out.push_back(item.get<double>());
    }
    return out;
}

AnalyticDistribution parse_distribution(const json& spec, const std::string& where) {
    std::string family = require_string(spec, "family", where);
    try {
        if (family == "exponential") {
            reject_unknown_keys(spec, {"family", "rate"}, where);
            return AnalyticDistribution::exponential(require_number(spec, "rate", where));
        }
        if (family == "pareto") {
            reject_unknown_keys(spec, {"family", "index", "scale"}, where);
            return AnalyticDistribution::pareto(require_number(spec, "index", where),
                                                require_number(spec, "scale", where));
        }
        if (family == "normal") {
            reject_unknown_keys(spec, {"family", "mean", "stdev"}, where);
            return AnalyticDistribution::normal(require_number(spec, "mean", where),
                                                require_number(spec, "stdev", where));
        }
        if (family == "lognormal") {
            reject_unknown_keys(spec, {"family", "logmean", "logsd"}, where);
            return AnalyticDistribution::lognormal(require_number(spec, "logmean", where),
                                                   require_number(spec, "logsd", where));
        }
    } catch (const std::invalid_argument& e) {
        throw config_error(where + ": " + e.what());
    }
    throw config_error(where + ": unknown family '" + family + "'");
}

TargetSpec parse_target(const json& section, const std::string& where) {
    std::string name = require_string(section, "target", where);
    if (name == "tail") {
        return TargetSpec::tail(require_number(section, "threshold", where));
    }
    if (name == "quantile") {
        return TargetSpec::quantile(require_number(section, "p", where));
    }
    if (name == "expected_shortfall") {
        return TargetSpec::expected_shortfall(require_number(section, "p", where));
    }
    if (name == "truncated_es") {
        return TargetSpec::truncated_es(require_number(section, "q", where),
                                        require_number(section, "p", where));
    }
    throw config_error(where + ": unknown target '" + name + "'");
}

LambdaSpec parse_lambda(const json& spec, const std::string& where) {
    reject_unknown_keys(spec, {"beta", "A", "delta"}, where);
    LambdaSpec lambda;
    lambda.beta = number_or(spec, "beta", where, lambda.beta);
    lambda.growth_A = number_or(spec, "A", where, lambda.growth_A);
    lambda.growth_delta = number_or(spec, "delta", where, lambda.growth_delta);
    lambda.validate();
    return lambda;
}

} // namespace isrisk
