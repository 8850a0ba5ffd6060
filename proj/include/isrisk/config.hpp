#ifndef ISRISK_CONFIG_HPP
#define ISRISK_CONFIG_HPP

#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "json.hpp"

#include "isrisk/assumption_audit.hpp"
#include "isrisk/distribution.hpp"
#include "isrisk/experiments.hpp"

namespace isrisk {

// Strict config helpers: every lookup kind throws config_error with the
// offending section path, and every section is checked against the exact set
// of keys it may carry, so a typo never silently falls back to a default.

nlohmann::json load_config_file(const std::string& path);

void reject_unknown_keys(const nlohmann::json& obj,
                         std::initializer_list<const char*> allowed,
                         const std::string& where);

const nlohmann::json& require_key(const nlohmann::json& obj, const char* key,
                                  const std::string& where);
const nlohmann::json* find_key(const nlohmann::json& obj, const char* key);

double require_number(const nlohmann::json& obj, const char* key, const std::string& where);
double number_or(const nlohmann::json& obj, const char* key, const std::string& where,
                 double fallback);
std::uint64_t require_count(const nlohmann::json& obj, const char* key, const std::string& where);
std::uint64_t count_or(const nlohmann::json& obj, const char* key, const std::string& where,
                       std::uint64_t fallback);
bool flag_or(const nlohmann::json& obj, const char* key, const std::string& where, bool fallback);
std::string require_string(const nlohmann::json& obj, const char* key, const std::string& where);
std::vector<double> require_number_array(const nlohmann::json& obj, const char* key,
                                         const std::string& where);

// {"family": "exponential", "rate": 1.0} and the pareto/normal/lognormal
// analogues; any key outside the family's parameter set is rejected.
AnalyticDistribution parse_distribution(const nlohmann::json& spec, const std::string& where);

// Reads "target" plus the level keys it implies (threshold | p | q) from a
// command section; other keys in the section are left to the command parser.
TargetSpec parse_target(const nlohmann::json& section, const std::string& where);

// {"beta": 0.25, "A": 1.0, "delta": 0.25}, all optional.
LambdaSpec parse_lambda(const nlohmann::json& spec, const std::string& where);

} // namespace isrisk

#endif
