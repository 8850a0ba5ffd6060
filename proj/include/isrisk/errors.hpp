#ifndef ISRISK_ERRORS_HPP
#define ISRISK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace isrisk {

// Bad or inconsistent run configuration (unknown keys, missing sections,
// parameters out of range). Maps to CLI exit code 2.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Sampling scheme cannot back the requested estimate: support violation or
// failed feasibility certificate. Maps to CLI exit code 3.
class infeasible_error : public std::runtime_error {
public:
    explicit infeasible_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure: divergent integral, zero variance, zero density where a
// positive one is required, and similar. Maps to CLI exit code 4.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// A weighted sample whose total mass does not reach the requested level p.
class mass_deficiency_error : public numeric_error {
public:
    explicit mass_deficiency_error(const std::string& what) : numeric_error(what) {}
};

} // namespace isrisk

#endif
