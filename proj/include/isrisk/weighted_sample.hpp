#ifndef ISRISK_WEIGHTED_SAMPLE_HPP
#define ISRISK_WEIGHTED_SAMPLE_HPP

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "isrisk/distribution.hpp"
#include "isrisk/scheme.hpp"

namespace isrisk {

// Weighted empirical measure (1/n) * sum of w(X_i) * delta_{X_i}. Atoms are
// kept sorted ascending with exact ties merged (weights summed). This is not
// a probability measure: total_mass is the plain average of the weights and
// only concentrates near 1.
class WeightedSample {
public:
    WeightedSample(std::vector<double> values, std::vector<double> weights, std::size_t n);

    std::size_t n() const { return n_; }
    std::size_t atom_count() const { return values_.size(); }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& weights() const { return weights_; }
    double total_mass() const { return total_mass_; }

    // Suffix weight sum over atoms strictly above index k-1, divided by n:
    // level(k) is the tail value on [values_[k-1], values_[k]).
    double level(std::size_t k) const { return suffix_[k] / static_cast<double>(n_); }

private:
    std::vector<double> values_;
    std::vector<double> weights_;
    std::vector<double> suffix_;  // suffix_[k] = sum of weights_[k..], suffix_[K] = 0
    std::size_t n_;
    double total_mass_;
};

WeightedSample build_weighted_sample(std::span<const double> values, const SamplingScheme& scheme);

// Right-continuous non-increasing step tail T_n^w(t) = (1/n) sum w_i 1{x_i > t}.
double empirical_tail(const WeightedSample& ws, double t);

struct QuantileResult {
    double value;
    // Set when p >= total_mass: the infimum defining the quantile is then
    // -inf, and the reported value falls back to the smallest atom.
    bool mass_deficient;
};

// inf{ t : T_n^w(t) <= p } for p > 0.
QuantileResult empirical_quantile(const WeightedSample& ws, double p);

// Exact integral of the step quantile u -> Q(u) over (a, b), 0 <= a < b <= total_mass.
double quantile_integral(const WeightedSample& ws, double a, double b);

// gamma_p = (1/p) * integral of Q over (0, p). Throws mass_deficiency_error
// when p >= total_mass.
double expected_shortfall(const WeightedSample& ws, double p);

// gamma_{q,p} = (1/p) * integral of Q over (q, p), 0 < q < p.
double truncated_expected_shortfall(const WeightedSample& ws, double q, double p);

// b_n * (T_n^w(t) - T(t)) on a grid of thresholds.
std::vector<double> deviation_process(const WeightedSample& ws, const AnalyticDistribution& model,
                                      std::span<const double> grid, double b_n);

struct StepTail {
    std::vector<double> breakpoints;  // atom values, ascending
    std::vector<double> levels;       // tail value at (just after) each breakpoint
};

StepTail step_tail(const WeightedSample& ws);

// Two-column text serialization, header line carrying n. Values are printed
// with enough digits that load(dump(ws)) reproduces every double bit for bit
// and re-dumping yields byte-identical text.
void dump_weighted_sample(const WeightedSample& ws, std::ostream& os);
WeightedSample load_weighted_sample(std::istream& is);

} // namespace isrisk

#endif
