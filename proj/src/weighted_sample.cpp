#include "isrisk/weighted_sample.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "isrisk/errors.hpp"

namespace isrisk {

WeightedSample::WeightedSample(std::vector<double> values, std::vector<double> weights, std::size_t n)
    : values_(std::move(values)), weights_(std::move(weights)), n_(n) {
    if (values_.size() != weights_.size()) throw std::invalid_argument("atom arrays disagree in size");
    if (values_.empty() || n_ == 0) throw std::invalid_argument("weighted sample needs at least one atom");
    if (!std::is_sorted(values_.begin(), values_.end())) throw std::invalid_argument("atoms must be sorted");
    // Tail sums accumulate from the largest atom down, matching the order a
    // direct enumeration of the tail would use.
    suffix_.assign(values_.size() + 1, 0.0);
    for (std::size_t k = values_.size(); k-- > 0;) {
        suffix_[k] = suffix_[k + 1] + weights_[k];
    }
    total_mass_ = suffix_[0] / static_cast<double>(n_);
}

WeightedSample build_weighted_sample(std::span<const double> values, const SamplingScheme& scheme) {
    std::vector<double> xs(values.begin(), values.end());
    std::sort(xs.begin(), xs.end());
    std::vector<double> vs, ws;
    vs.reserve(xs.size());
    ws.reserve(xs.size());
    for (double x : xs) {
        double w = scheme.weight(x);
        assert(!scheme.weight_bound() || w <= *scheme.weight_bound() * (1.0 + 1e-12));
        if (!vs.empty() && vs.back() == x) {
            ws.back() += w;  // exact ties merge, weights add
        } else {
            vs.push_back(x);
            ws.push_back(w);
        }
    }
    return WeightedSample(std::move(vs), std::move(ws), xs.size());
}

double empirical_tail(const WeightedSample& ws, double t) {
    const auto& v = ws.values();
    std::size_t idx = std::upper_bound(v.begin(), v.end(), t) - v.begin();
    return ws.level(idx);
}

QuantileResult empirical_quantile(const WeightedSample& ws, double p) {
    if (!(p > 0.0)) throw std::domain_error("quantile level must be positive");
    if (p >= ws.total_mass()) {
        return {ws.values().front(), true};
    }
    // levels are non-increasing in the atom index; find the first atom whose
    // tail value drops to p or below.
    std::size_t lo = 0, hi = ws.atom_count() - 1;
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        if (ws.level(mid + 1) <= p) hi = mid; else lo = mid + 1;
    }
    return {ws.values()[lo], false};
}

double quantile_integral(const WeightedSample& ws, double a, double b) {
    if (!(a >= 0.0 && a < b)) throw std::domain_error("need 0 <= a < b");
    // Q(u) = values[k] on [level(k+1), level(k)); sweep from the largest atom
    // (smallest u) until the pieces clear b.
    double acc = 0.0;
    std::size_t K = ws.atom_count();
    for (std::size_t k = K; k-- > 0;) {
        double u_lo = ws.level(k + 1);  // tail at values[k]
        double u_hi = ws.level(k);      // tail just below values[k]
        double lo = std::max(u_lo, a);
        double hi = std::min(u_hi, b);
        if (hi > lo) acc += ws.values()[k] * (hi - lo);
        if (u_hi >= b) break;
    }
    return acc;
}

double expected_shortfall(const WeightedSample& ws, double p) {
    if (!(p > 0.0)) throw std::domain_error("shortfall level must be positive");
    if (p >= ws.total_mass()) {
        throw mass_deficiency_error("expected shortfall needs p < total sample mass");
    }
    return quantile_integral(ws, 0.0, p) / p;
}

double truncated_expected_shortfall(const WeightedSample& ws, double q, double p) {
    if (!(q > 0.0 && q < p)) throw std::domain_error("need 0 < q < p");
    if (p >= ws.total_mass()) {
        throw mass_deficiency_error("truncated expected shortfall needs p < total sample mass");
    }
    return quantile_integral(ws, q, p) / p;
}

std::vector<double> deviation_process(const WeightedSample& ws, const AnalyticDistribution& model,
                                      std::span<const double> grid, double b_n) {
    std::vector<double> out;
    out.reserve(grid.size());
    for (double t : grid) {
        out.push_back(b_n * (empirical_tail(ws, t) - model.tail(t)));
    }
    return out;
}

StepTail step_tail(const WeightedSample& ws) {
    StepTail st;
    st.breakpoints = ws.values();
    st.levels.resize(ws.atom_count());
    for (std::size_t k = 0; k < ws.atom_count(); ++k) st.levels[k] = ws.level(k + 1);
    return st;
}

void dump_weighted_sample(const WeightedSample& ws, std::ostream& os) {
    os << "# weighted_sample n=" << ws.n() << "\n";
    char buf[64];
    for (std::size_t k = 0; k < ws.atom_count(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g\t%.17g\n", ws.values()[k], ws.weights()[k]);
        os << buf;
    }
}

WeightedSample load_weighted_sample(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::invalid_argument("empty weighted sample stream");
    auto pos = header.find("n=");
    if (header.rfind("# weighted_sample", 0) != 0 || pos == std::string::npos) {
        throw std::invalid_argument("bad weighted sample header: " + header);
    }
    std::size_t n = std::stoull(header.substr(pos + 2));
    std::vector<double> vs, ws;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double v, w;
        if (!(ls >> v >> w)) throw std::invalid_argument("bad weighted sample row: " + line);
        vs.push_back(v);
        ws.push_back(w);
    }
    return WeightedSample(std::move(vs), std::move(ws), n);
}

} // namespace isrisk
