#ifndef ISRISK_RANDOM_HPP
#define ISRISK_RANDOM_HPP

#include <cstdint>
#include <random>

namespace isrisk {

// Reproducible uniform stream. The pair (seed, stream_index) fully determines
// the sequence, so replications can run on any number of workers and still
// produce identical draws: replication r always uses stream_index r.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_index)
        : seed_(seed), stream_index_(stream_index) {
        std::seed_seq seq{
            static_cast<std::uint32_t>(seed & 0xffffffffu),
            static_cast<std::uint32_t>(seed >> 32),
            static_cast<std::uint32_t>(stream_index & 0xffffffffu),
            static_cast<std::uint32_t>(stream_index >> 32)};
        gen_.seed(seq);
    }

    // Uniform on the open interval (0,1): 2^53 equispaced midpoints, never 0
    // or 1, so inverse-transform sampling never produces an infinite quantile.
    double next_uniform() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1p-53;
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_index() const { return stream_index_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_index_;
    std::mt19937_64 gen_;
};

} // namespace isrisk

#endif
