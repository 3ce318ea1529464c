#ifndef MTCN_PRNG_HPP
#define MTCN_PRNG_HPP

#include <cstdint>

#include "mtcn/error.hpp"

namespace mtcn {

// Named substream offsets. Every consumer of randomness derives its own
// stream from (master seed, offset) so runs are reproducible end to end.
enum class Stream : std::uint64_t {
    Init = 1,
    Dropout = 2,
    Shuffle = 3,
    Split = 4,
    Fold = 5,
    Synth = 6,
    Search = 7,
    GradCheck = 8,
};

// SplitMix64. Fixed for the whole repository: identical seed gives an
// identical stream on every platform.
class Prng {
public:
    explicit Prng(std::uint64_t seed) : state_(seed) {}

    Prng(std::uint64_t master_seed, Stream stream)
        : Prng(mix(master_seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(stream)))) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) {
        if (!(lo < hi)) throw ConfigError("prng_uniform: lo must be < hi");
        return lo + (hi - lo) * next_double();
    }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw ConfigError("next_below: n must be positive");
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    std::uint64_t state() const { return state_; }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

// Fisher-Yates using the given stream.
template <typename Vec>
void shuffle(Vec& v, Prng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace mtcn

#endif
