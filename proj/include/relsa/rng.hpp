#ifndef RELSA_RNG_HPP
#define RELSA_RNG_HPP

#include <cstdint>

namespace relsa {

/// Counter-style pseudo-random generator built on the splitmix64 finalizer.
///
/// Streams are keyed, not sequenced: `Rng::stream(seed, replication, substream)`
/// derives an independent stream for every distinct triple, so work can be
/// scheduled in any order (or in parallel) without changing the numbers drawn.
/// Substream assignment used across the library:
///   - a Monte Carlo design uses substream j for input j (0-based),
///   - the pick-freeze scheme uses substreams j and d+j for its two base matrices,
///   - replication r of any study passes `replication = r`.
class Rng {
public:
    explicit Rng(std::uint64_t key) : state_(key) {}

    static Rng stream(std::uint64_t seed, std::uint64_t replication,
                      std::uint64_t substream) {
        std::uint64_t key = mix(seed + kGamma);
        key = mix(key + mix(replication + 2 * kGamma));
        key = mix(key + mix(substream + 3 * kGamma));
        return Rng(key);
    }

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform draw strictly inside (0,1); safe to feed to quantile transforms.
    double next_uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

} // namespace relsa

#endif
