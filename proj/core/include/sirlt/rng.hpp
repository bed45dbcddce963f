#pragma once

#include <cstdint>
#include <limits>

namespace sirlt {

// Counter-based stream derivation. Every random draw in the simulators comes
// from a Stream keyed by (master seed, replicate, purpose, step, site, sub),
// so results do not depend on iteration order or on how replicates are
// scheduled across workers.

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x632be59bd9b4e019ULL + (h << 6) + (h >> 2)));
}

/// SplitMix64 generator; satisfies UniformRandomBitGenerator.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit constexpr Stream(std::uint64_t state) : state_(state) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Stream purposes. Distinct tags keep the simulators' draws independent.
enum class Purpose : std::uint64_t {
    Arrivals = 1,
    RedArrivals = 2,
    BlueArrivals = 3,
    Labels = 4,
    KappaCoin = 5,
    CategoryArrivals = 6,
    Enumeration = 7,
    ModifiedArrivals = 8,
};

class RngContext {
public:
    constexpr RngContext(std::uint64_t master_seed, std::uint64_t replicate = 0)
        : base_(combine(mix64(master_seed), replicate)) {}

    /// Context for an independent sub-experiment (e.g. the other side of a
    /// two-simulator comparison) sharing the same master seed.
    RngContext fork(std::uint64_t tag) const {
        RngContext c(0);
        c.base_ = combine(base_, 0xf0f0f0f000000000ULL ^ tag);
        return c;
    }

    Stream stream(Purpose purpose, std::uint64_t step, std::uint64_t site_key,
                  std::uint64_t sub = 0) const {
        return substream(site_hash(purpose, step, site_key), sub);
    }

    /// Hash of (purpose, step, site); substream(site_hash(...), sub) equals
    /// stream(purpose, step, site, sub) and saves rehashing per direction.
    std::uint64_t site_hash(Purpose purpose, std::uint64_t step, std::uint64_t site_key) const {
        std::uint64_t h = combine(base_, static_cast<std::uint64_t>(purpose));
        h = combine(h, step);
        return combine(h, site_key);
    }
    static Stream substream(std::uint64_t site_hash, std::uint64_t sub) { return Stream(combine(site_hash, sub)); }

private:
    std::uint64_t base_;
};

}  // namespace sirlt
