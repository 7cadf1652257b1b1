#pragma once

#include <cstdint>

namespace flowmeter {

// Finalizer of the splitmix64 generator; also used as the keyed word mixer
// for flow hashing. Full-avalanche on 64 bits.
constexpr uint64_t mix64(uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

// Deterministic counter-based PRNG (splitmix64). One instance per consumer
// keeps streams independent and replayable from a single experiment seed.
class SplitMix64 {
  public:
    explicit SplitMix64(uint64_t seed = 0) : state_(seed) {}

    uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // Uniform in [0, bound); bound > 0. Modulo bias is < 2^-57 for the
    // bounds used here (<= 2^7) and accepted.
    uint64_t next_below(uint64_t bound) { return next() % bound; }

    // Uniform double in [0, 1).
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    uint64_t state_;
};

// Stable derivation of sub-seeds from an experiment seed, so that adding a
// consumer never shifts the streams of existing ones.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream_id) {
    return mix64(seed ^ mix64(stream_id + 0x853c49e6748fea9bULL));
}

}  // namespace flowmeter
