#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "flowkey.hpp"
#include "rng.hpp"

namespace flowmeter {

// Expected number of uniform draws over b bins needed to see k distinct
// bins: sum_{i=0}^{k-1} b/(b-i). Inverts the random-bit-setting process a
// block performs, so coupon_estimate(b, popcount) decodes a block back to
// an (unbiased-in-expectation) increment count.
// Throws std::invalid_argument unless b >= 1 and 0 <= k <= b.
double coupon_estimate(uint32_t b, uint32_t k);

struct SketchParams {
    uint32_t b1 = 64;        // bits per layer-1 block; power of two <= 64
    uint32_t b2 = 64;        // bits per layer-2 block; 1..64
    uint32_t blocks1 = 4096; // layer-1 block count
    uint32_t blocks2 = 4096; // layer-2 block count
    double sat_frac = 0.75;  // saturation fraction s in (0,1]
    bool single_layer = false; // ablation: flush on layer-1 saturation
    uint64_t seed = 0;
};

// One word-sized probabilistic counter. popcount is cached and must always
// equal the number of set bits.
struct VirtualBlock {
    uint64_t bits = 0;
    uint8_t popcount = 0;

    void set_bit(uint32_t idx) {
        assert(idx < 64);
        uint64_t mask = uint64_t{1} << idx;
        if (!(bits & mask)) {
            bits |= mask;
            ++popcount;
        }
        assert(popcount == __builtin_popcountll(bits));
    }

    void reset() {
        bits = 0;
        popcount = 0;
    }
};

// A flush: `amount` estimated unit increments for `key`, emitted when the
// key's layer-2 block saturates (layer-1 in single_layer mode).
struct FlushEvent {
    FlowKey key;
    double amount = 0.0;
};

// Two-layer saturating sketch for one metric (packets, or byte-units).
//
// Per unit increment one pseudorandom bit is set in the key's layer-1
// block. When that block saturates (popcount >= k1* = ceil(s*b1)) it is
// recycled and one pseudorandom bit is set in the key's layer-2 block, so
// each layer-2 bit is worth C1 = coupon_estimate(b1, k1*) units. When the
// layer-2 block saturates it is recycled and a FlushEvent of about C1*C2
// units is emitted. Flows therefore touch downstream state once per
// ~C1*C2 units instead of once per unit.
//
// Single-writer; decode_residue is non-destructive but must not race with
// increments.
class TwoLayerSketch {
  public:
    explicit TwoLayerSketch(const SketchParams& params);

    // Applies t >= 1 unit increments for key, appending any flushes to
    // `out` (not cleared). Throws std::invalid_argument on t = 0.
    void increment(const FlowKey& key, uint64_t t, std::vector<FlushEvent>& out);

    std::vector<FlushEvent> increment(const FlowKey& key, uint64_t t);

    // Online decode of the units still held for key:
    // C1 * coupon_estimate(b2, pc2) + coupon_estimate(b1, pc1).
    double decode_residue(const FlowKey& key) const;

    // Zeroes every block and returns the total residue drained, without
    // flow attribution. Per-flow attribution must happen before this via
    // decode_residue / the block accessors below.
    double force_flush_all();

    // Block addressing and per-block residues, for epoch-end attribution
    // by a caller that knows the active key set.
    size_t layer1_index(const FlowKey& key) const;
    size_t layer2_index(const FlowKey& key) const;
    double layer1_residue(size_t block) const;
    double layer2_residue(size_t block) const; // already C1-scaled

    const SketchParams& params() const { return params_; }
    uint32_t k1_star() const { return k1_; }
    uint32_t k2_star() const { return k2_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }
    uint64_t flush_count() const { return flush_count_; }
    size_t memory_bytes() const;

  private:
    SketchParams params_;
    uint32_t k1_;
    uint32_t k2_;
    double c1_;
    double c2_;
    uint64_t h1_key_;
    uint64_t h2_key_;
    SplitMix64 rng_;
    std::vector<VirtualBlock> layer1_;
    std::vector<VirtualBlock> layer2_;
    std::vector<double> decode1_; // popcount -> coupon_estimate(b1, pc)
    std::vector<double> decode2_; // popcount -> C1 * coupon_estimate(b2, pc)
    uint64_t flush_count_ = 0;
};

}  // namespace flowmeter
