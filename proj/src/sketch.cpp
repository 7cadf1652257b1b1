#include "sketch.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flowmeter {

double coupon_estimate(uint32_t b, uint32_t k) {
    if (b < 1)
        throw std::invalid_argument("coupon_estimate: b must be >= 1");
    if (k > b)
        throw std::invalid_argument("coupon_estimate: k (" + std::to_string(k) +
                                    ") exceeds b (" + std::to_string(b) + ")");
    long double sum = 0.0L;
    for (uint32_t i = 0; i < k; ++i)
        sum += static_cast<long double>(b) / (b - i);
    return static_cast<double>(sum);
}

namespace {

uint32_t saturation_threshold(double sat_frac, uint32_t b) {
    return static_cast<uint32_t>(std::ceil(sat_frac * b));
}

void validate(const SketchParams& p) {
    if (p.b1 < 1 || p.b1 > 64 || !std::has_single_bit(p.b1))
        throw std::invalid_argument("SketchParams: b1 must be a power of two in [1,64]");
    if (p.b2 < 1 || p.b2 > 64)
        throw std::invalid_argument("SketchParams: b2 must be in [1,64]");
    if (p.blocks1 < 1 || p.blocks2 < 1)
        throw std::invalid_argument("SketchParams: block counts must be >= 1");
    if (!(p.sat_frac > 0.0) || p.sat_frac > 1.0)
        throw std::invalid_argument("SketchParams: sat_frac must be in (0,1]");
}

}  // namespace

TwoLayerSketch::TwoLayerSketch(const SketchParams& params)
    : params_(params),
      k1_(saturation_threshold(params.sat_frac, params.b1)),
      k2_(saturation_threshold(params.sat_frac, params.b2)),
      c1_(0.0),
      c2_(0.0),
      h1_key_(derive_seed(params.seed, 0x11)),
      h2_key_(derive_seed(params.seed, 0x22)),
      rng_(derive_seed(params.seed, 0x33)),
      layer1_(params.blocks1),
      layer2_(params.blocks2) {
    validate(params);
    c1_ = coupon_estimate(params.b1, k1_);
    c2_ = coupon_estimate(params.b2, k2_);
    decode1_.resize(params.b1 + 1);
    for (uint32_t k = 0; k <= params.b1; ++k)
        decode1_[k] = coupon_estimate(params.b1, k);
    decode2_.resize(params.b2 + 1);
    for (uint32_t k = 0; k <= params.b2; ++k)
        decode2_[k] = c1_ * coupon_estimate(params.b2, k);
}

void TwoLayerSketch::increment(const FlowKey& key, uint64_t t,
                               std::vector<FlushEvent>& out) {
    if (t == 0)
        throw std::invalid_argument("TwoLayerSketch::increment: t must be >= 1");
    VirtualBlock& blk1 = layer1_[layer1_index(key)];
    for (uint64_t u = 0; u < t; ++u) {
        blk1.set_bit(static_cast<uint32_t>(rng_.next_below(params_.b1)));
        if (blk1.popcount < k1_)
            continue;
        blk1.reset();
        if (params_.single_layer) {
            // Ablation: no second layer; layer-1 saturation flushes its
            // own decode (popcount is exactly k1* here).
            out.push_back({key, c1_});
            ++flush_count_;
            continue;
        }
        VirtualBlock& blk2 = layer2_[layer2_index(key)];
        blk2.set_bit(static_cast<uint32_t>(rng_.next_below(params_.b2)));
        if (blk2.popcount >= k2_) {
            out.push_back({key, decode2_[blk2.popcount]});
            blk2.reset();
            ++flush_count_;
        }
    }
}

std::vector<FlushEvent> TwoLayerSketch::increment(const FlowKey& key, uint64_t t) {
    std::vector<FlushEvent> out;
    increment(key, t, out);
    return out;
}

double TwoLayerSketch::decode_residue(const FlowKey& key) const {
    double est = decode1_[layer1_[layer1_index(key)].popcount];
    if (!params_.single_layer)
        est += decode2_[layer2_[layer2_index(key)].popcount];
    return est;
}

double TwoLayerSketch::force_flush_all() {
    double drained = 0.0;
    for (VirtualBlock& blk : layer1_) {
        drained += decode1_[blk.popcount];
        blk.reset();
    }
    if (!params_.single_layer) {
        for (VirtualBlock& blk : layer2_) {
            drained += decode2_[blk.popcount];
            blk.reset();
        }
    }
    return drained;
}

size_t TwoLayerSketch::layer1_index(const FlowKey& key) const {
    return flow_hash(key, h1_key_) % params_.blocks1;
}

size_t TwoLayerSketch::layer2_index(const FlowKey& key) const {
    return flow_hash(key, h2_key_) % params_.blocks2;
}

double TwoLayerSketch::layer1_residue(size_t block) const {
    return decode1_[layer1_.at(block).popcount];
}

double TwoLayerSketch::layer2_residue(size_t block) const {
    return decode2_[layer2_.at(block).popcount];
}

size_t TwoLayerSketch::memory_bytes() const {
    size_t bits = static_cast<size_t>(params_.blocks1) * params_.b1;
    if (!params_.single_layer)
        bits += static_cast<size_t>(params_.blocks2) * params_.b2;
    return bits / 8;
}

}  // namespace flowmeter
