#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "flowtable.hpp"
#include "sketch.hpp"
#include "trace.hpp"

namespace flowmeter {

struct PipelineConfig {
    SketchParams packet_sketch; // geometry for the packet metric
    SketchParams byte_sketch;   // geometry for the byte metric
    uint32_t byte_unit = 64;    // U: bytes per byte-sketch unit increment
    double epoch_len_s = 60.0;  // report window; 0 = one epoch, whole trace
    uint32_t shards = 1;        // worker shards; 1 = inline, no threads
    size_t table_initial_capacity = size_t{1} << 16;
    size_t table_max_capacity = size_t{1} << 24;
    uint64_t seed = 0;          // master seed for rounding + per-shard streams
};

// Counters for one epoch. regulation_rate is the headline metric: the
// fraction of input packets that turned into table operations.
struct RegulationStats {
    uint64_t packets_in = 0;
    uint64_t byte_units_in = 0;
    uint64_t table_ops = 0;        // flush-triggered accumulate calls
    uint64_t dropped_flushes = 0;  // flushes refused by a full table
    uint64_t first_ts_us = 0;      // valid when packets_in > 0
    uint64_t last_ts_us = 0;

    double regulation_rate() const {
        return packets_in ? static_cast<double>(table_ops) / static_cast<double>(packets_in)
                          : 0.0;
    }
};

struct EpochRow {
    FlowKey key;
    double packets_est = 0.0;
    double bytes_est = 0.0;
};

// The packet path. Per packet: one packet-sketch unit, and len/U byte-
// sketch units (remainder rounded up with probability rem/U, drawn on the
// producer thread so results don't depend on shard count... they still do
// via per-shard sketch streams, but rounding is one stream). Flushes land
// in the flow table; the regulation stats count exactly those landings.
//
// With shards > 1, flows are partitioned by a keyed route hash; each shard
// owns private sketches and a private table segment and is fed through a
// bounded SPSC queue by the single producer thread. query_flow, stats,
// table_keys and end_epoch act as barriers: they wait until every queued
// packet has been applied.
class Pipeline {
  public:
    explicit Pipeline(const PipelineConfig& cfg);
    ~Pipeline();
    Pipeline(const Pipeline&) = delete;
    Pipeline& operator=(const Pipeline&) = delete;

    // Feeds one record. Throws std::invalid_argument on wire_len < 1.
    void process(const TraceRecord& rec);

    // Online estimate for one flow: table value + sketch residues (byte
    // residue scaled by U). Non-destructive.
    std::pair<double, double> query_flow(const FlowKey& key);

    // Closes the epoch: for every requested key, final estimate = table
    // value + attributed sketch residue; then sketches, tables, and stats
    // are reset and the epoch counter advances. Rows come back sorted by
    // key. Duplicate keys in active_keys are deduplicated.
    //
    // Residue attribution is claim-once: each physical block's residue is
    // decoded once and split across the requesting keys that map to it
    // (weighted by their accumulated table value), so epoch totals are
    // conserved instead of multiply counted by every key sharing a block.
    std::vector<EpochRow> end_epoch(const std::vector<FlowKey>& active_keys);

    RegulationStats stats();               // current-epoch counters
    std::vector<FlowKey> table_keys();     // resident keys across shards
    uint32_t epoch() const { return epoch_; }
    const PipelineConfig& config() const { return cfg_; }

    size_t sketch_memory_bytes() const;    // all shards, both metrics
    size_t table_bytes_resident() const;   // all shards
    uint64_t flush_count() const;          // lifetime, both metrics

  private:
    struct Shard;
    struct Worker;

    size_t shard_of(const FlowKey& key) const;
    void barrier();
    void process_item(Shard& sh, const FlowKey& key, uint32_t byte_units, uint64_t ts_us);

    PipelineConfig cfg_;
    uint64_t route_key_;
    SplitMix64 round_rng_;
    std::vector<std::unique_ptr<Shard>> shards_;
    std::vector<std::unique_ptr<Worker>> workers_; // empty when shards == 1
    uint64_t packets_in_ = 0;
    uint64_t first_ts_us_ = 0;
    uint64_t last_ts_us_ = 0;
    uint32_t epoch_ = 0;
};

}  // namespace flowmeter
