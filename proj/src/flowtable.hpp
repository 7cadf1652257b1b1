#pragma once

#include <cstdint>
#include <vector>

#include "flowkey.hpp"

namespace flowmeter {

// One accumulated flow record. Values only grow within an epoch; drain()
// is the only way they leave the table.
struct FlowEntry {
    FlowKey key;
    double packets_est = 0.0;
    double bytes_est = 0.0;
    uint64_t first_seen_us = 0;
    uint64_t last_update_us = 0;
};

struct FlowTableStats {
    uint64_t inserts = 0; // new-entry creations since last drain
    uint64_t updates = 0; // existing-entry accumulations since last drain
    size_t entries = 0;
    size_t bytes_resident = 0; // capacity * slot size
};

enum class AccumulateResult {
    kInserted,
    kUpdated,
    kTableFull, // capacity ceiling reached and key absent; nothing stored
};

// The resident flow set: an open-addressing (linear probing) hash table
// from FlowKey to accumulated estimates, instrumented so that every
// insert/update is countable. Capacity is a power of two, doubling
// at load factor 0.75 up to max_capacity; at the ceiling, inserts that
// would push load past 0.75 are refused with kTableFull (updates of
// resident keys always succeed). Single-writer per shard.
class FlowTable {
  public:
    explicit FlowTable(size_t initial_capacity = size_t{1} << 16,
                       size_t max_capacity = size_t{1} << 24);

    // Adds the deltas (>= 0, at least one > 0) to key's entry, creating it
    // if absent. Exactly one stats counter (inserts or updates) ticks per
    // call. Throws std::invalid_argument on negative or all-zero deltas.
    AccumulateResult accumulate(const FlowKey& key, double packets_delta,
                                double bytes_delta, uint64_t now_us);

    // nullptr when absent. The pointer is invalidated by the next
    // accumulate (growth may move slots).
    const FlowEntry* lookup(const FlowKey& key) const;

    // Returns all live entries, empties the table, and resets stats.
    std::vector<FlowEntry> drain();

    // Live keys, in table order (deterministic for a deterministic op
    // sequence; not sorted).
    std::vector<FlowKey> keys() const;

    const FlowTableStats& stats() const { return stats_; }
    size_t size() const { return stats_.entries; }
    size_t capacity() const { return slots_.size(); }

  private:
    struct Slot {
        FlowEntry entry;
        bool used = false;
    };

    size_t slot_of(const FlowKey& key) const;
    void grow();

    std::vector<Slot> slots_;
    size_t max_capacity_;
    FlowTableStats stats_;
};

}  // namespace flowmeter
