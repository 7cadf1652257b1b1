#include "flowtable.hpp"

#include <bit>
#include <stdexcept>

#include "rng.hpp"

namespace flowmeter {

namespace {
// Fixed hash key: table layout must not depend on experiment seeds, only
// on the op sequence.
constexpr uint64_t kTableHashKey = 0x7f4a7c15ca62c1d6ULL;
}  // namespace

FlowTable::FlowTable(size_t initial_capacity, size_t max_capacity)
    : max_capacity_(max_capacity) {
    if (initial_capacity < 2 || !std::has_single_bit(initial_capacity))
        throw std::invalid_argument("FlowTable: initial capacity must be a power of two >= 2");
    if (max_capacity < initial_capacity || !std::has_single_bit(max_capacity))
        throw std::invalid_argument("FlowTable: max capacity must be a power of two >= initial");
    slots_.resize(initial_capacity);
    stats_.bytes_resident = slots_.size() * sizeof(Slot);
}

size_t FlowTable::slot_of(const FlowKey& key) const {
    size_t mask = slots_.size() - 1;
    size_t i = flow_hash(key, kTableHashKey) & mask;
    while (slots_[i].used && !(slots_[i].entry.key == key))
        i = (i + 1) & mask;
    return i;
}

void FlowTable::grow() {
    std::vector<Slot> old = std::move(slots_);
    slots_.assign(old.size() * 2, Slot{});
    stats_.bytes_resident = slots_.size() * sizeof(Slot);
    for (Slot& s : old) {
        if (s.used)
            slots_[slot_of(s.entry.key)] = s;
    }
}

AccumulateResult FlowTable::accumulate(const FlowKey& key, double packets_delta,
                                       double bytes_delta, uint64_t now_us) {
    if (packets_delta < 0.0 || bytes_delta < 0.0)
        throw std::invalid_argument("FlowTable::accumulate: negative delta");
    if (packets_delta == 0.0 && bytes_delta == 0.0)
        throw std::invalid_argument("FlowTable::accumulate: both deltas zero");

    size_t i = slot_of(key);
    if (slots_[i].used) {
        FlowEntry& e = slots_[i].entry;
        e.packets_est += packets_delta;
        e.bytes_est += bytes_delta;
        e.last_update_us = now_us;
        ++stats_.updates;
        return AccumulateResult::kUpdated;
    }

    // Keep load <= 0.75; grow if allowed, refuse at the ceiling.
    if ((stats_.entries + 1) * 4 > slots_.size() * 3) {
        if (slots_.size() >= max_capacity_)
            return AccumulateResult::kTableFull;
        grow();
        i = slot_of(key);
    }

    Slot& s = slots_[i];
    s.used = true;
    s.entry.key = key;
    s.entry.packets_est = packets_delta;
    s.entry.bytes_est = bytes_delta;
    s.entry.first_seen_us = now_us;
    s.entry.last_update_us = now_us;
    ++stats_.entries;
    ++stats_.inserts;
    return AccumulateResult::kInserted;
}

const FlowEntry* FlowTable::lookup(const FlowKey& key) const {
    const Slot& s = slots_[slot_of(key)];
    return s.used ? &s.entry : nullptr;
}

std::vector<FlowEntry> FlowTable::drain() {
    std::vector<FlowEntry> out;
    out.reserve(stats_.entries);
    for (Slot& s : slots_) {
        if (s.used) {
            out.push_back(s.entry);
            s.used = false;
        }
    }
    stats_.inserts = 0;
    stats_.updates = 0;
    stats_.entries = 0;
    return out;
}

std::vector<FlowKey> FlowTable::keys() const {
    std::vector<FlowKey> out;
    out.reserve(stats_.entries);
    for (const Slot& s : slots_)
        if (s.used)
            out.push_back(s.entry.key);
    return out;
}

}  // namespace flowmeter
