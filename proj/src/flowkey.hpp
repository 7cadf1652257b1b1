#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

namespace flowmeter {

// IPv4 5-tuple identifying one flow. Stored host-order; the canonical
// 13-byte wire form (big-endian fields, fixed field order) is what hashing
// and on-disk formats are defined over.
struct FlowKey {
    uint32_t src_ip = 0;
    uint32_t dst_ip = 0;
    uint16_t src_port = 0;
    uint16_t dst_port = 0;
    uint8_t proto = 0;

    bool operator==(const FlowKey&) const = default;
    auto operator<=>(const FlowKey&) const = default;

    std::array<uint8_t, 13> canonical_bytes() const;
};

// Keyed 64-bit hash of the canonical byte form. Different hash_key values
// give independent hash functions over the same key.
uint64_t flow_hash(const FlowKey& key, uint64_t hash_key);

// Dotted-quad helpers for the CSV trace format. parse_ipv4 throws
// std::invalid_argument on malformed input.
uint32_t parse_ipv4(const std::string& text);
std::string format_ipv4(uint32_t addr);

}  // namespace flowmeter
