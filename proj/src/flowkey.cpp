#include "flowkey.hpp"

#include <cstdio>
#include <stdexcept>

#include "rng.hpp"

namespace flowmeter {

std::array<uint8_t, 13> FlowKey::canonical_bytes() const {
    std::array<uint8_t, 13> out;
    auto put32 = [&](size_t at, uint32_t v) {
        out[at] = static_cast<uint8_t>(v >> 24);
        out[at + 1] = static_cast<uint8_t>(v >> 16);
        out[at + 2] = static_cast<uint8_t>(v >> 8);
        out[at + 3] = static_cast<uint8_t>(v);
    };
    put32(0, src_ip);
    put32(4, dst_ip);
    out[8] = static_cast<uint8_t>(src_port >> 8);
    out[9] = static_cast<uint8_t>(src_port);
    out[10] = static_cast<uint8_t>(dst_port >> 8);
    out[11] = static_cast<uint8_t>(dst_port);
    out[12] = proto;
    return out;
}

uint64_t flow_hash(const FlowKey& key, uint64_t hash_key) {
    // Pack the 13 canonical bytes into two words and run them through the
    // keyed mixer twice; cheap, full-avalanche, and stable across platforms.
    uint64_t w0 = (static_cast<uint64_t>(key.src_ip) << 32) | key.dst_ip;
    uint64_t w1 = (static_cast<uint64_t>(key.src_port) << 24) |
                  (static_cast<uint64_t>(key.dst_port) << 8) | key.proto;
    uint64_t h = mix64(w0 ^ hash_key);
    h = mix64(h ^ w1 ^ 0x2545f4914f6cdd1dULL);
    return h;
}

uint32_t parse_ipv4(const std::string& text) {
    unsigned a, b, c, d;
    char tail;
    int n = std::sscanf(text.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &tail);
    if (n != 4 || a > 255 || b > 255 || c > 255 || d > 255)
        throw std::invalid_argument("bad IPv4 address: '" + text + "'");
    return (a << 24) | (b << 16) | (c << 8) | d;
}

std::string format_ipv4(uint32_t addr) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", addr >> 24, (addr >> 16) & 0xff,
                  (addr >> 8) & 0xff, addr & 0xff);
    return buf;
}

}  // namespace flowmeter
