#include "trace.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cinttypes>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "errors.hpp"

namespace flowmeter {

namespace {

constexpr uint32_t kMagicUsec = 0xa1b2c3d4;      // classic, microseconds
constexpr uint32_t kMagicUsecSwapped = 0xd4c3b2a1;
constexpr uint32_t kMagicNsec = 0xa1b23c4d;      // nanosecond variant
constexpr uint32_t kMagicNsecSwapped = 0x4d3cb2a1;
constexpr uint32_t kLinktypeEthernet = 1;
constexpr size_t kMaxRecordBytes = 1 << 20;

uint32_t bswap32(uint32_t v) { return __builtin_bswap32(v); }

uint16_t load_be16(const uint8_t* p) {
    return static_cast<uint16_t>((p[0] << 8) | p[1]);
}

uint32_t load_be32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void store_be16(uint8_t* p, uint16_t v) {
    p[0] = static_cast<uint8_t>(v >> 8);
    p[1] = static_cast<uint8_t>(v);
}

void store_be32(uint8_t* p, uint32_t v) {
    p[0] = static_cast<uint8_t>(v >> 24);
    p[1] = static_cast<uint8_t>(v >> 16);
    p[2] = static_cast<uint8_t>(v >> 8);
    p[3] = static_cast<uint8_t>(v);
}

void store_le32(uint8_t* p, uint32_t v) {
    p[0] = static_cast<uint8_t>(v);
    p[1] = static_cast<uint8_t>(v >> 8);
    p[2] = static_cast<uint8_t>(v >> 16);
    p[3] = static_cast<uint8_t>(v >> 24);
}

void store_le16(uint8_t* p, uint16_t v) {
    p[0] = static_cast<uint8_t>(v);
    p[1] = static_cast<uint8_t>(v >> 8);
}

uint16_t ipv4_header_checksum(const uint8_t* hdr, size_t len) {
    uint32_t sum = 0;
    for (size_t i = 0; i + 1 < len; i += 2)
        sum += static_cast<uint32_t>((hdr[i] << 8) | hdr[i + 1]);
    while (sum >> 16)
        sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<uint16_t>(~sum);
}

}  // namespace

// --- CSV ---

CsvTraceReader::CsvTraceReader(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_)
        throw IoError("cannot open trace '" + path + "'");
}

CsvTraceReader::~CsvTraceReader() {
    if (f_)
        std::fclose(f_);
}

bool CsvTraceReader::next(TraceRecord& out) {
    char line[512];
    while (std::fgets(line, sizeof(line), f_)) {
        ++line_no_;
        size_t len = std::strlen(line);
        while (len > 0 && (line[len - 1] == '\n' || line[len - 1] == '\r'))
            line[--len] = '\0';
        if (len == 0)
            continue;
        if (line_no_ == 1 && !std::isdigit(static_cast<unsigned char>(line[0])))
            continue; // header row

        auto fail = [&](const char* what) {
            throw FormatError(path_ + ":" + std::to_string(line_no_) + ": " + what);
        };

        // Split into exactly 7 comma-separated fields.
        char* fields[7];
        char* cur = line;
        for (int i = 0; i < 7; ++i) {
            fields[i] = cur;
            char* comma = std::strchr(cur, ',');
            if (comma) {
                if (i == 6)
                    fail("too many fields");
                *comma = '\0';
                cur = comma + 1;
            } else if (i != 6) {
                fail("expected 7 fields: ts_us,src_ip,dst_ip,src_port,dst_port,proto,len");
            }
        }

        auto parse_u64 = [&](const char* s, uint64_t max, const char* what) -> uint64_t {
            if (*s == '\0')
                fail(what);
            char* end = nullptr;
            errno = 0;
            unsigned long long v = std::strtoull(s, &end, 10);
            if (errno != 0 || *end != '\0' || v > max)
                fail(what);
            return v;
        };

        out.ts_us = parse_u64(fields[0], UINT64_MAX, "bad ts_us");
        try {
            out.key.src_ip = parse_ipv4(fields[1]);
            out.key.dst_ip = parse_ipv4(fields[2]);
        } catch (const std::invalid_argument& e) {
            fail(e.what());
        }
        out.key.src_port = static_cast<uint16_t>(parse_u64(fields[3], 65535, "bad src_port"));
        out.key.dst_port = static_cast<uint16_t>(parse_u64(fields[4], 65535, "bad dst_port"));
        out.key.proto = static_cast<uint8_t>(parse_u64(fields[5], 255, "bad proto"));
        out.wire_len = static_cast<uint32_t>(parse_u64(fields[6], UINT32_MAX, "bad len"));
        if (out.wire_len < 1)
            fail("len must be >= 1");
        return true;
    }
    if (std::ferror(f_))
        throw IoError("read error on '" + path_ + "'");
    return false;
}

CsvTraceWriter::CsvTraceWriter(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_)
        throw IoError("cannot create '" + path + "'");
    std::fputs("ts_us,src_ip,dst_ip,src_port,dst_port,proto,len\n", f_);
}

CsvTraceWriter::~CsvTraceWriter() {
    close();
}

void CsvTraceWriter::write(const TraceRecord& rec) {
    if (!f_)
        throw IoError("write on closed trace writer '" + path_ + "'");
    // Refuse records the reader would reject, so written traces always load.
    if (rec.key.proto != 6 && rec.key.proto != 17)
        throw std::invalid_argument("csv writer supports only TCP (6) and UDP (17) records");
    if (rec.wire_len < 1)
        throw std::invalid_argument("csv writer: wire_len must be >= 1");
    std::fprintf(f_, "%" PRIu64 ",%s,%s,%u,%u,%u,%u\n", rec.ts_us,
                 format_ipv4(rec.key.src_ip).c_str(), format_ipv4(rec.key.dst_ip).c_str(),
                 rec.key.src_port, rec.key.dst_port, rec.key.proto, rec.wire_len);
}

void CsvTraceWriter::close() {
    if (!f_)
        return;
    int rc = std::fclose(f_);
    f_ = nullptr;
    if (rc != 0)
        throw IoError("close failed for '" + path_ + "'");
}

// --- pcap ---

PcapTraceReader::PcapTraceReader(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "rb");
    if (!f_)
        throw IoError("cannot open trace '" + path + "'");
    uint8_t hdr[24];
    if (std::fread(hdr, 1, sizeof(hdr), f_) != sizeof(hdr)) {
        std::fclose(f_);
        f_ = nullptr;
        throw FormatError("'" + path + "': shorter than a pcap global header");
    }
    uint32_t magic;
    std::memcpy(&magic, hdr, 4);
    if (magic == kMagicNsec || magic == kMagicNsecSwapped) {
        std::fclose(f_);
        f_ = nullptr;
        throw UnsupportedError("'" + path + "': nanosecond pcap is not supported");
    }
    if (magic == kMagicUsec) {
        swapped_ = false;
    } else if (magic == kMagicUsecSwapped) {
        swapped_ = true;
    } else {
        std::fclose(f_);
        f_ = nullptr;
        throw UnsupportedError("'" + path + "': not a classic pcap file");
    }
    uint32_t linktype;
    std::memcpy(&linktype, hdr + 20, 4);
    if (swapped_)
        linktype = bswap32(linktype);
    if (linktype != kLinktypeEthernet) {
        std::fclose(f_);
        f_ = nullptr;
        throw UnsupportedError("'" + path + "': linktype " + std::to_string(linktype) +
                               " not supported (Ethernet only)");
    }
}

PcapTraceReader::~PcapTraceReader() {
    if (f_)
        std::fclose(f_);
}

bool PcapTraceReader::read_exact(void* buf, size_t n, bool* clean_eof) {
    size_t got = std::fread(buf, 1, n, f_);
    if (got == n) {
        *clean_eof = false;
        return true;
    }
    if (std::ferror(f_))
        throw IoError("read error on '" + path_ + "'");
    *clean_eof = (got == 0);
    return false;
}

bool PcapTraceReader::next(TraceRecord& out) {
    if (done_)
        return false;
    std::vector<uint8_t> pkt;
    for (;;) {
        uint8_t rec_hdr[16];
        bool clean = false;
        if (!read_exact(rec_hdr, sizeof(rec_hdr), &clean)) {
            if (!clean)
                ++skips_.truncated_tail;
            done_ = true;
            return false;
        }
        uint32_t w[4];
        std::memcpy(w, rec_hdr, 16);
        if (swapped_)
            for (uint32_t& v : w)
                v = bswap32(v);
        uint64_t ts = static_cast<uint64_t>(w[0]) * 1000000 + w[1];
        uint32_t incl_len = w[2];
        uint32_t orig_len = w[3];
        if (incl_len > kMaxRecordBytes)
            throw FormatError("'" + path_ + "': record of " + std::to_string(incl_len) +
                              " captured bytes exceeds the 1 MiB sanity limit");
        pkt.resize(incl_len);
        if (incl_len > 0 && !read_exact(pkt.data(), incl_len, &clean)) {
            ++skips_.truncated_tail;
            done_ = true;
            return false;
        }

        // Ethernet, optionally one 802.1Q tag.
        if (pkt.size() < 14) {
            ++skips_.short_frame;
            continue;
        }
        uint16_t ethertype = load_be16(pkt.data() + 12);
        size_t off = 14;
        if (ethertype == 0x8100) {
            if (pkt.size() < 18) {
                ++skips_.short_frame;
                continue;
            }
            ethertype = load_be16(pkt.data() + 16);
            off = 18;
        }
        if (ethertype == 0x86DD) {
            ++skips_.ipv6;
            continue;
        }
        if (ethertype != 0x0800) {
            ++skips_.non_ip;
            continue;
        }

        // IPv4.
        if (pkt.size() < off + 20) {
            ++skips_.short_frame;
            continue;
        }
        const uint8_t* ip = pkt.data() + off;
        if ((ip[0] >> 4) != 4) {
            ++skips_.non_ip;
            continue;
        }
        size_t ihl = static_cast<size_t>(ip[0] & 0x0f) * 4;
        if (ihl < 20 || pkt.size() < off + ihl) {
            ++skips_.short_frame;
            continue;
        }
        if ((load_be16(ip + 6) & 0x1fff) != 0) { // fragment with nonzero offset
            ++skips_.fragments;
            continue;
        }
        uint8_t proto = ip[9];
        if (proto != 6 && proto != 17) {
            ++skips_.non_tcp_udp;
            continue;
        }
        if (pkt.size() < off + ihl + 4) { // need the L4 port pair
            ++skips_.short_frame;
            continue;
        }
        if (orig_len < 1) {
            ++skips_.short_frame;
            continue;
        }

        out.ts_us = ts;
        out.key.src_ip = load_be32(ip + 12);
        out.key.dst_ip = load_be32(ip + 16);
        out.key.src_port = load_be16(ip + ihl);
        out.key.dst_port = load_be16(ip + ihl + 2);
        out.key.proto = proto;
        out.wire_len = orig_len;
        if (have_last_ts_ && ts < last_ts_us_)
            ++skips_.ts_regressions;
        last_ts_us_ = ts;
        have_last_ts_ = true;
        return true;
    }
}

PcapTraceWriter::PcapTraceWriter(const std::string& path) : path_(path) {
    f_ = std::fopen(path.c_str(), "wb");
    if (!f_)
        throw IoError("cannot create '" + path + "'");
    uint8_t hdr[24] = {0};
    store_le32(hdr, kMagicUsec);
    store_le16(hdr + 4, 2);  // version 2.4
    store_le16(hdr + 6, 4);
    store_le32(hdr + 16, 65535); // snaplen
    store_le32(hdr + 20, kLinktypeEthernet);
    if (std::fwrite(hdr, 1, sizeof(hdr), f_) != sizeof(hdr))
        throw IoError("write failed for '" + path + "'");
}

PcapTraceWriter::~PcapTraceWriter() {
    close();
}

void PcapTraceWriter::write(const TraceRecord& rec) {
    if (!f_)
        throw IoError("write on closed trace writer '" + path_ + "'");
    if (rec.key.proto != 6 && rec.key.proto != 17)
        throw std::invalid_argument("pcap writer supports only TCP (6) and UDP (17) records");
    if (rec.wire_len < 1)
        throw std::invalid_argument("pcap writer: wire_len must be >= 1");

    const size_t l4_len = rec.key.proto == 6 ? 20 : 8;
    const size_t frame_len = 14 + 20 + l4_len;
    uint8_t buf[16 + 14 + 20 + 20];

    store_le32(buf, static_cast<uint32_t>(rec.ts_us / 1000000));
    store_le32(buf + 4, static_cast<uint32_t>(rec.ts_us % 1000000));
    store_le32(buf + 8, static_cast<uint32_t>(frame_len)); // headers only on disk
    store_le32(buf + 12, rec.wire_len);

    uint8_t* eth = buf + 16;
    static const uint8_t macs[12] = {2, 0, 0, 0, 0, 2, 2, 0, 0, 0, 0, 1};
    std::memcpy(eth, macs, 12);
    store_be16(eth + 12, 0x0800);

    uint8_t* ip = eth + 14;
    std::memset(ip, 0, 20 + l4_len);
    ip[0] = 0x45;
    // The IP length reflects the claimed wire length where possible, so the
    // frame stays self-consistent even though payload bytes are not stored.
    uint32_t ip_len = rec.wire_len > 14 ? rec.wire_len - 14 : 0;
    ip_len = std::clamp<uint32_t>(ip_len, static_cast<uint32_t>(20 + l4_len), 65535);
    store_be16(ip + 2, static_cast<uint16_t>(ip_len));
    store_be16(ip + 6, 0x4000); // DF, offset 0
    ip[8] = 64;
    ip[9] = rec.key.proto;
    store_be32(ip + 12, rec.key.src_ip);
    store_be32(ip + 16, rec.key.dst_ip);
    store_be16(ip + 10, ipv4_header_checksum(ip, 20));

    uint8_t* l4 = ip + 20;
    store_be16(l4, rec.key.src_port);
    store_be16(l4 + 2, rec.key.dst_port);
    if (rec.key.proto == 6) {
        l4[12] = 0x50; // data offset 5 words
        l4[13] = 0x10; // ACK
        store_be16(l4 + 14, 65535);
    } else {
        store_be16(l4 + 4, static_cast<uint16_t>(ip_len - 20));
    }

    size_t total = 16 + frame_len;
    if (std::fwrite(buf, 1, total, f_) != total)
        throw IoError("write failed for '" + path_ + "'");
}

void PcapTraceWriter::close() {
    if (!f_)
        return;
    int rc = std::fclose(f_);
    f_ = nullptr;
    if (rc != 0)
        throw IoError("close failed for '" + path_ + "'");
}

std::unique_ptr<TraceReader> open_trace(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("cannot open trace '" + path + "'");
    uint8_t magic_bytes[4] = {0};
    size_t got = std::fread(magic_bytes, 1, 4, f);
    std::fclose(f);
    if (got == 4) {
        uint32_t magic;
        std::memcpy(&magic, magic_bytes, 4);
        if (magic == kMagicUsec || magic == kMagicUsecSwapped || magic == kMagicNsec ||
            magic == kMagicNsecSwapped)
            return std::make_unique<PcapTraceReader>(path);
    }
    return std::make_unique<CsvTraceReader>(path);
}

std::unique_ptr<TraceWriter> open_trace_writer(const std::string& path, TraceFormat format) {
    if (format == TraceFormat::kPcap)
        return std::make_unique<PcapTraceWriter>(path);
    return std::make_unique<CsvTraceWriter>(path);
}

OracleTable build_oracle(TraceReader& reader) {
    OracleTable table;
    TraceRecord rec;
    while (reader.next(rec)) {
        OracleCounts& c = table[rec.key];
        c.packets += 1;
        c.bytes += rec.wire_len;
    }
    return table;
}

// --- generator ---

namespace {

FlowKey background_key(uint32_t rank) {
    FlowKey k;
    k.src_ip = 0x0A000000u + rank;              // 10.0.0.0/8
    k.dst_ip = 0xC0000200u + (rank % 239);      // 192.0.2.0/24-ish pool
    k.src_port = static_cast<uint16_t>(1024 + rank % 50000);
    k.dst_port = (rank % 2) ? 443 : 53;
    k.proto = (rank % 2) ? 6 : 17;
    return k;
}

FlowKey planted_key(uint32_t index) {
    FlowKey k;
    k.src_ip = 0xAC100000u + index;             // 172.16.0.0/12
    k.dst_ip = 0xC0A80101u;                     // 192.168.1.1
    k.src_port = static_cast<uint16_t>(5000 + index % 50000);
    k.dst_port = 8080;
    k.proto = 6;
    return k;
}

}  // namespace

GenerateSummary generate_trace(const GeneratorConfig& cfg, TraceWriter& writer,
                               OracleTable& oracle_out) {
    if (cfg.flows < 1)
        throw std::invalid_argument("generator: flows must be >= 1");
    if (cfg.flows > (uint64_t{1} << 24))
        throw std::invalid_argument("generator: flows must be <= 2^24");
    if (cfg.packets < cfg.flows)
        throw std::invalid_argument("generator: packets must be >= flows");
    if (cfg.zipf_alpha < 0.0)
        throw std::invalid_argument("generator: zipf_alpha must be >= 0");
    if (cfg.mean_pkt_len < 40)
        throw std::invalid_argument("generator: mean_pkt_len must be >= 40");

    uint64_t planted_total = 0;
    uint64_t planted_flows = 0;
    for (const PlantedClass& pc : cfg.planted) {
        if (pc.flow_count > 0 && pc.packets_per_flow < 1)
            throw std::invalid_argument("generator: planted class with zero packets per flow");
        planted_total += pc.packets_per_flow * pc.flow_count;
        planted_flows += pc.flow_count;
    }
    if (planted_total > cfg.packets)
        throw std::invalid_argument("generator: planted packet total exceeds packets");
    if (planted_flows > (uint64_t{1} << 20))
        throw std::invalid_argument("generator: more than 2^20 planted flows");

    SplitMix64 rng(derive_seed(cfg.seed, 0x6e67)); // generator stream

    // Flow index per packet: planted flows get ids >= cfg.flows.
    std::vector<uint32_t> ids;
    ids.reserve(cfg.packets);
    {
        uint32_t next_planted = static_cast<uint32_t>(cfg.flows);
        for (const PlantedClass& pc : cfg.planted)
            for (uint64_t j = 0; j < pc.flow_count; ++j, ++next_planted)
                for (uint64_t p = 0; p < pc.packets_per_flow; ++p)
                    ids.push_back(next_planted);
    }

    // Background packets multinomial over Zipf(alpha) shares, by iid draws
    // against the cumulative weight table.
    uint64_t background = cfg.packets - planted_total;
    if (background > 0) {
        std::vector<double> cum(cfg.flows);
        double total = 0.0;
        for (uint64_t r = 0; r < cfg.flows; ++r) {
            total += std::pow(static_cast<double>(r + 1), -cfg.zipf_alpha);
            cum[r] = total;
        }
        for (uint64_t i = 0; i < background; ++i) {
            double u = rng.next_double() * total;
            auto it = std::lower_bound(cum.begin(), cum.end(), u);
            if (it == cum.end())
                --it;
            ids.push_back(static_cast<uint32_t>(it - cum.begin()));
        }
    }

    // Fisher-Yates so planted and background packets interleave.
    for (size_t i = ids.size(); i > 1; --i) {
        size_t j = rng.next_below(i);
        std::swap(ids[i - 1], ids[j]);
    }

    const uint32_t len_lo = 40;
    const uint32_t len_span = 2 * cfg.mean_pkt_len - 80 + 1; // [40, 2*mean-40]

    std::vector<uint64_t> pkts_by_id(cfg.flows + planted_flows, 0);
    std::vector<uint64_t> bytes_by_id(cfg.flows + planted_flows, 0);

    GenerateSummary summary;
    TraceRecord rec;
    for (size_t i = 0; i < ids.size(); ++i) {
        uint32_t id = ids[i];
        rec.ts_us = cfg.start_ts_us + static_cast<uint64_t>(i) * cfg.spacing_us;
        rec.key = id < cfg.flows ? background_key(id)
                                 : planted_key(id - static_cast<uint32_t>(cfg.flows));
        rec.wire_len = len_lo + static_cast<uint32_t>(rng.next_below(len_span));
        writer.write(rec);
        pkts_by_id[id] += 1;
        bytes_by_id[id] += rec.wire_len;
        summary.bytes += rec.wire_len;
    }
    summary.packets = ids.size();
    summary.planted_flows = planted_flows;

    oracle_out.clear();
    for (size_t id = 0; id < pkts_by_id.size(); ++id) {
        if (pkts_by_id[id] == 0)
            continue;
        if (id < cfg.flows)
            ++summary.background_flows_hit;
        FlowKey k = id < cfg.flows ? background_key(static_cast<uint32_t>(id))
                                   : planted_key(static_cast<uint32_t>(id - cfg.flows));
        oracle_out[k] = {pkts_by_id[id], bytes_by_id[id]};
    }
    return summary;
}

}  // namespace flowmeter
