#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "flowkey.hpp"
#include "rng.hpp"

namespace flowmeter {

// One packet event.
struct TraceRecord {
    uint64_t ts_us = 0;
    FlowKey key;
    uint32_t wire_len = 0; // original on-wire length, bytes (>= 1)
};

// Per-source accounting of records that were seen but not emitted, plus
// stream anomalies that are flagged without skipping.
struct SkipStats {
    uint64_t ipv6 = 0;           // EtherType 0x86DD
    uint64_t non_ip = 0;         // any other non-IPv4 EtherType
    uint64_t fragments = 0;      // IPv4 fragment offset != 0
    uint64_t non_tcp_udp = 0;    // IPv4 protocol other than 6/17
    uint64_t short_frame = 0;    // captured bytes too few to parse headers
    uint64_t truncated_tail = 0; // file ended inside a record
    uint64_t ts_regressions = 0; // timestamp went backwards (not skipped)

    uint64_t total_skipped() const {
        return ipv6 + non_ip + fragments + non_tcp_udp + short_frame;
    }
};

class TraceReader {
  public:
    virtual ~TraceReader() = default;
    // False at end of stream; throws FormatError/UnsupportedError on bad
    // content.
    virtual bool next(TraceRecord& out) = 0;
    virtual const SkipStats& skips() const = 0;
};

class TraceWriter {
  public:
    virtual ~TraceWriter() = default;
    virtual void write(const TraceRecord& rec) = 0;
    // Flushes and closes; further writes are invalid. Called by dtor.
    virtual void close() = 0;
};

// CSV trace format, one record per line:
//   ts_us,src_ip,dst_ip,src_port,dst_port,proto,len
// with dotted-quad IPs. The reader tolerates (and the writer emits) a
// leading header line; malformed rows raise FormatError with a line
// number.
class CsvTraceReader : public TraceReader {
  public:
    explicit CsvTraceReader(const std::string& path);
    ~CsvTraceReader() override;
    bool next(TraceRecord& out) override;
    const SkipStats& skips() const override { return skips_; }

  private:
    std::string path_;
    FILE* f_ = nullptr;
    uint64_t line_no_ = 0;
    SkipStats skips_;
};

class CsvTraceWriter : public TraceWriter {
  public:
    explicit CsvTraceWriter(const std::string& path);
    ~CsvTraceWriter() override;
    void write(const TraceRecord& rec) override;
    void close() override;

  private:
    std::string path_;
    FILE* f_ = nullptr;
};

// Classic pcap (magic 0xa1b2c3d4, either byte order), linktype 1
// (Ethernet). Emits IPv4 TCP/UDP records with wire_len = orig_len; a
// single 802.1Q tag is unwrapped; everything else is skip-counted.
// Nanosecond pcap and other linktypes raise UnsupportedError.
class PcapTraceReader : public TraceReader {
  public:
    explicit PcapTraceReader(const std::string& path);
    ~PcapTraceReader() override;
    bool next(TraceRecord& out) override;
    const SkipStats& skips() const override { return skips_; }

  private:
    bool read_exact(void* buf, size_t n, bool* clean_eof);
    uint32_t u32(const uint8_t* p) const;
    uint16_t u16(const uint8_t* p) const;

    std::string path_;
    FILE* f_ = nullptr;
    bool swapped_ = false;
    bool done_ = false;
    uint64_t last_ts_us_ = 0;
    bool have_last_ts_ = false;
    SkipStats skips_;
};

// Writes Ethernet/IPv4/TCP|UDP frames: headers only (zero payload bytes on
// disk), orig_len = wire_len, so the reader round-trips records exactly.
class PcapTraceWriter : public TraceWriter {
  public:
    explicit PcapTraceWriter(const std::string& path);
    ~PcapTraceWriter() override;
    void write(const TraceRecord& rec) override;
    void close() override;

  private:
    std::string path_;
    FILE* f_ = nullptr;
};

enum class TraceFormat { kCsv, kPcap };

// Opens by content: the pcap magics select the pcap reader, anything else
// is treated as CSV.
std::unique_ptr<TraceReader> open_trace(const std::string& path);
std::unique_ptr<TraceWriter> open_trace_writer(const std::string& path, TraceFormat format);

// Exact ground truth. std::map keeps key order canonical for serialization.
struct OracleCounts {
    uint64_t packets = 0;
    uint64_t bytes = 0;
};
using OracleTable = std::map<FlowKey, OracleCounts>;

OracleTable build_oracle(TraceReader& reader);

// A group of planted flows: `flow_count` flows of exactly
// `packets_per_flow` packets each, on keys disjoint from the background's.
struct PlantedClass {
    uint64_t packets_per_flow = 0;
    uint64_t flow_count = 0;
};

struct GeneratorConfig {
    uint64_t flows = 100000;  // background key count
    uint64_t packets = 1000000; // total records, background + planted
    double zipf_alpha = 1.0;  // 0 = uniform background
    uint32_t mean_pkt_len = 700; // lengths uniform in [40, 2*mean-40]
    uint64_t seed = 1;
    std::vector<PlantedClass> planted;
    uint64_t start_ts_us = 0;
    uint32_t spacing_us = 1; // timestamps strictly increase by this step
};

struct GenerateSummary {
    uint64_t packets = 0;
    uint64_t bytes = 0;
    uint64_t background_flows_hit = 0; // background keys with >= 1 packet
    uint64_t planted_flows = 0;
};

// Emits the full trace to `writer` (shuffled so planted and background
// packets interleave) and returns the exact oracle. Deterministic in
// cfg.seed. Throws std::invalid_argument on config violations, including
// planted packet totals exceeding cfg.packets.
GenerateSummary generate_trace(const GeneratorConfig& cfg, TraceWriter& writer,
                               OracleTable& oracle_out);

}  // namespace flowmeter
