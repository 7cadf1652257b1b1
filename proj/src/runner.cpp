#include "runner.hpp"

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <stdexcept>

#include "errors.hpp"

namespace flowmeter {

uint64_t fnv1a64(const void* data, size_t len) {
    const uint8_t* p = static_cast<const uint8_t*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t fnv1a64_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f)
        throw IoError("cannot open '" + path + "'");
    uint64_t h = 0xcbf29ce484222325ULL;
    uint8_t buf[1 << 16];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof(buf), f)) > 0) {
        for (size_t i = 0; i < got; ++i) {
            h ^= buf[i];
            h *= 0x100000001b3ULL;
        }
    }
    bool err = std::ferror(f) != 0;
    std::fclose(f);
    if (err)
        throw IoError("read error on '" + path + "'");
    return h;
}

std::string hex64(uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

uint64_t write_manifest(const std::string& path,
                        const std::vector<std::pair<std::string, std::string>>& entries) {
    std::string body;
    for (const auto& [k, v] : entries) {
        body += k;
        body += '=';
        body += v;
        body += '\n';
    }
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("cannot create '" + path + "'");
    bool ok = std::fwrite(body.data(), 1, body.size(), f) == body.size();
    ok = std::fclose(f) == 0 && ok;
    if (!ok)
        throw IoError("write failed for '" + path + "'");
    return fnv1a64(body.data(), body.size());
}

namespace {

FILE* open_for_write(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f)
        throw IoError("cannot create '" + path + "'");
    return f;
}

void checked_close(FILE* f, const std::string& path) {
    if (std::fclose(f) != 0)
        throw IoError("close failed for '" + path + "'");
}

// Reads one CSV line into at most `max_fields` comma-separated fields.
// Returns the field count, 0 at EOF. Comment lines (#) are surfaced to the
// caller via the `comment` flag.
struct CsvFile {
    explicit CsvFile(const std::string& p) : path(p) {
        f = std::fopen(p.c_str(), "rb");
        if (!f)
            throw IoError("cannot open '" + p + "'");
    }
    ~CsvFile() {
        if (f)
            std::fclose(f);
    }

    bool next_line() {
        if (!std::fgets(buf, sizeof(buf), f)) {
            if (std::ferror(f))
                throw IoError("read error on '" + path + "'");
            return false;
        }
        ++line_no;
        size_t len = std::strlen(buf);
        while (len > 0 && (buf[len - 1] == '\n' || buf[len - 1] == '\r'))
            buf[--len] = '\0';
        return true;
    }

    size_t split(char** fields, size_t max_fields) {
        size_t n = 0;
        char* cur = buf;
        for (;;) {
            if (n == max_fields)
                fail("too many fields");
            fields[n++] = cur;
            char* comma = std::strchr(cur, ',');
            if (!comma)
                return n;
            *comma = '\0';
            cur = comma + 1;
        }
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(path + ":" + std::to_string(line_no) + ": " + what);
    }

    std::string path;
    FILE* f = nullptr;
    char buf[512];
    uint64_t line_no = 0;
};

double parse_double(CsvFile& file, const char* s) {
    char* end = nullptr;
    double v = std::strtod(s, &end);
    if (end == s || *end != '\0')
        file.fail(std::string("bad number '") + s + "'");
    return v;
}

uint64_t parse_u64_field(CsvFile& file, const char* s, uint64_t max) {
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(s, &end, 10);
    if (end == s || *end != '\0' || errno != 0 || v > max)
        file.fail(std::string("bad integer '") + s + "'");
    return v;
}

FlowKey parse_key_fields(CsvFile& file, char** f) {
    FlowKey k;
    try {
        k.src_ip = parse_ipv4(f[0]);
        k.dst_ip = parse_ipv4(f[1]);
    } catch (const std::invalid_argument& e) {
        file.fail(e.what());
    }
    k.src_port = static_cast<uint16_t>(parse_u64_field(file, f[2], 65535));
    k.dst_port = static_cast<uint16_t>(parse_u64_field(file, f[3], 65535));
    k.proto = static_cast<uint8_t>(parse_u64_field(file, f[4], 255));
    return k;
}

// Captures `# key=value` comment digests; returns true if the line was a
// comment or blank.
bool consume_comment(const char* line, std::string* digest_out) {
    if (line[0] == '\0')
        return true;
    if (line[0] != '#')
        return false;
    if (digest_out) {
        const char* eq = std::strchr(line, '=');
        if (eq && *(eq + 1))
            *digest_out = eq + 1;
    }
    return true;
}

}  // namespace

void write_oracle_csv(const std::string& path, const OracleTable& oracle,
                      const std::string& digest_label, uint64_t digest) {
    FILE* f = open_for_write(path);
    std::fprintf(f, "# %s=%s\n", digest_label.c_str(), hex64(digest).c_str());
    std::fputs("src_ip,dst_ip,src_port,dst_port,proto,packets,bytes\n", f);
    for (const auto& [key, c] : oracle)
        std::fprintf(f, "%s,%s,%u,%u,%u,%" PRIu64 ",%" PRIu64 "\n",
                     format_ipv4(key.src_ip).c_str(), format_ipv4(key.dst_ip).c_str(),
                     key.src_port, key.dst_port, key.proto, c.packets, c.bytes);
    checked_close(f, path);
}

OracleTable load_oracle_csv(const std::string& path, std::string* digest_out) {
    CsvFile file(path);
    OracleTable table;
    bool saw_header = false;
    while (file.next_line()) {
        if (consume_comment(file.buf, digest_out))
            continue;
        if (!saw_header && !std::isdigit(static_cast<unsigned char>(file.buf[0]))) {
            saw_header = true;
            continue;
        }
        char* f[7];
        if (file.split(f, 7) != 7)
            file.fail("expected 7 fields: src_ip,dst_ip,src_port,dst_port,proto,packets,bytes");
        FlowKey key = parse_key_fields(file, f);
        OracleCounts c;
        c.packets = parse_u64_field(file, f[5], UINT64_MAX);
        c.bytes = parse_u64_field(file, f[6], UINT64_MAX);
        table[key] = c;
    }
    return table;
}

ReportTable load_report_csv(const std::string& path, std::string* digest_out) {
    CsvFile file(path);
    ReportTable table;
    bool saw_header = false;
    while (file.next_line()) {
        if (consume_comment(file.buf, digest_out))
            continue;
        if (!saw_header && !std::isdigit(static_cast<unsigned char>(file.buf[0]))) {
            saw_header = true;
            continue;
        }
        char* f[8];
        if (file.split(f, 8) != 8)
            file.fail("expected 8 fields: key fields, packets_est, bytes_est, epoch");
        FlowKey key = parse_key_fields(file, f);
        Estimate& e = table[key]; // epochs aggregate by summation
        e.packets += parse_double(file, f[5]);
        e.bytes += parse_double(file, f[6]);
        parse_u64_field(file, f[7], UINT32_MAX); // validate the epoch field
    }
    return table;
}

ReportWriter::ReportWriter(const std::string& path, uint64_t manifest_digest)
    : path_(path) {
    f_ = open_for_write(path);
    std::fprintf(f_, "# manifest_digest=%s\n", hex64(manifest_digest).c_str());
    std::fputs("src_ip,dst_ip,src_port,dst_port,proto,packets_est,bytes_est,epoch\n", f_);
}

ReportWriter::~ReportWriter() {
    if (f_)
        std::fclose(f_);
}

void ReportWriter::add(uint32_t epoch, const std::vector<EpochRow>& rows) {
    if (!f_)
        throw IoError("write on closed report '" + path_ + "'");
    for (const EpochRow& r : rows)
        std::fprintf(f_, "%s,%s,%u,%u,%u,%.6f,%.6f,%u\n",
                     format_ipv4(r.key.src_ip).c_str(), format_ipv4(r.key.dst_ip).c_str(),
                     r.key.src_port, r.key.dst_port, r.key.proto, r.packets_est,
                     r.bytes_est, epoch);
}

void ReportWriter::close() {
    if (!f_)
        return;
    FILE* f = f_;
    f_ = nullptr;
    checked_close(f, path_);
}

void write_regulation_csv(const std::string& path, uint64_t manifest_digest,
                          const std::vector<RegulationRow>& rows) {
    FILE* f = open_for_write(path);
    std::fprintf(f, "# manifest_digest=%s\n", hex64(manifest_digest).c_str());
    std::fputs("epoch,pps,ips,regulation_rate\n", f);
    for (const RegulationRow& r : rows)
        std::fprintf(f, "%u,%.6f,%.6f,%.6f\n", r.epoch, r.pps, r.ips, r.regulation_rate);
    checked_close(f, path);
}

void write_accuracy_csv(const std::string& path, const std::string& digest,
                        const std::vector<SizeClassStat>& stats) {
    FILE* f = open_for_write(path);
    std::fprintf(f, "# manifest_digest=%s\n", digest.c_str());
    std::fputs("metric,lower_bound,n_flows,rel_rmse_pct\n", f);
    for (const SizeClassStat& s : stats) {
        if (s.n_flows == 0)
            std::fprintf(f, "%s,%.6f,0,nan\n", metric_name(s.metric), s.lower_bound);
        else
            std::fprintf(f, "%s,%.6f,%zu,%.6f\n", metric_name(s.metric), s.lower_bound,
                         s.n_flows, s.rel_rmse_pct);
    }
    checked_close(f, path);
}

void write_hh_csv(const std::string& path, const std::string& digest,
                  const std::vector<HeavyHitterReport>& reports) {
    FILE* f = open_for_write(path);
    std::fprintf(f, "# manifest_digest=%s\n", digest.c_str());
    std::fputs("metric,threshold,n_actual,n_detected,false_positives,false_negatives,fpr,fnr\n",
               f);
    for (const HeavyHitterReport& r : reports)
        std::fprintf(f, "%s,%.6f,%zu,%zu,%zu,%zu,%.6f,%.6f\n", metric_name(r.metric),
                     r.threshold, r.actual.size(), r.detected.size(), r.false_positives,
                     r.false_negatives, r.fpr, r.fnr);
    checked_close(f, path);
}

// --- generate ---

GenerateResult run_generate(const GenerateJob& job) {
    if (job.out_path.empty())
        throw std::invalid_argument("generate: output path required");
    GenerateResult res;
    res.trace_path = job.out_path;
    res.oracle_path =
        job.oracle_path.empty() ? job.out_path + ".oracle.csv" : job.oracle_path;
    res.manifest_path =
        job.manifest_path.empty() ? job.out_path + ".manifest.txt" : job.manifest_path;

    OracleTable oracle;
    {
        auto writer = open_trace_writer(job.out_path, job.format);
        res.summary = generate_trace(job.gen, *writer, oracle);
        writer->close();
    }
    uint64_t trace_digest = fnv1a64_file(job.out_path);
    res.trace_digest = hex64(trace_digest);
    write_oracle_csv(res.oracle_path, oracle, "trace_fnv1a64", trace_digest);

    std::vector<std::pair<std::string, std::string>> m;
    m.emplace_back("tool", "flowmeter");
    m.emplace_back("version", kToolVersion);
    m.emplace_back("command", "generate");
    m.emplace_back("out", job.out_path);
    m.emplace_back("oracle", res.oracle_path);
    m.emplace_back("format", job.format == TraceFormat::kPcap ? "pcap" : "csv");
    m.emplace_back("flows", std::to_string(job.gen.flows));
    m.emplace_back("packets", std::to_string(job.gen.packets));
    char zbuf[32];
    std::snprintf(zbuf, sizeof(zbuf), "%.6f", job.gen.zipf_alpha);
    m.emplace_back("zipf_alpha", zbuf);
    m.emplace_back("mean_pkt_len", std::to_string(job.gen.mean_pkt_len));
    m.emplace_back("seed", std::to_string(job.gen.seed));
    std::string plant;
    for (const PlantedClass& pc : job.gen.planted) {
        if (!plant.empty())
            plant += ' ';
        plant += std::to_string(pc.packets_per_flow) + "x" + std::to_string(pc.flow_count);
    }
    m.emplace_back("planted", plant);
    m.emplace_back("trace_fnv1a64", res.trace_digest);
    write_manifest(res.manifest_path, m);
    return res;
}

// --- run ---

RunResult run_experiment(const RunJob& job) {
    namespace fs = std::filesystem;
    if (job.out_dir.empty())
        throw std::invalid_argument("run: output directory required");
    fs::create_directories(job.out_dir);

    auto t0 = std::chrono::steady_clock::now();

    std::optional<OracleTable> oracle;
    std::vector<FlowKey> oracle_keys;
    if (!job.oracle_path.empty()) {
        oracle = load_oracle_csv(job.oracle_path);
        oracle_keys.reserve(oracle->size());
        for (const auto& [key, c] : *oracle)
            oracle_keys.push_back(key);
    }

    RunResult res;
    res.report_path = (fs::path(job.out_dir) / "report.csv").string();
    res.regulation_path = (fs::path(job.out_dir) / "regulation.csv").string();
    res.manifest_path = (fs::path(job.out_dir) / "manifest.txt").string();

    const PipelineConfig& pc = job.pipeline;
    std::vector<std::pair<std::string, std::string>> m;
    m.emplace_back("tool", "flowmeter");
    m.emplace_back("version", kToolVersion);
    m.emplace_back("command", "run");
    m.emplace_back("input", job.in_path);
    m.emplace_back("input_fnv1a64", hex64(fnv1a64_file(job.in_path)));
    m.emplace_back("oracle", job.oracle_path);
    char fbuf[32];
    m.emplace_back("b1", std::to_string(pc.packet_sketch.b1));
    m.emplace_back("b2", std::to_string(pc.packet_sketch.b2));
    m.emplace_back("blocks1", std::to_string(pc.packet_sketch.blocks1));
    m.emplace_back("blocks2", std::to_string(pc.packet_sketch.blocks2));
    std::snprintf(fbuf, sizeof(fbuf), "%.6f", pc.packet_sketch.sat_frac);
    m.emplace_back("sat_frac", fbuf);
    m.emplace_back("single_layer", pc.packet_sketch.single_layer ? "1" : "0");
    m.emplace_back("byte_unit", std::to_string(pc.byte_unit));
    std::snprintf(fbuf, sizeof(fbuf), "%.6f", pc.epoch_len_s);
    m.emplace_back("epoch_len_s", fbuf);
    m.emplace_back("shards", std::to_string(pc.shards));
    m.emplace_back("table_initial", std::to_string(pc.table_initial_capacity));
    m.emplace_back("table_max", std::to_string(pc.table_max_capacity));
    m.emplace_back("seed", std::to_string(pc.seed));
    uint64_t digest = write_manifest(res.manifest_path, m);
    res.manifest_digest = hex64(digest);

    Pipeline pipeline(pc);
    ReportWriter report(res.report_path, digest);
    std::vector<EpochSnapshot> snapshots;

    auto close_epoch = [&]() {
        RegulationStats st = pipeline.stats();
        uint32_t epoch = pipeline.epoch();
        std::vector<FlowKey> keys = oracle ? oracle_keys : pipeline.table_keys();
        std::vector<EpochRow> rows = pipeline.end_epoch(keys);
        report.add(epoch, rows);
        if (st.packets_in > 0) {
            EpochSnapshot snap;
            snap.epoch = epoch;
            snap.packets_in = st.packets_in;
            snap.table_ops = st.table_ops;
            snap.first_ts_us = st.first_ts_us;
            snap.last_ts_us = st.last_ts_us;
            snapshots.push_back(snap);
            res.packets += st.packets_in;
            res.table_ops += st.table_ops;
            res.dropped_flushes += st.dropped_flushes;
        }
    };

    {
        auto reader = open_trace(job.in_path);
        TraceRecord rec;
        uint64_t epoch_len_us = static_cast<uint64_t>(pc.epoch_len_s * 1e6);
        bool have_boundary = false;
        uint64_t boundary = 0;
        while (reader->next(rec)) {
            if (epoch_len_us > 0) {
                if (!have_boundary) {
                    boundary = rec.ts_us + epoch_len_us;
                    have_boundary = true;
                } else if (rec.ts_us >= boundary) {
                    close_epoch();
                    while (rec.ts_us >= boundary)
                        boundary += epoch_len_us;
                }
            }
            pipeline.process(rec);
        }
        res.skips = reader->skips();
    }
    close_epoch();
    report.close();

    write_regulation_csv(res.regulation_path, digest, regulation_series(snapshots));

    res.epochs = pipeline.epoch();
    res.regulation_rate =
        res.packets ? static_cast<double>(res.table_ops) / res.packets : 0.0;
    res.sketch_bytes = pipeline.sketch_memory_bytes();
    res.table_bytes = pipeline.table_bytes_resident();
    res.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

// --- evaluate ---

EvaluateResult run_evaluate(const EvaluateJob& job) {
    namespace fs = std::filesystem;
    if (job.out_dir.empty())
        throw std::invalid_argument("evaluate: output directory required");
    fs::create_directories(job.out_dir);

    EvaluateResult res;
    std::string digest = "unknown";
    ReportTable report = load_report_csv(job.report_path, &digest);
    OracleTable oracle = load_oracle_csv(job.oracle_path);
    res.manifest_digest = digest;

    std::vector<SizeClassStat> acc =
        size_class_errors(report, oracle, job.packet_bounds, Metric::kPackets);
    std::vector<SizeClassStat> acc_bytes =
        size_class_errors(report, oracle, job.byte_bounds, Metric::kBytes);
    acc.insert(acc.end(), acc_bytes.begin(), acc_bytes.end());
    res.accuracy = std::move(acc);

    res.heavy_hitters.push_back(
        detect_heavy_hitters(report, oracle, job.packet_threshold, Metric::kPackets));
    res.heavy_hitters.push_back(
        detect_heavy_hitters(report, oracle, job.byte_threshold, Metric::kBytes));

    res.accuracy_path = (fs::path(job.out_dir) / "accuracy.csv").string();
    res.hh_path = (fs::path(job.out_dir) / "hh.csv").string();
    write_accuracy_csv(res.accuracy_path, digest, res.accuracy);
    write_hh_csv(res.hh_path, digest, res.heavy_hitters);
    return res;
}

}  // namespace flowmeter
