#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "analytics.hpp"
#include "pipeline.hpp"
#include "trace.hpp"

namespace flowmeter {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a over raw bytes; the manifest digest stamped into CSV outputs.
uint64_t fnv1a64(const void* data, size_t len);
uint64_t fnv1a64_file(const std::string& path); // throws IoError
std::string hex64(uint64_t v);

// Flat key=value manifest. Returns the FNV-1a digest of the file bytes.
uint64_t write_manifest(const std::string& path,
                        const std::vector<std::pair<std::string, std::string>>& entries);

// --- CSV formats ---
// Every writer puts a `# <label>=<hex digest>` comment on line 1, then a
// header row. Loaders skip comment lines (capturing the digest) and return
// tables keyed by flow.

void write_oracle_csv(const std::string& path, const OracleTable& oracle,
                      const std::string& digest_label, uint64_t digest);
OracleTable load_oracle_csv(const std::string& path, std::string* digest_out = nullptr);

ReportTable load_report_csv(const std::string& path, std::string* digest_out = nullptr);

// Streams epoch reports: rows are key fields, packets_est, bytes_est, epoch.
class ReportWriter {
  public:
    ReportWriter(const std::string& path, uint64_t manifest_digest);
    ~ReportWriter();
    void add(uint32_t epoch, const std::vector<EpochRow>& rows);
    void close();

  private:
    std::string path_;
    FILE* f_ = nullptr;
};

void write_regulation_csv(const std::string& path, uint64_t manifest_digest,
                          const std::vector<RegulationRow>& rows);

void write_accuracy_csv(const std::string& path, const std::string& digest,
                        const std::vector<SizeClassStat>& stats);

void write_hh_csv(const std::string& path, const std::string& digest,
                  const std::vector<HeavyHitterReport>& reports);

// --- generate ---

struct GenerateJob {
    GeneratorConfig gen;
    std::string out_path;
    TraceFormat format = TraceFormat::kCsv;
    std::string oracle_path;   // empty = <out_path>.oracle.csv
    std::string manifest_path; // empty = <out_path>.manifest.txt
};

struct GenerateResult {
    GenerateSummary summary;
    std::string trace_path;
    std::string oracle_path;
    std::string manifest_path;
    std::string trace_digest; // hex FNV-1a of the trace file
};

GenerateResult run_generate(const GenerateJob& job);

// --- run ---

struct RunJob {
    std::string in_path;
    std::string out_dir;        // report.csv, regulation.csv, manifest.txt
    PipelineConfig pipeline;
    std::string oracle_path;    // optional: keys to attribute residues to
};

struct RunResult {
    uint64_t packets = 0;
    uint64_t table_ops = 0;
    uint64_t dropped_flushes = 0;
    uint32_t epochs = 0;
    double regulation_rate = 0.0; // whole-run: table_ops / packets
    SkipStats skips;
    size_t sketch_bytes = 0;
    size_t table_bytes = 0;
    double wall_s = 0.0;
    std::string manifest_digest;
    std::string report_path;
    std::string regulation_path;
    std::string manifest_path;
};

RunResult run_experiment(const RunJob& job);

// --- evaluate ---

struct EvaluateJob {
    std::string report_path;
    std::string oracle_path;
    std::string out_dir; // accuracy.csv, hh.csv
    std::vector<double> packet_bounds = {1000, 10000, 100000};
    std::vector<double> byte_bounds = {1e6, 1e7};
    double packet_threshold = 1000;
    double byte_threshold = 1e6;
};

struct EvaluateResult {
    std::vector<SizeClassStat> accuracy;
    std::vector<HeavyHitterReport> heavy_hitters;
    std::string accuracy_path;
    std::string hh_path;
    std::string manifest_digest; // inherited from the report file
};

EvaluateResult run_evaluate(const EvaluateJob& job);

}  // namespace flowmeter
