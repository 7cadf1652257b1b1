#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowkey.hpp"
#include "trace.hpp"

namespace flowmeter {

enum class Metric { kPackets, kBytes };

const char* metric_name(Metric m); // "packets" / "bytes"

// Final per-flow estimates, aggregated across epochs.
struct Estimate {
    double packets = 0.0;
    double bytes = 0.0;
};
using ReportTable = std::map<FlowKey, Estimate>;

// Accuracy for one nested size class: all flows whose oracle value is
// >= lower_bound. rel_rmse_pct = 100 * sqrt(mean(((est-true)/true)^2)),
// NaN when the class is empty. Flows absent from the report count as
// estimate 0.
struct SizeClassStat {
    Metric metric = Metric::kPackets;
    double lower_bound = 0.0;
    size_t n_flows = 0;
    double rel_rmse_pct = 0.0;
};

std::vector<SizeClassStat> size_class_errors(const ReportTable& report,
                                             const OracleTable& oracle,
                                             const std::vector<double>& bounds,
                                             Metric metric);

// Same error measure over an explicit key set (each key must have a
// nonzero oracle value; keys missing from the oracle are an error).
double rel_rmse_pct_over(const ReportTable& report, const OracleTable& oracle,
                         const std::vector<FlowKey>& keys, Metric metric);

// detected derives solely from estimates, actual solely from the oracle.
// fpr = |detected \ actual| / |detected| (0 when detected is empty);
// fnr = |actual \ detected| / |actual| (0 when actual is empty).
struct HeavyHitterReport {
    Metric metric = Metric::kPackets;
    double threshold = 0.0;
    std::vector<FlowKey> detected; // sorted
    std::vector<FlowKey> actual;   // sorted
    size_t false_positives = 0;
    size_t false_negatives = 0;
    double fpr = 0.0;
    double fnr = 0.0;
};

HeavyHitterReport detect_heavy_hitters(const ReportTable& report, const OracleTable& oracle,
                                       double threshold, Metric metric);

// One closed epoch's raw counters, as input to the regulation series.
struct EpochSnapshot {
    uint32_t epoch = 0;
    uint64_t packets_in = 0;
    uint64_t table_ops = 0;
    uint64_t first_ts_us = 0;
    uint64_t last_ts_us = 0;
};

// pps/ips use trace time (timestamp span), so the series is a property of
// the trace, not of host speed. Epochs with zero packets are omitted.
struct RegulationRow {
    uint32_t epoch = 0;
    double pps = 0.0;
    double ips = 0.0;
    double regulation_rate = 0.0;
};

std::vector<RegulationRow> regulation_series(const std::vector<EpochSnapshot>& snapshots);

}  // namespace flowmeter
