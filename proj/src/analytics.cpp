#include "analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace flowmeter {

const char* metric_name(Metric m) {
    return m == Metric::kPackets ? "packets" : "bytes";
}

namespace {

double oracle_value(const OracleCounts& c, Metric m) {
    return m == Metric::kPackets ? static_cast<double>(c.packets)
                                 : static_cast<double>(c.bytes);
}

double estimate_value(const Estimate& e, Metric m) {
    return m == Metric::kPackets ? e.packets : e.bytes;
}

}  // namespace

std::vector<SizeClassStat> size_class_errors(const ReportTable& report,
                                             const OracleTable& oracle,
                                             const std::vector<double>& bounds,
                                             Metric metric) {
    std::vector<SizeClassStat> out;
    out.reserve(bounds.size());
    for (double bound : bounds) {
        if (bound <= 0.0)
            throw std::invalid_argument("size_class_errors: bounds must be > 0");
        SizeClassStat stat;
        stat.metric = metric;
        stat.lower_bound = bound;
        double sum_sq = 0.0;
        for (const auto& [key, counts] : oracle) {
            double truth = oracle_value(counts, metric);
            if (truth < bound)
                continue;
            auto it = report.find(key);
            double est = it == report.end() ? 0.0 : estimate_value(it->second, metric);
            double rel = (est - truth) / truth;
            sum_sq += rel * rel;
            ++stat.n_flows;
        }
        stat.rel_rmse_pct = stat.n_flows == 0
                                ? std::numeric_limits<double>::quiet_NaN()
                                : 100.0 * std::sqrt(sum_sq / stat.n_flows);
        out.push_back(stat);
    }
    return out;
}

double rel_rmse_pct_over(const ReportTable& report, const OracleTable& oracle,
                         const std::vector<FlowKey>& keys, Metric metric) {
    if (keys.empty())
        throw std::invalid_argument("rel_rmse_pct_over: empty key set");
    double sum_sq = 0.0;
    for (const FlowKey& key : keys) {
        auto oit = oracle.find(key);
        if (oit == oracle.end() || oracle_value(oit->second, metric) <= 0.0)
            throw std::invalid_argument("rel_rmse_pct_over: key missing from oracle or zero");
        double truth = oracle_value(oit->second, metric);
        auto rit = report.find(key);
        double est = rit == report.end() ? 0.0 : estimate_value(rit->second, metric);
        double rel = (est - truth) / truth;
        sum_sq += rel * rel;
    }
    return 100.0 * std::sqrt(sum_sq / keys.size());
}

HeavyHitterReport detect_heavy_hitters(const ReportTable& report, const OracleTable& oracle,
                                       double threshold, Metric metric) {
    if (threshold <= 0.0)
        throw std::invalid_argument("detect_heavy_hitters: threshold must be > 0");
    HeavyHitterReport hh;
    hh.metric = metric;
    hh.threshold = threshold;
    for (const auto& [key, est] : report)
        if (estimate_value(est, metric) >= threshold)
            hh.detected.push_back(key);
    for (const auto& [key, counts] : oracle)
        if (oracle_value(counts, metric) >= threshold)
            hh.actual.push_back(key);
    // std::map iteration is already key-sorted; keep that order.
    std::vector<FlowKey> fp, fn;
    std::set_difference(hh.detected.begin(), hh.detected.end(), hh.actual.begin(),
                        hh.actual.end(), std::back_inserter(fp));
    std::set_difference(hh.actual.begin(), hh.actual.end(), hh.detected.begin(),
                        hh.detected.end(), std::back_inserter(fn));
    hh.false_positives = fp.size();
    hh.false_negatives = fn.size();
    hh.fpr = hh.detected.empty()
                 ? 0.0
                 : static_cast<double>(fp.size()) / static_cast<double>(hh.detected.size());
    hh.fnr = hh.actual.empty()
                 ? 0.0
                 : static_cast<double>(fn.size()) / static_cast<double>(hh.actual.size());
    return hh;
}

std::vector<RegulationRow> regulation_series(const std::vector<EpochSnapshot>& snapshots) {
    std::vector<RegulationRow> rows;
    for (const EpochSnapshot& s : snapshots) {
        if (s.packets_in == 0)
            continue; // zero-packet epochs are omitted
        RegulationRow r;
        r.epoch = s.epoch;
        uint64_t span_us = s.last_ts_us > s.first_ts_us ? s.last_ts_us - s.first_ts_us : 1;
        double span_s = static_cast<double>(span_us) / 1e6;
        r.pps = static_cast<double>(s.packets_in) / span_s;
        r.ips = static_cast<double>(s.table_ops) / span_s;
        r.regulation_rate =
            static_cast<double>(s.table_ops) / static_cast<double>(s.packets_in);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace flowmeter
