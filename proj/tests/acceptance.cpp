// Acceptance gate: one check per shipped guarantee. Each criterion prints a
// single [PASS]/[FAIL] line with the measured value next to its pinned bound
// and the exit code reports the overall verdict.
//
//   usage: acceptance <1..8|all> [cli_binary]
//
// The cli_binary argument lets criterion 8 exercise the installed command
// line end to end; without it the same checks run in-process.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "runner.hpp"
#include "testutil.hpp"

using namespace flowmeter;
using testutil::TempDir;
using testutil::read_file;
using testutil::write_file;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, ...) {
    char buf[1024];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Wall-time budgets in seconds; 0 = no budget for this criterion.
constexpr double kBudgetS[8] = {60, 60, 120, 300, 120, 0, 0, 0};

// --- shared trace recipes ---

// The reference workload: Zipf(1.0) background, 10^6 packets over 10^5
// flows, fixed seed.
GenerateResult make_reference_trace(const TempDir& tmp) {
    GenerateJob job;
    job.out_path = tmp.file("trace.csv");
    job.gen.flows = 100000;
    job.gen.packets = 1000000;
    job.gen.zipf_alpha = 1.0;
    job.gen.seed = 42;
    return run_generate(job);
}

RunResult run_default(const std::string& trace, const std::string& oracle,
                      const std::string& out_dir, bool single_layer) {
    RunJob job;
    job.in_path = trace;
    job.out_dir = out_dir;
    job.oracle_path = oracle;
    job.pipeline.epoch_len_s = 0.0;
    job.pipeline.seed = 1;
    job.pipeline.packet_sketch.single_layer = single_layer;
    job.pipeline.byte_sketch.single_layer = single_layer;
    return run_experiment(job);
}

// --- criterion 1: estimator vs Monte-Carlo oracle ---

Verdict criterion_1() {
    constexpr uint64_t kTrials = 1000000;
    constexpr double kBoundPct = 0.5;
    const uint32_t ks[4] = {8, 24, 48, 64};

    // Independent oracle: simulate draws-to-k-distinct directly with the
    // standard library generator, no shared code with the estimator.
    std::mt19937_64 rng(12345);
    double sums[4] = {0, 0, 0, 0};
    for (uint64_t trial = 0; trial < kTrials; ++trial) {
        uint64_t mask = 0;
        uint32_t pc = 0;
        uint64_t draws = 0;
        size_t next = 0;
        while (pc < 64) {
            ++draws;
            uint64_t bit = uint64_t{1} << (rng() & 63);
            if (!(mask & bit)) {
                mask |= bit;
                ++pc;
                if (next < 4 && pc == ks[next])
                    sums[next++] += static_cast<double>(draws);
            }
        }
    }

    double worst = 0.0;
    uint32_t worst_k = 0;
    for (size_t i = 0; i < 4; ++i) {
        double mc = sums[i] / static_cast<double>(kTrials);
        double est = coupon_estimate(64, ks[i]);
        double dev = 100.0 * std::fabs(mc - est) / est;
        if (dev > worst) {
            worst = dev;
            worst_k = ks[i];
        }
    }
    return {worst <= kBoundPct,
            fmt("coupon_estimate(64,k) vs %.0e-trial Monte-Carlo, k in {8,24,48,64}: "
                "worst deviation %.3f%% at k=%u (bound %.1f%%)",
                static_cast<double>(kTrials), worst, worst_k, kBoundPct)};
}

// --- criterion 2: retention capacity of the two layers ---

Verdict criterion_2() {
    constexpr uint64_t kSeeds = 1000;
    constexpr double kTolFrac = 0.05;
    const FlowKey key{0x0A000001, 0xC0000201, 1024, 443, 6};

    double target = 0.0;
    double total = 0.0;
    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        SketchParams params;
        params.seed = seed;
        TwoLayerSketch sketch(params);
        if (seed == 0)
            target = sketch.c1() * sketch.c2();
        std::vector<FlushEvent> out;
        uint64_t n = 0;
        while (out.empty() && n < 100000) {
            sketch.increment(key, 1, out);
            ++n;
        }
        total += static_cast<double>(n);
    }
    double mean = total / static_cast<double>(kSeeds);
    bool ok = std::fabs(mean - target) <= kTolFrac * target;
    return {ok, fmt("mean increments to first flush %.1f over %" PRIu64
                    " seeds (target %.1f +-%.0f%%)",
                    mean, kSeeds, target, 100.0 * kTolFrac)};
}

// --- criterion 3: regulation rate vs single-layer ablation ---

Verdict criterion_3() {
    constexpr double kRateBound = 0.02;
    constexpr double kMinRatio = 10.0;

    TempDir tmp;
    GenerateResult g = make_reference_trace(tmp);
    RunResult two = run_default(g.trace_path, g.oracle_path, tmp.file("two"), false);
    RunResult one = run_default(g.trace_path, g.oracle_path, tmp.file("one"), true);

    double ratio = two.regulation_rate > 0.0
                       ? one.regulation_rate / two.regulation_rate
                       : std::numeric_limits<double>::infinity();
    bool ok = two.regulation_rate <= kRateBound && ratio >= kMinRatio;
    return {ok, fmt("regulation_rate %.5f (bound %.2f); single-layer ablation %.5f, "
                    "ratio %.1fx (bound >=%.0fx)",
                    two.regulation_rate, kRateBound, one.regulation_rate, ratio,
                    kMinRatio)};
}

// --- criterion 4: per-size-class accuracy on planted flows ---

Verdict criterion_4() {
    constexpr double kBound10k = 5.0;
    constexpr double kBound100k = 3.0;
    constexpr double kBoundBytes = 7.0;

    TempDir tmp;
    GenerateJob gen;
    gen.out_path = tmp.file("trace.csv");
    gen.gen.flows = 100000;
    gen.gen.packets = 2000000;
    gen.gen.zipf_alpha = 1.0;
    gen.gen.seed = 7;
    gen.gen.planted = {{10000, 50}, {100000, 10}};
    GenerateResult g = run_generate(gen);

    RunResult r = run_default(g.trace_path, g.oracle_path, tmp.file("out"), false);
    ReportTable report = load_report_csv(r.report_path);
    OracleTable oracle = load_oracle_csv(g.oracle_path);

    // Planted keys live in their own 172.16/12 source block.
    std::vector<FlowKey> tenk, hundredk;
    for (const auto& [key, c] : oracle) {
        if ((key.src_ip & 0xFFF00000u) != 0xAC100000u)
            continue;
        if (c.packets == 10000)
            tenk.push_back(key);
        else if (c.packets == 100000)
            hundredk.push_back(key);
    }
    if (tenk.size() != 50 || hundredk.size() != 10)
        return {false, fmt("planted flows missing from oracle: found %zu of 50 and "
                           "%zu of 10",
                           tenk.size(), hundredk.size())};

    double rmse_10k = rel_rmse_pct_over(report, oracle, tenk, Metric::kPackets);
    double rmse_100k = rel_rmse_pct_over(report, oracle, hundredk, Metric::kPackets);
    std::vector<SizeClassStat> byte_class =
        size_class_errors(report, oracle, {1e7}, Metric::kBytes);
    double rmse_bytes = byte_class[0].rel_rmse_pct;

    bool ok = rmse_10k <= kBound10k && rmse_100k <= kBound100k &&
              rmse_bytes <= kBoundBytes;
    return {ok, fmt("rel RMSE: 10k-packet flows %.2f%% (bound %.0f%%); 100k-packet "
                    "flows %.2f%% (bound %.0f%%); 10MB+ byte flows %.2f%% over %zu "
                    "flows (bound %.0f%%)",
                    rmse_10k, kBound10k, rmse_100k, kBound100k, rmse_bytes,
                    byte_class[0].n_flows, kBoundBytes)};
}

// --- criterion 5: heavy-hitter detection rates ---

Verdict criterion_5() {
    constexpr double kPktThreshold = 1000.0;
    constexpr double kByteThreshold = 1e6;
    constexpr double kRateBound = 0.01;

    TempDir tmp;
    GenerateResult g = make_reference_trace(tmp);
    RunResult r = run_default(g.trace_path, g.oracle_path, tmp.file("out"), false);
    ReportTable report = load_report_csv(r.report_path);
    OracleTable oracle = load_oracle_csv(g.oracle_path);

    HeavyHitterReport pkt =
        detect_heavy_hitters(report, oracle, kPktThreshold, Metric::kPackets);
    HeavyHitterReport byte =
        detect_heavy_hitters(report, oracle, kByteThreshold, Metric::kBytes);

    bool ok = pkt.fpr <= kRateBound && pkt.fnr <= kRateBound &&
              byte.fpr <= kRateBound && byte.fnr <= kRateBound;
    return {ok, fmt("packet threshold %.0f: fpr %.3f fnr %.3f; byte threshold %.0f: "
                    "fpr %.3f fnr %.3f (bound %.2f each)",
                    kPktThreshold, pkt.fpr, pkt.fnr, kByteThreshold, byte.fpr,
                    byte.fnr, kRateBound)};
}

// --- criterion 6: conservation of epoch totals ---

Verdict criterion_6() {
    constexpr double kPktTolFrac = 0.05;
    constexpr double kByteTolFrac = 0.07;

    TempDir tmp;
    GenerateResult g = make_reference_trace(tmp);
    RunResult r = run_default(g.trace_path, g.oracle_path, tmp.file("out"), false);
    ReportTable report = load_report_csv(r.report_path);
    OracleTable oracle = load_oracle_csv(g.oracle_path);

    double est_pkts = 0.0, est_bytes = 0.0;
    for (const auto& [key, e] : report) {
        est_pkts += e.packets;
        est_bytes += e.bytes;
    }
    double true_pkts = 0.0, true_bytes = 0.0;
    for (const auto& [key, c] : oracle) {
        true_pkts += static_cast<double>(c.packets);
        true_bytes += static_cast<double>(c.bytes);
    }
    double dev_pkts = std::fabs(est_pkts - true_pkts) / true_pkts;
    double dev_bytes = std::fabs(est_bytes - true_bytes) / true_bytes;
    bool ok = dev_pkts <= kPktTolFrac && dev_bytes <= kByteTolFrac;
    return {ok, fmt("summed estimates vs truth: packets off by %.2f%% (bound %.0f%%), "
                    "bytes off by %.2f%% (bound %.0f%%)",
                    100.0 * dev_pkts, 100.0 * kPktTolFrac, 100.0 * dev_bytes,
                    100.0 * kByteTolFrac)};
}

// --- criterion 7: mice never reach the table ---

Verdict criterion_7() {
    constexpr uint64_t kSeeds = 100;
    constexpr uint64_t kPackets = 47;
    const FlowKey key{0x0A000001, 0xC0000201, 1024, 443, 6};

    for (uint64_t seed = 0; seed < kSeeds; ++seed) {
        PipelineConfig cfg;
        cfg.epoch_len_s = 0.0;
        cfg.seed = seed;
        Pipeline pipeline(cfg);
        for (uint64_t i = 0; i < kPackets; ++i)
            pipeline.process({i + 1, key, 1500});
        RegulationStats st = pipeline.stats();
        if (st.table_ops != 0 || st.dropped_flushes != 0 ||
            pipeline.flush_count() != 0)
            return {false, fmt("seed %" PRIu64 ": a %" PRIu64
                               "-packet flow reached the table (%" PRIu64
                               " table ops, %" PRIu64 " flushes)",
                               seed, kPackets, st.table_ops, pipeline.flush_count())};
    }
    return {true, fmt("a %" PRIu64 "-packet flow produced zero table operations "
                      "across %" PRIu64 " seeds",
                      kPackets, kSeeds)};
}

// --- criterion 8: determinism and formats ---

void put_le32(std::string& s, uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>(v >> (8 * i)));
}

void put_le16(std::string& s, uint16_t v) {
    s.push_back(static_cast<char>(v));
    s.push_back(static_cast<char>(v >> 8));
}

void put_be16(std::string& s, uint16_t v) {
    s.push_back(static_cast<char>(v >> 8));
    s.push_back(static_cast<char>(v));
}

void put_be32(std::string& s, uint32_t v) {
    for (int i = 3; i >= 0; --i) s.push_back(static_cast<char>(v >> (8 * i)));
}

std::string pcap_global() {
    std::string s;
    put_le32(s, 0xa1b2c3d4);
    put_le16(s, 2);
    put_le16(s, 4);
    put_le32(s, 0);
    put_le32(s, 0);
    put_le32(s, 65535);
    put_le32(s, 1);
    return s;
}

void add_record(std::string& s, uint64_t ts_us, const std::string& frame,
                uint32_t orig_len) {
    put_le32(s, static_cast<uint32_t>(ts_us / 1000000));
    put_le32(s, static_cast<uint32_t>(ts_us % 1000000));
    put_le32(s, static_cast<uint32_t>(frame.size()));
    put_le32(s, orig_len);
    s += frame;
}

std::string eth_frame(uint16_t ethertype, const std::string& payload) {
    std::string f(12, '\0');
    put_be16(f, ethertype);
    return f + payload;
}

std::string ipv4_payload(uint8_t proto, uint32_t src, uint32_t dst, uint16_t sport,
                         uint16_t dport, uint16_t frag_field = 0x4000) {
    std::string ip;
    ip.push_back('\x45');
    ip.push_back('\0');
    put_be16(ip, 28);
    put_be16(ip, 0);
    put_be16(ip, frag_field);
    ip.push_back(64);
    ip.push_back(static_cast<char>(proto));
    put_be16(ip, 0);
    put_be32(ip, src);
    put_be32(ip, dst);
    std::string l4;
    put_be16(l4, sport);
    put_be16(l4, dport);
    l4 += std::string(4, '\0');
    return ip + l4;
}

bool shell_ok(const std::string& cmd) {
    return std::system(cmd.c_str()) == 0;
}

Verdict criterion_8(const std::string& cli) {
    TempDir tmp;

    // (a) Fixed-seed reruns are byte-identical end to end.
    GenerateJob gen;
    gen.gen.flows = 300;
    gen.gen.packets = 8000;
    gen.gen.seed = 5;
    gen.gen.planted = {{500, 2}};
    gen.out_path = tmp.file("g1.csv");
    GenerateResult g1 = run_generate(gen);
    gen.out_path = tmp.file("g2.csv");
    GenerateResult g2 = run_generate(gen);
    if (read_file(g1.trace_path) != read_file(g2.trace_path) ||
        read_file(g1.oracle_path) != read_file(g2.oracle_path))
        return {false, "same-seed generation is not byte-identical"};

    RunJob run;
    run.in_path = g1.trace_path;
    run.oracle_path = g1.oracle_path;
    run.pipeline.epoch_len_s = 0.0;
    run.pipeline.seed = 9;
    run.pipeline.shards = 2; // determinism must hold through the threaded path
    run.out_dir = tmp.file("r1");
    RunResult r1 = run_experiment(run);
    run.out_dir = tmp.file("r2");
    RunResult r2 = run_experiment(run);
    if (read_file(r1.report_path) != read_file(r2.report_path) ||
        read_file(r1.regulation_path) != read_file(r2.regulation_path))
        return {false, "same-seed runs are not byte-identical"};

    // (b) The command-line binary shows the same property.
    bool checked_cli = false;
    if (!cli.empty()) {
        const std::string quiet = " >/dev/null";
        std::string c1 = "'" + cli + "' generate --out '" + tmp.file("c1.csv") +
                         "' --flows 200 --packets 5000 --seed 5" + quiet;
        std::string c2 = "'" + cli + "' generate --out '" + tmp.file("c2.csv") +
                         "' --flows 200 --packets 5000 --seed 5" + quiet;
        if (!shell_ok(c1) || !shell_ok(c2))
            return {false, "cli generate exited nonzero"};
        if (fnv1a64_file(tmp.file("c1.csv")) != fnv1a64_file(tmp.file("c2.csv")))
            return {false, "cli generate is not byte-identical across reruns"};
        std::string o = tmp.file("c1.csv") + ".oracle.csv";
        std::string ra = "'" + cli + "' run --in '" + tmp.file("c1.csv") +
                         "' --oracle '" + o + "' --out-dir '" + tmp.file("cr1") +
                         "' --seed 3" + quiet;
        std::string rb = "'" + cli + "' run --in '" + tmp.file("c1.csv") +
                         "' --oracle '" + o + "' --out-dir '" + tmp.file("cr2") +
                         "' --seed 3" + quiet;
        if (!shell_ok(ra) || !shell_ok(rb))
            return {false, "cli run exited nonzero"};
        if (read_file(tmp.file("cr1") + "/report.csv") !=
            read_file(tmp.file("cr2") + "/report.csv"))
            return {false, "cli run reports are not byte-identical across reruns"};
        checked_cli = true;
    }

    // (c) pcap writer -> reader round-trips records exactly.
    std::vector<TraceRecord> recs;
    recs.push_back({1000, {0x0A000001, 0xC0000201, 1024, 443, 6}, 40});
    recs.push_back({2500000, {0xAC100001, 0xC0A80101, 5000, 8080, 6}, 1500});
    recs.push_back({2500001, {0x0A000002, 0xC0000202, 2048, 53, 17}, 700});
    recs.push_back({9999999999ull, {0xFFFFFFFF, 0x00000001, 65535, 1, 17}, 100000});
    const std::string pcap_path = tmp.file("round.pcap");
    {
        auto writer = open_trace_writer(pcap_path, TraceFormat::kPcap);
        for (const TraceRecord& rec : recs)
            writer->write(rec);
        writer->close();
    }
    {
        auto reader = open_trace(pcap_path);
        TraceRecord got;
        for (const TraceRecord& want : recs) {
            if (!reader->next(got))
                return {false, "pcap round-trip lost a record"};
            if (got.ts_us != want.ts_us || !(got.key == want.key) ||
                got.wire_len != want.wire_len)
                return {false, "pcap round-trip altered a record"};
        }
        if (reader->next(got))
            return {false, "pcap round-trip invented a record"};
    }

    // (d) Foreign record types are skip-counted, never emitted.
    std::string zoo = pcap_global();
    add_record(zoo, 100, eth_frame(0x0806, std::string(28, '\0')), 60); // ARP
    add_record(zoo, 200, eth_frame(0x86DD, std::string(40, '\0')), 60); // IPv6
    add_record(zoo, 300, eth_frame(0x0800, ipv4_payload(1, 0x0A000001, 0x0A000002, 0, 0)),
               60);                                                     // ICMP
    add_record(zoo, 400,
               eth_frame(0x0800, ipv4_payload(6, 0x0A000001, 0x0A000002, 10, 20, 0x0064)),
               60);                                                     // fragment
    add_record(zoo, 500,
               eth_frame(0x0800, ipv4_payload(6, 0x01020304, 0x05060708, 1000, 2000)),
               777);                                                    // TCP
    const std::string zoo_path = tmp.file("zoo.pcap");
    write_file(zoo_path, zoo);
    {
        auto reader = open_trace(zoo_path);
        TraceRecord got;
        size_t emitted = 0;
        while (reader->next(got)) {
            ++emitted;
            if (!(got.key == FlowKey{0x01020304, 0x05060708, 1000, 2000, 6}) ||
                got.wire_len != 777)
                return {false, "a skip-class record leaked into the stream"};
        }
        const SkipStats& sk = reader->skips();
        if (emitted != 1 || sk.ipv6 != 1 || sk.non_ip != 1 || sk.non_tcp_udp != 1 ||
            sk.fragments != 1)
            return {false, fmt("skip taxonomy miscounted: emitted %zu, ipv6 %" PRIu64
                               ", non_ip %" PRIu64 ", non_tcp_udp %" PRIu64
                               ", fragments %" PRIu64,
                               emitted, sk.ipv6, sk.non_ip, sk.non_tcp_udp,
                               sk.fragments)};
    }

    return {true, fmt("fixed-seed reruns byte-identical (library%s); pcap round-trip "
                      "exact; foreign records skip-counted and never emitted",
                      checked_cli ? " and cli" : "")};
}

Verdict run_criterion(int n, const std::string& cli) {
    switch (n) {
        case 1: return criterion_1();
        case 2: return criterion_2();
        case 3: return criterion_3();
        case 4: return criterion_4();
        case 5: return criterion_5();
        case 6: return criterion_6();
        case 7: return criterion_7();
        case 8: return criterion_8(cli);
    }
    return {false, "unknown criterion"};
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <1..8|all> [cli_binary]\n", argv[0]);
        return 2;
    }
    std::string which = argv[1];
    std::string cli = argc >= 3 ? argv[2] : "";

    std::vector<int> selected;
    if (which == "all") {
        selected = {1, 2, 3, 4, 5, 6, 7, 8};
    } else {
        int n = std::atoi(which.c_str());
        if (n < 1 || n > 8) {
            std::fprintf(stderr, "usage: %s <1..8|all> [cli_binary]\n", argv[0]);
            return 2;
        }
        selected = {n};
    }

    bool all_pass = true;
    for (int n : selected) {
        auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = run_criterion(n, cli);
        } catch (const std::exception& e) {
            v = {false, fmt("exception: %s", e.what())};
        }
        double wall =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        double budget = kBudgetS[n - 1];
        bool in_budget = budget <= 0.0 || wall <= budget;
        bool pass = v.pass && in_budget;
        std::printf("[%s] criterion %d: %s (%.1fs%s)\n", pass ? "PASS" : "FAIL", n,
                    v.detail.c_str(), wall,
                    in_budget ? "" : fmt(", over the %.0fs budget", budget).c_str());
        std::fflush(stdout);
        all_pass = all_pass && pass;
    }
    return all_pass ? 0 : 1;
}
