// flowmeter CLI: generate / run / evaluate / heavy-hitters / bench.
// Links only the public C API; exit codes: 0 ok, 1 usage, 2 I/O or format.
#include <chrono>
#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowmeter.h"

namespace {

int exit_for(fm_status s) {
    switch (s) {
        case FM_OK:
        case FM_END:
            return 0;
        case FM_ERR_INVALID_ARG:
            return 1;
        default:
            return 2;
    }
}

int fail(fm_status s) {
    std::fprintf(stderr, "error: %s (%s)\n", fm_last_error(), fm_status_str(s));
    return exit_for(s);
}

void print_skips(const fm_skip_stats& sk) {
    uint64_t skipped = sk.ipv6 + sk.non_ip + sk.fragments + sk.non_tcp_udp + sk.short_frame;
    if (skipped > 0 || sk.truncated_tail > 0 || sk.ts_regressions > 0) {
        std::printf("skipped          %" PRIu64
                    " (ipv6 %" PRIu64 ", non_ip %" PRIu64 ", fragments %" PRIu64
                    ", non_tcp_udp %" PRIu64 ", short %" PRIu64 ")\n",
                    skipped, sk.ipv6, sk.non_ip, sk.fragments, sk.non_tcp_udp, sk.short_frame);
        if (sk.truncated_tail > 0)
            std::printf("truncated_tail   %" PRIu64 "\n", sk.truncated_tail);
        if (sk.ts_regressions > 0)
            std::printf("ts_regressions   %" PRIu64 "\n", sk.ts_regressions);
    }
}

void print_hh(const fm_hh_stat& h) {
    std::printf("%-7s threshold %.0f: actual %" PRIu64 ", detected %" PRIu64
                ", fp %" PRIu64 ", fn %" PRIu64 ", fpr %.4f, fnr %.4f\n",
                h.metric, h.threshold, h.n_actual, h.n_detected, h.false_positives,
                h.false_negatives, h.fpr, h.fnr);
}

struct PipelineFlags {
    fm_pipeline_params params{};

    void attach(CLI::App* cmd) {
        fm_pipeline_params_default(&params);
        params.epoch_len_s = 0.0; // CLI default: one epoch over the whole trace
        cmd->add_option("--b1", params.sketch.b1, "Bits per layer-1 block (power of two <= 64)")
            ->capture_default_str();
        cmd->add_option("--b2", params.sketch.b2, "Bits per layer-2 block (1..64)")
            ->capture_default_str();
        cmd->add_option("--blocks1", params.sketch.blocks1, "Layer-1 block count")
            ->capture_default_str();
        cmd->add_option("--blocks2", params.sketch.blocks2, "Layer-2 block count")
            ->capture_default_str();
        cmd->add_option("--sat", params.sketch.sat_frac, "Saturation fraction in (0,1]")
            ->capture_default_str();
        cmd->add_flag("--single-layer", params.sketch.single_layer,
                      "Ablation: flush straight from layer 1");
        cmd->add_option("--byte-unit", params.byte_unit, "Bytes per byte-sketch unit")
            ->capture_default_str();
        cmd->add_option("--epoch", params.epoch_len_s,
                        "Epoch length in seconds (0 = whole trace)")
            ->capture_default_str();
        cmd->add_option("--shards", params.shards, "Worker shards (1 = inline)")
            ->capture_default_str();
        cmd->add_option("--table-initial", params.table_initial_capacity,
                        "Initial table capacity (power of two)")
            ->capture_default_str();
        cmd->add_option("--table-max", params.table_max_capacity,
                        "Max table capacity (power of two)")
            ->capture_default_str();
        cmd->add_option("--seed", params.seed, "Pipeline seed")->capture_default_str();
    }
};

int cmd_generate(const std::string& out, const std::string& format_name,
                 const std::string& oracle, uint64_t flows, uint64_t packets, double alpha,
                 uint32_t mean_len, uint64_t seed, const std::vector<std::string>& plants) {
    fm_generate_params p;
    fm_generate_params_default(&p);
    p.out_path = out.c_str();
    if (!oracle.empty()) p.oracle_path = oracle.c_str();
    p.format = format_name == "pcap" ? FM_TRACE_PCAP : FM_TRACE_CSV;
    p.flows = flows;
    p.packets = packets;
    p.zipf_alpha = alpha;
    p.mean_pkt_len = mean_len;
    p.seed = seed;
    std::string plant_spec;
    for (const auto& s : plants) {
        if (!plant_spec.empty()) plant_spec += ',';
        plant_spec += s;
    }
    if (!plant_spec.empty()) p.plant_spec = plant_spec.c_str();

    fm_generate_summary out_s;
    fm_status s = fm_generate(&p, &out_s);
    if (s != FM_OK) return fail(s);
    std::printf("trace            %s\n", out.c_str());
    std::printf("packets          %" PRIu64 "\n", out_s.packets);
    std::printf("bytes            %" PRIu64 "\n", out_s.bytes);
    std::printf("background_flows %" PRIu64 "\n", out_s.background_flows_hit);
    std::printf("planted_flows    %" PRIu64 "\n", out_s.planted_flows);
    std::printf("oracle           %s\n", out_s.oracle_path);
    std::printf("manifest         %s\n", out_s.manifest_path);
    std::printf("trace_fnv1a64    %s\n", out_s.trace_digest);
    return 0;
}

int cmd_run(const std::string& in, const std::string& out_dir, const std::string& oracle,
            const PipelineFlags& pf) {
    fm_run_params p;
    fm_run_params_default(&p);
    p.in_path = in.c_str();
    p.out_dir = out_dir.c_str();
    if (!oracle.empty()) p.oracle_path = oracle.c_str();
    p.pipeline = pf.params;

    fm_run_summary r;
    fm_status s = fm_run(&p, &r);
    if (s != FM_OK) return fail(s);
    std::printf("packets          %" PRIu64 "\n", r.packets);
    std::printf("table_ops        %" PRIu64 "\n", r.table_ops);
    std::printf("regulation_rate  %.6f\n", r.regulation_rate);
    std::printf("dropped_flushes  %" PRIu64 "\n", r.dropped_flushes);
    std::printf("epochs           %u\n", r.epochs);
    std::printf("sketch_bytes     %zu\n", r.sketch_bytes);
    std::printf("table_bytes      %zu\n", r.table_bytes);
    print_skips(r.skips);
    std::printf("wall_s           %.3f\n", r.wall_s);
    std::printf("report           %s\n", r.report_path);
    std::printf("regulation       %s\n", r.regulation_path);
    std::printf("manifest         %s\n", r.manifest_path);
    std::printf("manifest_digest  %s\n", r.manifest_digest);
    return 0;
}

int cmd_evaluate(const std::string& report, const std::string& oracle,
                 const std::string& out_dir, const std::string& packet_bounds,
                 const std::string& byte_bounds, double packet_threshold,
                 double byte_threshold, bool hh_only) {
    fm_evaluate_params p;
    fm_evaluate_params_default(&p);
    p.report_path = report.c_str();
    p.oracle_path = oracle.c_str();
    p.out_dir = out_dir.c_str();
    if (!packet_bounds.empty()) p.packet_bounds = packet_bounds.c_str();
    if (!byte_bounds.empty()) p.byte_bounds = byte_bounds.c_str();
    p.packet_threshold = packet_threshold;
    p.byte_threshold = byte_threshold;

    fm_evaluate_summary r;
    fm_status s = fm_evaluate(&p, &r);
    if (s != FM_OK) return fail(s);
    if (!hh_only) {
        for (size_t i = 0; i < r.n_classes; ++i) {
            const fm_class_stat& c = r.classes[i];
            std::printf("%-7s >= %-12.0f n=%-8" PRIu64 " rel_rmse %.3f%%\n", c.metric,
                        c.lower_bound, c.n_flows, c.rel_rmse_pct);
        }
        std::printf("accuracy         %s\n", r.accuracy_path);
    }
    print_hh(r.heavy_hitters[0]);
    print_hh(r.heavy_hitters[1]);
    std::printf("hh               %s\n", r.hh_path);
    return 0;
}

int cmd_bench(const std::string& in, uint32_t repeat, const PipelineFlags& pf) {
    fm_trace_reader* reader = nullptr;
    fm_status s = fm_trace_open(in.c_str(), &reader);
    if (s != FM_OK) return fail(s);
    std::vector<fm_packet> packets;
    fm_packet pkt;
    while ((s = fm_trace_next(reader, &pkt)) == FM_OK) packets.push_back(pkt);
    if (s != FM_END) {
        fm_trace_close(reader);
        return fail(s);
    }
    fm_trace_close(reader);
    if (packets.empty()) {
        std::fprintf(stderr, "error: trace has no usable records\n");
        return 1;
    }

    double total_s = 0.0;
    fm_regulation_stats last{};
    for (uint32_t rep = 0; rep < repeat; ++rep) {
        fm_pipeline* p = nullptr;
        s = fm_pipeline_create(&pf.params, &p);
        if (s != FM_OK) return fail(s);
        auto t0 = std::chrono::steady_clock::now();
        for (const fm_packet& q : packets) {
            s = fm_pipeline_process(p, &q);
            if (s != FM_OK) {
                fm_pipeline_destroy(p);
                return fail(s);
            }
        }
        s = fm_pipeline_stats(p, &last); // barrier: all queued work applied
        auto t1 = std::chrono::steady_clock::now();
        fm_pipeline_destroy(p);
        if (s != FM_OK) return fail(s);
        total_s += std::chrono::duration<double>(t1 - t0).count();
    }
    double total_pkts = static_cast<double>(packets.size()) * repeat;
    std::printf("records          %zu\n", packets.size());
    std::printf("repeats          %u\n", repeat);
    std::printf("seconds          %.3f\n", total_s);
    std::printf("mpps             %.3f\n", total_pkts / total_s / 1e6);
    std::printf("regulation_rate  %.6f\n", last.regulation_rate);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("flowmeter ") + fm_version() +
                 " — per-flow traffic measurement with a saturating two-layer sketch"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "Synthesize a trace plus its exact oracle");
    std::string gen_out, gen_format = "csv", gen_oracle;
    uint64_t gen_flows = 100000, gen_packets = 1000000, gen_seed = 1;
    double gen_alpha = 1.0;
    uint32_t gen_mean_len = 700;
    std::vector<std::string> gen_plants;
    gen->add_option("--out", gen_out, "Output trace path")->required();
    gen->add_option("--format", gen_format, "Trace format: csv or pcap")
        ->check(CLI::IsMember({"csv", "pcap"}))
        ->capture_default_str();
    gen->add_option("--oracle", gen_oracle, "Oracle CSV path (default <out>.oracle.csv)");
    gen->add_option("--flows", gen_flows, "Background flow count")->capture_default_str();
    gen->add_option("--packets", gen_packets, "Total packets, background + planted")
        ->capture_default_str();
    gen->add_option("--zipf-alpha", gen_alpha, "Background skew (0 = uniform)")
        ->capture_default_str();
    gen->add_option("--mean-len", gen_mean_len, "Mean packet length (uniform in [40, 2m-40])")
        ->capture_default_str();
    gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();
    gen->add_option("--plant", gen_plants,
                    "Planted class PKTSxFLOWS (e.g. 10000x50); repeatable")
        ->take_all();

    // run
    auto* run = app.add_subcommand("run", "Measure a trace; write report, regulation, manifest");
    std::string run_in, run_out_dir, run_oracle;
    PipelineFlags run_pf;
    run->add_option("--in", run_in, "Input trace (CSV or classic pcap)")->required();
    run->add_option("--out-dir", run_out_dir, "Output directory")->required();
    run->add_option("--oracle", run_oracle,
                    "Oracle CSV: report exactly these keys, with attributed residues");
    run_pf.attach(run);

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "Score a report against an oracle");
    std::string ev_report, ev_oracle, ev_out_dir = ".", ev_pb, ev_bb;
    double ev_pt = 1000, ev_bt = 1e6;
    eval->add_option("--report", ev_report, "report.csv from a run")->required();
    eval->add_option("--oracle", ev_oracle, "Oracle CSV")->required();
    eval->add_option("--out-dir", ev_out_dir, "Output directory for accuracy.csv + hh.csv")
        ->capture_default_str();
    eval->add_option("--packet-bounds", ev_pb, "Nested class lower bounds, e.g. 1000,10000");
    eval->add_option("--byte-bounds", ev_bb, "Nested byte class lower bounds");
    eval->add_option("--packet-threshold", ev_pt, "Packet heavy-hitter threshold")
        ->capture_default_str();
    eval->add_option("--byte-threshold", ev_bt, "Byte heavy-hitter threshold")
        ->capture_default_str();

    // heavy-hitters
    auto* hh = app.add_subcommand("heavy-hitters", "Threshold detection only");
    std::string hh_report, hh_oracle, hh_out_dir = ".";
    double hh_pt = 1000, hh_bt = 1e6;
    hh->add_option("--report", hh_report, "report.csv from a run")->required();
    hh->add_option("--oracle", hh_oracle, "Oracle CSV")->required();
    hh->add_option("--out-dir", hh_out_dir, "Output directory")->capture_default_str();
    hh->add_option("--packet-threshold", hh_pt, "Packet threshold")->capture_default_str();
    hh->add_option("--byte-threshold", hh_bt, "Byte threshold")->capture_default_str();

    // bench
    auto* bench = app.add_subcommand("bench", "Replay a trace in memory and time the pipeline");
    std::string bench_in;
    uint32_t bench_repeat = 3;
    PipelineFlags bench_pf;
    bench->add_option("--in", bench_in, "Input trace")->required();
    bench->add_option("--repeat", bench_repeat, "Replay count")->capture_default_str();
    bench_pf.attach(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1; // usage errors are exit 1; help/version exit 0
    }

    if (gen->parsed())
        return cmd_generate(gen_out, gen_format, gen_oracle, gen_flows, gen_packets, gen_alpha,
                            gen_mean_len, gen_seed, gen_plants);
    if (run->parsed()) return cmd_run(run_in, run_out_dir, run_oracle, run_pf);
    if (eval->parsed())
        return cmd_evaluate(ev_report, ev_oracle, ev_out_dir, ev_pb, ev_bb, ev_pt, ev_bt, false);
    if (hh->parsed())
        return cmd_evaluate(hh_report, hh_oracle, hh_out_dir, "", "", hh_pt, hh_bt, true);
    if (bench->parsed()) return cmd_bench(bench_in, bench_repeat, bench_pf);
    return 1;
}
