// C ABI shim over the C++ core. Exceptions stop here: every entry point
// catches, stashes the message in a thread-local, and returns a status.
#include "flowmeter.h"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <new>
#include <stdexcept>
#include <string>
#include <vector>

#include "analytics.hpp"
#include "errors.hpp"
#include "flowtable.hpp"
#include "pipeline.hpp"
#include "runner.hpp"
#include "sketch.hpp"
#include "trace.hpp"

namespace fmcore = flowmeter;

namespace {

thread_local std::string g_error;

template <typename Fn>
fm_status guarded(Fn&& fn) {
    try {
        fn();
        return FM_OK;
    } catch (const std::invalid_argument& e) {
        g_error = e.what();
        return FM_ERR_INVALID_ARG;
    } catch (const fmcore::UnsupportedError& e) {
        g_error = e.what();
        return FM_ERR_UNSUPPORTED;
    } catch (const fmcore::FormatError& e) {
        g_error = e.what();
        return FM_ERR_FORMAT;
    } catch (const fmcore::IoError& e) {
        g_error = e.what();
        return FM_ERR_IO;
    } catch (const std::bad_alloc&) {
        g_error = "out of memory";
        return FM_ERR_INTERNAL;
    } catch (const std::exception& e) {
        g_error = e.what();
        return FM_ERR_INTERNAL;
    } catch (...) {
        g_error = "unknown error";
        return FM_ERR_INTERNAL;
    }
}

fm_status null_arg(const char* what) {
    g_error = std::string(what) + " must not be NULL";
    return FM_ERR_INVALID_ARG;
}

fmcore::FlowKey to_cpp(const fm_flow_key& k) {
    return fmcore::FlowKey{k.src_ip, k.dst_ip, k.src_port, k.dst_port, k.proto};
}

fm_flow_key to_c(const fmcore::FlowKey& k) {
    return fm_flow_key{k.src_ip, k.dst_ip, k.src_port, k.dst_port, k.proto};
}

fmcore::SketchParams to_cpp(const fm_sketch_params& p) {
    fmcore::SketchParams out;
    out.b1 = p.b1;
    out.b2 = p.b2;
    out.blocks1 = p.blocks1;
    out.blocks2 = p.blocks2;
    out.sat_frac = p.sat_frac;
    out.single_layer = p.single_layer != 0;
    out.seed = p.seed;
    return out;
}

fm_flow_entry to_c(const fmcore::FlowEntry& e) {
    fm_flow_entry out;
    out.key = to_c(e.key);
    out.packets_est = e.packets_est;
    out.bytes_est = e.bytes_est;
    out.first_seen_us = e.first_seen_us;
    out.last_update_us = e.last_update_us;
    return out;
}

void copy_str(char* dst, size_t cap, const std::string& src) {
    std::snprintf(dst, cap, "%s", src.c_str());
}

// "PKTSxFLOWS[,PKTSxFLOWS...]", e.g. "10000x50,100000x10".
std::vector<fmcore::PlantedClass> parse_plant_spec(const char* spec) {
    std::vector<fmcore::PlantedClass> out;
    if (spec == nullptr || *spec == '\0') return out;
    std::string s(spec);
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t comma = s.find(',', pos);
        std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                    : comma - pos);
        size_t x = item.find('x');
        if (x == std::string::npos || x == 0 || x + 1 >= item.size())
            throw std::invalid_argument("plant spec item '" + item +
                                        "' is not of the form PKTSxFLOWS");
        size_t used_a = 0, used_b = 0;
        unsigned long long pkts = 0, flows = 0;
        try {
            pkts = std::stoull(item.substr(0, x), &used_a);
            flows = std::stoull(item.substr(x + 1), &used_b);
        } catch (const std::exception&) {
            throw std::invalid_argument("plant spec item '" + item + "' is not numeric");
        }
        if (used_a != x || used_b != item.size() - x - 1)
            throw std::invalid_argument("plant spec item '" + item + "' has trailing junk");
        out.push_back({pkts, flows});
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_bounds(const char* text, const char* what) {
    std::vector<double> out;
    std::string s(text);
    size_t pos = 0;
    while (pos <= s.size()) {
        size_t comma = s.find(',', pos);
        std::string item = s.substr(pos, comma == std::string::npos ? std::string::npos
                                                                    : comma - pos);
        size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument(std::string(what) + " entry '" + item +
                                        "' is not a number");
        }
        if (used != item.size())
            throw std::invalid_argument(std::string(what) + " entry '" + item +
                                        "' has trailing junk");
        out.push_back(v);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw std::invalid_argument(std::string(what) + " is empty");
    return out;
}

}  // namespace

struct fm_sketch {
    fmcore::TwoLayerSketch impl;
    std::vector<fmcore::FlushEvent> scratch;
};

struct fm_table {
    fmcore::FlowTable impl;
};

struct fm_pipeline {
    fmcore::Pipeline impl;
    explicit fm_pipeline(const fmcore::PipelineConfig& cfg) : impl(cfg) {}
};

struct fm_trace_reader {
    std::unique_ptr<fmcore::TraceReader> impl;
};

struct fm_trace_writer {
    std::unique_ptr<fmcore::TraceWriter> impl;
};

extern "C" {

const char* fm_status_str(fm_status s) {
    switch (s) {
        case FM_OK: return "FM_OK";
        case FM_END: return "FM_END";
        case FM_ERR_INVALID_ARG: return "FM_ERR_INVALID_ARG";
        case FM_ERR_IO: return "FM_ERR_IO";
        case FM_ERR_FORMAT: return "FM_ERR_FORMAT";
        case FM_ERR_UNSUPPORTED: return "FM_ERR_UNSUPPORTED";
        case FM_ERR_FULL: return "FM_ERR_FULL";
        case FM_ERR_INTERNAL: return "FM_ERR_INTERNAL";
    }
    return "FM_ERR_UNKNOWN";
}

const char* fm_last_error(void) { return g_error.c_str(); }

const char* fm_version(void) { return fmcore::kToolVersion; }

fm_status fm_coupon_estimate(uint32_t b, uint32_t k, double* out) {
    if (out == nullptr) return null_arg("out");
    return guarded([&] { *out = fmcore::coupon_estimate(b, k); });
}

/* --- sketch --- */

fm_status fm_sketch_params_default(fm_sketch_params* out) {
    if (out == nullptr) return null_arg("out");
    fmcore::SketchParams d;
    out->b1 = d.b1;
    out->b2 = d.b2;
    out->blocks1 = d.blocks1;
    out->blocks2 = d.blocks2;
    out->sat_frac = d.sat_frac;
    out->single_layer = d.single_layer ? 1 : 0;
    out->seed = d.seed;
    return FM_OK;
}

fm_status fm_sketch_create(const fm_sketch_params* params, fm_sketch** out) {
    if (params == nullptr) return null_arg("params");
    if (out == nullptr) return null_arg("out");
    *out = nullptr;
    return guarded([&] { *out = new fm_sketch{fmcore::TwoLayerSketch(to_cpp(*params)), {}}; });
}

void fm_sketch_destroy(fm_sketch* sk) { delete sk; }

fm_status fm_sketch_increment(fm_sketch* sk, const fm_flow_key* key, uint64_t t,
                              fm_flush_cb cb, void* user) {
    if (sk == nullptr) return null_arg("sk");
    if (key == nullptr) return null_arg("key");
    return guarded([&] {
        sk->scratch.clear();
        sk->impl.increment(to_cpp(*key), t, sk->scratch);
        if (cb != nullptr) {
            for (const auto& ev : sk->scratch) {
                fm_flush_event e{to_c(ev.key), ev.amount};
                cb(user, &e);
            }
        }
    });
}

fm_status fm_sketch_decode_residue(const fm_sketch* sk, const fm_flow_key* key, double* out) {
    if (sk == nullptr) return null_arg("sk");
    if (key == nullptr) return null_arg("key");
    if (out == nullptr) return null_arg("out");
    return guarded([&] { *out = sk->impl.decode_residue(to_cpp(*key)); });
}

fm_status fm_sketch_force_flush_all(fm_sketch* sk, double* drained) {
    if (sk == nullptr) return null_arg("sk");
    return guarded([&] {
        double d = sk->impl.force_flush_all();
        if (drained != nullptr) *drained = d;
    });
}

fm_status fm_sketch_info_get(const fm_sketch* sk, fm_sketch_info* out) {
    if (sk == nullptr) return null_arg("sk");
    if (out == nullptr) return null_arg("out");
    out->k1_star = sk->impl.k1_star();
    out->k2_star = sk->impl.k2_star();
    out->c1 = sk->impl.c1();
    out->c2 = sk->impl.c2();
    out->flush_count = sk->impl.flush_count();
    out->memory_bytes = sk->impl.memory_bytes();
    return FM_OK;
}

/* --- flow table --- */

fm_status fm_table_create(size_t initial_capacity, size_t max_capacity, fm_table** out) {
    if (out == nullptr) return null_arg("out");
    *out = nullptr;
    return guarded([&] { *out = new fm_table{fmcore::FlowTable(initial_capacity, max_capacity)}; });
}

void fm_table_destroy(fm_table* t) { delete t; }

fm_status fm_table_accumulate(fm_table* t, const fm_flow_key* key, double packets_delta,
                              double bytes_delta, uint64_t now_us, int* inserted) {
    if (t == nullptr) return null_arg("t");
    if (key == nullptr) return null_arg("key");
    fmcore::AccumulateResult r = fmcore::AccumulateResult::kUpdated;
    fm_status s = guarded(
        [&] { r = t->impl.accumulate(to_cpp(*key), packets_delta, bytes_delta, now_us); });
    if (s != FM_OK) return s;
    if (r == fmcore::AccumulateResult::kTableFull) {
        g_error = "flow table at capacity; key not resident";
        return FM_ERR_FULL;
    }
    if (inserted != nullptr) *inserted = (r == fmcore::AccumulateResult::kInserted) ? 1 : 0;
    return FM_OK;
}

fm_status fm_table_lookup(const fm_table* t, const fm_flow_key* key, fm_flow_entry* out) {
    if (t == nullptr) return null_arg("t");
    if (key == nullptr) return null_arg("key");
    const fmcore::FlowEntry* e = t->impl.lookup(to_cpp(*key));
    if (e == nullptr) return FM_END;
    if (out != nullptr) *out = to_c(*e);
    return FM_OK;
}

fm_status fm_table_drain(fm_table* t, fm_entry_cb cb, void* user) {
    if (t == nullptr) return null_arg("t");
    return guarded([&] {
        std::vector<fmcore::FlowEntry> entries = t->impl.drain();
        if (cb != nullptr) {
            for (const auto& e : entries) {
                fm_flow_entry c = to_c(e);
                cb(user, &c);
            }
        }
    });
}

fm_status fm_table_stats_get(const fm_table* t, fm_table_stats* out) {
    if (t == nullptr) return null_arg("t");
    if (out == nullptr) return null_arg("out");
    const fmcore::FlowTableStats& s = t->impl.stats();
    out->inserts = s.inserts;
    out->updates = s.updates;
    out->entries = s.entries;
    out->bytes_resident = s.bytes_resident;
    return FM_OK;
}

/* --- pipeline --- */

fm_status fm_pipeline_params_default(fm_pipeline_params* out) {
    if (out == nullptr) return null_arg("out");
    fm_sketch_params_default(&out->sketch);
    fmcore::PipelineConfig d;
    out->byte_unit = d.byte_unit;
    out->epoch_len_s = d.epoch_len_s;
    out->shards = d.shards;
    out->table_initial_capacity = d.table_initial_capacity;
    out->table_max_capacity = d.table_max_capacity;
    out->seed = d.seed;
    return FM_OK;
}

fm_status fm_pipeline_create(const fm_pipeline_params* params, fm_pipeline** out) {
    if (params == nullptr) return null_arg("params");
    if (out == nullptr) return null_arg("out");
    *out = nullptr;
    return guarded([&] {
        fmcore::PipelineConfig cfg;
        cfg.packet_sketch = to_cpp(params->sketch);
        cfg.byte_sketch = to_cpp(params->sketch);
        cfg.byte_unit = params->byte_unit;
        cfg.epoch_len_s = params->epoch_len_s;
        cfg.shards = params->shards;
        cfg.table_initial_capacity = params->table_initial_capacity;
        cfg.table_max_capacity = params->table_max_capacity;
        cfg.seed = params->seed;
        *out = new fm_pipeline(cfg);
    });
}

void fm_pipeline_destroy(fm_pipeline* p) { delete p; }

fm_status fm_pipeline_process(fm_pipeline* p, const fm_packet* pkt) {
    if (p == nullptr) return null_arg("p");
    if (pkt == nullptr) return null_arg("pkt");
    return guarded([&] {
        fmcore::TraceRecord rec{pkt->ts_us, to_cpp(pkt->key), pkt->wire_len};
        p->impl.process(rec);
    });
}

fm_status fm_pipeline_query(fm_pipeline* p, const fm_flow_key* key, double* packets_est,
                            double* bytes_est) {
    if (p == nullptr) return null_arg("p");
    if (key == nullptr) return null_arg("key");
    return guarded([&] {
        auto [pk, by] = p->impl.query_flow(to_cpp(*key));
        if (packets_est != nullptr) *packets_est = pk;
        if (bytes_est != nullptr) *bytes_est = by;
    });
}

fm_status fm_pipeline_end_epoch(fm_pipeline* p, const fm_flow_key* keys, size_t n_keys,
                                fm_epoch_row* rows) {
    if (p == nullptr) return null_arg("p");
    if (n_keys > 0 && keys == nullptr) return null_arg("keys");
    if (n_keys > 0 && rows == nullptr) return null_arg("rows");
    return guarded([&] {
        std::vector<fmcore::FlowKey> req(n_keys);
        for (size_t i = 0; i < n_keys; ++i) req[i] = to_cpp(keys[i]);
        std::vector<fmcore::EpochRow> got = p->impl.end_epoch(req);
        for (size_t i = 0; i < n_keys; ++i) {
            auto it = std::lower_bound(
                got.begin(), got.end(), req[i],
                [](const fmcore::EpochRow& r, const fmcore::FlowKey& k) { return r.key < k; });
            rows[i].key = keys[i];
            if (it != got.end() && it->key == req[i]) {
                rows[i].packets_est = it->packets_est;
                rows[i].bytes_est = it->bytes_est;
            } else {
                rows[i].packets_est = 0.0;
                rows[i].bytes_est = 0.0;
            }
        }
    });
}

fm_status fm_pipeline_stats(fm_pipeline* p, fm_regulation_stats* out) {
    if (p == nullptr) return null_arg("p");
    if (out == nullptr) return null_arg("out");
    return guarded([&] {
        fmcore::RegulationStats s = p->impl.stats();
        out->packets_in = s.packets_in;
        out->byte_units_in = s.byte_units_in;
        out->table_ops = s.table_ops;
        out->dropped_flushes = s.dropped_flushes;
        out->regulation_rate = s.regulation_rate();
        out->epoch = p->impl.epoch();
        out->flush_count = p->impl.flush_count();
        out->sketch_bytes = p->impl.sketch_memory_bytes();
        out->table_bytes = p->impl.table_bytes_resident();
    });
}

fm_status fm_pipeline_table_keys(fm_pipeline* p, fm_flow_key* out, size_t cap, size_t* total) {
    if (p == nullptr) return null_arg("p");
    if (total == nullptr) return null_arg("total");
    return guarded([&] {
        std::vector<fmcore::FlowKey> keys = p->impl.table_keys();
        *total = keys.size();
        if (out != nullptr) {
            size_t n = std::min(cap, keys.size());
            for (size_t i = 0; i < n; ++i) out[i] = to_c(keys[i]);
        }
    });
}

/* --- traces --- */

fm_status fm_trace_open(const char* path, fm_trace_reader** out) {
    if (path == nullptr) return null_arg("path");
    if (out == nullptr) return null_arg("out");
    *out = nullptr;
    return guarded([&] { *out = new fm_trace_reader{fmcore::open_trace(path)}; });
}

fm_status fm_trace_next(fm_trace_reader* r, fm_packet* out) {
    if (r == nullptr) return null_arg("r");
    if (out == nullptr) return null_arg("out");
    bool got = false;
    fm_status s = guarded([&] {
        fmcore::TraceRecord rec;
        got = r->impl->next(rec);
        if (got) {
            out->ts_us = rec.ts_us;
            out->key = to_c(rec.key);
            out->wire_len = rec.wire_len;
        }
    });
    if (s != FM_OK) return s;
    return got ? FM_OK : FM_END;
}

fm_status fm_trace_skips(const fm_trace_reader* r, fm_skip_stats* out) {
    if (r == nullptr) return null_arg("r");
    if (out == nullptr) return null_arg("out");
    const fmcore::SkipStats& s = r->impl->skips();
    out->ipv6 = s.ipv6;
    out->non_ip = s.non_ip;
    out->fragments = s.fragments;
    out->non_tcp_udp = s.non_tcp_udp;
    out->short_frame = s.short_frame;
    out->truncated_tail = s.truncated_tail;
    out->ts_regressions = s.ts_regressions;
    return FM_OK;
}

void fm_trace_close(fm_trace_reader* r) { delete r; }

fm_status fm_trace_writer_open(const char* path, fm_trace_format format, fm_trace_writer** out) {
    if (path == nullptr) return null_arg("path");
    if (out == nullptr) return null_arg("out");
    if (format != FM_TRACE_CSV && format != FM_TRACE_PCAP) {
        g_error = "format must be FM_TRACE_CSV or FM_TRACE_PCAP";
        return FM_ERR_INVALID_ARG;
    }
    *out = nullptr;
    return guarded([&] {
        *out = new fm_trace_writer{fmcore::open_trace_writer(
            path, format == FM_TRACE_PCAP ? fmcore::TraceFormat::kPcap
                                          : fmcore::TraceFormat::kCsv)};
    });
}

fm_status fm_trace_write(fm_trace_writer* w, const fm_packet* pkt) {
    if (w == nullptr) return null_arg("w");
    if (pkt == nullptr) return null_arg("pkt");
    return guarded([&] {
        fmcore::TraceRecord rec{pkt->ts_us, to_cpp(pkt->key), pkt->wire_len};
        w->impl->write(rec);
    });
}

fm_status fm_trace_writer_close(fm_trace_writer* w) {
    if (w == nullptr) return FM_OK;
    fm_status s = guarded([&] { w->impl->close(); });
    delete w;
    return s;
}

/* --- whole experiments --- */

fm_status fm_generate_params_default(fm_generate_params* out) {
    if (out == nullptr) return null_arg("out");
    fmcore::GeneratorConfig d;
    out->out_path = nullptr;
    out->oracle_path = nullptr;
    out->manifest_path = nullptr;
    out->format = FM_TRACE_CSV;
    out->flows = d.flows;
    out->packets = d.packets;
    out->zipf_alpha = d.zipf_alpha;
    out->mean_pkt_len = d.mean_pkt_len;
    out->seed = d.seed;
    out->plant_spec = nullptr;
    out->start_ts_us = d.start_ts_us;
    out->spacing_us = d.spacing_us;
    return FM_OK;
}

fm_status fm_generate(const fm_generate_params* params, fm_generate_summary* out) {
    if (params == nullptr) return null_arg("params");
    if (out == nullptr) return null_arg("out");
    if (params->out_path == nullptr) return null_arg("params->out_path");
    if (params->format != FM_TRACE_CSV && params->format != FM_TRACE_PCAP) {
        g_error = "format must be FM_TRACE_CSV or FM_TRACE_PCAP";
        return FM_ERR_INVALID_ARG;
    }
    return guarded([&] {
        fmcore::GenerateJob job;
        job.out_path = params->out_path;
        if (params->oracle_path != nullptr) job.oracle_path = params->oracle_path;
        if (params->manifest_path != nullptr) job.manifest_path = params->manifest_path;
        job.format = params->format == FM_TRACE_PCAP ? fmcore::TraceFormat::kPcap
                                                     : fmcore::TraceFormat::kCsv;
        job.gen.flows = params->flows;
        job.gen.packets = params->packets;
        job.gen.zipf_alpha = params->zipf_alpha;
        job.gen.mean_pkt_len = params->mean_pkt_len;
        job.gen.seed = params->seed;
        job.gen.planted = parse_plant_spec(params->plant_spec);
        job.gen.start_ts_us = params->start_ts_us;
        job.gen.spacing_us = params->spacing_us;
        fmcore::GenerateResult r = fmcore::run_generate(job);
        out->packets = r.summary.packets;
        out->bytes = r.summary.bytes;
        out->background_flows_hit = r.summary.background_flows_hit;
        out->planted_flows = r.summary.planted_flows;
        copy_str(out->trace_digest, sizeof out->trace_digest, r.trace_digest);
        copy_str(out->oracle_path, sizeof out->oracle_path, r.oracle_path);
        copy_str(out->manifest_path, sizeof out->manifest_path, r.manifest_path);
    });
}

fm_status fm_run_params_default(fm_run_params* out) {
    if (out == nullptr) return null_arg("out");
    out->in_path = nullptr;
    out->out_dir = nullptr;
    out->oracle_path = nullptr;
    fm_pipeline_params_default(&out->pipeline);
    return FM_OK;
}

fm_status fm_run(const fm_run_params* params, fm_run_summary* out) {
    if (params == nullptr) return null_arg("params");
    if (out == nullptr) return null_arg("out");
    if (params->in_path == nullptr) return null_arg("params->in_path");
    if (params->out_dir == nullptr) return null_arg("params->out_dir");
    return guarded([&] {
        fmcore::RunJob job;
        job.in_path = params->in_path;
        job.out_dir = params->out_dir;
        if (params->oracle_path != nullptr) job.oracle_path = params->oracle_path;
        job.pipeline.packet_sketch = to_cpp(params->pipeline.sketch);
        job.pipeline.byte_sketch = to_cpp(params->pipeline.sketch);
        job.pipeline.byte_unit = params->pipeline.byte_unit;
        job.pipeline.epoch_len_s = params->pipeline.epoch_len_s;
        job.pipeline.shards = params->pipeline.shards;
        job.pipeline.table_initial_capacity = params->pipeline.table_initial_capacity;
        job.pipeline.table_max_capacity = params->pipeline.table_max_capacity;
        job.pipeline.seed = params->pipeline.seed;
        fmcore::RunResult r = fmcore::run_experiment(job);
        out->packets = r.packets;
        out->table_ops = r.table_ops;
        out->dropped_flushes = r.dropped_flushes;
        out->epochs = r.epochs;
        out->regulation_rate = r.regulation_rate;
        out->skips.ipv6 = r.skips.ipv6;
        out->skips.non_ip = r.skips.non_ip;
        out->skips.fragments = r.skips.fragments;
        out->skips.non_tcp_udp = r.skips.non_tcp_udp;
        out->skips.short_frame = r.skips.short_frame;
        out->skips.truncated_tail = r.skips.truncated_tail;
        out->skips.ts_regressions = r.skips.ts_regressions;
        out->sketch_bytes = r.sketch_bytes;
        out->table_bytes = r.table_bytes;
        out->wall_s = r.wall_s;
        copy_str(out->manifest_digest, sizeof out->manifest_digest, r.manifest_digest);
        copy_str(out->report_path, sizeof out->report_path, r.report_path);
        copy_str(out->regulation_path, sizeof out->regulation_path, r.regulation_path);
        copy_str(out->manifest_path, sizeof out->manifest_path, r.manifest_path);
    });
}

fm_status fm_evaluate_params_default(fm_evaluate_params* out) {
    if (out == nullptr) return null_arg("out");
    fmcore::EvaluateJob d;
    out->report_path = nullptr;
    out->oracle_path = nullptr;
    out->out_dir = nullptr;
    out->packet_bounds = nullptr;
    out->byte_bounds = nullptr;
    out->packet_threshold = d.packet_threshold;
    out->byte_threshold = d.byte_threshold;
    return FM_OK;
}

fm_status fm_evaluate(const fm_evaluate_params* params, fm_evaluate_summary* out) {
    if (params == nullptr) return null_arg("params");
    if (out == nullptr) return null_arg("out");
    if (params->report_path == nullptr) return null_arg("params->report_path");
    if (params->oracle_path == nullptr) return null_arg("params->oracle_path");
    if (params->out_dir == nullptr) return null_arg("params->out_dir");
    return guarded([&] {
        fmcore::EvaluateJob job;
        job.report_path = params->report_path;
        job.oracle_path = params->oracle_path;
        job.out_dir = params->out_dir;
        if (params->packet_bounds != nullptr)
            job.packet_bounds = parse_bounds(params->packet_bounds, "packet_bounds");
        if (params->byte_bounds != nullptr)
            job.byte_bounds = parse_bounds(params->byte_bounds, "byte_bounds");
        job.packet_threshold = params->packet_threshold;
        job.byte_threshold = params->byte_threshold;
        if (job.packet_bounds.size() + job.byte_bounds.size() > FM_EVAL_MAX_CLASSES)
            throw std::invalid_argument("too many size-class bounds (max 16 total)");
        fmcore::EvaluateResult r = fmcore::run_evaluate(job);
        out->n_classes = r.accuracy.size();
        for (size_t i = 0; i < r.accuracy.size() && i < FM_EVAL_MAX_CLASSES; ++i) {
            const fmcore::SizeClassStat& c = r.accuracy[i];
            copy_str(out->classes[i].metric, sizeof out->classes[i].metric,
                     fmcore::metric_name(c.metric));
            out->classes[i].lower_bound = c.lower_bound;
            out->classes[i].n_flows = c.n_flows;
            out->classes[i].rel_rmse_pct = c.rel_rmse_pct;
        }
        for (size_t i = 0; i < r.heavy_hitters.size() && i < 2; ++i) {
            const fmcore::HeavyHitterReport& h = r.heavy_hitters[i];
            copy_str(out->heavy_hitters[i].metric, sizeof out->heavy_hitters[i].metric,
                     fmcore::metric_name(h.metric));
            out->heavy_hitters[i].threshold = h.threshold;
            out->heavy_hitters[i].n_actual = h.actual.size();
            out->heavy_hitters[i].n_detected = h.detected.size();
            out->heavy_hitters[i].false_positives = h.false_positives;
            out->heavy_hitters[i].false_negatives = h.false_negatives;
            out->heavy_hitters[i].fpr = h.fpr;
            out->heavy_hitters[i].fnr = h.fnr;
        }
        copy_str(out->manifest_digest, sizeof out->manifest_digest, r.manifest_digest);
        copy_str(out->accuracy_path, sizeof out->accuracy_path, r.accuracy_path);
        copy_str(out->hh_path, sizeof out->hh_path, r.hh_path);
    });
}

}  // extern "C"
