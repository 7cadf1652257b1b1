#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "flowmeter.h"
#include "testutil.hpp"

using testutil::TempDir;

namespace {

fm_flow_key key_n(uint32_t n) {
    fm_flow_key k;
    k.src_ip = 0x0A000000u + n;
    k.dst_ip = 0xC0000201u;
    k.src_port = static_cast<uint16_t>(1024 + n);
    k.dst_port = 443;
    k.proto = 6;
    return k;
}

fm_packet packet_of(fm_flow_key key, uint64_t ts_us, uint32_t wire_len) {
    fm_packet p;
    p.ts_us = ts_us;
    p.key = key;
    p.wire_len = wire_len;
    return p;
}

void count_flush(void* user, const fm_flush_event* ev) {
    auto* v = static_cast<std::vector<fm_flush_event>*>(user);
    v->push_back(*ev);
}

void count_entry(void* user, const fm_flow_entry* entry) {
    auto* v = static_cast<std::vector<fm_flow_entry>*>(user);
    v->push_back(*entry);
}

}  // namespace

TEST_SUITE("capi") {

TEST_CASE("version and status strings") {
    CHECK(std::string(fm_version()) == "0.1.0");
    CHECK(std::string(fm_status_str(FM_OK)) == "FM_OK");
    CHECK(std::string(fm_status_str(FM_END)) == "FM_END");
    CHECK(std::string(fm_status_str(FM_ERR_INVALID_ARG)) == "FM_ERR_INVALID_ARG");
    CHECK(std::string(fm_status_str(FM_ERR_IO)) == "FM_ERR_IO");
    CHECK(std::string(fm_status_str(FM_ERR_FORMAT)) == "FM_ERR_FORMAT");
    CHECK(std::string(fm_status_str(FM_ERR_UNSUPPORTED)) == "FM_ERR_UNSUPPORTED");
    CHECK(std::string(fm_status_str(FM_ERR_FULL)) == "FM_ERR_FULL");
    CHECK(std::string(fm_status_str(FM_ERR_INTERNAL)) == "FM_ERR_INTERNAL");
}

TEST_CASE("coupon estimates and argument errors") {
    double v = 0.0;
    REQUIRE(fm_coupon_estimate(64, 48, &v) == FM_OK);
    CHECK(v == doctest::Approx(87.242362).epsilon(1e-6));
    REQUIRE(fm_coupon_estimate(64, 0, &v) == FM_OK);
    CHECK(v == 0.0);

    CHECK(fm_coupon_estimate(0, 0, &v) == FM_ERR_INVALID_ARG);
    CHECK(fm_coupon_estimate(64, 65, &v) == FM_ERR_INVALID_ARG);
    CHECK(fm_coupon_estimate(64, 48, nullptr) == FM_ERR_INVALID_ARG);
    CHECK(std::strlen(fm_last_error()) > 0);
}

TEST_CASE("sketch lifecycle with flush callback") {
    fm_sketch_params params;
    REQUIRE(fm_sketch_params_default(&params) == FM_OK);
    CHECK(params.b1 == 64);
    CHECK(params.blocks1 == 4096);
    CHECK(params.sat_frac == doctest::Approx(0.75));
    params.seed = 7;

    fm_sketch* sk = nullptr;
    REQUIRE(fm_sketch_create(&params, &sk) == FM_OK);
    REQUIRE(sk != nullptr);

    fm_sketch_info info;
    REQUIRE(fm_sketch_info_get(sk, &info) == FM_OK);
    CHECK(info.k1_star == 48);
    CHECK(info.k2_star == 48);
    CHECK(info.c1 == doctest::Approx(87.242362).epsilon(1e-6));
    CHECK(info.c2 == info.c1);
    CHECK(info.flush_count == 0);
    CHECK(info.memory_bytes == 65536);

    // Drive one key until it flushes; the amount is the fixed quantum c1*c2.
    const fm_flow_key key = key_n(0);
    std::vector<fm_flush_event> flushes;
    uint64_t applied = 0;
    while (flushes.empty() && applied < 100000) {
        REQUIRE(fm_sketch_increment(sk, &key, 1, count_flush, &flushes) == FM_OK);
        ++applied;
    }
    REQUIRE(flushes.size() == 1);
    CHECK(flushes[0].key.src_ip == key.src_ip);
    CHECK(flushes[0].key.proto == key.proto);
    CHECK(flushes[0].amount == doctest::Approx(info.c1 * info.c2).epsilon(1e-12));
    REQUIRE(fm_sketch_info_get(sk, &info) == FM_OK);
    CHECK(info.flush_count == 1);

    // Residue decodes non-destructively and drains on force_flush_all.
    REQUIRE(fm_sketch_increment(sk, &key, 100, nullptr, nullptr) == FM_OK);
    double residue = 0.0;
    REQUIRE(fm_sketch_decode_residue(sk, &key, &residue) == FM_OK);
    CHECK(residue > 0.0);
    double again = 0.0;
    REQUIRE(fm_sketch_decode_residue(sk, &key, &again) == FM_OK);
    CHECK(again == residue);
    double drained = 0.0;
    REQUIRE(fm_sketch_force_flush_all(sk, &drained) == FM_OK);
    CHECK(drained >= residue); // other keys' residue may join it
    REQUIRE(fm_sketch_decode_residue(sk, &key, &residue) == FM_OK);
    CHECK(residue == 0.0);

    CHECK(fm_sketch_increment(sk, &key, 0, nullptr, nullptr) == FM_ERR_INVALID_ARG);
    CHECK(fm_sketch_increment(nullptr, &key, 1, nullptr, nullptr) == FM_ERR_INVALID_ARG);
    fm_sketch_destroy(sk);

    params.b1 = 63; // not a power of two
    CHECK(fm_sketch_create(&params, &sk) == FM_ERR_INVALID_ARG);
    CHECK(std::string(fm_last_error()).find("b1") != std::string::npos);
}

TEST_CASE("a 47-packet flow can never flush") {
    fm_sketch_params params;
    REQUIRE(fm_sketch_params_default(&params) == FM_OK);
    for (uint64_t seed = 0; seed < 20; ++seed) {
        params.seed = seed;
        fm_sketch* sk = nullptr;
        REQUIRE(fm_sketch_create(&params, &sk) == FM_OK);
        const fm_flow_key key = key_n(5);
        REQUIRE(fm_sketch_increment(sk, &key, 47, count_flush, nullptr) == FM_OK);
        fm_sketch_info info;
        REQUIRE(fm_sketch_info_get(sk, &info) == FM_OK);
        CHECK(info.flush_count == 0);
        fm_sketch_destroy(sk);
    }
}

TEST_CASE("flow table insert, update, capacity, drain") {
    fm_table* t = nullptr;
    CHECK(fm_table_create(3, 8, &t) == FM_ERR_INVALID_ARG); // not a power of two
    CHECK(fm_table_create(16, 8, &t) == FM_ERR_INVALID_ARG); // initial > max
    REQUIRE(fm_table_create(8, 8, &t) == FM_OK);

    const fm_flow_key k0 = key_n(0);
    int inserted = -1;
    REQUIRE(fm_table_accumulate(t, &k0, 10.0, 2000.0, 111, &inserted) == FM_OK);
    CHECK(inserted == 1);
    REQUIRE(fm_table_accumulate(t, &k0, 5.0, 1000.0, 222, &inserted) == FM_OK);
    CHECK(inserted == 0);

    fm_flow_entry entry;
    REQUIRE(fm_table_lookup(t, &k0, &entry) == FM_OK);
    CHECK(entry.packets_est == doctest::Approx(15.0));
    CHECK(entry.bytes_est == doctest::Approx(3000.0));
    CHECK(entry.first_seen_us == 111);
    CHECK(entry.last_update_us == 222);
    const fm_flow_key absent = key_n(99);
    CHECK(fm_table_lookup(t, &absent, &entry) == FM_END);

    CHECK(fm_table_accumulate(t, &k0, -1.0, 0.0, 1, nullptr) == FM_ERR_INVALID_ARG);
    CHECK(fm_table_accumulate(t, &k0, 0.0, 0.0, 1, nullptr) == FM_ERR_INVALID_ARG);

    // Fill to the ceiling (load factor 0.75 of max capacity 8 = 6 entries):
    // new keys bounce, existing keys still update.
    for (uint32_t i = 1; i < 6; ++i) {
        const fm_flow_key k = key_n(i);
        REQUIRE(fm_table_accumulate(t, &k, 1.0, 100.0, 1, nullptr) == FM_OK);
    }
    const fm_flow_key overflow = key_n(6);
    CHECK(fm_table_accumulate(t, &overflow, 1.0, 100.0, 1, nullptr) == FM_ERR_FULL);
    REQUIRE(fm_table_accumulate(t, &k0, 1.0, 1.0, 333, nullptr) == FM_OK);

    fm_table_stats stats;
    REQUIRE(fm_table_stats_get(t, &stats) == FM_OK);
    CHECK(stats.entries == 6);
    CHECK(stats.inserts == 6);
    CHECK(stats.updates == 2);
    CHECK(stats.bytes_resident > 0);

    std::vector<fm_flow_entry> drained;
    REQUIRE(fm_table_drain(t, count_entry, &drained) == FM_OK);
    CHECK(drained.size() == 6);
    REQUIRE(fm_table_stats_get(t, &stats) == FM_OK);
    CHECK(stats.entries == 0);
    CHECK(fm_table_lookup(t, &k0, &entry) == FM_END);

    fm_table_destroy(t);
}

TEST_CASE("pipeline process, query, epoch close") {
    fm_pipeline_params params;
    REQUIRE(fm_pipeline_params_default(&params) == FM_OK);
    CHECK(params.byte_unit == 64);
    CHECK(params.shards == 1);
    params.seed = 3;

    fm_pipeline* p = nullptr;
    REQUIRE(fm_pipeline_create(&params, &p) == FM_OK);

    const fm_flow_key k0 = key_n(0);
    fm_packet pkt = packet_of(k0, 1000, 64);
    REQUIRE(fm_pipeline_process(p, &pkt) == FM_OK);

    double pkts = 0.0, bytes = 0.0;
    REQUIRE(fm_pipeline_query(p, &k0, &pkts, &bytes) == FM_OK);
    CHECK(pkts == doctest::Approx(1.0));
    CHECK(bytes == doctest::Approx(64.0));

    fm_regulation_stats stats;
    REQUIRE(fm_pipeline_stats(p, &stats) == FM_OK);
    CHECK(stats.packets_in == 1);
    CHECK(stats.byte_units_in == 1);
    CHECK(stats.table_ops == 0);
    CHECK(stats.epoch == 0);
    CHECK(stats.sketch_bytes == 2 * 65536);

    // Duplicate request keys land identical rows; absent keys read zero.
    fm_flow_key keys[3] = {k0, k0, key_n(1)};
    fm_epoch_row rows[3];
    REQUIRE(fm_pipeline_end_epoch(p, keys, 3, rows) == FM_OK);
    CHECK(rows[0].packets_est == doctest::Approx(1.0));
    CHECK(rows[0].bytes_est == doctest::Approx(64.0));
    CHECK(rows[1].packets_est == rows[0].packets_est);
    CHECK(rows[1].bytes_est == rows[0].bytes_est);
    CHECK(rows[2].packets_est == 0.0);

    REQUIRE(fm_pipeline_stats(p, &stats) == FM_OK);
    CHECK(stats.packets_in == 0);
    CHECK(stats.epoch == 1);

    // table_keys is a two-call protocol: size first, then fill.
    pkt = packet_of(k0, 2000, 100);
    REQUIRE(fm_pipeline_process(p, &pkt) == FM_OK);
    size_t total = 99;
    REQUIRE(fm_pipeline_table_keys(p, nullptr, 0, &total) == FM_OK);
    CHECK(total == 0); // no flush yet, the table is empty

    fm_pipeline_destroy(p);

    params.shards = 65;
    CHECK(fm_pipeline_create(&params, &p) == FM_ERR_INVALID_ARG);
}

TEST_CASE("trace writer and reader round-trip") {
    TempDir tmp;
    const std::string path = tmp.file("trace.csv");

    fm_trace_writer* w = nullptr;
    REQUIRE(fm_trace_writer_open(path.c_str(), FM_TRACE_CSV, &w) == FM_OK);
    fm_packet pkts[3] = {
        packet_of(key_n(0), 100, 64),
        packet_of(key_n(1), 200, 1500),
        packet_of(key_n(0), 300, 40),
    };
    for (const fm_packet& p : pkts)
        REQUIRE(fm_trace_write(w, &p) == FM_OK);
    REQUIRE(fm_trace_writer_close(w) == FM_OK);

    fm_trace_reader* r = nullptr;
    REQUIRE(fm_trace_open(path.c_str(), &r) == FM_OK);
    fm_packet got;
    for (const fm_packet& want : pkts) {
        REQUIRE(fm_trace_next(r, &got) == FM_OK);
        CHECK(got.ts_us == want.ts_us);
        CHECK(got.key.src_ip == want.key.src_ip);
        CHECK(got.key.src_port == want.key.src_port);
        CHECK(got.wire_len == want.wire_len);
    }
    CHECK(fm_trace_next(r, &got) == FM_END);
    fm_skip_stats skips;
    REQUIRE(fm_trace_skips(r, &skips) == FM_OK);
    CHECK(skips.ipv6 == 0);
    CHECK(skips.non_ip == 0);
    fm_trace_close(r);

    CHECK(fm_trace_open(tmp.file("absent.csv").c_str(), &r) == FM_ERR_IO);
    CHECK(std::string(fm_last_error()).find("absent.csv") != std::string::npos);

    // A writer rejects unrepresentable packets but keeps the handle live.
    REQUIRE(fm_trace_writer_open(tmp.file("w2.csv").c_str(), FM_TRACE_CSV, &w) == FM_OK);
    fm_packet bad = packet_of(key_n(0), 1, 64);
    bad.key.proto = 1;
    CHECK(fm_trace_write(w, &bad) == FM_ERR_INVALID_ARG);
    bad = packet_of(key_n(0), 1, 0);
    CHECK(fm_trace_write(w, &bad) == FM_ERR_INVALID_ARG);
    REQUIRE(fm_trace_writer_close(w) == FM_OK);
}

TEST_CASE("generate, run, evaluate through the C API") {
    TempDir tmp;

    fm_generate_params gen;
    REQUIRE(fm_generate_params_default(&gen) == FM_OK);
    const std::string trace_path = tmp.file("trace.csv");
    gen.out_path = trace_path.c_str();
    gen.flows = 40;
    gen.packets = 3000;
    gen.seed = 5;
    gen.plant_spec = "250x2";
    fm_generate_summary gsum;
    REQUIRE(fm_generate(&gen, &gsum) == FM_OK);
    CHECK(gsum.packets == 3000);
    CHECK(gsum.planted_flows == 2);
    CHECK(std::strlen(gsum.trace_digest) == 16);
    CHECK(std::string(gsum.oracle_path) == trace_path + ".oracle.csv");

    fm_run_params run;
    REQUIRE(fm_run_params_default(&run) == FM_OK);
    const std::string out_dir = tmp.file("out");
    run.in_path = trace_path.c_str();
    run.out_dir = out_dir.c_str();
    run.oracle_path = gsum.oracle_path;
    run.pipeline.seed = 1;
    fm_run_summary rsum;
    REQUIRE(fm_run(&run, &rsum) == FM_OK);
    CHECK(rsum.packets == 3000);
    CHECK(rsum.epochs == 1);
    CHECK(std::strlen(rsum.manifest_digest) == 16);

    fm_evaluate_params ev;
    REQUIRE(fm_evaluate_params_default(&ev) == FM_OK);
    const std::string eval_dir = tmp.file("eval");
    ev.report_path = rsum.report_path;
    ev.oracle_path = gsum.oracle_path;
    ev.out_dir = eval_dir.c_str();
    ev.packet_bounds = "1,100";
    ev.byte_bounds = "1000";
    ev.packet_threshold = 200;
    ev.byte_threshold = 100000;
    fm_evaluate_summary esum;
    REQUIRE(fm_evaluate(&ev, &esum) == FM_OK);
    REQUIRE(esum.n_classes == 3);
    CHECK(std::string(esum.classes[0].metric) == "packets");
    CHECK(esum.classes[0].lower_bound == doctest::Approx(1.0));
    CHECK(esum.classes[0].n_flows > 0);
    CHECK(std::string(esum.classes[2].metric) == "bytes");
    CHECK(std::string(esum.heavy_hitters[0].metric) == "packets");
    CHECK(esum.heavy_hitters[0].n_actual >= 2);
    CHECK(std::string(esum.manifest_digest) == rsum.manifest_digest);

    // Argument failures surface as status codes, not crashes.
    gen.plant_spec = "12y3";
    CHECK(fm_generate(&gen, &gsum) == FM_ERR_INVALID_ARG);
    ev.packet_bounds = "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17";
    CHECK(fm_evaluate(&ev, &esum) == FM_ERR_INVALID_ARG);
    run.in_path = nullptr;
    CHECK(fm_run(&run, &rsum) == FM_ERR_INVALID_ARG);
}

}  // TEST_SUITE
