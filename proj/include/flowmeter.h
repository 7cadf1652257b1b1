/*
 * flowmeter — per-flow traffic measurement with a two-layer saturating
 * sketch in front of a working-set flow table.
 *
 * C API: opaque handles, status-code returns, no exceptions across the
 * boundary. All functions are single-writer per handle unless noted.
 */
#ifndef FLOWMETER_H
#define FLOWMETER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FM_API
#elif defined(FM_BUILD_SHARED)
#define FM_API __attribute__((visibility("default")))
#else
#define FM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fm_status {
    FM_OK = 0,
    FM_END = 1,               /* end of stream (not an error) */
    FM_ERR_INVALID_ARG = -1,  /* bad parameter or config */
    FM_ERR_IO = -2,           /* file open/read/write failure */
    FM_ERR_FORMAT = -3,       /* malformed file content */
    FM_ERR_UNSUPPORTED = -4,  /* recognized but unsupported input */
    FM_ERR_FULL = -5,         /* table at capacity, key absent */
    FM_ERR_INTERNAL = -6
} fm_status;

/* Static name for a status code, e.g. "FM_ERR_IO". */
FM_API const char* fm_status_str(fm_status s);

/* Human-readable detail for the most recent failure on this thread. */
FM_API const char* fm_last_error(void);

FM_API const char* fm_version(void);

/* --- flows and packets --- */

typedef struct fm_flow_key {
    uint32_t src_ip;   /* host byte order */
    uint32_t dst_ip;
    uint16_t src_port;
    uint16_t dst_port;
    uint8_t proto;     /* 6 = TCP, 17 = UDP */
} fm_flow_key;

typedef struct fm_packet {
    uint64_t ts_us;
    fm_flow_key key;
    uint32_t wire_len; /* original on-wire length, bytes (>= 1) */
} fm_packet;

/* --- coupon-collector estimator --- */

/* Expected draws over b bins to reach k distinct: sum_{i<k} b/(b-i). */
FM_API fm_status fm_coupon_estimate(uint32_t b, uint32_t k, double* out);

/* --- two-layer sketch (one metric) --- */

typedef struct fm_sketch fm_sketch;

typedef struct fm_sketch_params {
    uint32_t b1;       /* bits per layer-1 block; power of two <= 64 */
    uint32_t b2;       /* bits per layer-2 block; 1..64 */
    uint32_t blocks1;
    uint32_t blocks2;
    double sat_frac;   /* saturation fraction in (0,1] */
    int single_layer;  /* nonzero: flush on layer-1 saturation (ablation) */
    uint64_t seed;
} fm_sketch_params;

/* Defaults: 64/64 bits, 4096/4096 blocks, sat 0.75, two layers, seed 0. */
FM_API fm_status fm_sketch_params_default(fm_sketch_params* out);

FM_API fm_status fm_sketch_create(const fm_sketch_params* params, fm_sketch** out);
FM_API void fm_sketch_destroy(fm_sketch* sk);

typedef struct fm_flush_event {
    fm_flow_key key;
    double amount; /* estimated unit increments */
} fm_flush_event;

typedef void (*fm_flush_cb)(void* user, const fm_flush_event* ev);

/* Applies t >= 1 unit increments; cb (may be NULL) receives each flush. */
FM_API fm_status fm_sketch_increment(fm_sketch* sk, const fm_flow_key* key, uint64_t t,
                                     fm_flush_cb cb, void* user);

/* Non-destructive decode of the units still held for key. */
FM_API fm_status fm_sketch_decode_residue(const fm_sketch* sk, const fm_flow_key* key,
                                          double* out);

/* Zeroes all blocks; *drained (may be NULL) gets the residue total. */
FM_API fm_status fm_sketch_force_flush_all(fm_sketch* sk, double* drained);

typedef struct fm_sketch_info {
    uint32_t k1_star;      /* saturation popcount, layer 1 */
    uint32_t k2_star;
    double c1;             /* units per layer-2 bit */
    double c2;
    uint64_t flush_count;  /* lifetime flush events */
    size_t memory_bytes;   /* block storage for this metric */
} fm_sketch_info;

FM_API fm_status fm_sketch_info_get(const fm_sketch* sk, fm_sketch_info* out);

/* --- flow table --- */

typedef struct fm_table fm_table;

typedef struct fm_flow_entry {
    fm_flow_key key;
    double packets_est;
    double bytes_est;
    uint64_t first_seen_us;
    uint64_t last_update_us;
} fm_flow_entry;

typedef struct fm_table_stats {
    uint64_t inserts;
    uint64_t updates;
    size_t entries;
    size_t bytes_resident;
} fm_table_stats;

/* Capacities must be powers of two; initial <= max. */
FM_API fm_status fm_table_create(size_t initial_capacity, size_t max_capacity,
                                 fm_table** out);
FM_API void fm_table_destroy(fm_table* t);

/* Deltas >= 0, at least one > 0. *inserted (may be NULL) is set to 1 on a
 * new entry, 0 on an update. FM_ERR_FULL: at capacity and key absent. */
FM_API fm_status fm_table_accumulate(fm_table* t, const fm_flow_key* key,
                                     double packets_delta, double bytes_delta,
                                     uint64_t now_us, int* inserted);

/* FM_OK and fills *out when present; FM_END when absent. */
FM_API fm_status fm_table_lookup(const fm_table* t, const fm_flow_key* key,
                                 fm_flow_entry* out);

typedef void (*fm_entry_cb)(void* user, const fm_flow_entry* entry);

/* Emits every live entry to cb, then empties the table and resets stats. */
FM_API fm_status fm_table_drain(fm_table* t, fm_entry_cb cb, void* user);

FM_API fm_status fm_table_stats_get(const fm_table* t, fm_table_stats* out);

/* --- measurement pipeline --- */

typedef struct fm_pipeline fm_pipeline;

typedef struct fm_pipeline_params {
    fm_sketch_params sketch; /* geometry for both metrics; per-metric
                                streams are derived from `seed` below */
    uint32_t byte_unit;      /* U bytes per byte-sketch unit (default 64) */
    double epoch_len_s;      /* report window; 0 = single epoch */
    uint32_t shards;         /* 1..64; 1 = inline, no threads */
    size_t table_initial_capacity;
    size_t table_max_capacity;
    uint64_t seed;
} fm_pipeline_params;

FM_API fm_status fm_pipeline_params_default(fm_pipeline_params* out);

FM_API fm_status fm_pipeline_create(const fm_pipeline_params* params, fm_pipeline** out);
FM_API void fm_pipeline_destroy(fm_pipeline* p);

FM_API fm_status fm_pipeline_process(fm_pipeline* p, const fm_packet* pkt);

/* Online estimate: table value + sketch residue, per metric. */
FM_API fm_status fm_pipeline_query(fm_pipeline* p, const fm_flow_key* key,
                                   double* packets_est, double* bytes_est);

typedef struct fm_epoch_row {
    fm_flow_key key;
    double packets_est;
    double bytes_est;
} fm_epoch_row;

/* Closes the epoch. rows[i] receives the final estimate for keys[i]
 * (duplicates get identical rows); sketches, tables, and stats reset. */
FM_API fm_status fm_pipeline_end_epoch(fm_pipeline* p, const fm_flow_key* keys,
                                       size_t n_keys, fm_epoch_row* rows);

typedef struct fm_regulation_stats {
    uint64_t packets_in;
    uint64_t byte_units_in;
    uint64_t table_ops;       /* flush-triggered accumulates this epoch */
    uint64_t dropped_flushes;
    double regulation_rate;   /* table_ops / packets_in */
    uint32_t epoch;
    uint64_t flush_count;     /* lifetime, both metrics */
    size_t sketch_bytes;      /* all shards, both metrics */
    size_t table_bytes;
} fm_regulation_stats;

FM_API fm_status fm_pipeline_stats(fm_pipeline* p, fm_regulation_stats* out);

/* Number of resident table keys; copies up to cap of them into out. */
FM_API fm_status fm_pipeline_table_keys(fm_pipeline* p, fm_flow_key* out, size_t cap,
                                        size_t* total);

/* --- traces --- */

typedef struct fm_trace_reader fm_trace_reader;
typedef struct fm_trace_writer fm_trace_writer;

typedef struct fm_skip_stats {
    uint64_t ipv6;
    uint64_t non_ip;
    uint64_t fragments;
    uint64_t non_tcp_udp;
    uint64_t short_frame;
    uint64_t truncated_tail;
    uint64_t ts_regressions;
} fm_skip_stats;

/* Format by content: pcap magic selects the pcap reader, else CSV. */
FM_API fm_status fm_trace_open(const char* path, fm_trace_reader** out);
/* FM_OK per record, FM_END at end of stream. */
FM_API fm_status fm_trace_next(fm_trace_reader* r, fm_packet* out);
FM_API fm_status fm_trace_skips(const fm_trace_reader* r, fm_skip_stats* out);
FM_API void fm_trace_close(fm_trace_reader* r);

typedef enum fm_trace_format { FM_TRACE_CSV = 0, FM_TRACE_PCAP = 1 } fm_trace_format;

FM_API fm_status fm_trace_writer_open(const char* path, fm_trace_format format,
                                      fm_trace_writer** out);
FM_API fm_status fm_trace_write(fm_trace_writer* w, const fm_packet* pkt);
/* Flushes, closes, and frees the writer (even on error). */
FM_API fm_status fm_trace_writer_close(fm_trace_writer* w);

/* --- whole experiments (what the CLI runs) --- */

typedef struct fm_generate_params {
    const char* out_path;      /* required */
    const char* oracle_path;   /* NULL: <out>.oracle.csv */
    const char* manifest_path; /* NULL: <out>.manifest.txt */
    fm_trace_format format;
    uint64_t flows;
    uint64_t packets;
    double zipf_alpha;
    uint32_t mean_pkt_len;
    uint64_t seed;
    const char* plant_spec;    /* "PKTSxFLOWS[,PKTSxFLOWS...]" or NULL */
    uint64_t start_ts_us;
    uint32_t spacing_us;
} fm_generate_params;

FM_API fm_status fm_generate_params_default(fm_generate_params* out);

typedef struct fm_generate_summary {
    uint64_t packets;
    uint64_t bytes;
    uint64_t background_flows_hit;
    uint64_t planted_flows;
    char trace_digest[17];  /* hex FNV-1a of the trace file */
    char oracle_path[1024];
    char manifest_path[1024];
} fm_generate_summary;

FM_API fm_status fm_generate(const fm_generate_params* params, fm_generate_summary* out);

typedef struct fm_run_params {
    const char* in_path;     /* required; CSV or classic pcap */
    const char* out_dir;     /* required; gets report.csv, regulation.csv,
                                manifest.txt */
    const char* oracle_path; /* NULL: report resident-table keys only */
    fm_pipeline_params pipeline;
} fm_run_params;

FM_API fm_status fm_run_params_default(fm_run_params* out);

typedef struct fm_run_summary {
    uint64_t packets;
    uint64_t table_ops;
    uint64_t dropped_flushes;
    uint32_t epochs;
    double regulation_rate;
    fm_skip_stats skips;
    size_t sketch_bytes;
    size_t table_bytes;
    double wall_s;
    char manifest_digest[17];
    char report_path[1024];
    char regulation_path[1024];
    char manifest_path[1024];
} fm_run_summary;

FM_API fm_status fm_run(const fm_run_params* params, fm_run_summary* out);

#define FM_EVAL_MAX_CLASSES 16

typedef struct fm_evaluate_params {
    const char* report_path;  /* required */
    const char* oracle_path;  /* required */
    const char* out_dir;      /* required; gets accuracy.csv, hh.csv */
    const char* packet_bounds; /* "1000,10000,100000" or NULL for default */
    const char* byte_bounds;   /* "1000000,10000000" or NULL for default */
    double packet_threshold;   /* heavy-hitter thresholds */
    double byte_threshold;
} fm_evaluate_params;

FM_API fm_status fm_evaluate_params_default(fm_evaluate_params* out);

typedef struct fm_class_stat {
    char metric[8]; /* "packets" or "bytes" */
    double lower_bound;
    uint64_t n_flows;
    double rel_rmse_pct; /* NaN when n_flows == 0 */
} fm_class_stat;

typedef struct fm_hh_stat {
    char metric[8];
    double threshold;
    uint64_t n_actual;
    uint64_t n_detected;
    uint64_t false_positives;
    uint64_t false_negatives;
    double fpr;
    double fnr;
} fm_hh_stat;

typedef struct fm_evaluate_summary {
    fm_class_stat classes[FM_EVAL_MAX_CLASSES];
    size_t n_classes;
    fm_hh_stat heavy_hitters[2]; /* packets, bytes */
    char manifest_digest[17];
    char accuracy_path[1024];
    char hh_path[1024];
} fm_evaluate_summary;

FM_API fm_status fm_evaluate(const fm_evaluate_params* params, fm_evaluate_summary* out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* FLOWMETER_H */
