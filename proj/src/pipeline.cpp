#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <stdexcept>
#include <thread>

namespace flowmeter {

namespace {

struct QueueItem {
    FlowKey key;
    uint32_t byte_units;
    uint64_t ts_us;
};

// Bounded single-producer/single-consumer ring.
class SpscQueue {
  public:
    explicit SpscQueue(size_t capacity) : buf_(capacity), mask_(capacity - 1) {}

    bool try_push(const QueueItem& item) {
        uint64_t t = tail_.load(std::memory_order_relaxed);
        if (t - head_.load(std::memory_order_acquire) == buf_.size())
            return false;
        buf_[t & mask_] = item;
        tail_.store(t + 1, std::memory_order_release);
        return true;
    }

    bool try_pop(QueueItem& out) {
        uint64_t h = head_.load(std::memory_order_relaxed);
        if (h == tail_.load(std::memory_order_acquire))
            return false;
        out = buf_[h & mask_];
        head_.store(h + 1, std::memory_order_release);
        return true;
    }

  private:
    std::vector<QueueItem> buf_;
    size_t mask_;
    alignas(64) std::atomic<uint64_t> head_{0};
    alignas(64) std::atomic<uint64_t> tail_{0};
};

constexpr size_t kQueueDepth = 8192;

}  // namespace

struct Pipeline::Shard {
    Shard(const SketchParams& pkt, const SketchParams& byt, size_t table_initial,
          size_t table_max)
        : packet_sketch(pkt), byte_sketch(byt), table(table_initial, table_max) {}

    TwoLayerSketch packet_sketch;
    TwoLayerSketch byte_sketch;
    FlowTable table;
    uint64_t packets = 0;
    uint64_t byte_units = 0;
    uint64_t table_ops = 0;
    uint64_t dropped_flushes = 0;
    std::vector<FlushEvent> scratch;
};

struct Pipeline::Worker {
    explicit Worker(Pipeline& owner, size_t idx) : queue(kQueueDepth) {
        thread = std::thread([this, &owner, idx] { run(owner, idx); });
    }

    void run(Pipeline& owner, size_t idx) {
        QueueItem item;
        int idle = 0;
        for (;;) {
            if (queue.try_pop(item)) {
                idle = 0;
                if (!failed.load(std::memory_order_relaxed)) {
                    try {
                        owner.process_item(*owner.shards_[idx], item.key,
                                           item.byte_units, item.ts_us);
                    } catch (const std::exception& e) {
                        error = e.what();
                        failed.store(true, std::memory_order_release);
                    }
                }
                // Count the item even on failure so barriers still drain.
                processed.fetch_add(1, std::memory_order_release);
            } else if (stop.load(std::memory_order_acquire)) {
                return; // producer stopped first, so the queue is empty
            } else if (++idle < 256) {
                std::this_thread::yield();
            } else {
                std::this_thread::sleep_for(std::chrono::microseconds(50));
            }
        }
    }

    SpscQueue queue;
    std::thread thread;
    std::atomic<uint64_t> processed{0};
    std::atomic<bool> stop{false};
    std::atomic<bool> failed{false};
    std::string error;
    uint64_t pushed = 0; // producer-side only
};

Pipeline::Pipeline(const PipelineConfig& cfg)
    : cfg_(cfg),
      route_key_(derive_seed(cfg.seed, 0x726f757465)),
      round_rng_(derive_seed(cfg.seed, 0x726e64)) {
    if (cfg.byte_unit < 1)
        throw std::invalid_argument("PipelineConfig: byte_unit must be >= 1");
    if (cfg.shards < 1 || cfg.shards > 64)
        throw std::invalid_argument("PipelineConfig: shards must be in [1,64]");
    if (cfg.epoch_len_s < 0.0)
        throw std::invalid_argument("PipelineConfig: epoch_len_s must be >= 0");

    for (uint32_t s = 0; s < cfg.shards; ++s) {
        // Packet and byte sketches (and every shard) get independent hash
        // keys and bit streams, all reproducible from the master seed.
        SketchParams pkt = cfg.packet_sketch;
        pkt.seed = derive_seed(cfg.seed ^ mix64(cfg.packet_sketch.seed),
                               (uint64_t{1} << 32) | s);
        SketchParams byt = cfg.byte_sketch;
        byt.seed = derive_seed(cfg.seed ^ mix64(cfg.byte_sketch.seed),
                               (uint64_t{2} << 32) | s);
        shards_.push_back(std::make_unique<Shard>(pkt, byt, cfg.table_initial_capacity,
                                                  cfg.table_max_capacity));
    }
    if (cfg.shards > 1)
        for (uint32_t s = 0; s < cfg.shards; ++s)
            workers_.push_back(std::make_unique<Worker>(*this, s));
}

Pipeline::~Pipeline() {
    for (auto& w : workers_) {
        // Drain without the failure check: destructors must not throw.
        while (w->processed.load(std::memory_order_acquire) != w->pushed)
            std::this_thread::yield();
        w->stop.store(true, std::memory_order_release);
    }
    for (auto& w : workers_)
        if (w->thread.joinable())
            w->thread.join();
}

size_t Pipeline::shard_of(const FlowKey& key) const {
    // Top bits of the route hash, as a fixed-point scale to [0, shards).
    unsigned __int128 wide =
        static_cast<unsigned __int128>(flow_hash(key, route_key_)) * cfg_.shards;
    return static_cast<size_t>(wide >> 64);
}

void Pipeline::barrier() {
    for (size_t s = 0; s < workers_.size(); ++s) {
        while (workers_[s]->processed.load(std::memory_order_acquire) !=
               workers_[s]->pushed)
            std::this_thread::yield();
        if (workers_[s]->failed.load(std::memory_order_acquire))
            throw std::runtime_error("pipeline shard " + std::to_string(s) +
                                     " failed: " + workers_[s]->error);
    }
}

void Pipeline::process_item(Shard& sh, const FlowKey& key, uint32_t byte_units,
                            uint64_t ts_us) {
    ++sh.packets;
    sh.scratch.clear();
    sh.packet_sketch.increment(key, 1, sh.scratch);
    for (const FlushEvent& ev : sh.scratch) {
        if (sh.table.accumulate(ev.key, ev.amount, 0.0, ts_us) ==
            AccumulateResult::kTableFull)
            ++sh.dropped_flushes;
        else
            ++sh.table_ops;
    }
    if (byte_units > 0) {
        sh.byte_units += byte_units;
        sh.scratch.clear();
        sh.byte_sketch.increment(key, byte_units, sh.scratch);
        double unit = cfg_.byte_unit;
        for (const FlushEvent& ev : sh.scratch) {
            if (sh.table.accumulate(ev.key, 0.0, ev.amount * unit, ts_us) ==
                AccumulateResult::kTableFull)
                ++sh.dropped_flushes;
            else
                ++sh.table_ops;
        }
    }
}

void Pipeline::process(const TraceRecord& rec) {
    if (rec.wire_len < 1)
        throw std::invalid_argument("Pipeline::process: wire_len must be >= 1");
    if (packets_in_ == 0)
        first_ts_us_ = rec.ts_us;
    last_ts_us_ = rec.ts_us;
    ++packets_in_;

    // Unbiased probabilistic rounding: E[units] = wire_len / U exactly.
    uint32_t units = rec.wire_len / cfg_.byte_unit;
    uint32_t rem = rec.wire_len % cfg_.byte_unit;
    if (rem > 0 && round_rng_.next_below(cfg_.byte_unit) < rem)
        ++units;

    size_t s = shard_of(rec.key);
    if (workers_.empty()) {
        process_item(*shards_[s], rec.key, units, rec.ts_us);
        return;
    }
    Worker& w = *workers_[s];
    QueueItem item{rec.key, units, rec.ts_us};
    while (!w.queue.try_push(item))
        std::this_thread::yield();
    ++w.pushed;
}

std::pair<double, double> Pipeline::query_flow(const FlowKey& key) {
    barrier();
    Shard& sh = *shards_[shard_of(key)];
    const FlowEntry* e = sh.table.lookup(key);
    double packets = (e ? e->packets_est : 0.0) + sh.packet_sketch.decode_residue(key);
    double bytes = (e ? e->bytes_est : 0.0) +
                   sh.byte_sketch.decode_residue(key) * cfg_.byte_unit;
    return {packets, bytes};
}

std::vector<EpochRow> Pipeline::end_epoch(const std::vector<FlowKey>& active_keys) {
    barrier();

    std::vector<FlowKey> keys = active_keys;
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());

    std::vector<EpochRow> rows(keys.size());
    for (size_t i = 0; i < keys.size(); ++i)
        rows[i].key = keys[i];

    // Claim-once attribution, per shard and per (metric, layer): group the
    // requested keys by the block they map to, decode each claimed block
    // once, and split it across its claimants proportionally to
    // (1 + accumulated table value). Unclaimed blocks are simply drained.
    struct Claim {
        size_t block;
        uint32_t row;
    };
    std::vector<std::vector<uint32_t>> shard_rows(shards_.size());
    for (size_t i = 0; i < keys.size(); ++i)
        shard_rows[shard_of(keys[i])].push_back(static_cast<uint32_t>(i));

    // Weights indexed by global row; shards partition the rows, so each
    // slot is written by exactly one shard before it is read.
    std::vector<double> pkt_weight(rows.size(), 1.0);
    std::vector<double> byte_weight(rows.size(), 1.0);

    for (size_t s = 0; s < shards_.size(); ++s) {
        Shard& sh = *shards_[s];
        const std::vector<uint32_t>& rows_here = shard_rows[s];
        if (!rows_here.empty()) {
            for (uint32_t r : rows_here) {
                EpochRow& row = rows[r];
                const FlowEntry* e = sh.table.lookup(row.key);
                row.packets_est = e ? e->packets_est : 0.0;
                row.bytes_est = e ? e->bytes_est : 0.0;
                pkt_weight[r] = 1.0 + row.packets_est;
                byte_weight[r] = 1.0 + row.bytes_est;
            }

            auto attribute = [&](const TwoLayerSketch& sk, bool layer2,
                                 const std::vector<double>& weight, double scale,
                                 bool to_bytes) {
                std::vector<Claim> claims(rows_here.size());
                for (size_t i = 0; i < rows_here.size(); ++i) {
                    const FlowKey& k = rows[rows_here[i]].key;
                    claims[i].block = layer2 ? sk.layer2_index(k) : sk.layer1_index(k);
                    claims[i].row = rows_here[i];
                }
                std::sort(claims.begin(), claims.end(),
                          [](const Claim& a, const Claim& b) {
                              return a.block != b.block ? a.block < b.block
                                                        : a.row < b.row;
                          });
                size_t lo = 0;
                while (lo < claims.size()) {
                    size_t hi = lo + 1;
                    while (hi < claims.size() && claims[hi].block == claims[lo].block)
                        ++hi;
                    double residue = layer2 ? sk.layer2_residue(claims[lo].block)
                                            : sk.layer1_residue(claims[lo].block);
                    if (residue > 0.0) {
                        double wsum = 0.0;
                        for (size_t i = lo; i < hi; ++i)
                            wsum += weight[claims[i].row];
                        for (size_t i = lo; i < hi; ++i) {
                            double share =
                                residue * weight[claims[i].row] / wsum * scale;
                            if (to_bytes)
                                rows[claims[i].row].bytes_est += share;
                            else
                                rows[claims[i].row].packets_est += share;
                        }
                    }
                    lo = hi;
                }
            };

            attribute(sh.packet_sketch, true, pkt_weight, 1.0, false);
            attribute(sh.packet_sketch, false, pkt_weight, 1.0, false);
            attribute(sh.byte_sketch, true, byte_weight, cfg_.byte_unit, true);
            attribute(sh.byte_sketch, false, byte_weight, cfg_.byte_unit, true);
        }

        sh.packet_sketch.force_flush_all();
        sh.byte_sketch.force_flush_all();
        sh.table.drain();
        sh.packets = 0;
        sh.byte_units = 0;
        sh.table_ops = 0;
        sh.dropped_flushes = 0;
    }

    packets_in_ = 0;
    first_ts_us_ = 0;
    last_ts_us_ = 0;
    ++epoch_;
    return rows;
}

RegulationStats Pipeline::stats() {
    barrier();
    RegulationStats st;
    st.packets_in = packets_in_;
    st.first_ts_us = first_ts_us_;
    st.last_ts_us = last_ts_us_;
    for (const auto& sh : shards_) {
        st.byte_units_in += sh->byte_units;
        st.table_ops += sh->table_ops;
        st.dropped_flushes += sh->dropped_flushes;
    }
    return st;
}

std::vector<FlowKey> Pipeline::table_keys() {
    barrier();
    std::vector<FlowKey> out;
    for (const auto& sh : shards_) {
        std::vector<FlowKey> k = sh->table.keys();
        out.insert(out.end(), k.begin(), k.end());
    }
    return out;
}

size_t Pipeline::sketch_memory_bytes() const {
    size_t total = 0;
    for (const auto& sh : shards_)
        total += sh->packet_sketch.memory_bytes() + sh->byte_sketch.memory_bytes();
    return total;
}

size_t Pipeline::table_bytes_resident() const {
    size_t total = 0;
    for (const auto& sh : shards_)
        total += sh->table.stats().bytes_resident;
    return total;
}

uint64_t Pipeline::flush_count() const {
    uint64_t total = 0;
    for (const auto& sh : shards_)
        total += sh->packet_sketch.flush_count() + sh->byte_sketch.flush_count();
    return total;
}

}  // namespace flowmeter
