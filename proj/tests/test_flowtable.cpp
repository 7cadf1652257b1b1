#include <stdexcept>

#include "doctest.h"
#include "flowtable.hpp"

using namespace flowmeter;

namespace {

FlowKey key_n(uint32_t n) {
    return FlowKey{0x0A000000u + n, 0xC0000201u, static_cast<uint16_t>(1024 + n), 443, 6};
}

}  // namespace

TEST_SUITE("flowtable") {

TEST_CASE("one flush-sized accumulate reads back exactly") {
    FlowTable t;
    const FlowKey k = key_n(1);
    CHECK(t.accumulate(k, 87.24 * 87.24, 0.0, 5) == AccumulateResult::kInserted);
    const FlowEntry* e = t.lookup(k);
    REQUIRE(e != nullptr);
    CHECK(e->packets_est == doctest::Approx(7610.8).epsilon(0.1 / 7610.8));
    CHECK(e->bytes_est == 0.0);
    CHECK(e->first_seen_us == 5);
    CHECK(e->last_update_us == 5);
}

TEST_CASE("accumulates add; timestamps track first and last") {
    FlowTable t;
    const FlowKey k = key_n(2);
    t.accumulate(k, 10.0, 1000.0, 50);
    CHECK(t.accumulate(k, 2.5, 16.0, 90) == AccumulateResult::kUpdated);
    const FlowEntry* e = t.lookup(k);
    REQUIRE(e != nullptr);
    CHECK(e->packets_est == doctest::Approx(12.5));
    CHECK(e->bytes_est == doctest::Approx(1016.0));
    CHECK(e->first_seen_us == 50);
    CHECK(e->last_update_us == 90);
}

TEST_CASE("byte-only deltas are valid; empty and negative ones are not") {
    FlowTable t;
    const FlowKey k = key_n(3);
    CHECK(t.accumulate(k, 0.0, 640.0, 0) == AccumulateResult::kInserted);
    CHECK_THROWS_AS(t.accumulate(k, 0.0, 0.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(t.accumulate(k, -1.0, 10.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(t.accumulate(k, 1.0, -0.5, 0), std::invalid_argument);
    const FlowEntry* e = t.lookup(k);
    REQUIRE(e != nullptr);
    CHECK(e->bytes_est == doctest::Approx(640.0)); // failed calls left no trace
}

TEST_CASE("capacities must be powers of two, initial <= max") {
    CHECK_THROWS_AS(FlowTable(3, 8), std::invalid_argument);
    CHECK_THROWS_AS(FlowTable(8, 12), std::invalid_argument);
    CHECK_THROWS_AS(FlowTable(16, 8), std::invalid_argument);
    CHECK_NOTHROW(FlowTable(8, 8));
}

TEST_CASE("growth preserves every entry") {
    FlowTable t(4, 1024);
    for (uint32_t i = 0; i < 200; ++i)
        CHECK(t.accumulate(key_n(i), 1.0 + i, 10.0 * i, i) == AccumulateResult::kInserted);
    CHECK(t.size() == 200);
    CHECK(t.capacity() <= 1024);
    for (uint32_t i = 0; i < 200; ++i) {
        const FlowEntry* e = t.lookup(key_n(i));
        REQUIRE(e != nullptr);
        CHECK(e->packets_est == doctest::Approx(1.0 + i));
        CHECK(e->bytes_est == doctest::Approx(10.0 * i));
    }
}

TEST_CASE("at the capacity ceiling new keys are refused, updates are not") {
    FlowTable t(4, 4); // load ceiling 0.75 * 4 = 3 entries
    CHECK(t.accumulate(key_n(0), 1.0, 0.0, 0) == AccumulateResult::kInserted);
    CHECK(t.accumulate(key_n(1), 1.0, 0.0, 0) == AccumulateResult::kInserted);
    CHECK(t.accumulate(key_n(2), 1.0, 0.0, 0) == AccumulateResult::kInserted);
    CHECK(t.accumulate(key_n(3), 1.0, 0.0, 0) == AccumulateResult::kTableFull);
    CHECK(t.lookup(key_n(3)) == nullptr);
    CHECK(t.accumulate(key_n(1), 5.0, 0.0, 0) == AccumulateResult::kUpdated);
    CHECK(t.size() == 3);
}

TEST_CASE("stats count every successful accumulate exactly once") {
    FlowTable t;
    for (uint32_t i = 0; i < 10; ++i) t.accumulate(key_n(i), 1.0, 0.0, 0);
    for (uint32_t i = 0; i < 5; ++i) t.accumulate(key_n(i), 1.0, 0.0, 0);
    CHECK(t.stats().inserts == 10);
    CHECK(t.stats().updates == 5);
    CHECK(t.stats().entries == 10);
    CHECK(t.stats().bytes_resident > 0);
}

TEST_CASE("drain returns everything and resets") {
    FlowTable t;
    for (uint32_t i = 0; i < 6; ++i) t.accumulate(key_n(i), 2.0, 3.0, i);
    auto entries = t.drain();
    CHECK(entries.size() == 6);
    double pkts = 0;
    for (const FlowEntry& e : entries) pkts += e.packets_est;
    CHECK(pkts == doctest::Approx(12.0));
    CHECK(t.size() == 0);
    CHECK(t.stats().inserts == 0);
    CHECK(t.stats().updates == 0);
    CHECK(t.lookup(key_n(0)) == nullptr);
    CHECK(t.drain().empty());
    // The table remains usable after a drain.
    CHECK(t.accumulate(key_n(0), 1.0, 0.0, 9) == AccumulateResult::kInserted);
}

TEST_CASE("keys() lists exactly the live keys") {
    FlowTable t;
    for (uint32_t i = 0; i < 4; ++i) t.accumulate(key_n(i), 1.0, 0.0, 0);
    auto keys = t.keys();
    CHECK(keys.size() == 4);
    for (const FlowKey& k : keys) CHECK(t.lookup(k) != nullptr);
}

TEST_CASE("lookup of an absent key is null") {
    FlowTable t;
    CHECK(t.lookup(key_n(42)) == nullptr);
}

}  // TEST_SUITE
