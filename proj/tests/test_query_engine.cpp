#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pimhtap/csv.hpp"
#include "pimhtap/experiments.hpp"
#include "pimhtap/query_engine.hpp"
#include "pimhtap/reference_executor.hpp"
#include "pimhtap/verify.hpp"

using namespace pimhtap;

namespace {

Geometry small() {
    Geometry g;
    g.channels = 2;
    g.ranks_per_channel = 2;
    g.devices_per_rank = 4;
    g.banks_per_device = 2;
    return g;
}

struct Db {
    Geometry g = small();
    MemorySystem mem{g};
    MvccStore store{g, &mem};
    PimRuntime rt{g, mem};
    QueryEngine engine{store, rt};
    uint32_t t = 0;

    // Columns: k (unique), grp (0..15), val.
    explicit Db(uint64_t rows) {
        TableSchema s;
        s.name = "t";
        s.row_count = rows;
        s.columns = {{"k", 4, true}, {"grp", 1, true}, {"val", 8, true}, {"note", 10}};
        t = store.add_table(generate_compact_layout(s, g, 0.5), rows);
        std::mt19937_64 rng(rows + 1);
        for (uint64_t r = 0; r < rows; ++r) {
            std::vector<uint8_t> row(s.row_bytes(), 0);
            const uint64_t val = rng() % 1000000;
            for (int b = 0; b < 4; ++b) row[b] = uint8_t(r >> (8 * b));
            row[4] = uint8_t(rng() % 16);
            for (int b = 0; b < 8; ++b) row[5 + b] = uint8_t(val >> (8 * b));
            store.load_row(t, r, row);
        }
    }
    const SnapshotBitmap& snap() { return store.build_snapshot(t, store.clock()); }
};

}  // namespace

TEST(QueryEngine, AlwaysTrueFilterIsVisibility) {
    Db db(5000);
    const TxnId x = db.store.begin();
    db.store.remove(x, db.t, 17);
    db.store.commit(x);
    const auto& s = db.snap();
    db.engine.begin("all", s.snapshot_ts);
    const Bitmap hits = db.engine.run_filter(db.t, 2, Predicate{}, s);
    EXPECT_EQ(hits.count(), 4999u);
    EXPECT_FALSE(hits.test(17));
}

TEST(QueryEngine, RangeFilterMatchesReference) {
    Db db(20000);
    const auto& s = db.snap();
    const Predicate p{CompareOp::Between, 250000, 500000};
    db.engine.begin("range", s.snapshot_ts);
    EXPECT_EQ(db.engine.run_filter(db.t, 2, p, s).indices(), reference::filter(db.store, db.t, 2, p, s.snapshot_ts).indices());
}

TEST(QueryEngine, GroupSumsMatchReference) {
    Db db(100000);
    const auto& s = db.snap();
    db.engine.begin("groups", s.snapshot_ts);
    const auto got = db.engine.run_group_aggregate(db.t, 1, 2, s);
    EXPECT_EQ(got.size(), 16u);
    EXPECT_EQ(got, reference::group_sum(db.store, db.t, 1, 2, s.snapshot_ts));
}

TEST(QueryEngine, SingleGroupEqualsColumnSum) {
    Db db(3000);
    const auto& s = db.snap();
    db.engine.begin("sum", s.snapshot_ts);
    const uint64_t total = db.engine.run_sum(db.t, 2, s);
    EXPECT_EQ(total, reference::sum(db.store, db.t, 2, s.snapshot_ts));
}

TEST(QueryEngine, InFlightWritesDoNotLeak) {
    Db db(3000);
    const auto& s = db.snap();
    db.engine.begin("before", s.snapshot_ts);
    const uint64_t before = db.engine.run_sum(db.t, 2, s);
    const TxnId x = db.store.begin();
    for (uint64_t r = 0; r < 100; ++r) db.store.update_column(x, db.t, r, 2, 7);
    const auto& s2 = db.snap();
    db.engine.begin("during", s2.snapshot_ts);
    EXPECT_EQ(db.engine.run_sum(db.t, 2, s2), before);
    db.store.abort(x);
}

TEST(QueryEngine, SelfJoinOnUniqueKeyIsIdentity) {
    Db db(4000);
    const auto& s = db.snap();
    db.engine.begin("self", s.snapshot_ts);
    const auto pairs = db.engine.run_hash_join(db.t, 0, s, db.t, 0, s);
    ASSERT_EQ(pairs.size(), 4000u);
    for (const auto& [a, b] : pairs) EXPECT_EQ(a, b);
}

TEST(QueryEngine, JoinWithDuplicatesMatchesNestedLoop) {
    Db db(3000);
    const auto& s = db.snap();
    db.engine.begin("dups", s.snapshot_ts);
    const auto got = db.engine.run_hash_join(db.t, 1, s, db.t, 1, s, nullptr, nullptr);
    EXPECT_EQ(got, reference::join(db.store, db.t, 1, db.t, 1, s.snapshot_ts));
}

TEST(QueryEngine, WideColumnsFallBackToCpu) {
    Db db(2000);
    const auto& s = db.snap();
    EXPECT_FALSE(db.engine.pim_scannable(db.t, 3));
    db.engine.begin("wide", s.snapshot_ts);
    db.engine.run_filter(db.t, 3, Predicate{}, s);
    EXPECT_EQ(db.engine.cpu_fallbacks(), 1u);
    EXPECT_TRUE(db.engine.plan().stages.front().cpu_fallback);
}

TEST(QueryEngine, RandomRoundsMatchReference) {
    for (uint64_t seed = 1; seed <= 3; ++seed) {
        const auto rep = verify::query_round(seed, 1500);
        EXPECT_EQ(rep.mismatches, 0u) << rep.first_failure;
        EXPECT_GT(rep.queries, 0u);
    }
}

class DeskQueries : public ::testing::Test {
protected:
    void SetUp() override {
        bench = generate_tables(cfg, cfg.th);
        bench.store->build_snapshot(bench.store->clock());
    }
    ExperimentConfig cfg;
    Bench bench;
};

TEST_F(DeskQueries, JoinPlanReadsOneSnapshot) {
    PimRuntime rt(bench.geometry, *bench.memory);
    QueryEngine e(*bench.store, rt);
    const auto r = run_named_query(e, bench, "q9", bench.store->clock());
    EXPECT_TRUE(r.plan.consistent());
    EXPECT_GE(r.plan.stages.size(), 3u);
    for (const auto& st : r.plan.stages) EXPECT_FALSE(st.cpu_fallback) << st.name;
    const auto csv = parse_csv(r.plan.to_csv());
    EXPECT_EQ(csv.version, kCsvVersion);
    EXPECT_EQ(csv.rows.size(), r.plan.stages.size());
}

TEST_F(DeskQueries, SelectionBlocksLessThanItsLoadShare) {
    PimRuntime rt(bench.geometry, *bench.memory);
    QueryEngine e(*bench.store, rt);
    const auto r = run_named_query(e, bench, "q6", bench.store->clock());
    const double span = r.plan.end() - r.plan.start();
    ASSERT_GT(span, 0);
    double held = 0;
    uint32_t ranks = 0;
    for (uint32_t c = 0; c < bench.geometry.channels; ++c)
        for (uint32_t k = 0; k < bench.geometry.ranks_per_channel; ++k, ++ranks)
            for (const auto& h : bench.memory->holds({c, k}))
                held += std::min(h.end, r.plan.end()) - std::max(h.begin, r.plan.start());
    const double blocked_fraction = held / (double(ranks) * span);
    EXPECT_LT(blocked_fraction, r.plan.load_s() / span);
}

TEST_F(DeskQueries, NamedQueriesMatchReference) {
    PimRuntime rt(bench.geometry, *bench.memory);
    QueryEngine e(*bench.store, rt);
    const uint64_t ts = bench.store->clock();
    const uint32_t ol = bench.id("orderline");
    const size_t amount = bench.column("orderline", "ol_amount");
    const size_t number = bench.column("orderline", "ol_number");
    const size_t delivery = bench.column("orderline", "ol_delivery_d");

    const auto q1 = run_named_query(e, bench, "q1", ts);
    std::map<uint64_t, uint64_t> want;
    for (uint64_t r : reference::filter(*bench.store, ol, delivery, {CompareOp::Gt, 500000, 0}, ts).indices()) {
        const auto ref = bench.store->visible_version(ol, r, ts);
        uint64_t g = 0, a = 0;
        bench.store->table(ol).read_column(*ref, number, reinterpret_cast<uint8_t*>(&g));
        bench.store->table(ol).read_column(*ref, amount, reinterpret_cast<uint8_t*>(&a));
        want[g] += a;
    }
    EXPECT_EQ(q1.groups, want);
}
