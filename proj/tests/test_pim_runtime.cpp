#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "pimhtap/error.hpp"
#include "pimhtap/experiments.hpp"
#include "pimhtap/pim_runtime.hpp"

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

struct Table {
    Geometry g;
    MemorySystem mem;
    MvccStore store;
    uint32_t t = 0;
    std::vector<uint64_t> values;

    Table(uint64_t rows, Geometry geo = small()) : g(geo), mem(g), store(g, &mem) {
        TableSchema s;
        s.name = "t";
        s.row_count = rows;
        s.columns = {{"k", 4, true}, {"v", 8, true}, {"note", 12}};
        t = store.add_table(generate_compact_layout(s, g, 0.5), rows);
        std::mt19937_64 rng(rows);
        values.resize(rows);
        for (uint64_t r = 0; r < rows; ++r) {
            std::vector<uint8_t> row(24, 0);
            values[r] = rng() % 100000;
            for (int b = 0; b < 4; ++b) row[b] = uint8_t(values[r] >> (8 * b));
            store.load_row(t, r, row);
        }
    }
};

std::vector<RankId> ranks(const Geometry& g) {
    std::vector<RankId> r;
    for (uint32_t c = 0; c < g.channels; ++c)
        for (uint32_t k = 0; k < g.ranks_per_channel; ++k) r.push_back({c, k});
    return r;
}

}  // namespace

TEST(Dispatch, LoadStoreTakesTheBanks) {
    const Geometry g = small();
    MemorySystem mem(g);
    PimRuntime rt(g, mem);
    const auto rs = ranks(g);
    std::vector<UnitWork> work{{UnitId{0, 0, 0, 0}, 32768, 0, 0}};
    const auto ack = rt.dispatch(encode({LsParams{}}), rs, work, 0);
    EXPECT_NEAR(ack.handover_s, 2 * 0.2e-6 * double(rs.size()), 1e-12);
    EXPECT_GE(ack.finish - ack.start, 32.768e-6);
    EXPECT_EQ(rt.unit(UnitId{0, 0, 0, 0}).status, UnitStatus::Running);
    EXPECT_EQ(mem.stats(Actor::Pim).handovers, rs.size());
    const auto early = rt.poll(ack.start);
    EXPECT_EQ(early.status, PollStatus::Pending);
    EXPECT_GE(early.response_at, ack.finish);
    EXPECT_EQ(rt.poll(ack.finish).status, PollStatus::Done);
}

TEST(Dispatch, ComputeLeavesTheBanksWithTheCpu) {
    const Geometry g = small();
    MemorySystem mem(g);
    PimRuntime rt(g, mem);
    const auto rs = ranks(g);
    std::vector<UnitWork> work{{UnitId{0, 0, 0, 0}, 0, 0, 10e-6}, {UnitId{1, 1, 3, 1}, 0, 0, 25e-6}};
    const auto ack = rt.dispatch(encode({FilterParams{}}), rs, work, 0);
    EXPECT_EQ(ack.handover_s, 0.0);
    EXPECT_EQ(mem.stats(Actor::Pim).handovers, 0u);
    // The CPU reads a rank while the units compute.
    EXPECT_EQ(mem.cpu_access(rs[0], 64, AccessKind::Read, ack.start + 1e-6).stall, 0.0);
    EXPECT_EQ(rt.poll(ack.start + 12e-6).status, PollStatus::Pending);
    EXPECT_EQ(rt.poll(ack.start + 25e-6).status, PollStatus::Done);
    EXPECT_EQ(rt.control_messages(), 3u);
}

TEST(Dispatch, IdleUnitsPollDone) {
    const Geometry g = small();
    MemorySystem mem(g);
    PimRuntime rt(g, mem);
    EXPECT_EQ(rt.poll(0).status, PollStatus::Done);
}

TEST(ColumnOp, FilterMatchesOracle) {
    Table tb(20000);
    PimRuntime rt(tb.g, tb.mem);
    const auto& snap = tb.store.build_snapshot(tb.t, tb.store.clock());
    ColumnOpSpec spec;
    spec.compare = CompareOp::Between;
    spec.lo = 20000;
    spec.hi = 60000;
    const auto res = rt.execute_column_op(spec, tb.store.table(tb.t), 0, snap, 0);
    std::vector<uint64_t> got;
    for (const auto& u : res.units) got.insert(got.end(), u.rows.begin(), u.rows.end());
    std::sort(got.begin(), got.end());
    std::vector<uint64_t> want;
    for (uint64_t r = 0; r < tb.values.size(); ++r)
        if (tb.values[r] >= 20000 && tb.values[r] <= 60000) want.push_back(r);
    EXPECT_EQ(got, want);
    EXPECT_EQ(res.rows_scanned, 20000u);
    EXPECT_EQ(res.control_messages, 2u * (res.load_phases + res.compute_phases));
    EXPECT_GT(res.load_phases, 0u);
}

TEST(ColumnOp, DevicesShareTheWorkEvenly) {
    Table tb(1u << 16);
    PimRuntime rt(tb.g, tb.mem);
    const auto& snap = tb.store.build_snapshot(tb.t, tb.store.clock());
    const auto res = rt.execute_column_op(ColumnOpSpec{}, tb.store.table(tb.t), 0, snap, 0);
    std::map<std::tuple<uint32_t, uint32_t, uint32_t>, uint32_t> per_device;
    for (const auto& u : res.units) per_device[{u.unit.channel, u.unit.rank, u.unit.device}] += u.chunks;
    uint32_t lo = ~0u, hi = 0;
    std::map<std::pair<uint32_t, uint32_t>, std::pair<uint32_t, uint32_t>> rank_span;
    for (const auto& [k, n] : per_device) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    EXPECT_LE(hi - lo, 1u);
}

TEST(ColumnOp, EmptyTableRunsNoPhases) {
    Table tb(0);
    PimRuntime rt(tb.g, tb.mem);
    const auto& snap = tb.store.build_snapshot(tb.t, tb.store.clock());
    const auto res = rt.execute_column_op(ColumnOpSpec{}, tb.store.table(tb.t), 0, snap, 0);
    EXPECT_EQ(res.load_phases + res.compute_phases, 0u);
    EXPECT_EQ(res.rows_scanned, 0u);
}

TEST(ColumnOp, NormalColumnsAreRejected) {
    Table tb(1024);
    PimRuntime rt(tb.g, tb.mem);
    const auto& snap = tb.store.build_snapshot(tb.t, tb.store.clock());
    EXPECT_THROW(rt.execute_column_op(ColumnOpSpec{}, tb.store.table(tb.t), 2, snap, 0), ValidationError);
}

TEST(ColumnOp, StagedBytesStayWithinBudget) {
    Table tb(50000);
    PimRuntime rt(tb.g, tb.mem);
    const auto& snap = tb.store.build_snapshot(tb.t, tb.store.clock());
    const auto res = rt.execute_column_op(ColumnOpSpec{}, tb.store.table(tb.t), 1, snap, 0);
    for (const auto& p : res.phases) EXPECT_LE(p.max_unit_bytes, tb.g.wram_data_budget);
}

TEST(ColumnOp, LargerWramNeedsFewerLoads) {
    ExperimentConfig cfg;
    const auto rows = wram_sweep(cfg, {8192, 32768}, 1u << 20);
    ASSERT_EQ(rows.size(), 2u);
    const double ratio = double(rows[0].load_phases) / double(rows[1].load_phases);
    EXPECT_GE(ratio, 3.0);
    EXPECT_LE(ratio, 4.5);
    EXPECT_LT(rows[1].max_blocked_s, rows[0].max_blocked_s * 4.5);
    EXPECT_LE(rows[1].max_blocked_s, 300e-6);
}

TEST(ColumnOp, ChunkRowsRespectBothBudgets) {
    const Geometry g = small();
    MemorySystem mem(g);
    PimRuntime rt(g, mem);
    const uint64_t n = rt.chunk_rows(8, 1.0 / 8);
    EXPECT_EQ(n % 64, 0u);
    EXPECT_LE(n * 8 + n / 8, g.wram_data_budget);
    EXPECT_LE(rt.chunk_rows(4, 8) * 8, g.wram_result_budget());
}

TEST(Join, PairsMatchNestedLoop) {
    const Geometry g = small();
    MemorySystem mem(g);
    PimRuntime rt(g, mem);
    std::mt19937_64 rng(4);
    std::vector<JoinBucket> buckets(4);
    for (uint32_t i = 0; i < 4; ++i) {
        buckets[i].unit = UnitId{i % 2, 0, i, 0};
        for (uint64_t r = 0; r < 3000; ++r) buckets[i].left.push_back({rng() % 500, r});
        for (uint64_t r = 0; r < 200; ++r) buckets[i].right.push_back({rng() % 500, r});
    }
    std::vector<std::pair<uint64_t, uint64_t>> want;
    for (const auto& b : buckets)
        for (const auto& l : b.left)
            for (const auto& r : b.right)
                if (l.first == r.first) want.emplace_back(l.second, r.second);
    std::sort(want.begin(), want.end());
    auto res = rt.execute_join(buckets, 0);
    std::sort(res.pairs.begin(), res.pairs.end());
    EXPECT_EQ(res.pairs, want);
    EXPECT_GT(res.splits, 0u);
}
