#include <gtest/gtest.h>

#include <random>

#include "pimhtap/defrag.hpp"
#include "pimhtap/error.hpp"

using namespace pimhtap;

namespace {

DefragParams example() {
    DefragParams p;
    p.m = 16;
    p.n = 1000;
    p.p = 0.5;
    p.d = 8;
    p.w = 8;
    p.bdw_cpu = 1e6;
    p.bdw_pim = 3e6;
    return p;
}

}  // namespace

TEST(DefragCost, CpuPath) {
    EXPECT_NEAR(comm_cpu_cost(example()), 0.08, 1e-12);
    auto p = example();
    p.n = 0;
    EXPECT_EQ(comm_cpu_cost(p), 0.0);
    p = example();
    p.bdw_cpu *= 2;
    EXPECT_NEAR(comm_cpu_cost(p), 0.04, 1e-12);
}

TEST(DefragCost, PimPath) {
    EXPECT_NEAR(comm_pim_cost(example()), 0.208, 1e-12);
    auto p = example();
    p.n = 0;
    EXPECT_EQ(comm_pim_cost(p), 0.0);
    p = example();
    p.d = 1;
    p.bdw_pim = 1e300;
    EXPECT_NEAR(comm_pim_cost(p), 2 * p.m * p.n / p.bdw_cpu, 1e-12);
}

TEST(DefragCost, ValidationRejectsNonsense) {
    auto p = example();
    p.p = 0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = example();
    p.bdw_cpu = 0;
    EXPECT_THROW(p.validate(), ValidationError);
    p = example();
    p.n = -1;
    EXPECT_THROW(p.validate(), ValidationError);
}

TEST(Strategy, ThresholdSixteen) {
    auto p = example();
    p.p = 1;
    const auto c = choose_strategy(p);
    EXPECT_NEAR(c.threshold_w, 16.0, 1e-9);
    p.w = 17;
    EXPECT_EQ(choose_strategy(p).strategy, Strategy::Pim);
    p.w = 16;
    EXPECT_EQ(choose_strategy(p).strategy, Strategy::Cpu);
    p.w = 2;
    EXPECT_EQ(choose_strategy(p).strategy, Strategy::Cpu);
    p.w = 20;
    EXPECT_EQ(choose_strategy(p).strategy, Strategy::Pim);
    p.w = 1e-9;
    EXPECT_EQ(choose_strategy(p).strategy, Strategy::Cpu);
}

TEST(Strategy, SlowPimIsDiagnosed) {
    auto p = example();
    p.bdw_pim = p.bdw_cpu / 2;
    const auto c = choose_strategy(p);
    EXPECT_EQ(c.strategy, Strategy::Cpu);
    EXPECT_FALSE(c.diagnostic.empty());
}

TEST(Strategy, AgreesWithArgmin) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 2000; ++i) {
        DefragParams p;
        p.d = double(1 + rng() % 16);
        p.w = 1 + 64 * u(rng);
        p.m = 1 + 32 * u(rng);
        p.n = double(rng() % 100000);
        p.p = 0.01 + 0.99 * u(rng);
        p.bdw_cpu = 1e6 * (0.1 + u(rng));
        p.bdw_pim = 1e6 * (0.1 + 8 * u(rng));
        const double cpu = comm_cpu_cost(p), pim = comm_pim_cost(p);
        const auto want = pim < cpu ? Strategy::Pim : Strategy::Cpu;
        EXPECT_EQ(choose_strategy(p).strategy, want) << i;
    }
}

TEST(Strategy, ModeStrings) {
    for (auto m : {DefragMode::Auto, DefragMode::Cpu, DefragMode::Pim})
        EXPECT_EQ(defrag_mode_from_string(to_string(m)), m);
    EXPECT_THROW(defrag_mode_from_string("gpu"), Error);
}

TEST(Defragment, PreservesScansAndIsIdempotent) {
    Geometry g;
    g.channels = 2;
    g.ranks_per_channel = 2;
    g.devices_per_rank = 4;
    g.banks_per_device = 2;
    TableSchema s;
    s.name = "t";
    s.row_count = 4096;
    s.columns = {{"k", 2, true}, {"v", 8, true}, {"wide", 40}};
    MemorySystem mem(g);
    MvccStore store(g, &mem);
    const uint32_t t = store.add_table(generate_compact_layout(s, g, 0.6), s.row_count);
    std::mt19937_64 rng(2);
    for (int i = 0; i < 800; ++i) {
        const TxnId id = store.begin();
        store.update_column(id, t, rng() % s.row_count, 1, rng());
        store.commit(id);
    }
    const auto& s1 = store.build_snapshot(t, store.clock());
    const auto before = store.visible_scan(t, 1, s1);
    const auto rep = defragment(store, DefragMode::Auto);
    EXPECT_GT(rep.rows_moved, 0u);
    EXPECT_GT(rep.elapsed, 0.0);
    const auto& s2 = store.build_snapshot(t, store.clock());
    const auto after = store.visible_scan(t, 1, s2);
    EXPECT_EQ(before.rows, after.rows);
    EXPECT_EQ(before.bytes, after.bytes);
    EXPECT_EQ(defragment(store, DefragMode::Auto).rows_moved, 0u);

    const TxnId open = store.begin();
    EXPECT_THROW(defragment(store, DefragMode::Auto), ContractViolation);
    store.abort(open);
}
