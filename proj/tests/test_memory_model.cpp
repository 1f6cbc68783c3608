#include <gtest/gtest.h>

#include "pimhtap/error.hpp"
#include "pimhtap/memory_model.hpp"

using namespace pimhtap;

namespace {
std::vector<RankId> all_ranks(const Geometry& g) {
    std::vector<RankId> r;
    for (uint32_t c = 0; c < g.channels; ++c)
        for (uint32_t k = 0; k < g.ranks_per_channel; ++k) r.push_back({c, k});
    return r;
}
}  // namespace

TEST(Handover, PerRankLatency) {
    MemorySystem m{Geometry{}};
    const RankId one{0, 0};
    EXPECT_NEAR(m.handover({&one, 1}, Controller::Pim, 0), 0.2e-6, 1e-15);
    EXPECT_EQ(m.controller(one), Controller::Pim);
    EXPECT_NEAR(m.handover({&one, 1}, Controller::Cpu, 1e-6), 0.2e-6, 1e-15);
    EXPECT_EQ(m.handover({}, Controller::Pim, 0), 0.0);
    const auto ranks = all_ranks(m.geometry());
    ASSERT_EQ(ranks.size(), 16u);
    EXPECT_NEAR(m.handover(ranks, Controller::Pim, 2e-6), 3.2e-6, 1e-15);
    // Ranks already held do not pay again.
    EXPECT_EQ(m.handover(ranks, Controller::Pim, 2e-6), 0.0);
}

TEST(PimAccess, BurstGranularity) {
    MemorySystem m{Geometry{}};
    const RankId r{1, 2};
    m.handover({&r, 1}, Controller::Pim, 0);
    EXPECT_NEAR(m.pim_access(r, 32768, AccessKind::Read), 32.768e-6, 1e-12);
    const uint64_t before = m.stats(Actor::Pim).bytes;
    m.pim_access(r, 1, AccessKind::Read);
    EXPECT_EQ(m.stats(Actor::Pim).bytes - before, 8u);
    EXPECT_EQ(m.pim_access(r, 0, AccessKind::Read), 0.0);
}

TEST(PimAccess, RequiresPimControl) {
    MemorySystem m{Geometry{}};
    EXPECT_THROW(m.pim_access({0, 0}, 64, AccessKind::Read), ProtocolError);
}

TEST(CpuAccess, WholeLinesBilled) {
    MemorySystem m{Geometry{}};
    const auto res = m.cpu_access(RankId{0, 0}, 16, AccessKind::Read, 0);
    EXPECT_EQ(res.billed_bytes, 64u);
    EXPECT_EQ(m.stats(Actor::Cpu).useful_bytes, 16u);
    EXPECT_NEAR(res.end - res.start, 64.0 / m.geometry().cpu_channel_bandwidth, 1e-18);
    const auto zero = m.cpu_access(RankId{0, 0}, 0, AccessKind::Read, 1.0);
    EXPECT_EQ(zero.billed_bytes, 0u);
    EXPECT_EQ(zero.end, 1.0);
}

TEST(CpuAccess, StallsUntilLoadPhaseEnds) {
    MemorySystem m{Geometry{}};
    const RankId r{0, 1};
    const double took = m.handover({&r, 1}, Controller::Pim, 0);
    const double load = m.pim_access(r, 32768, AccessKind::Read);
    const double release_at = took + load;
    m.handover({&r, 1}, Controller::Cpu, release_at);
    const double at = 10e-6;
    const auto res = m.cpu_access(r, 64, AccessKind::Read, at);
    EXPECT_GE(res.start, release_at);
    EXPECT_NEAR(res.stall, res.start - at, 1e-15);
    EXPECT_GT(res.stall, 0.0);
    // Other ranks are unaffected.
    EXPECT_EQ(m.cpu_access(RankId{0, 0}, 64, AccessKind::Read, at).stall, 0.0);
}

TEST(CpuAccess, OpenHoldIsAProtocolError) {
    MemorySystem m{Geometry{}};
    const RankId r{0, 0};
    m.handover({&r, 1}, Controller::Pim, 0);
    EXPECT_THROW(m.cpu_access(r, 64, AccessKind::Read, 1.0), ProtocolError);
}

TEST(Geometry, JsonRoundTripAndValidation) {
    Geometry g;
    g.channels = 2;
    g.wram_data_budget = 16384;
    EXPECT_EQ(parse_geometry(dump_geometry(g)), g);
    g.interleave_granularity = 4;
    EXPECT_THROW(g.validate(), ValidationError);
    g = Geometry{};
    g.wram_data_budget = g.wram_capacity;
    EXPECT_THROW(g.validate(), ValidationError);
}
