#include <gtest/gtest.h>

#include <random>
#include <set>

#include "pimhtap/error.hpp"
#include "pimhtap/experiments.hpp"
#include "pimhtap/layout.hpp"

using namespace pimhtap;

namespace {

Geometry geo(uint32_t d) {
    Geometry g;
    g.devices_per_rank = d;
    return g;
}

TableSchema make(std::vector<ColumnSpec> cols, uint64_t rows = 8192) {
    TableSchema t;
    t.name = "t";
    t.row_count = rows;
    t.columns = std::move(cols);
    return t;
}

TableSchema fig4() {
    return make({{"id", 2, true}, {"d_id", 2, true}, {"w_id", 4, true}, {"zip", 9}, {"state", 2}, {"credit", 2}});
}

// Every schema byte appears once, key columns sit in one device, no device overflows.
void check_structure(const TableLayout& l) {
    const auto& s = l.schema();
    std::vector<std::vector<int>> seen(s.columns.size());
    for (size_t c = 0; c < s.columns.size(); ++c) seen[c].assign(s.columns[c].width, 0);
    for (const auto& p : l.parts()) {
        ASSERT_EQ(p.devices.size(), l.devices());
        for (const auto& dev : p.devices) {
            ASSERT_LE(dev.used(), p.row_width);
            for (const auto& e : dev.entries) {
                ASSERT_LE(e.device_offset + e.length, p.row_width);
                for (uint32_t i = 0; i < e.length; ++i) ++seen[e.column][e.column_begin + i];
            }
        }
    }
    for (size_t c = 0; c < s.columns.size(); ++c) {
        for (int n : seen[c]) ASSERT_EQ(n, 1) << s.columns[c].name;
        if (s.columns[c].is_key) {
            ASSERT_EQ(l.fragments(c).size(), 1u) << s.columns[c].name;
            ASSERT_LE(s.columns[c].width, l.part(l.fragments(c)[0].part).row_width);
        }
    }
}

}  // namespace

TEST(NaiveLayout, CustomerPartIsNineWide) {
    const auto l = generate_naive_layout(make({{"id", 2, true}, {"d_id", 2}, {"w_id", 4}, {"zip", 9}}), geo(4));
    ASSERT_EQ(l.parts().size(), 1u);
    EXPECT_EQ(l.part(0).row_width, 9u);
    EXPECT_EQ(l.part(0).data_bytes(), 17u);
    EXPECT_EQ(l.footprint_per_row(), 36u);
    const auto eb = effective_bandwidth(l, geo(4));
    ASSERT_EQ(eb.parts.size(), 1u);
    EXPECT_NEAR(double(eb.parts[0].useful_bytes) / double(eb.parts[0].footprint_bytes), 17.0 / 36.0, 1e-12);
    EXPECT_DOUBLE_EQ(eb.pim_eff, 0.25);
}

TEST(NaiveLayout, SingleColumnPadsOtherDevices) {
    const auto l = generate_naive_layout(make({{"a", 8}}), geo(4));
    ASSERT_EQ(l.parts().size(), 1u);
    EXPECT_EQ(l.part(0).row_width, 8u);
    for (uint32_t d = 1; d < 4; ++d) EXPECT_TRUE(l.part(0).devices[d].entries.empty());
}

TEST(NaiveLayout, UniformWidthsHaveNoPadding) {
    const auto l = generate_naive_layout(make({{"a", 3}, {"b", 3}, {"c", 3}, {"e", 3}}), geo(4));
    EXPECT_EQ(l.part(0).row_width, 3u);
    EXPECT_EQ(l.padding_per_row(), 0u);
}

TEST(CompactLayout, ThreeQuartersPlacesWidestKeyAlone) {
    const auto l = generate_compact_layout(fig4(), geo(4), 0.75);
    check_structure(l);
    const auto& p = l.part(0);
    EXPECT_EQ(p.row_width, 4u);
    ASSERT_EQ(p.devices[0].entries.size(), 1u);
    EXPECT_EQ(l.schema().columns[p.devices[0].entries[0].column].name, "w_id");
    for (uint32_t d = 1; d < 4; ++d)
        for (const auto& e : p.devices[d].entries) EXPECT_FALSE(l.schema().columns[e.column].is_key);
    for (uint32_t d = 1; d < 4; ++d) EXPECT_EQ(p.devices[d].used(), 4u);
}

TEST(CompactLayout, ZeroThresholdPacksKeysTogether) {
    const auto l = generate_compact_layout(fig4(), geo(4), 0.0);
    check_structure(l);
    for (const auto* k : {"id", "d_id", "w_id"}) EXPECT_EQ(l.fragments(k)[0].part, 0u) << k;
}

TEST(CompactLayout, FullThresholdGivesEachKeyItsOwnWidth) {
    const auto l = generate_compact_layout(fig4(), geo(4), 1.0);
    check_structure(l);
    for (size_t c = 0; c < l.schema().columns.size(); ++c) {
        if (!l.schema().columns[c].is_key) continue;
        EXPECT_EQ(l.schema().columns[c].width, l.part(l.fragments(c)[0].part).row_width);
    }
    EXPECT_DOUBLE_EQ(effective_bandwidth(l, geo(4)).pim_eff, 1.0);
}

TEST(CompactLayout, FullWidthKeysAreFullyEfficient) {
    const auto l = generate_compact_layout(make({{"a", 8, true}, {"b", 8, true}, {"c", 8, true}}), geo(4), 0.6);
    EXPECT_DOUBLE_EQ(effective_bandwidth(l, geo(4)).pim_eff, 1.0);
}

TEST(CompactLayout, RandomSchemasAreWellFormed) {
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 300; ++iter) {
        const uint32_t d = uint32_t{2} << (rng() % 3);
        std::vector<ColumnSpec> cols;
        const int n = 1 + int(rng() % 12);
        for (int i = 0; i < n; ++i)
            cols.push_back({"c" + std::to_string(i), uint32_t(1 + rng() % 24), rng() % 2 == 0});
        for (auto& c : cols)
            if (c.is_key && c.width > 8) c.width = 1 + c.width % 8;
        const auto s = make(cols, 4096);
        const auto naive = generate_naive_layout(s, geo(d));
        check_structure(naive);
        for (double th : {0.0, 0.5, 0.75, 1.0}) check_structure(generate_compact_layout(s, geo(d), th));
        EXPECT_LE(generate_compact_layout(s, geo(d), 0.0).padding_per_row(), naive.padding_per_row());
    }
}

TEST(Locate, RotationFollowsBlock) {
    // A key column on static device 2 with d=4.
    const auto l = generate_naive_layout(make({{"a", 2}, {"b", 2}, {"c", 2, true}, {"e", 2}}), geo(4));
    ASSERT_EQ(l.fragments("c")[0].device, 2u);
    EXPECT_EQ(locate(l, 1500, "c")[0].device, 3u);
    EXPECT_EQ(locate(l, 0, "c")[0].device, 2u);
    EXPECT_THROW(locate(l, 0, "zz"), LookupError);
}

TEST(Locate, EachDeviceSeesTwoOfEightBlocks) {
    const auto l = generate_naive_layout(make({{"a", 2}, {"b", 2}, {"c", 2}, {"e", 2}}, 8192), geo(4));
    for (const auto* col : {"a", "b", "c", "e"}) {
        std::vector<std::set<uint64_t>> blocks(4);
        for (uint64_t r = 0; r < 8192; ++r)
            for (const auto& b : locate(l, r, col)) blocks[b.device].insert(r / 1024);
        for (const auto& s : blocks) EXPECT_EQ(s.size(), 2u) << col;
    }
}

TEST(Locate, PlacementIsInjective) {
    const auto l = generate_compact_layout(fig4(), geo(4), 0.75);
    std::set<BytePlacement> all;
    size_t total = 0;
    for (uint64_t r = 0; r < 3000; r += 7)
        for (const auto& c : l.schema().columns)
            for (const auto& b : locate(l, r, c.name)) {
                all.insert(b);
                ++total;
            }
    EXPECT_EQ(all.size(), total);
}

TEST(Relayout, ScatterGatherRoundTrip) {
    const auto l = generate_compact_layout(fig4(), geo(4), 0.75);
    std::mt19937_64 rng(3);
    const uint32_t n = l.schema().row_bytes();
    for (uint64_t r = 0; r < 1000; ++r) {
        std::vector<uint8_t> row(n);
        for (auto& b : row) b = uint8_t(rng());
        EXPECT_EQ(gather_row(l, r, scatter_row(l, r, row)), row);
    }
    const std::vector<uint8_t> zeros(n, 0);
    for (uint8_t b : scatter_row(l, 5, zeros)) EXPECT_EQ(b, 0);
    EXPECT_THROW(scatter_row(l, 0, std::vector<uint8_t>(n + 1)), ValidationError);
}

TEST(EffectiveBandwidth, DeskSweepEndpoints) {
    const auto pts = th_sweep(desk_catalog(), Geometry{}, {0, 0.25, 0.5, 0.6, 0.75, 1});
    ASSERT_EQ(pts.size(), 6u);
    // Frozen from the reference run of the desk catalog.
    EXPECT_NEAR(pts[0].cpu_eff, 0.730625, 1e-6);
    EXPECT_NEAR(pts[3].cpu_eff, 0.702524038, 1e-6);
    EXPECT_NEAR(pts[0].pim_eff, 0.925, 1e-9);
    EXPECT_NEAR(pts[5].pim_eff, 1.0, 1e-12);
    for (const auto& p : pts) {
        EXPECT_LE(p.cpu_eff, pts[0].cpu_eff);
        EXPECT_LE(p.pim_eff, pts[5].pim_eff);
    }
}

TEST(EffectiveBandwidth, DeskStorageOverhead) {
    const auto s = storage_breakdown(desk_catalog(), Geometry{}, 0.6);
    EXPECT_NEAR(s.padding_fraction(), 0.0451642557, 1e-8);
    EXPECT_NEAR(s.bitmap_fraction(), 0.0163126722, 1e-8);
}
