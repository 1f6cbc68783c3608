#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "pimhtap/csv.hpp"
#include "pimhtap/error.hpp"
#include "pimhtap/experiments.hpp"

using namespace pimhtap;

TEST(Desk, CustomerWidthProfile) {
    const auto c = desk_catalog();
    const auto& t = c.table("customer");
    const std::vector<uint32_t> want{2, 2, 4, 9, 2, 2};
    for (size_t i = 0; i < want.size(); ++i) EXPECT_EQ(t.columns[i].width, want[i]) << t.columns[i].name;
    EXPECT_NO_THROW(c.validate());
}

TEST(Desk, GenerationIsDeterministic) {
    ExperimentConfig cfg;
    cfg.scale = 0.1;
    auto a = generate_tables(cfg, cfg.th);
    auto b = generate_tables(cfg, cfg.th);
    {
        TxnGenerator ga(a, 5), gb(b, 5);
        ga.run(300);
        gb.run(300);
    }
    EXPECT_EQ(a.store->dump(), b.store->dump());
    cfg.seed = 43;
    auto c = generate_tables(cfg, cfg.th);
    EXPECT_NE(a.store->dump(), c.store->dump());
}

TEST(Desk, EmptyTablesDegradeGracefully) {
    ExperimentConfig cfg;
    cfg.scale = 0;
    auto b = generate_tables(cfg, cfg.th);
    for (uint32_t t = 0; t < b.store->table_count(); ++t) EXPECT_EQ(b.store->table(t).rows(), 0u);
    for (const auto* name : {"th_sweep", "storage_breakdown"}) EXPECT_NO_THROW(run_experiment(name, cfg)) << name;
}

TEST(Desk, TransactionsMix) {
    ExperimentConfig cfg;
    cfg.scale = 0.1;
    auto b = generate_tables(cfg, cfg.th);
    TxnGenerator g(b, 1, 0.5);
    const auto recs = g.run(400);
    size_t payments = 0;
    for (const auto& r : recs) {
        payments += r.kind == TxnKind::Payment;
        EXPECT_GE(r.end, r.start);
        EXPECT_FALSE(r.accesses.empty());
    }
    EXPECT_GT(payments, 120u);
    EXPECT_LT(payments, 280u);
    EXPECT_EQ(g.executed(), 400u);
}

TEST(Config, ParsesOverridesAndRejectsBadValues) {
    const auto cfg = parse_config(R"({"th": 0.75, "seed": 7, "transactions": 100, "geometry": {"channels": 2}})");
    EXPECT_DOUBLE_EQ(cfg.th, 0.75);
    EXPECT_EQ(cfg.seed, 7u);
    EXPECT_EQ(cfg.transactions, 100u);
    EXPECT_EQ(cfg.geometry.channels, 2u);
    EXPECT_THROW(parse_config(R"({"th": 1.5})"), ValidationError);
    EXPECT_THROW(parse_config(R"({"payment_ratio": -1})"), ValidationError);
}

TEST(Config, ShippedConfigsLoad) {
    const std::filesystem::path dir = PIMHTAP_SOURCE_DIR "/configs";
    ASSERT_TRUE(std::filesystem::exists(dir / "experiment.json"));
    const auto cfg = load_config((dir / "experiment.json").string());
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(load_catalog((dir / "desk_catalog.json").string()), desk_catalog());
    EXPECT_EQ(load_geometry((dir / "geometry.json").string()), Geometry{});
}

TEST(Csv, VersionedHeader) {
    std::ostringstream os;
    CsvWriter w(os, "demo", {"a", "b"});
    w.row(1, 2.5);
    const auto t = parse_csv(os.str());
    EXPECT_EQ(t.kind, "demo");
    EXPECT_EQ(t.version, kCsvVersion);
    EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_EQ(t.rows[0][t.column("b")], "2.5");
    EXPECT_THROW(w.row(1), ValidationError);
}

TEST(Experiments, OltpFormatOrdering) {
    ExperimentConfig cfg;
    cfg.transactions = 3000;
    const auto rows = oltp_time(cfg);
    ASSERT_EQ(rows.size(), 3u);
    std::map<StoreFormat, double> t;
    for (const auto& r : rows) t[r.format] = r.total_s();
    EXPECT_LE(t[StoreFormat::RowStore], t[StoreFormat::Unified]);
    EXPECT_LE(t[StoreFormat::Unified], t[StoreFormat::ColumnStore]);
}

TEST(Experiments, DefragCrossoverExists) {
    ExperimentConfig cfg;
    const auto rows = defrag_tradeoff(cfg, {1000, 5000, 20000, 40000});
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_LT(rows.front().fragmentation_s_per_txn, rows.front().defrag_s_per_txn);
    EXPECT_GT(rows.back().fragmentation_s_per_txn, rows.back().defrag_s_per_txn);
    for (size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LE(rows[i].defrag_s_per_txn, rows[i - 1].defrag_s_per_txn);
        EXPECT_GE(rows[i].fragmentation_s_per_txn, rows[i - 1].fragmentation_s_per_txn);
    }
}

TEST(Experiments, UnifiedConsistencyShareBelowRebuild) {
    ExperimentConfig cfg;
    cfg.txn_counts = {10000};
    const auto rows = olap_time(cfg);
    std::map<std::string, std::pair<double, double>> by_design;  // design -> (consistency, scan)
    for (const auto& r : rows) {
        by_design[r.design].first += r.consistency_s;
        by_design[r.design].second += r.scan_s;
    }
    auto share = [&](const std::string& d) {
        return by_design[d].first / (by_design[d].first + by_design[d].second);
    };
    EXPECT_LT(share("unified"), share("rebuild"));
}

TEST(Experiments, UnknownNameIsRejected) {
    EXPECT_THROW(run_experiment("nope", ExperimentConfig{}), ValidationError);
}

TEST(Experiments, OutputsAreWritten) {
    const auto dir = std::filesystem::temp_directory_path() / "pimhtap_out_test";
    std::filesystem::remove_all(dir);
    write_outputs(run_experiment("th_sweep", ExperimentConfig{}), dir.string());
    std::ifstream in(dir / "th_sweep.csv");
    std::string first;
    std::getline(in, first);
    EXPECT_EQ(first, "# pimhtap-th_sweep v1");
    std::filesystem::remove_all(dir);
}
