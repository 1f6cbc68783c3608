#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pimhtap/query_engine.hpp"
#include "pimhtap/workload.hpp"

namespace pimhtap {

// Q1/Q6/Q9-like compositions over the desk catalog. Every stage reads
// snapshots built at `ts`.
struct NamedQueryResult {
    QueryPlan plan;
    uint64_t value = 0;                   // Q6 / Q9: the final sum
    std::map<uint64_t, uint64_t> groups;  // Q1: ol_number -> sum(ol_amount)
};
const std::vector<std::string>& query_names();
NamedQueryResult run_named_query(QueryEngine& engine, Bench& bench, std::string_view name, uint64_t ts);

struct ThPoint {
    double th = 0;
    double cpu_eff = 0;
    double pim_eff = 0;
};
// Efficiencies summed over every table of the catalog (unweighted by rows).
std::vector<ThPoint> th_sweep(const Catalog& catalog, const Geometry& geometry, const std::vector<double>& th_list);

struct StorageRow {
    std::string table;
    uint64_t data_bytes = 0;
    uint64_t padding_bytes = 0;
    uint64_t bitmap_bytes = 0;
};
struct StorageBreakdown {
    std::vector<StorageRow> tables;
    StorageRow total;
    double padding_fraction() const;
    double bitmap_fraction() const;
};
StorageBreakdown storage_breakdown(const Catalog& catalog, const Geometry& geometry, double th);

// Cache lines one access touches under each physical organisation.
enum class StoreFormat { RowStore, ColumnStore, Unified };
std::string_view to_string(StoreFormat f);
uint64_t access_lines(StoreFormat f, const TableLayout& layout, const AccessRecord& a, uint32_t cache_line = 64);

struct OltpRow {
    StoreFormat format = StoreFormat::RowStore;
    uint64_t transactions = 0;
    uint64_t lines = 0;
    double memory_s = 0;
    double compute_s = 0;
    double total_s() const { return memory_s + compute_s; }
};
std::vector<OltpRow> oltp_time(const ExperimentConfig& config);

struct OlapRow {
    uint64_t transactions = 0;
    std::string query;
    std::string design;  // "unified" or "rebuild"
    double scan_s = 0;
    double consistency_s = 0;
    double consistency_share() const { return scan_s + consistency_s > 0 ? consistency_s / (scan_s + consistency_s) : 0; }
};
std::vector<OlapRow> olap_time(const ExperimentConfig& config);

// One injection rate of the OLTP/OLAP co-simulation: transactions arrive at
// `injection_rate` while queries run back to back for `window_s` seconds.
struct FrontierPoint {
    double injection_rate = 0;  // transactions per second offered
    double unified_oltp = 0;    // completed per second
    double unified_olap = 0;
    double rebuild_oltp = 0;
    double rebuild_olap = 0;
};
struct FrontierResult {
    double capacity = 0;  // transactions per second of a query-free stream
    std::vector<FrontierPoint> points;
};
enum class Design { Unified, Rebuild };
std::string_view to_string(Design d);
struct MixResult {
    uint64_t transactions = 0;
    double queries = 0;  // fractional for the query in flight at the window end
    double oltp_tps = 0;
    double olap_qps = 0;
    double stall_s = 0;
    double consistency_s = 0;
};
MixResult simulate_mix(const ExperimentConfig& config, Design design, double injection_rate, double window_s);
FrontierResult frontier(const ExperimentConfig& config,
                        const std::vector<double>& rate_fractions = {0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0},
                        double window_s = 0.005);
bool frontier_dominates(const FrontierResult& f);

struct DefragTradeoffRow {
    uint64_t interval = 0;
    double defrag_s_per_txn = 0;
    double fragmentation_s_per_txn = 0;
};
// Transactions since the last defragmentation; the store is never defragmented
// and each checkpoint prices one defragmentation against the fragmentation
// accumulated so far.
std::vector<DefragTradeoffRow> defrag_tradeoff(const ExperimentConfig& config,
                                               const std::vector<uint64_t>& checkpoints = {1000, 2500, 5000, 10000, 20000,
                                                                                           40000, 80000});

struct WramRow {
    uint32_t data_budget = 0;
    uint32_t load_phases = 0;
    double max_blocked_s = 0;
    double total_blocked_s = 0;
    double handover_s = 0;
    double elapsed_s = 0;
};
// Single key-column scan of a large table with WRAM data budgets swept.
std::vector<WramRow> wram_sweep(const ExperimentConfig& config, const std::vector<uint32_t>& budgets = {4096, 8192, 16384,
                                                                                                       32768, 65536},
                                uint64_t rows = 1u << 20);

const std::vector<std::string>& experiment_names();
// File name -> CSV text. Throws ValidationError for unknown names.
std::map<std::string, std::string> run_experiment(const std::string& name, const ExperimentConfig& config);
void write_outputs(const std::map<std::string, std::string>& files, const std::string& dir);

}  // namespace pimhtap
