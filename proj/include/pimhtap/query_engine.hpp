#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pimhtap/bitmap.hpp"
#include "pimhtap/mvcc_store.hpp"
#include "pimhtap/pim_runtime.hpp"

namespace pimhtap {

struct Predicate {
    CompareOp op = CompareOp::True;
    uint64_t lo = 0;  // operand of one-sided compares, low bound of Between
    uint64_t hi = 0;

    bool matches(uint64_t v) const;
};

enum class StageKind { ColumnOp, CpuScan, CpuTransfer, CpuMerge };
std::string_view to_string(StageKind k);

struct StageRecord {
    std::string name;
    StageKind kind = StageKind::ColumnOp;
    std::string table;
    std::string column;
    uint64_t snapshot_ts = 0;
    double start = 0;
    double end = 0;
    double blocked_s = 0;       // ranks held by PIM during the stage
    double load_s = 0;          // load-phase time of the stage
    uint64_t cpu_bytes = 0;
    uint64_t control_messages = 0;
    bool cpu_fallback = false;  // column op run on the CPU because the column is not PIM-scannable
};

struct QueryPlan {
    std::string name;
    std::vector<std::string> tables;
    uint64_t snapshot_ts = 0;
    std::vector<StageRecord> stages;

    double start() const { return stages.empty() ? 0 : stages.front().start; }
    double end() const { return stages.empty() ? 0 : stages.back().end; }
    double load_s() const;
    double blocked_s() const;
    // Every stage read the snapshot the plan was opened with.
    bool consistent() const;
    std::string to_csv() const;
};

using JoinPairs = std::vector<std::pair<uint64_t, uint64_t>>;

// Composes PIM column operations into filter, grouped-sum and join queries.
// Stages run serially on a single timeline starting at now().
class QueryEngine {
public:
    QueryEngine(MvccStore& store, PimRuntime& runtime, uint64_t hash_seed = 0x5eed);

    double now() const { return now_; }
    void set_now(double t) { now_ = t; }

    // Starts a plan; subsequent stages are recorded into it and must use
    // snapshots taken at `snapshot_ts`.
    void begin(std::string name, uint64_t snapshot_ts);
    const QueryPlan& plan() const { return plan_; }
    QueryPlan finish();

    Bitmap run_filter(uint32_t table, size_t column, const Predicate& pred, const SnapshotBitmap& snapshot,
                      const Bitmap* mask = nullptr);
    std::map<uint64_t, uint64_t> run_group_aggregate(uint32_t table, size_t group_col, size_t agg_col,
                                                     const SnapshotBitmap& snapshot, const Bitmap* mask = nullptr);
    uint64_t run_sum(uint32_t table, size_t column, const SnapshotBitmap& snapshot, const Bitmap* mask = nullptr);
    // Pairs (row of a, row of b) with equal column values, sorted.
    JoinPairs run_hash_join(uint32_t table_a, size_t col_a, const SnapshotBitmap& snap_a, uint32_t table_b, size_t col_b,
                            const SnapshotBitmap& snap_b, const Bitmap* mask_a = nullptr, const Bitmap* mask_b = nullptr);

    uint64_t cpu_fallbacks() const { return cpu_fallbacks_; }
    bool pim_scannable(uint32_t table, size_t column) const;

private:
    StageRecord& open_stage(std::string name, StageKind kind, uint32_t table, size_t column, const SnapshotBitmap& snap);
    void close_column_stage(StageRecord& st, const ColumnOpResult& r);
    // Visible (row, value) pairs read by the CPU, billed as row-wise reads.
    ColumnValues cpu_scan(StageRecord& st, uint32_t table, size_t column, const SnapshotBitmap& snapshot);
    // Bills CPU traffic spread over ranks.
    void bill(StageRecord& st, const std::map<RankId, uint64_t>& per_rank, AccessKind kind);
    RankId rank_of_row(uint32_t table, size_t column, uint64_t row) const;
    UnitId unit_of_bucket(uint64_t bucket) const;

    MvccStore& store_;
    PimRuntime& runtime_;
    uint64_t seed_;
    double now_ = 0;
    QueryPlan plan_;
    uint64_t cpu_fallbacks_ = 0;
};

}  // namespace pimhtap
