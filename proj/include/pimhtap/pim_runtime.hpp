#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "pimhtap/bitmap.hpp"
#include "pimhtap/launch_request.hpp"
#include "pimhtap/memory_model.hpp"
#include "pimhtap/mvcc_store.hpp"

namespace pimhtap {

struct UnitId {
    uint32_t channel = 0;
    uint32_t rank = 0;
    uint32_t device = 0;
    uint32_t bank = 0;

    RankId rank_id() const { return {channel, rank}; }
    auto operator<=>(const UnitId&) const = default;
};

enum class UnitStatus { Idle, Running, Done };

struct PimUnitState {
    UnitId id;
    UnitStatus status = UnitStatus::Idle;
    double busy_until = 0;
    std::vector<uint8_t> wram;  // allocated on first use
    uint32_t staged_bytes = 0;
};

// Work one unit performs for a dispatched request.
struct UnitWork {
    UnitId unit;
    uint64_t load_bytes = 0;   // bank -> WRAM (LS only)
    uint64_t store_bytes = 0;  // WRAM -> bank (LS only)
    double compute_s = 0;      // non-LS ops
};

struct Ack {
    OpType op = OpType::LS;
    double issued = 0;
    double start = 0;   // after queueing behind earlier work
    double finish = 0;  // including the hand-back for LS / Defragment
    double handover_s = 0;
    std::vector<RankId> ranks;
};

enum class PollStatus { Done, Pending };

struct PollResult {
    PollStatus status = PollStatus::Done;
    double response_at = 0;  // when the polling module answers the read
};

struct PhaseRecord {
    enum class Kind { Load, Compute };
    Kind kind = Kind::Load;
    double start = 0;
    double end = 0;
    double blocked_begin = 0;  // PIM hold on the ranks (load phases only)
    double blocked_end = 0;
    uint64_t max_unit_bytes = 0;
};

struct ColumnOpSpec {
    OpType op = OpType::Filter;  // Filter, Group, Hash or Aggregation
    CompareOp compare = CompareOp::True;
    uint64_t lo = 0;
    uint64_t hi = 0;
    uint64_t seed = 0;
    // Aggregation: group id per logical row; rows mapped to kNoGroup are skipped.
    const std::vector<uint32_t>* group_of_row = nullptr;
    uint32_t group_count = 1;
    // Optional logical-row mask ANDed with visibility.
    const Bitmap* row_mask = nullptr;

    static constexpr uint32_t kNoGroup = ~0u;
};

struct UnitOutput {
    UnitId unit;
    std::vector<uint64_t> rows;        // logical rows produced (filter hits, hashed / grouped rows)
    std::vector<uint64_t> values;      // hash value or local group index per row
    std::vector<uint64_t> dictionary;  // Group: local index -> value
    std::vector<uint64_t> partials;    // Aggregation: sum per group
    uint32_t chunks = 0;
    uint64_t scanned = 0;  // slots streamed through WRAM
};

struct ColumnOpResult {
    OpType op = OpType::Filter;
    std::vector<UnitOutput> units;
    std::vector<PhaseRecord> phases;
    std::vector<RankId> ranks;
    double start = 0;
    double end = 0;
    double blocked_s = 0;
    uint64_t control_messages = 0;
    uint64_t handovers = 0;
    uint32_t load_phases = 0;
    uint32_t compute_phases = 0;
    uint64_t rows_scanned = 0;
};

// Join input staged in one unit's bank by the CPU.
struct JoinBucket {
    UnitId unit;
    std::vector<std::pair<uint64_t, uint64_t>> left;   // (key, row)
    std::vector<std::pair<uint64_t, uint64_t>> right;  // (key, row)
};

struct JoinOpResult {
    std::vector<std::pair<uint64_t, uint64_t>> pairs;  // (left row, right row)
    std::vector<PhaseRecord> phases;
    double start = 0;
    double end = 0;
    double blocked_s = 0;
    uint64_t control_messages = 0;
    uint32_t load_phases = 0;
    uint32_t splits = 0;  // buckets re-dispatched because they exceeded WRAM
};

class PimRuntime {
public:
    PimRuntime(const Geometry& geometry, MemorySystem& memory);

    const Geometry& geometry() const { return geometry_; }
    MemorySystem& memory() { return memory_; }

    // Decodes and broadcasts a request to the units of `ranks`. LS and
    // Defragment hold the ranks for the duration; other ops leave the banks
    // with the CPU. Requests queue behind unfinished work on the same ranks.
    Ack dispatch(const EncodedRequest& request, std::span<const RankId> ranks, std::span<const UnitWork> work, double at);
    // One read to the polling module; it answers once every launched unit is done.
    PollResult poll(double at);

    uint64_t control_messages() const { return control_messages_; }
    const PimUnitState& unit(UnitId id) const;
    PimUnitState& unit(UnitId id);

    // Messages the per-unit launch/poll protocol would need for the same work.
    static uint64_t baseline_messages(uint64_t units, uint64_t phases) { return 2 * units * phases; }

    // Two-phase execution over a key column of width <= 8. Throws
    // ValidationError for normal (split) or wider columns.
    ColumnOpResult execute_column_op(const ColumnOpSpec& spec, const TableStore& table, size_t column,
                                     const SnapshotBitmap& snapshot, double at);

    JoinOpResult execute_join(std::vector<JoinBucket> buckets, double at);

    // Rows of one unit's chunk for a given per-row footprint.
    uint64_t chunk_rows(uint64_t data_bytes_per_row, double result_bytes_per_row) const;

private:
    size_t unit_index(UnitId id) const;
    std::vector<RankId> ranks_of(const std::vector<UnitId>& units) const;
    PhaseRecord run_phase(const LaunchRequest& req, const std::vector<RankId>& ranks, const std::vector<UnitWork>& work,
                          double& t, uint64_t& messages);

    Geometry geometry_;
    MemorySystem& memory_;
    std::vector<PimUnitState> units_;
    std::map<RankId, double> rank_busy_;
    double last_finish_ = 0;
    uint64_t control_messages_ = 0;
};

}  // namespace pimhtap
