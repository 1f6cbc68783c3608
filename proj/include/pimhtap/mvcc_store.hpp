#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pimhtap/bitmap.hpp"
#include "pimhtap/layout.hpp"
#include "pimhtap/memory_model.hpp"

namespace pimhtap {

enum class Region : uint8_t { Data, Delta };

struct RowRef {
    Region region = Region::Data;
    uint32_t block = 0;
    uint32_t slot = 0;

    auto operator<=>(const RowRef&) const = default;
};

enum class VersionKind : uint8_t { Insert, Update, Delete };

struct VersionMeta {
    uint64_t logical_row = 0;
    std::optional<RowRef> row;      // empty for tombstones
    uint64_t read_ts = 0;
    uint64_t write_ts = 0;
    std::optional<uint64_t> prev;   // index of the prior version; empty = the data-region row
    VersionKind kind = VersionKind::Update;
};

struct SnapshotBitmap {
    Bitmap data_bits;
    Bitmap delta_bits;
    uint64_t snapshot_ts = 0;
    uint32_t block_size = 1024;
    uint32_t replication = 1;  // copies per bank (one per device)
    uint32_t parts = 1;        // each part's banks keep their own copy

    bool visible(RowRef r) const {
        return r.region == Region::Data ? data_bits.test(r.slot + uint64_t{r.block} * block_size)
                                        : delta_bits.test(r.slot + uint64_t{r.block} * block_size);
    }
    uint64_t storage_bytes() const {
        return (data_bits.size() + delta_bits.size()) * replication * parts / 8;
    }
};

struct DatabaseSnapshot {
    uint64_t snapshot_ts = 0;
    std::vector<SnapshotBitmap> tables;
};

struct DeltaBlock {
    std::optional<uint32_t> shadow;  // data block whose rotation and bank slot it shares
    uint32_t high_water = 0;
    std::vector<uint32_t> free_slots;
};

struct TableStats {
    uint64_t rows = 0;
    uint64_t live_rows = 0;
    uint64_t data_blocks = 0;
    uint64_t delta_blocks = 0;
    uint64_t delta_used = 0;       // committed or reserved delta slots
    uint64_t delta_capacity = 0;
    std::map<uint64_t, uint64_t> chain_lengths;  // versions per logical row -> rows
};

struct CommitResult {
    bool committed = false;
    uint64_t commit_ts = 0;
    uint64_t flushed_lines = 0;
    double start = 0;
    double end = 0;
};

struct ColumnValues {
    uint32_t width = 0;
    std::vector<uint64_t> rows;   // logical rows, ascending
    std::vector<uint8_t> bytes;   // width bytes per row
    uint64_t fetched_bytes = 0;   // burst bytes a unit-side scan moves, old versions included
    uint64_t useful_bytes = 0;

    uint64_t value(size_t i) const;
};

using TxnId = uint64_t;

// Physical contents and version state of one table.
class TableStore {
public:
    TableStore(TableLayout layout, uint64_t rows);

    const TableLayout& layout() const { return layout_; }
    const std::string& name() const { return layout_.schema().name; }
    uint64_t rows() const { return origin_ts_.size(); }
    uint32_t block_size() const { return layout_.block_size(); }
    uint64_t data_blocks() const { return data_blocks_; }
    const std::vector<DeltaBlock>& delta_blocks() const { return delta_blocks_; }

    // Rotation / bank block of a slot: the shadowed data block for delta rows.
    uint64_t placement_block(RowRef r) const;
    RankId rank_of(uint32_t part, RowRef r) const;
    uint64_t owner(RowRef r) const;  // logical row a slot belongs to

    // Contiguous block_size * row_width bytes of one device for one block.
    const uint8_t* device_region(uint32_t part, Region region, uint32_t block, uint32_t physical_device) const;

    std::vector<uint8_t> read_slot(RowRef r) const;
    void write_slot(RowRef r, std::span<const uint8_t> row_bytes);
    // Column bytes of a slot, gathered through the layout.
    void read_column(RowRef r, size_t column, uint8_t* out) const;

    uint64_t origin_ts(uint64_t row) const { return origin_ts_[row]; }
    std::optional<uint64_t> head(uint64_t row) const;
    const std::vector<VersionMeta>& versions() const { return versions_; }

    static constexpr uint64_t kNever = ~uint64_t{0};

private:
    friend class MvccStore;

    void ensure_data_rows(uint64_t rows);
    uint32_t add_delta_block();
    RowRef allocate_delta(uint64_t logical_row);
    void release_delta(RowRef r);
    uint8_t* region_ptr(uint32_t part, Region region, uint32_t block, uint32_t device);
    void reset_snapshot();
    struct Hit {
        std::optional<RowRef> row;
        int64_t meta = -1;
        uint64_t hops = 0;
    };
    Hit walk(uint64_t row, uint64_t ts) const;

    TableLayout layout_;
    uint64_t data_blocks_ = 0;
    std::vector<std::vector<uint8_t>> data_bytes_;   // per part
    std::vector<std::vector<uint8_t>> delta_bytes_;  // per part
    std::vector<DeltaBlock> delta_blocks_;
    std::unordered_map<uint32_t, std::vector<uint32_t>> bound_;  // data block -> delta blocks
    std::vector<uint32_t> unbound_;
    std::vector<uint64_t> delta_owner_;
    std::vector<uint64_t> origin_ts_;
    std::vector<int64_t> head_;               // -1: data-region row is newest
    std::vector<VersionMeta> versions_;       // sorted by write_ts
    size_t snapshot_cursor_ = 0;
    SnapshotBitmap snapshot_;
};

class MvccStore {
public:
    explicit MvccStore(const Geometry& geometry, MemorySystem* memory = nullptr);

    const Geometry& geometry() const { return geometry_; }
    void attach(MemorySystem* memory) { memory_ = memory; }
    MemorySystem* memory() const { return memory_; }

    // Rows start zeroed and visible at timestamp 0.
    uint32_t add_table(TableLayout layout, uint64_t rows);
    void load_row(uint32_t table, uint64_t row, std::span<const uint8_t> bytes);
    uint32_t table_id(std::string_view name) const;
    size_t table_count() const { return tables_.size(); }
    const TableStore& table(uint32_t t) const { return tables_.at(t); }

    TxnId begin();
    std::vector<uint8_t> read(TxnId txn, uint32_t table, uint64_t row);
    uint64_t read_column(TxnId txn, uint32_t table, uint64_t row, size_t column);
    void update(TxnId txn, uint32_t table, uint64_t row, std::span<const uint8_t> bytes);
    void update_column(TxnId txn, uint32_t table, uint64_t row, size_t column, uint64_t value);
    uint64_t insert(TxnId txn, uint32_t table, std::span<const uint8_t> bytes);
    void remove(TxnId txn, uint32_t table, uint64_t row);
    CommitResult commit(TxnId txn);
    void abort(TxnId txn);
    bool has_active_transactions() const { return !active_.empty(); }

    uint64_t clock() const { return clock_; }
    double cpu_time() const { return cpu_time_; }
    void set_cpu_time(double t) { cpu_time_ = t; }

    // Applies committed metadata with previous_ts < write_ts <= at_ts.
    DatabaseSnapshot build_snapshot(uint64_t at_ts);
    const SnapshotBitmap& build_snapshot(uint32_t table, uint64_t at_ts);
    const SnapshotBitmap& current_snapshot(uint32_t table) const { return tables_.at(table).snapshot_; }
    double snapshot_time() const { return snapshot_time_; }

    // Brute-force chain walk: newest version with write_ts <= ts.
    std::optional<RowRef> visible_version(uint32_t table, uint64_t row, uint64_t ts) const;

    ColumnValues visible_scan(uint32_t table, size_t column, const SnapshotBitmap& snapshot) const;

    TableStats stats(uint32_t table) const;

    // Delta rows with a committed version (n) and rows whose newest version
    // sits in the delta region (p * n).
    uint64_t delta_versions(uint32_t table) const;
    uint64_t newest_in_delta(uint32_t table) const;
    // Copies every newest delta version back into its data slot, drops the
    // delta region contents and resets chains. Requires no open transactions.
    uint64_t collapse_deltas(uint32_t table);

    std::string dump() const;
    static MvccStore restore(std::string_view text, const Geometry& geometry,
                             const std::vector<TableLayout>& layouts, MemorySystem* memory = nullptr);

private:
    struct PendingWrite {
        VersionKind kind;
        std::vector<uint8_t> image;
        RowRef slot;
    };
    struct Txn {
        uint64_t start_ts = 0;
        std::map<std::pair<uint32_t, uint64_t>, PendingWrite> writes;
    };

    Txn& txn(TxnId id);
    TableStore& mutable_table(uint32_t t) { return tables_.at(t); }
    void require_visible(const Txn& t, uint32_t table, uint64_t row) const;
    void bill_row(uint32_t table, RowRef r, AccessKind kind, uint64_t meta_entries);
    void apply_snapshot(uint32_t table, uint64_t at_ts, std::vector<CpuSegment>* segments, uint64_t& entries);

    Geometry geometry_;
    MemorySystem* memory_ = nullptr;
    std::vector<TableStore> tables_;
    std::unordered_map<TxnId, Txn> active_;
    TxnId next_txn_ = 1;
    uint64_t clock_ = 0;
    double cpu_time_ = 0;
    double snapshot_time_ = 0;
};

}  // namespace pimhtap
