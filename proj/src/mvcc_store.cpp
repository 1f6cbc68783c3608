#include "pimhtap/mvcc_store.hpp"

#include <algorithm>
#include <cstring>
#include <set>
#include <sstream>

#include "pimhtap/error.hpp"

namespace pimhtap {

uint64_t ColumnValues::value(size_t i) const {
    uint64_t v = 0;
    const uint8_t* p = bytes.data() + i * width;
    for (uint32_t b = 0; b < std::min<uint32_t>(width, 8); ++b) v |= uint64_t{p[b]} << (8 * b);
    return v;
}

// ---------------------------------------------------------------------------
// TableStore

TableStore::TableStore(TableLayout layout, uint64_t rows) : layout_(std::move(layout)) {
    data_bytes_.resize(layout_.parts().size());
    delta_bytes_.resize(layout_.parts().size());
    origin_ts_.assign(rows, 0);
    head_.assign(rows, -1);
    ensure_data_rows(rows);
    const uint64_t initial = std::max<uint64_t>(1, (data_blocks_ + 7) / 8);
    for (uint64_t i = 0; i < initial; ++i) add_delta_block();
    snapshot_.block_size = block_size();
    snapshot_.replication = layout_.devices();
    snapshot_.parts = static_cast<uint32_t>(layout_.parts().size());
    reset_snapshot();
}

void TableStore::ensure_data_rows(uint64_t rows) {
    const uint64_t blocks = (rows + block_size() - 1) / block_size();
    if (blocks <= data_blocks_) return;
    data_blocks_ = blocks;
    const uint64_t d = layout_.devices();
    for (size_t p = 0; p < data_bytes_.size(); ++p)
        data_bytes_[p].resize(blocks * d * block_size() * layout_.part(p).row_width, 0);
}

uint32_t TableStore::add_delta_block() {
    const auto k = static_cast<uint32_t>(delta_blocks_.size());
    delta_blocks_.push_back({});
    const uint64_t d = layout_.devices();
    for (size_t p = 0; p < delta_bytes_.size(); ++p)
        delta_bytes_[p].resize((k + 1) * d * block_size() * layout_.part(p).row_width, 0);
    delta_owner_.resize(uint64_t{k + 1} * block_size(), kNever);
    unbound_.insert(unbound_.begin(), k);
    return k;
}

RowRef TableStore::allocate_delta(uint64_t logical_row) {
    const auto origin_block = static_cast<uint32_t>(logical_row / block_size());
    auto& bound = bound_[origin_block];
    uint32_t k = ~0u;
    for (auto b : bound) {
        const auto& blk = delta_blocks_[b];
        if (!blk.free_slots.empty() || blk.high_water < block_size()) {
            k = b;
            break;
        }
    }
    if (k == ~0u) {
        if (unbound_.empty()) add_delta_block();
        k = unbound_.back();
        unbound_.pop_back();
        delta_blocks_[k].shadow = origin_block;
        bound.push_back(k);
    }
    auto& blk = delta_blocks_[k];
    uint32_t slot;
    if (!blk.free_slots.empty()) {
        slot = blk.free_slots.back();
        blk.free_slots.pop_back();
    } else {
        slot = blk.high_water++;
    }
    delta_owner_[uint64_t{k} * block_size() + slot] = logical_row;
    return {Region::Delta, k, slot};
}

void TableStore::release_delta(RowRef r) {
    delta_owner_[uint64_t{r.block} * block_size() + r.slot] = kNever;
    delta_blocks_[r.block].free_slots.push_back(r.slot);
}

uint64_t TableStore::placement_block(RowRef r) const {
    if (r.region == Region::Data) return r.block;
    const auto& s = delta_blocks_.at(r.block).shadow;
    if (!s) throw ContractViolation("delta block " + std::to_string(r.block) + " is not bound to a data block");
    return *s;
}

RankId TableStore::rank_of(uint32_t part, RowRef r) const { return layout_.rank_of_block(part, placement_block(r)); }

uint64_t TableStore::owner(RowRef r) const {
    if (r.region == Region::Data) return uint64_t{r.block} * block_size() + r.slot;
    return delta_owner_.at(uint64_t{r.block} * block_size() + r.slot);
}

std::optional<uint64_t> TableStore::head(uint64_t row) const {
    if (head_.at(row) < 0) return std::nullopt;
    return static_cast<uint64_t>(head_[row]);
}

const uint8_t* TableStore::device_region(uint32_t part, Region region, uint32_t block, uint32_t device) const {
    return const_cast<TableStore*>(this)->region_ptr(part, region, block, device);
}

uint8_t* TableStore::region_ptr(uint32_t part, Region region, uint32_t block, uint32_t device) {
    const uint64_t rw = layout_.part(part).row_width;
    const uint64_t off = (uint64_t{block} * layout_.devices() + device) * block_size() * rw;
    auto& buf = region == Region::Data ? data_bytes_[part] : delta_bytes_[part];
    if (off + block_size() * rw > buf.size()) throw LookupError("block outside the region");
    return buf.data() + off;
}

std::vector<uint8_t> TableStore::read_slot(RowRef r) const {
    const auto& schema = layout_.schema();
    std::vector<uint8_t> out(schema.row_bytes());
    for (size_t c = 0; c < schema.columns.size(); ++c) read_column(r, c, out.data() + schema.column_offset(c));
    return out;
}

void TableStore::read_column(RowRef r, size_t column, uint8_t* out) const {
    const uint64_t pb = placement_block(r);
    for (const auto& f : layout_.fragments(column)) {
        const uint32_t rw = layout_.part(f.part).row_width;
        const uint8_t* src = device_region(f.part, r.region, r.block, layout_.rotated_device(f.device, pb)) +
                             uint64_t{r.slot} * rw + f.device_offset;
        std::memcpy(out + f.column_begin, src, f.length);
    }
}

void TableStore::write_slot(RowRef r, std::span<const uint8_t> row_bytes) {
    const auto& schema = layout_.schema();
    if (row_bytes.size() != schema.row_bytes())
        throw ValidationError("row image has " + std::to_string(row_bytes.size()) + " bytes, expected " +
                              std::to_string(schema.row_bytes()));
    const uint64_t pb = placement_block(r);
    for (size_t c = 0; c < schema.columns.size(); ++c) {
        const uint32_t col_off = schema.column_offset(c);
        for (const auto& f : layout_.fragments(c)) {
            const uint32_t rw = layout_.part(f.part).row_width;
            uint8_t* dst = region_ptr(f.part, r.region, r.block, layout_.rotated_device(f.device, pb)) +
                           uint64_t{r.slot} * rw + f.device_offset;
            std::memcpy(dst, row_bytes.data() + col_off + f.column_begin, f.length);
        }
    }
}

void TableStore::reset_snapshot() {
    snapshot_.data_bits = Bitmap(data_blocks_ * block_size());
    snapshot_.delta_bits = Bitmap(delta_blocks_.size() * block_size());
    for (uint64_t r = 0; r < origin_ts_.size(); ++r)
        if (origin_ts_[r] == 0) snapshot_.data_bits.set(r);
    snapshot_.snapshot_ts = 0;
    snapshot_cursor_ = 0;
}

TableStore::Hit TableStore::walk(uint64_t row, uint64_t ts) const {
    Hit h;
    int64_t idx = head_.at(row);
    while (idx >= 0) {
        const auto& v = versions_[static_cast<size_t>(idx)];
        ++h.hops;
        if (v.write_ts <= ts) {
            h.row = v.row;
            h.meta = idx;
            return h;
        }
        idx = v.prev ? static_cast<int64_t>(*v.prev) : -1;
    }
    if (origin_ts_[row] <= ts) h.row = RowRef{Region::Data, static_cast<uint32_t>(row / block_size()),
                                              static_cast<uint32_t>(row % block_size())};
    return h;
}

// ---------------------------------------------------------------------------
// MvccStore

MvccStore::MvccStore(const Geometry& geometry, MemorySystem* memory) : geometry_(geometry), memory_(memory) {
    geometry_.validate();
}

uint32_t MvccStore::add_table(TableLayout layout, uint64_t rows) {
    if (layout.devices() != geometry_.devices_per_rank || layout.block_size() != geometry_.block_size)
        throw ValidationError("layout was generated for a different geometry");
    for (const auto& t : tables_)
        if (t.name() == layout.schema().name) throw ValidationError("duplicate table '" + t.name() + "'");
    tables_.emplace_back(std::move(layout), rows);
    return static_cast<uint32_t>(tables_.size() - 1);
}

void MvccStore::load_row(uint32_t table, uint64_t row, std::span<const uint8_t> bytes) {
    auto& t = mutable_table(table);
    if (row >= t.rows()) throw LookupError("row " + std::to_string(row) + " out of range");
    t.write_slot({Region::Data, static_cast<uint32_t>(row / t.block_size()), static_cast<uint32_t>(row % t.block_size())},
                 bytes);
}

uint32_t MvccStore::table_id(std::string_view name) const {
    for (size_t i = 0; i < tables_.size(); ++i)
        if (tables_[i].name() == name) return static_cast<uint32_t>(i);
    throw LookupError("unknown table '" + std::string(name) + "'");
}

MvccStore::Txn& MvccStore::txn(TxnId id) {
    auto it = active_.find(id);
    if (it == active_.end()) throw ContractViolation("transaction " + std::to_string(id) + " is not active");
    return it->second;
}

TxnId MvccStore::begin() {
    const TxnId id = next_txn_++;
    active_[id].start_ts = clock_;
    return id;
}

void MvccStore::require_visible(const Txn& t, uint32_t table, uint64_t row) const {
    const auto& ts = tables_.at(table);
    if (row >= ts.rows() || !ts.walk(row, t.start_ts).row)
        throw LookupError("row " + std::to_string(row) + " of '" + ts.name() + "' is not visible");
}

void MvccStore::bill_row(uint32_t table, RowRef r, AccessKind kind, uint64_t meta_entries) {
    if (!memory_) return;
    const auto& t = tables_[table];
    std::vector<CpuSegment> segs;
    segs.reserve(t.layout().parts().size() + 1);
    for (const auto& p : t.layout().parts())
        segs.push_back({t.rank_of(p.part_id, r), uint64_t{t.layout().devices()} * p.row_width});
    if (meta_entries) segs.push_back({std::nullopt, meta_entries * geometry_.metadata_bytes});
    cpu_time_ = memory_->cpu_access(segs, kind, cpu_time_).end;
}

std::vector<uint8_t> MvccStore::read(TxnId id, uint32_t table, uint64_t row) {
    auto& t = txn(id);
    auto& ts = mutable_table(table);
    if (auto it = t.writes.find({table, row}); it != t.writes.end()) {
        if (it->second.kind == VersionKind::Delete) throw LookupError("row was deleted by this transaction");
        return it->second.image;
    }
    if (row >= ts.rows()) throw LookupError("row " + std::to_string(row) + " out of range");
    auto hit = ts.walk(row, t.start_ts);
    if (!hit.row) throw LookupError("row " + std::to_string(row) + " of '" + ts.name() + "' is not visible");
    if (hit.meta >= 0) {
        auto& v = ts.versions_[static_cast<size_t>(hit.meta)];
        v.read_ts = std::max(v.read_ts, t.start_ts);
    }
    bill_row(table, *hit.row, AccessKind::Read, hit.hops);
    return ts.read_slot(*hit.row);
}

uint64_t MvccStore::read_column(TxnId id, uint32_t table, uint64_t row, size_t column) {
    const auto img = read(id, table, row);
    const auto& schema = tables_[table].layout().schema();
    const auto off = schema.column_offset(column);
    uint64_t v = 0;
    for (uint32_t b = 0; b < std::min<uint32_t>(schema.columns[column].width, 8); ++b) v |= uint64_t{img[off + b]} << (8 * b);
    return v;
}

void MvccStore::update(TxnId id, uint32_t table, uint64_t row, std::span<const uint8_t> bytes) {
    auto& t = txn(id);
    auto& ts = mutable_table(table);
    if (bytes.size() != ts.layout().schema().row_bytes()) throw ValidationError("row image size mismatch");
    if (auto it = t.writes.find({table, row}); it != t.writes.end()) {
        if (it->second.kind == VersionKind::Delete) throw LookupError("row was deleted by this transaction");
        it->second.image.assign(bytes.begin(), bytes.end());
        return;
    }
    require_visible(t, table, row);
    const RowRef slot = ts.allocate_delta(row);
    t.writes[{table, row}] = {VersionKind::Update, std::vector<uint8_t>(bytes.begin(), bytes.end()), slot};
}

void MvccStore::update_column(TxnId id, uint32_t table, uint64_t row, size_t column, uint64_t value) {
    auto img = read(id, table, row);
    const auto& schema = tables_[table].layout().schema();
    const auto off = schema.column_offset(column);
    const uint32_t w = schema.columns.at(column).width;
    for (uint32_t b = 0; b < w; ++b) img[off + b] = b < 8 ? static_cast<uint8_t>(value >> (8 * b)) : 0;
    update(id, table, row, img);
}

uint64_t MvccStore::insert(TxnId id, uint32_t table, std::span<const uint8_t> bytes) {
    auto& t = txn(id);
    auto& ts = mutable_table(table);
    if (bytes.size() != ts.layout().schema().row_bytes()) throw ValidationError("row image size mismatch");
    const uint64_t row = ts.rows();
    ts.origin_ts_.push_back(TableStore::kNever);
    ts.head_.push_back(-1);
    ts.ensure_data_rows(row + 1);
    const RowRef slot{Region::Data, static_cast<uint32_t>(row / ts.block_size()), static_cast<uint32_t>(row % ts.block_size())};
    t.writes[{table, row}] = {VersionKind::Insert, std::vector<uint8_t>(bytes.begin(), bytes.end()), slot};
    return row;
}

void MvccStore::remove(TxnId id, uint32_t table, uint64_t row) {
    auto& t = txn(id);
    auto& ts = mutable_table(table);
    if (auto it = t.writes.find({table, row}); it != t.writes.end()) {
        auto& w = it->second;
        if (w.kind == VersionKind::Delete) throw LookupError("row was already deleted by this transaction");
        if (w.kind == VersionKind::Insert) {
            t.writes.erase(it);  // the reserved data slot stays invisible forever
            return;
        }
        ts.release_delta(w.slot);
        w.kind = VersionKind::Delete;
        w.image.clear();
        return;
    }
    require_visible(t, table, row);
    t.writes[{table, row}] = {VersionKind::Delete, {}, {}};
}

CommitResult MvccStore::commit(TxnId id) {
    auto& t = txn(id);
    CommitResult res;
    res.start = cpu_time_;
    for (const auto& [key, w] : t.writes) {
        if (w.kind == VersionKind::Insert) continue;
        const auto& ts = tables_[key.first];
        const int64_t h = ts.head_[key.second];
        const uint64_t newest = h >= 0 ? ts.versions_[static_cast<size_t>(h)].write_ts : ts.origin_ts_[key.second];
        if (newest > t.start_ts) {
            abort(id);
            res.end = cpu_time_;
            return res;
        }
    }
    if (t.writes.empty()) {
        res.committed = true;
        res.commit_ts = t.start_ts;
        res.end = cpu_time_;
        active_.erase(id);
        return res;
    }
    const uint64_t ts_commit = ++clock_;
    std::vector<CpuSegment> flush;
    for (auto& [key, w] : t.writes) {
        auto& ts = tables_[key.first];
        const uint64_t row = key.second;
        VersionMeta v;
        v.logical_row = row;
        v.write_ts = ts_commit;
        v.read_ts = ts_commit;
        v.kind = w.kind;
        if (w.kind == VersionKind::Insert) {
            ts.origin_ts_[row] = ts_commit;
            v.row = w.slot;
        } else {
            const int64_t h = ts.head_[row];
            if (h >= 0) v.prev = static_cast<uint64_t>(h);
            if (w.kind == VersionKind::Update) v.row = w.slot;
            ts.head_[row] = static_cast<int64_t>(ts.versions_.size());
        }
        if (v.row) {
            ts.write_slot(*v.row, w.image);
            for (const auto& p : ts.layout().parts()) flush.push_back({ts.rank_of(p.part_id, *v.row), geometry_.cache_line});
        }
        ts.versions_.push_back(std::move(v));
    }
    res.flushed_lines = flush.size();
    if (memory_) {
        cpu_time_ = memory_->cpu_access(flush, AccessKind::Write, cpu_time_).end;
        memory_->log(Actor::Cpu, "commit_barrier", {}, cpu_time_, 0.0);
    }
    res.committed = true;
    res.commit_ts = ts_commit;
    res.end = cpu_time_;
    active_.erase(id);
    return res;
}

void MvccStore::abort(TxnId id) {
    auto& t = txn(id);
    for (auto& [key, w] : t.writes)
        if (w.kind == VersionKind::Update) tables_[key.first].release_delta(w.slot);
    active_.erase(id);
}

void MvccStore::apply_snapshot(uint32_t table, uint64_t at_ts, std::vector<CpuSegment>* segments, uint64_t& entries) {
    auto& ts = tables_[table];
    auto& snap = ts.snapshot_;
    if (at_ts < snap.snapshot_ts)
        throw ContractViolation("snapshot timestamp " + std::to_string(at_ts) + " precedes the previous snapshot " +
                                std::to_string(snap.snapshot_ts));
    snap.data_bits.resize(ts.data_blocks_ * ts.block_size());
    snap.delta_bits.resize(ts.delta_blocks_.size() * ts.block_size());
    const uint64_t B = ts.block_size();
    std::set<std::pair<Region, uint64_t>> touched;
    auto flip = [&](RowRef r, bool on) {
        const uint64_t bit = uint64_t{r.block} * B + r.slot;
        auto& bm = r.region == Region::Data ? snap.data_bits : snap.delta_bits;
        bm.assign(bit, on);
        if (segments) touched.insert({r.region, bit / 64});
    };
    while (ts.snapshot_cursor_ < ts.versions_.size() && ts.versions_[ts.snapshot_cursor_].write_ts <= at_ts) {
        const auto& v = ts.versions_[ts.snapshot_cursor_++];
        ++entries;
        if (v.kind != VersionKind::Insert) {
            if (v.prev) {
                const auto& pv = ts.versions_[*v.prev];
                if (pv.row) flip(*pv.row, false);
            } else {
                flip({Region::Data, static_cast<uint32_t>(v.logical_row / B), static_cast<uint32_t>(v.logical_row % B)},
                     false);
            }
        }
        if (v.row) flip(*v.row, true);
    }
    snap.snapshot_ts = at_ts;
    if (!segments) return;
    for (const auto& [region, word] : touched) {
        const uint32_t block = static_cast<uint32_t>(word * 64 / B);
        const RowRef r{region, block, 0};
        for (const auto& p : ts.layout().parts()) segments->push_back({ts.rank_of(p.part_id, r), 8});
    }
}

const SnapshotBitmap& MvccStore::build_snapshot(uint32_t table, uint64_t at_ts) {
    if (at_ts > clock_) throw ContractViolation("snapshot timestamp is ahead of the commit clock");
    std::vector<CpuSegment> segs;
    uint64_t entries = 0;
    apply_snapshot(table, at_ts, memory_ ? &segs : nullptr, entries);
    if (memory_) {
        if (entries) segs.push_back({std::nullopt, entries * geometry_.metadata_bytes});
        auto r = memory_->cpu_access(segs, AccessKind::Write, cpu_time_);
        snapshot_time_ += r.end - cpu_time_;
        cpu_time_ = r.end;
    }
    return tables_[table].snapshot_;
}

DatabaseSnapshot MvccStore::build_snapshot(uint64_t at_ts) {
    if (at_ts > clock_) throw ContractViolation("snapshot timestamp is ahead of the commit clock");
    for (const auto& t : tables_)
        if (at_ts < t.snapshot_.snapshot_ts)
            throw ContractViolation("snapshot timestamp " + std::to_string(at_ts) + " precedes the previous snapshot");
    std::vector<CpuSegment> segs;
    uint64_t entries = 0;
    for (uint32_t i = 0; i < tables_.size(); ++i) apply_snapshot(i, at_ts, memory_ ? &segs : nullptr, entries);
    if (memory_) {
        if (entries) segs.push_back({std::nullopt, entries * geometry_.metadata_bytes});
        auto r = memory_->cpu_access(segs, AccessKind::Write, cpu_time_);
        snapshot_time_ += r.end - cpu_time_;
        cpu_time_ = r.end;
    }
    DatabaseSnapshot out;
    out.snapshot_ts = at_ts;
    for (const auto& t : tables_) out.tables.push_back(t.snapshot_);
    return out;
}

std::optional<RowRef> MvccStore::visible_version(uint32_t table, uint64_t row, uint64_t ts) const {
    const auto& t = tables_.at(table);
    if (row >= t.rows()) throw LookupError("row " + std::to_string(row) + " out of range");
    return t.walk(row, ts).row;
}

ColumnValues MvccStore::visible_scan(uint32_t table, size_t column, const SnapshotBitmap& snapshot) const {
    const auto& t = tables_.at(table);
    const auto& col = t.layout().schema().columns.at(column);
    const uint64_t B = t.block_size();
    ColumnValues out;
    out.width = col.width;

    std::vector<RowRef> where(t.rows(), RowRef{Region::Data, ~0u, 0});
    for (uint64_t r = 0; r < t.rows() && r < snapshot.data_bits.size(); ++r)
        if (snapshot.data_bits.test(r)) where[r] = {Region::Data, static_cast<uint32_t>(r / B), static_cast<uint32_t>(r % B)};
    for (uint64_t bit : snapshot.delta_bits.indices()) {
        const RowRef ref{Region::Delta, static_cast<uint32_t>(bit / B), static_cast<uint32_t>(bit % B)};
        where[t.owner(ref)] = ref;
    }
    for (uint64_t r = 0; r < t.rows(); ++r) {
        if (where[r].block == ~0u) continue;
        out.rows.push_back(r);
        const size_t at = out.bytes.size();
        out.bytes.resize(at + col.width);
        t.read_column(where[r], column, out.bytes.data() + at);
    }

    // A unit streams every slot of its blocks; invisible versions still cost bursts.
    const uint64_t g = geometry_.interleave_granularity;
    uint64_t slots = t.rows();
    for (const auto& blk : t.delta_blocks()) slots += blk.high_water;
    uint64_t per_row = col.width;
    if (col.is_key || t.layout().device_contiguous(column)) {
        const uint64_t rw = t.layout().part(t.layout().fragments(column).front().part).row_width;
        per_row = std::min(rw, (uint64_t{col.width} + g - 1) / g * g);
    }
    out.fetched_bytes = (slots * per_row + g - 1) / g * g;
    out.useful_bytes = out.rows.size() * col.width;
    return out;
}

TableStats MvccStore::stats(uint32_t table) const {
    const auto& t = tables_.at(table);
    TableStats s;
    s.rows = t.rows();
    s.data_blocks = t.data_blocks();
    s.delta_blocks = t.delta_blocks().size();
    s.delta_capacity = s.delta_blocks * t.block_size();
    for (const auto& b : t.delta_blocks()) s.delta_used += b.high_water - b.free_slots.size();
    for (uint64_t r = 0; r < t.rows(); ++r) {
        if (t.walk(r, clock_).row) ++s.live_rows;
        uint64_t len = t.origin_ts_[r] == TableStore::kNever ? 0 : 1;
        for (int64_t i = t.head_[r]; i >= 0;) {
            ++len;
            const auto& v = t.versions_[static_cast<size_t>(i)];
            i = v.prev ? static_cast<int64_t>(*v.prev) : -1;
        }
        s.chain_lengths[len] += 1;
    }
    return s;
}

uint64_t MvccStore::delta_versions(uint32_t table) const {
    uint64_t n = 0;
    for (const auto& v : tables_.at(table).versions_)
        if (v.row && v.row->region == Region::Delta) ++n;
    return n;
}

uint64_t MvccStore::newest_in_delta(uint32_t table) const {
    const auto& t = tables_.at(table);
    uint64_t n = 0;
    for (uint64_t r = 0; r < t.rows(); ++r) {
        if (t.head_[r] < 0) continue;
        const auto& v = t.versions_[static_cast<size_t>(t.head_[r])];
        if (v.row && v.row->region == Region::Delta) ++n;
    }
    return n;
}

uint64_t MvccStore::collapse_deltas(uint32_t table) {
    if (has_active_transactions()) throw ContractViolation("defragmentation requires no open transactions");
    auto& t = tables_.at(table);
    uint64_t moved = 0;
    for (uint64_t r = 0; r < t.rows(); ++r) {
        if (t.head_[r] < 0) continue;
        const auto& v = t.versions_[static_cast<size_t>(t.head_[r])];
        if (!v.row) {
            t.origin_ts_[r] = TableStore::kNever;
        } else if (v.row->region == Region::Delta) {
            const RowRef dst{Region::Data, static_cast<uint32_t>(r / t.block_size()), static_cast<uint32_t>(r % t.block_size())};
            t.write_slot(dst, t.read_slot(*v.row));
            ++moved;
        }
    }
    for (uint64_t r = 0; r < t.rows(); ++r)
        if (t.origin_ts_[r] != TableStore::kNever) t.origin_ts_[r] = 0;
    std::fill(t.head_.begin(), t.head_.end(), -1);
    t.versions_.clear();
    t.bound_.clear();
    t.unbound_.clear();
    for (uint32_t k = static_cast<uint32_t>(t.delta_blocks_.size()); k-- > 0;) {
        t.delta_blocks_[k] = {};
        t.unbound_.push_back(k);
    }
    std::fill(t.delta_owner_.begin(), t.delta_owner_.end(), TableStore::kNever);
    for (auto& buf : t.delta_bytes_) std::fill(buf.begin(), buf.end(), 0);
    const uint64_t ts = std::max(t.snapshot_.snapshot_ts, clock_);
    t.reset_snapshot();
    t.snapshot_.snapshot_ts = ts;
    return moved;
}

// ---------------------------------------------------------------------------
// Text dump / restore

namespace {

std::string ref_text(const std::optional<RowRef>& r) {
    if (!r) return "-";
    return std::string(r->region == Region::Data ? "D:" : "X:") + std::to_string(r->block) + ":" + std::to_string(r->slot);
}

std::optional<RowRef> parse_ref(const std::string& s) {
    if (s == "-") return std::nullopt;
    if (s.size() < 5 || (s[0] != 'D' && s[0] != 'X') || s[1] != ':') throw ValidationError("bad row reference '" + s + "'");
    auto colon = s.find(':', 2);
    if (colon == std::string::npos) throw ValidationError("bad row reference '" + s + "'");
    return RowRef{s[0] == 'D' ? Region::Data : Region::Delta, static_cast<uint32_t>(std::stoul(s.substr(2, colon - 2))),
                  static_cast<uint32_t>(std::stoul(s.substr(colon + 1)))};
}

std::string hex(const std::vector<uint8_t>& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 15]);
    }
    return s;
}

std::vector<uint8_t> unhex(const std::string& s) {
    if (s.size() % 2) throw ValidationError("odd-length hex string");
    std::vector<uint8_t> out(s.size() / 2);
    for (size_t i = 0; i < out.size(); ++i) out[i] = static_cast<uint8_t>(std::stoul(s.substr(2 * i, 2), nullptr, 16));
    return out;
}

std::string_view kind_text(VersionKind k) {
    switch (k) {
        case VersionKind::Insert: return "insert";
        case VersionKind::Update: return "update";
        case VersionKind::Delete: return "delete";
    }
    return "update";
}

VersionKind parse_kind(const std::string& s) {
    if (s == "insert") return VersionKind::Insert;
    if (s == "update") return VersionKind::Update;
    if (s == "delete") return VersionKind::Delete;
    throw ValidationError("bad version kind '" + s + "'");
}

}  // namespace

std::string MvccStore::dump() const {
    if (has_active_transactions()) throw ContractViolation("cannot dump with open transactions");
    std::ostringstream os;
    os << "# pimhtap-store v1\n";
    os << "clock " << clock_ << '\n';
    for (const auto& t : tables_) {
        os << "table " << t.name() << " rows " << t.rows() << " delta_blocks " << t.delta_blocks_.size() << '\n';
        for (size_t k = 0; k < t.delta_blocks_.size(); ++k) {
            const auto& b = t.delta_blocks_[k];
            os << "delta_block " << k << " shadow " << (b.shadow ? std::to_string(*b.shadow) : "-") << " high_water "
               << b.high_water << " free";
            for (auto f : b.free_slots) os << ' ' << f;
            os << '\n';
        }
        for (uint64_t r = 0; r < t.rows(); ++r) {
            os << "row " << r << ' '
               << (t.origin_ts_[r] == TableStore::kNever ? std::string("never") : std::to_string(t.origin_ts_[r])) << ' '
               << t.head_[r] << ' '
               << hex(t.read_slot({Region::Data, static_cast<uint32_t>(r / t.block_size()),
                                   static_cast<uint32_t>(r % t.block_size())}))
               << '\n';
        }
        for (size_t i = 0; i < t.versions_.size(); ++i) {
            const auto& v = t.versions_[i];
            os << "version " << i << ' ' << v.logical_row << ' ' << ref_text(v.row) << ' ' << v.write_ts << ' ' << v.read_ts
               << ' ' << (v.prev ? std::to_string(*v.prev) : "-") << ' ' << kind_text(v.kind);
            if (v.row && v.row->region == Region::Delta) os << ' ' << hex(t.read_slot(*v.row));
            os << '\n';
        }
        os << "snapshot " << t.snapshot_.snapshot_ts << '\n';
        os << "end\n";
    }
    return os.str();
}

MvccStore MvccStore::restore(std::string_view text, const Geometry& geometry, const std::vector<TableLayout>& layouts,
                             MemorySystem* memory) {
    MvccStore store(geometry, memory);
    std::istringstream in{std::string(text)};
    std::string line;
    std::getline(in, line);
    if (line != "# pimhtap-store v1") throw ValidationError("not a store dump (bad version line)");
    TableStore* t = nullptr;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "clock") {
            ls >> store.clock_;
        } else if (tag == "table") {
            std::string name, k1, k2;
            uint64_t rows = 0, delta_blocks = 0;
            ls >> name >> k1 >> rows >> k2 >> delta_blocks;
            auto it = std::find_if(layouts.begin(), layouts.end(),
                                   [&](const TableLayout& l) { return l.schema().name == name; });
            if (it == layouts.end()) throw LookupError("no layout for dumped table '" + name + "'");
            auto id = store.add_table(*it, rows);
            t = &store.tables_[id];
            while (t->delta_blocks_.size() < delta_blocks) t->add_delta_block();
            t->unbound_.clear();
        } else if (tag == "delta_block") {
            if (!t) throw ValidationError("delta_block before table");
            size_t k;
            std::string k1, shadow, k2, k3;
            uint32_t hw;
            ls >> k >> k1 >> shadow >> k2 >> hw >> k3;
            auto& b = t->delta_blocks_.at(k);
            b.high_water = hw;
            b.free_slots.clear();
            for (uint32_t f; ls >> f;) b.free_slots.push_back(f);
            if (shadow == "-") {
                b.shadow.reset();
            } else {
                b.shadow = static_cast<uint32_t>(std::stoul(shadow));
                t->bound_[*b.shadow].push_back(static_cast<uint32_t>(k));
            }
        } else if (tag == "row") {
            if (!t) throw ValidationError("row before table");
            uint64_t r;
            std::string origin, bytes;
            int64_t head;
            ls >> r >> origin >> head >> bytes;
            t->origin_ts_.at(r) = origin == "never" ? TableStore::kNever : std::stoull(origin);
            t->head_.at(r) = head;
            t->write_slot({Region::Data, static_cast<uint32_t>(r / t->block_size()), static_cast<uint32_t>(r % t->block_size())},
                          unhex(bytes));
        } else if (tag == "version") {
            if (!t) throw ValidationError("version before table");
            size_t idx;
            VersionMeta v;
            std::string ref, prev, kind, bytes;
            ls >> idx >> v.logical_row >> ref >> v.write_ts >> v.read_ts >> prev >> kind;
            if (idx != t->versions_.size()) throw ValidationError("versions out of order in dump");
            v.row = parse_ref(ref);
            if (prev != "-") v.prev = std::stoull(prev);
            v.kind = parse_kind(kind);
            if (v.row && v.row->region == Region::Delta) {
                ls >> bytes;
                t->delta_owner_.at(uint64_t{v.row->block} * t->block_size() + v.row->slot) = v.logical_row;
                t->write_slot(*v.row, unhex(bytes));
            }
            t->versions_.push_back(std::move(v));
        } else if (tag == "snapshot") {
            if (!t) throw ValidationError("snapshot before table");
            uint64_t ts;
            ls >> ts;
            t->reset_snapshot();
            uint64_t entries = 0;
            store.apply_snapshot(static_cast<uint32_t>(t - store.tables_.data()), ts, nullptr, entries);
        } else if (tag == "end") {
            if (t) {
                for (uint32_t k = static_cast<uint32_t>(t->delta_blocks_.size()); k-- > 0;)
                    if (!t->delta_blocks_[k].shadow) t->unbound_.push_back(k);
            }
            t = nullptr;
        } else {
            throw ValidationError("unknown dump line '" + line + "'");
        }
    }
    return store;
}

}  // namespace pimhtap
