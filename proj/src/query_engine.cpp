#include "pimhtap/query_engine.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "pimhtap/csv.hpp"
#include "pimhtap/error.hpp"
#include "pimhtap/kernels.hpp"

namespace pimhtap {

bool Predicate::matches(uint64_t v) const {
    switch (op) {
        case CompareOp::Eq: return v == lo;
        case CompareOp::Ne: return v != lo;
        case CompareOp::Lt: return v < lo;
        case CompareOp::Le: return v <= lo;
        case CompareOp::Gt: return v > lo;
        case CompareOp::Ge: return v >= lo;
        case CompareOp::Between: return lo <= v && v <= hi;
        case CompareOp::True: return true;
    }
    return false;
}

std::string_view to_string(StageKind k) {
    switch (k) {
        case StageKind::ColumnOp: return "column_op";
        case StageKind::CpuScan: return "cpu_scan";
        case StageKind::CpuTransfer: return "cpu_transfer";
        case StageKind::CpuMerge: return "cpu_merge";
    }
    return "?";
}

double QueryPlan::load_s() const {
    double s = 0;
    for (const auto& st : stages) s += st.load_s;
    return s;
}

double QueryPlan::blocked_s() const {
    double s = 0;
    for (const auto& st : stages) s += st.blocked_s;
    return s;
}

bool QueryPlan::consistent() const {
    return std::all_of(stages.begin(), stages.end(), [&](const StageRecord& s) { return s.snapshot_ts == snapshot_ts; });
}

std::string QueryPlan::to_csv() const {
    std::ostringstream os;
    CsvWriter w(os, "query-stages",
                {"query", "stage", "kind", "table", "column", "snapshot_ts", "start_s", "end_s", "blocked_s", "load_s",
                 "cpu_bytes", "control_messages", "cpu_fallback"});
    for (const auto& s : stages)
        w.row(name, s.name, std::string(to_string(s.kind)), s.table, s.column, s.snapshot_ts, s.start, s.end, s.blocked_s,
              s.load_s, s.cpu_bytes, s.control_messages, s.cpu_fallback ? 1 : 0);
    return os.str();
}

QueryEngine::QueryEngine(MvccStore& store, PimRuntime& runtime, uint64_t hash_seed)
    : store_(store), runtime_(runtime), seed_(hash_seed) {}

void QueryEngine::begin(std::string name, uint64_t snapshot_ts) {
    plan_ = QueryPlan{};
    plan_.name = std::move(name);
    plan_.snapshot_ts = snapshot_ts;
}

QueryPlan QueryEngine::finish() { return std::exchange(plan_, QueryPlan{}); }

bool QueryEngine::pim_scannable(uint32_t table, size_t column) const {
    const auto& layout = store_.table(table).layout();
    return layout.device_contiguous(column) && layout.schema().columns.at(column).width <= 8;
}

StageRecord& QueryEngine::open_stage(std::string name, StageKind kind, uint32_t table, size_t column,
                                     const SnapshotBitmap& snap) {
    const auto& t = store_.table(table);
    if (plan_.stages.empty() && plan_.name.empty()) plan_.snapshot_ts = snap.snapshot_ts;
    if (std::find(plan_.tables.begin(), plan_.tables.end(), t.name()) == plan_.tables.end()) plan_.tables.push_back(t.name());
    StageRecord st;
    st.name = std::move(name);
    st.kind = kind;
    st.table = t.name();
    st.column = t.layout().schema().columns.at(column).name;
    st.snapshot_ts = snap.snapshot_ts;
    st.start = now_;
    st.end = now_;
    plan_.stages.push_back(std::move(st));
    return plan_.stages.back();
}

void QueryEngine::close_column_stage(StageRecord& st, const ColumnOpResult& r) {
    st.end = r.end;
    st.blocked_s = r.blocked_s;
    st.control_messages = r.control_messages;
    for (const auto& p : r.phases)
        if (p.kind == PhaseRecord::Kind::Load) st.load_s += p.end - p.start;
    now_ = std::max(now_, r.end);
}

RankId QueryEngine::rank_of_row(uint32_t table, size_t column, uint64_t row) const {
    const auto& layout = store_.table(table).layout();
    return layout.rank_of_block(layout.fragments(column).front().part, row / layout.block_size());
}

UnitId QueryEngine::unit_of_bucket(uint64_t bucket) const {
    const auto& g = runtime_.geometry();
    UnitId u;
    u.bank = static_cast<uint32_t>(bucket % g.banks_per_device);
    bucket /= g.banks_per_device;
    u.device = static_cast<uint32_t>(bucket % g.devices_per_rank);
    bucket /= g.devices_per_rank;
    u.rank = static_cast<uint32_t>(bucket % g.ranks_per_channel);
    u.channel = static_cast<uint32_t>(bucket / g.ranks_per_channel);
    return u;
}

void QueryEngine::bill(StageRecord& st, const std::map<RankId, uint64_t>& per_rank, AccessKind kind) {
    if (per_rank.empty()) return;
    std::vector<CpuSegment> segs;
    for (const auto& [r, b] : per_rank)
        if (b) segs.push_back({r, b});
    if (segs.empty()) return;
    const auto res = runtime_.memory().cpu_access(segs, kind, now_);
    now_ = res.end;
    st.end = now_;
    st.cpu_bytes += res.billed_bytes;
}

ColumnValues QueryEngine::cpu_scan(StageRecord& st, uint32_t table, size_t column, const SnapshotBitmap& snapshot) {
    ++cpu_fallbacks_;
    st.cpu_fallback = true;
    auto vals = store_.visible_scan(table, column, snapshot);
    const auto& t = store_.table(table);
    const auto& layout = t.layout();
    std::set<uint32_t> parts;
    for (const auto& f : layout.fragments(column)) parts.insert(f.part);
    // Each visible row costs the cache lines of every part holding a fragment.
    std::map<RankId, uint64_t> per_rank;
    for (uint64_t row : vals.rows)
        for (uint32_t p : parts)
            per_rank[layout.rank_of_block(p, row / layout.block_size())] +=
                (uint64_t{layout.devices()} * layout.part(p).row_width + 63) / 64 * 64;
    bill(st, per_rank, AccessKind::Read);
    return vals;
}

Bitmap QueryEngine::run_filter(uint32_t table, size_t column, const Predicate& pred, const SnapshotBitmap& snapshot,
                               const Bitmap* mask) {
    const auto& t = store_.table(table);
    Bitmap out(t.rows());
    auto& st = open_stage("filter", StageKind::ColumnOp, table, column, snapshot);
    if (!pim_scannable(table, column)) {
        st.kind = StageKind::CpuScan;
        const auto vals = cpu_scan(st, table, column, snapshot);
        for (size_t i = 0; i < vals.rows.size(); ++i) {
            const uint64_t r = vals.rows[i];
            if (mask && !(r < mask->size() && mask->test(r))) continue;
            if (pred.matches(vals.value(i))) out.set(r);
        }
        return out;
    }
    ColumnOpSpec spec;
    spec.op = OpType::Filter;
    spec.compare = pred.op;
    spec.lo = pred.lo;
    spec.hi = pred.hi;
    spec.row_mask = mask;
    const auto res = runtime_.execute_column_op(spec, t, column, snapshot, now_);
    close_column_stage(st, res);
    std::map<RankId, uint64_t> fetch;
    for (const auto& u : res.units) {
        for (uint64_t r : u.rows) out.set(r);
        fetch[u.unit.rank_id()] += (u.scanned + 63) / 64 * 8;
    }
    auto& tr = open_stage("fetch_bitmap", StageKind::CpuTransfer, table, column, snapshot);
    bill(tr, fetch, AccessKind::Read);
    return out;
}

std::map<uint64_t, uint64_t> QueryEngine::run_group_aggregate(uint32_t table, size_t group_col, size_t agg_col,
                                                              const SnapshotBitmap& snapshot, const Bitmap* mask) {
    const auto& t = store_.table(table);
    const uint64_t rows = t.rows();
    std::vector<uint32_t> group_of_row(rows, ColumnOpSpec::kNoGroup);
    std::vector<uint64_t> group_values;  // global id -> value
    std::map<uint64_t, uint32_t> ids;
    auto id_of = [&](uint64_t v) {
        auto [it, fresh] = ids.try_emplace(v, static_cast<uint32_t>(group_values.size()));
        if (fresh) group_values.push_back(v);
        return it->second;
    };

    // Group stage.
    auto& gs = open_stage("group", StageKind::ColumnOp, table, group_col, snapshot);
    std::map<RankId, uint64_t> index_reads;
    if (!pim_scannable(table, group_col)) {
        gs.kind = StageKind::CpuScan;
        const auto vals = cpu_scan(gs, table, group_col, snapshot);
        for (size_t i = 0; i < vals.rows.size(); ++i) {
            const uint64_t r = vals.rows[i];
            if (mask && !(r < mask->size() && mask->test(r))) continue;
            group_of_row[r] = id_of(vals.value(i));
        }
    } else {
        ColumnOpSpec spec;
        spec.op = OpType::Group;
        spec.row_mask = mask;
        const auto res = runtime_.execute_column_op(spec, t, group_col, snapshot, now_);
        close_column_stage(gs, res);
        for (const auto& u : res.units) {
            for (size_t i = 0; i < u.rows.size(); ++i) group_of_row[u.rows[i]] = id_of(u.dictionary[u.values[i]]);
            index_reads[u.unit.rank_id()] += u.rows.size() * 4 + u.dictionary.size() * 8;
        }
    }
    if (group_values.empty()) return {};

    std::vector<uint64_t> sums(group_values.size(), 0);
    if (!pim_scannable(table, agg_col)) {
        auto& as = open_stage("aggregate", StageKind::CpuScan, table, agg_col, snapshot);
        const auto vals = cpu_scan(as, table, agg_col, snapshot);
        for (size_t i = 0; i < vals.rows.size(); ++i) {
            const uint32_t g = group_of_row[vals.rows[i]];
            if (g != ColumnOpSpec::kNoGroup) sums[g] += vals.value(i);
        }
    } else {
        // Indices travel through the CPU to the banks holding each row's agg_col segment.
        auto& tr = open_stage("route_indices", StageKind::CpuTransfer, table, agg_col, snapshot);
        bill(tr, index_reads, AccessKind::Read);
        std::map<RankId, uint64_t> index_writes;
        for (uint64_t r = 0; r < rows; ++r)
            if (group_of_row[r] != ColumnOpSpec::kNoGroup) index_writes[rank_of_row(table, agg_col, r)] += 4;
        bill(tr, index_writes, AccessKind::Write);

        auto& as = open_stage("aggregate", StageKind::ColumnOp, table, agg_col, snapshot);
        ColumnOpSpec spec;
        spec.op = OpType::Aggregation;
        spec.group_of_row = &group_of_row;
        spec.group_count = static_cast<uint32_t>(group_values.size());
        const auto res = runtime_.execute_column_op(spec, t, agg_col, snapshot, now_);
        close_column_stage(as, res);

        auto& ms = open_stage("merge", StageKind::CpuMerge, table, agg_col, snapshot);
        std::map<RankId, uint64_t> partial_reads;
        for (const auto& u : res.units) {
            for (size_t g = 0; g < u.partials.size(); ++g) sums[g] += u.partials[g];
            partial_reads[u.unit.rank_id()] += u.partials.size() * 8;
        }
        bill(ms, partial_reads, AccessKind::Read);
    }
    std::map<uint64_t, uint64_t> out;
    for (size_t g = 0; g < group_values.size(); ++g) out[group_values[g]] = sums[g];
    return out;
}

uint64_t QueryEngine::run_sum(uint32_t table, size_t column, const SnapshotBitmap& snapshot, const Bitmap* mask) {
    const auto& t = store_.table(table);
    uint64_t total = 0;
    if (!pim_scannable(table, column)) {
        auto& st = open_stage("sum", StageKind::CpuScan, table, column, snapshot);
        const auto vals = cpu_scan(st, table, column, snapshot);
        for (size_t i = 0; i < vals.rows.size(); ++i)
            if (!mask || (vals.rows[i] < mask->size() && mask->test(vals.rows[i]))) total += vals.value(i);
        return total;
    }
    std::vector<uint32_t> group_of_row(t.rows(), 0);
    if (mask)
        for (uint64_t r = 0; r < t.rows(); ++r)
            if (!(r < mask->size() && mask->test(r))) group_of_row[r] = ColumnOpSpec::kNoGroup;
    auto& st = open_stage("sum", StageKind::ColumnOp, table, column, snapshot);
    ColumnOpSpec spec;
    spec.op = OpType::Aggregation;
    spec.group_of_row = &group_of_row;
    spec.group_count = 1;
    const auto res = runtime_.execute_column_op(spec, t, column, snapshot, now_);
    close_column_stage(st, res);
    auto& ms = open_stage("merge", StageKind::CpuMerge, table, column, snapshot);
    std::map<RankId, uint64_t> reads;
    for (const auto& u : res.units) {
        total += u.partials.at(0);
        reads[u.unit.rank_id()] += 8;
    }
    bill(ms, reads, AccessKind::Read);
    return total;
}

JoinPairs QueryEngine::run_hash_join(uint32_t table_a, size_t col_a, const SnapshotBitmap& snap_a, uint32_t table_b,
                                     size_t col_b, const SnapshotBitmap& snap_b, const Bitmap* mask_a,
                                     const Bitmap* mask_b) {
    const uint64_t units = runtime_.geometry().total_units();
    std::vector<JoinBucket> buckets(units);
    for (uint64_t b = 0; b < units; ++b) buckets[b].unit = unit_of_bucket(b);
    std::map<RankId, uint64_t> writes;

    // Hash one side; the CPU reads the hashes and files each row into its bucket.
    auto hash_side = [&](uint32_t table, size_t column, const SnapshotBitmap& snap, const Bitmap* mask, bool left) {
        auto& hs = open_stage(left ? "hash_left" : "hash_right", StageKind::ColumnOp, table, column, snap);
        std::vector<std::pair<uint64_t, uint64_t>> hashed;  // (row, hash)
        std::map<RankId, uint64_t> reads;
        if (!pim_scannable(table, column)) {
            hs.kind = StageKind::CpuScan;
            const auto vals = cpu_scan(hs, table, column, snap);
            for (size_t i = 0; i < vals.rows.size(); ++i) {
                const uint64_t r = vals.rows[i];
                if (mask && !(r < mask->size() && mask->test(r))) continue;
                hashed.emplace_back(r, kernels::mix64(vals.value(i), seed_));
            }
        } else {
            ColumnOpSpec spec;
            spec.op = OpType::Hash;
            spec.seed = seed_;
            spec.row_mask = mask;
            const auto res = runtime_.execute_column_op(spec, store_.table(table), column, snap, now_);
            close_column_stage(hs, res);
            for (const auto& u : res.units) {
                for (size_t i = 0; i < u.rows.size(); ++i) hashed.emplace_back(u.rows[i], u.values[i]);
                reads[u.unit.rank_id()] += u.rows.size() * 8;
            }
        }
        auto& tr = open_stage(left ? "bucket_left" : "bucket_right", StageKind::CpuTransfer, table, column, snap);
        bill(tr, reads, AccessKind::Read);
        for (const auto& [row, h] : hashed) {
            auto& bk = buckets[h % units];
            (left ? bk.left : bk.right).emplace_back(h, row);
            writes[bk.unit.rank_id()] += 16;
        }
        return &tr;
    };
    hash_side(table_a, col_a, snap_a, mask_a, true);
    auto* tr = hash_side(table_b, col_b, snap_b, mask_b, false);
    bill(*tr, writes, AccessKind::Write);

    // mix64 is a bijection for a fixed seed, so equal hashes mean equal keys.
    auto& js = open_stage("join", StageKind::ColumnOp, table_a, col_a, snap_a);
    const auto res = runtime_.execute_join(std::move(buckets), now_);
    js.end = res.end;
    js.blocked_s = res.blocked_s;
    js.control_messages = res.control_messages;
    for (const auto& p : res.phases)
        if (p.kind == PhaseRecord::Kind::Load) js.load_s += p.end - p.start;
    now_ = std::max(now_, res.end);
    JoinPairs pairs = res.pairs;
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

}  // namespace pimhtap
