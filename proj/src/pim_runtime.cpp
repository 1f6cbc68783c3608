#include "pimhtap/pim_runtime.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>
#include <unordered_map>

#include "pimhtap/error.hpp"
#include "pimhtap/kernels.hpp"

namespace pimhtap {

PimRuntime::PimRuntime(const Geometry& geometry, MemorySystem& memory) : geometry_(geometry), memory_(memory) {
    geometry_.validate();
    units_.resize(geometry_.total_units());
    for (uint32_t c = 0; c < geometry_.channels; ++c)
        for (uint32_t r = 0; r < geometry_.ranks_per_channel; ++r)
            for (uint32_t d = 0; d < geometry_.devices_per_rank; ++d)
                for (uint32_t b = 0; b < geometry_.banks_per_device; ++b) units_[unit_index({c, r, d, b})].id = {c, r, d, b};
}

size_t PimRuntime::unit_index(UnitId id) const {
    const auto& g = geometry_;
    if (id.channel >= g.channels || id.rank >= g.ranks_per_channel || id.device >= g.devices_per_rank ||
        id.bank >= g.banks_per_device)
        throw LookupError("unit outside the geometry");
    return ((size_t{id.channel} * g.ranks_per_channel + id.rank) * g.devices_per_rank + id.device) * g.banks_per_device +
           id.bank;
}

const PimUnitState& PimRuntime::unit(UnitId id) const { return units_[unit_index(id)]; }
PimUnitState& PimRuntime::unit(UnitId id) { return units_[unit_index(id)]; }

std::vector<RankId> PimRuntime::ranks_of(const std::vector<UnitId>& units) const {
    std::set<RankId> s;
    for (const auto& u : units) s.insert(u.rank_id());
    return {s.begin(), s.end()};
}

Ack PimRuntime::dispatch(const EncodedRequest& request, std::span<const RankId> ranks, std::span<const UnitWork> work,
                         double at) {
    const LaunchRequest req = decode(request);
    const OpType op = req.op();
    ++control_messages_;
    Ack ack;
    ack.op = op;
    ack.issued = at;
    ack.ranks.assign(ranks.begin(), ranks.end());
    double start = at + geometry_.control_latency;
    for (const auto& r : ranks) start = std::max(start, rank_busy_[r]);
    ack.start = start;
    const bool hold = hands_over_banks(op);
    if (hold) ack.handover_s = memory_.handover(ranks, Controller::Pim, start);
    double longest = 0;
    for (const auto& w : work) {
        auto& u = unit(w.unit);
        double d = 0;
        if (hold) {
            if (w.load_bytes) d += memory_.pim_access(w.unit.rank_id(), w.load_bytes, AccessKind::Read);
            if (w.store_bytes) d += memory_.pim_access(w.unit.rank_id(), w.store_bytes, AccessKind::Write);
        } else {
            d = w.compute_s;
        }
        u.status = UnitStatus::Running;
        longest = std::max(longest, d);
    }
    double finish = start + ack.handover_s + longest;
    if (hold) {
        const double back = memory_.handover(ranks, Controller::Cpu, finish);
        ack.handover_s += back;
        finish += back;
    }
    ack.finish = finish;
    for (const auto& w : work) unit(w.unit).busy_until = finish;
    for (const auto& r : ranks) rank_busy_[r] = finish;
    last_finish_ = std::max(last_finish_, finish);
    memory_.log(Actor::Pim, std::string(to_string(op)), ack.ranks, start, finish - start);
    return ack;
}

PollResult PimRuntime::poll(double at) {
    ++control_messages_;
    PollResult r;
    r.status = at >= last_finish_ ? PollStatus::Done : PollStatus::Pending;
    r.response_at = std::max(at, last_finish_) + geometry_.control_latency;
    for (auto& u : units_)
        if (u.status == UnitStatus::Running && u.busy_until <= r.response_at) u.status = UnitStatus::Done;
    return r;
}

uint64_t PimRuntime::chunk_rows(uint64_t data_bytes_per_row, double result_bytes_per_row) const {
    // Data, one bitmap bit per row, and results must fit their WRAM halves.
    uint64_t rows = uint64_t{geometry_.wram_data_budget} * 8 / (8 * data_bytes_per_row + 1);
    if (result_bytes_per_row > 0)
        rows = std::min<uint64_t>(rows, static_cast<uint64_t>(geometry_.wram_result_budget() / result_bytes_per_row));
    if (rows >= 64) rows -= rows % 64;
    if (rows == 0) throw ValidationError("a single row does not fit in the WRAM budget");
    return rows;
}

PhaseRecord PimRuntime::run_phase(const LaunchRequest& req, const std::vector<RankId>& ranks,
                                  const std::vector<UnitWork>& work, double& t, uint64_t& messages) {
    const auto ack = dispatch(encode(req), ranks, work, t);
    const auto p = poll(ack.issued + geometry_.control_latency);
    messages += 2;
    PhaseRecord rec;
    rec.kind = hands_over_banks(req.op()) ? PhaseRecord::Kind::Load : PhaseRecord::Kind::Compute;
    rec.start = ack.start;
    rec.end = ack.finish;
    if (rec.kind == PhaseRecord::Kind::Load) {
        rec.blocked_begin = ack.start;
        rec.blocked_end = ack.finish;
    }
    for (const auto& w : work) rec.max_unit_bytes = std::max(rec.max_unit_bytes, w.load_bytes + w.store_bytes);
    t = p.response_at;
    return rec;
}

namespace {

struct Piece {
    Region region;
    uint32_t block;
    uint32_t first;
    uint32_t count;
};

struct Chunk {
    uint32_t pass = 0;
    bool last_of_pass = false;
    uint64_t rows = 0;
    std::vector<Piece> pieces;
};

void compare_bounds(CompareOp op, uint64_t a, uint64_t b, uint64_t& lo, uint64_t& hi, bool& negate) {
    constexpr uint64_t kMax = std::numeric_limits<uint64_t>::max();
    negate = false;
    switch (op) {
        case CompareOp::Eq: lo = hi = a; break;
        case CompareOp::Ne: lo = hi = a; negate = true; break;
        case CompareOp::Lt:
            if (a == 0) { lo = 1; hi = 0; } else { lo = 0; hi = a - 1; }
            break;
        case CompareOp::Le: lo = 0; hi = a; break;
        case CompareOp::Gt:
            if (a == kMax) { lo = 1; hi = 0; } else { lo = a + 1; hi = kMax; }
            break;
        case CompareOp::Ge: lo = a; hi = kMax; break;
        case CompareOp::Between: lo = a; hi = b; break;
        case CompareOp::True: lo = 0; hi = kMax; break;
    }
}

uint64_t round8(uint64_t x) { return (x + 7) / 8 * 8; }

}  // namespace

ColumnOpResult PimRuntime::execute_column_op(const ColumnOpSpec& spec, const TableStore& table, size_t column,
                                             const SnapshotBitmap& snapshot, double at) {
    if (spec.op != OpType::Filter && spec.op != OpType::Group && spec.op != OpType::Hash && spec.op != OpType::Aggregation)
        throw ValidationError("execute_column_op handles Filter, Group, Hash and Aggregation only");
    const auto& layout = table.layout();
    const auto& col = layout.schema().columns.at(column);
    const auto& frags = layout.fragments(column);
    if (frags.size() != 1 || col.width > 8)
        throw ValidationError("column '" + col.name + "' is not device-contiguous and at most 8 bytes; use the CPU path");
    if (spec.op == OpType::Aggregation && (!spec.group_of_row || spec.group_count == 0))
        throw ValidationError("aggregation needs a group id per row");
    const Fragment f = frags.front();
    const auto& part = layout.part(f.part);
    const uint64_t rw = part.row_width;
    const uint64_t cw = col.width;
    const uint64_t fetch = std::min<uint64_t>(rw, round8(cw));
    const uint64_t B = table.block_size();
    const auto& K = kernels::active();

    ColumnOpResult res;
    res.op = spec.op;
    res.start = at;
    res.end = at;

    // Slot streams per unit: data blocks, then the delta blocks shadowing them.
    std::map<UnitId, std::vector<Piece>> streams;
    auto unit_for = [&](uint64_t block) {
        const RankId r = layout.rank_of_block(f.part, block);
        return UnitId{r.channel, r.rank, layout.rotated_device(f.device, block), layout.bank_of_block(block)};
    };
    for (uint64_t b = 0; b < table.data_blocks(); ++b) {
        const uint64_t first = b * B;
        if (first >= table.rows()) break;
        const auto count = static_cast<uint32_t>(std::min<uint64_t>(B, table.rows() - first));
        streams[unit_for(b)].push_back({Region::Data, static_cast<uint32_t>(b), 0, count});
    }
    const auto& deltas = table.delta_blocks();
    for (uint32_t k = 0; k < deltas.size(); ++k) {
        if (!deltas[k].shadow || deltas[k].high_water == 0) continue;
        streams[unit_for(*deltas[k].shadow)].push_back({Region::Delta, k, 0, deltas[k].high_water});
    }
    if (streams.empty()) return res;

    const uint64_t extra = spec.op == OpType::Aggregation ? 4 : 0;
    double result_per_row = 0;
    switch (spec.op) {
        case OpType::Filter: result_per_row = 1.0 / 8; break;
        case OpType::Group: result_per_row = 12; break;
        case OpType::Hash: result_per_row = 8; break;
        default: break;
    }
    const uint64_t rows_per_chunk = chunk_rows(fetch + extra, result_per_row);
    uint32_t passes = 1;
    uint32_t groups_per_pass = spec.group_count;
    if (spec.op == OpType::Aggregation) {
        groups_per_pass = std::max<uint32_t>(1, geometry_.wram_result_budget() / 8);
        passes = (spec.group_count + groups_per_pass - 1) / groups_per_pass;
    }

    std::vector<UnitId> unit_ids;
    std::vector<std::vector<Chunk>> plans;
    for (const auto& [uid, pieces] : streams) {
        std::vector<Chunk> chunks;
        for (uint32_t pass = 0; pass < passes; ++pass) {
            Chunk cur;
            cur.pass = pass;
            for (const auto& pc : pieces) {
                uint32_t first = pc.first;
                uint32_t left = pc.count;
                while (left) {
                    const auto take = static_cast<uint32_t>(std::min<uint64_t>(left, rows_per_chunk - cur.rows));
                    cur.pieces.push_back({pc.region, pc.block, first, take});
                    cur.rows += take;
                    first += take;
                    left -= take;
                    if (cur.rows == rows_per_chunk) {
                        chunks.push_back(std::move(cur));
                        cur = Chunk{};
                        cur.pass = pass;
                    }
                }
            }
            if (cur.rows) chunks.push_back(std::move(cur));
            if (!chunks.empty()) chunks.back().last_of_pass = true;
        }
        unit_ids.push_back(uid);
        plans.push_back(std::move(chunks));
    }
    res.ranks = ranks_of(unit_ids);
    size_t phases = 0;
    for (const auto& p : plans) phases = std::max(phases, p.size());

    res.units.resize(unit_ids.size());
    std::vector<std::unordered_map<uint64_t, uint64_t>> dictionaries(unit_ids.size());
    std::vector<uint64_t> pending_store(unit_ids.size(), 0);
    for (size_t u = 0; u < unit_ids.size(); ++u) {
        res.units[u].unit = unit_ids[u];
        res.units[u].chunks = static_cast<uint32_t>(plans[u].size());
        if (spec.op == OpType::Aggregation) res.units[u].partials.assign(spec.group_count, 0);
    }

    uint64_t cmp_lo = 0, cmp_hi = 0;
    bool negate = false;
    compare_bounds(spec.compare, spec.lo, spec.hi, cmp_lo, cmp_hi, negate);

    const uint64_t handovers_before = memory_.stats(Actor::Pim).handovers + memory_.stats(Actor::Cpu).handovers;
    std::vector<uint64_t> values, hashes, owners;
    std::vector<uint32_t> groups;
    std::vector<uint64_t> bits, hits;
    double t = at;

    for (size_t k = 0; k <= phases; ++k) {
        // Load phase: store results of chunk k-1, load chunk k.
        std::vector<UnitWork> ls_work;
        uint64_t max_len = 0;
        for (size_t u = 0; u < unit_ids.size(); ++u) {
            UnitWork w{unit_ids[u], 0, pending_store[u], 0};
            if (k < plans[u].size()) {
                const auto& ch = plans[u][k];
                w.load_bytes = round8(ch.rows * (fetch + extra)) + round8((ch.rows + 7) / 8);
            }
            pending_store[u] = 0;
            max_len = std::max(max_len, w.load_bytes);
            if (w.load_bytes || w.store_bytes) ls_work.push_back(w);
        }
        LsParams ls;
        ls.op0_addr = static_cast<uint32_t>(std::min<uint64_t>(k * round8(rows_per_chunk * (fetch + extra)) / 8, 0xFFFFFF));
        ls.op0_len = static_cast<uint16_t>(max_len / 8);
        ls.op0_offset = 0;
        ls.op0_stride = 0;  // every unit addresses its own bank from the same local offset
        ls.result_addr = ls.op0_addr;
        ls.result_offset = static_cast<uint16_t>(geometry_.wram_data_budget / 8);
        res.phases.push_back(run_phase(LaunchRequest{ls}, res.ranks, ls_work, t, res.control_messages));
        ++res.load_phases;
        if (k == phases) break;

        // Compute phase over WRAM-resident chunks.
        std::vector<UnitWork> cp_work;
        for (size_t u = 0; u < unit_ids.size(); ++u) {
            if (k >= plans[u].size()) continue;
            const auto& ch = plans[u][k];
            auto& state = unit(unit_ids[u]);
            if (state.wram.empty()) state.wram.assign(geometry_.wram_capacity, 0);
            const size_t n = ch.rows;
            const size_t words = (n + 63) / 64;
            const size_t data_bytes = n * fetch;
            const size_t bitmap_off = round8(data_bytes + n * extra);
            state.staged_bytes = static_cast<uint32_t>(bitmap_off + words * 8);
            if (state.staged_bytes > geometry_.wram_data_budget) throw ProtocolError("WRAM data budget exceeded");

            owners.resize(n);
            groups.assign(n, 0);
            bits.assign(words, 0);
            size_t i = 0;
            for (const auto& pc : ch.pieces) {
                const uint64_t pb = pc.region == Region::Data ? pc.block : *deltas[pc.block].shadow;
                const uint8_t* region = table.device_region(f.part, pc.region, pc.block, layout.rotated_device(f.device, pb));
                for (uint32_t s = pc.first; s < pc.first + pc.count; ++s, ++i) {
                    uint8_t* dst = state.wram.data() + i * fetch;
                    std::memset(dst, 0, fetch);
                    std::memcpy(dst, region + uint64_t{s} * rw + f.device_offset, cw);
                    const RowRef ref{pc.region, pc.block, s};
                    const uint64_t row = table.owner(ref);
                    owners[i] = row;
                    bool on = row != TableStore::kNever && snapshot.visible(ref);
                    if (on && spec.row_mask) on = row < spec.row_mask->size() && spec.row_mask->test(row);
                    if (on && spec.op == OpType::Aggregation) {
                        const uint32_t g = (*spec.group_of_row)[row];
                        on = g != ColumnOpSpec::kNoGroup && g / groups_per_pass == ch.pass;
                        groups[i] = on ? g : 0;
                    }
                    if (on) bits[i >> 6] |= uint64_t{1} << (i & 63);
                }
            }
            std::memcpy(state.wram.data() + bitmap_off, bits.data(), words * 8);

            values.resize(n);
            K.extract_u64(state.wram.data(), data_bytes, fetch, static_cast<uint32_t>(cw), n, values.data());
            auto& out = res.units[u];
            uint64_t store = 0;
            switch (spec.op) {
                case OpType::Filter: {
                    hits.assign(words, 0);
                    K.filter_range(values.data(), n, cmp_lo, cmp_hi, negate, bits.data(), hits.data());
                    for (size_t j = 0; j < n; ++j)
                        if ((hits[j >> 6] >> (j & 63)) & 1u) out.rows.push_back(owners[j]);
                    store = words * 8;
                    break;
                }
                case OpType::Hash: {
                    hashes.resize(n);
                    K.hash_u64(values.data(), n, spec.seed, hashes.data());
                    uint64_t produced = 0;
                    for (size_t j = 0; j < n; ++j) {
                        if (!((bits[j >> 6] >> (j & 63)) & 1u)) continue;
                        out.rows.push_back(owners[j]);
                        out.values.push_back(hashes[j]);
                        ++produced;
                    }
                    store = produced * 8;
                    break;
                }
                case OpType::Group: {
                    auto& dict = dictionaries[u];
                    const size_t before = out.dictionary.size();
                    uint64_t produced = 0;
                    for (size_t j = 0; j < n; ++j) {
                        if (!((bits[j >> 6] >> (j & 63)) & 1u)) continue;
                        auto [it, fresh] = dict.try_emplace(values[j], out.dictionary.size());
                        if (fresh) out.dictionary.push_back(values[j]);
                        out.rows.push_back(owners[j]);
                        out.values.push_back(it->second);
                        ++produced;
                    }
                    store = produced * 4 + (out.dictionary.size() - before) * 8;
                    break;
                }
                case OpType::Aggregation: {
                    K.grouped_sum(values.data(), groups.data(), bits.data(), n, out.partials.data());
                    if (ch.last_of_pass) {
                        const uint64_t first = uint64_t{ch.pass} * groups_per_pass;
                        store = std::min<uint64_t>(groups_per_pass, spec.group_count - first) * 8;
                    }
                    break;
                }
                default: break;
            }
            pending_store[u] = round8(store);
            res.rows_scanned += n;
            out.scanned += n;
            cp_work.push_back({unit_ids[u], 0, 0, static_cast<double>(n) / geometry_.pim_compute_rate});
        }
        LaunchRequest req;
        ColumnOpFields cf{static_cast<uint16_t>(0), 0, static_cast<uint16_t>(geometry_.wram_data_budget / 8),
                          static_cast<uint8_t>(cw)};
        switch (spec.op) {
            case OpType::Filter: req.params = FilterParams{cf, spec.lo, spec.compare, spec.hi}; break;
            case OpType::Group: req.params = GroupParams{cf, 0, 0}; break;
            case OpType::Hash: req.params = HashParams{cf, spec.seed}; break;
            default: req.params = AggregationParams{cf, 0, static_cast<uint16_t>(std::min<uint32_t>(groups_per_pass, 0xFFFF))};
        }
        res.phases.push_back(run_phase(req, res.ranks, cp_work, t, res.control_messages));
        ++res.compute_phases;
    }
    res.end = t;
    for (const auto& p : res.phases)
        if (p.kind == PhaseRecord::Kind::Load) res.blocked_s += p.blocked_end - p.blocked_begin;
    res.handovers = memory_.stats(Actor::Pim).handovers + memory_.stats(Actor::Cpu).handovers - handovers_before;
    return res;
}

JoinOpResult PimRuntime::execute_join(std::vector<JoinBucket> buckets, double at) {
    JoinOpResult res;
    res.start = at;
    res.end = at;
    constexpr uint64_t kEntry = 16;  // key + row id
    const uint64_t budget_entries = geometry_.wram_data_budget / kEntry;

    // Split buckets that exceed the data budget into (left piece, right piece) tasks.
    struct Task {
        size_t bucket;
        size_t l0, l1, r0, r1;
    };
    std::map<UnitId, std::vector<Task>> tasks;
    for (size_t b = 0; b < buckets.size(); ++b) {
        const auto& bk = buckets[b];
        if (bk.left.empty() || bk.right.empty()) continue;
        const uint64_t total = bk.left.size() + bk.right.size();
        if (total <= budget_entries) {
            tasks[bk.unit].push_back({b, 0, bk.left.size(), 0, bk.right.size()});
            continue;
        }
        ++res.splits;
        const uint64_t half = budget_entries / 2;
        for (size_t l = 0; l < bk.left.size(); l += half)
            for (size_t r = 0; r < bk.right.size(); r += half)
                tasks[bk.unit].push_back(
                    {b, l, std::min<size_t>(bk.left.size(), l + half), r, std::min<size_t>(bk.right.size(), r + half)});
    }
    if (tasks.empty()) return res;

    std::vector<UnitId> ids;
    for (const auto& [u, _] : tasks) ids.push_back(u);
    const auto ranks = ranks_of(ids);
    size_t phases = 0;
    for (const auto& [_, ts] : tasks) phases = std::max(phases, ts.size());

    std::map<UnitId, uint64_t> pending;
    double t = at;
    for (size_t k = 0; k <= phases; ++k) {
        std::vector<UnitWork> ls;
        for (const auto& [u, ts] : tasks) {
            UnitWork w{u, 0, pending[u], 0};
            if (k < ts.size()) w.load_bytes = ((ts[k].l1 - ts[k].l0) + (ts[k].r1 - ts[k].r0)) * kEntry;
            pending[u] = 0;
            if (w.load_bytes || w.store_bytes) ls.push_back(w);
        }
        LsParams lp;
        lp.op0_addr = static_cast<uint32_t>(std::min<uint64_t>(k * budget_entries * kEntry / 8, 0xFFFFFF));
        res.phases.push_back(run_phase(LaunchRequest{lp}, ranks, ls, t, res.control_messages));
        ++res.load_phases;
        if (k == phases) break;

        std::vector<UnitWork> cp;
        for (const auto& [u, ts] : tasks) {
            if (k >= ts.size()) continue;
            const auto& task = ts[k];
            const auto& bk = buckets[task.bucket];
            std::unordered_multimap<uint64_t, uint64_t> build;
            for (size_t i = task.l0; i < task.l1; ++i) build.emplace(bk.left[i].first, bk.left[i].second);
            uint64_t produced = 0;
            for (size_t i = task.r0; i < task.r1; ++i) {
                auto [lo, hi] = build.equal_range(bk.right[i].first);
                for (auto it = lo; it != hi; ++it) {
                    res.pairs.emplace_back(it->second, bk.right[i].second);
                    ++produced;
                }
            }
            pending[u] = produced * 16;
            const double n = static_cast<double>((task.l1 - task.l0) + (task.r1 - task.r0) + produced);
            cp.push_back({u, 0, 0, n / geometry_.pim_compute_rate});
        }
        res.phases.push_back(run_phase(LaunchRequest{JoinParams{0, 0, static_cast<uint16_t>(geometry_.wram_data_budget / 8), 8}},
                                       ranks, cp, t, res.control_messages));
    }
    res.end = t;
    for (const auto& p : res.phases)
        if (p.kind == PhaseRecord::Kind::Load) res.blocked_s += p.blocked_end - p.blocked_begin;
    return res;
}

}  // namespace pimhtap
