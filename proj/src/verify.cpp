#include "pimhtap/verify.hpp"

#include <random>

#include "pimhtap/error.hpp"
#include "pimhtap/pim_runtime.hpp"
#include "pimhtap/query_engine.hpp"
#include "pimhtap/reference_executor.hpp"

namespace pimhtap::verify {

namespace {

Geometry small_geometry() {
    Geometry g;
    g.channels = 2;
    g.ranks_per_channel = 2;
    g.devices_per_rank = 4;
    g.banks_per_device = 2;
    return g;
}

std::vector<uint8_t> random_row(const TableSchema& s, std::mt19937_64& rng, uint64_t domain) {
    std::vector<uint8_t> out(s.row_bytes());
    for (size_t c = 0; c < s.columns.size(); ++c) {
        const uint64_t v = domain ? rng() % domain : rng();
        for (uint32_t b = 0; b < s.columns[c].width; ++b) out[s.column_offset(c) + b] = b < 8 ? uint8_t(v >> (8 * b)) : 0;
    }
    return out;
}

}  // namespace

SnapshotOracleReport snapshot_history(uint64_t seed, uint64_t transactions, uint64_t rows, uint32_t checkpoints) {
    std::mt19937_64 rng(seed);
    const Geometry g = small_geometry();
    TableSchema s;
    s.name = "t";
    s.row_count = rows;
    s.columns = {{"a", 4, true}, {"b", 8, true}, {"c", 6, false}, {"d", 2, false}};
    MvccStore store(g);
    const uint32_t t = store.add_table(generate_compact_layout(s, g, 0.5), rows);
    for (uint64_t r = 0; r < rows; ++r) store.load_row(t, r, random_row(s, rng, 0));

    SnapshotOracleReport rep;
    std::vector<TxnId> open;
    const uint64_t every = std::max<uint64_t>(1, transactions / std::max<uint32_t>(1, checkpoints));
    auto check = [&] {
        const uint64_t lo = store.current_snapshot(t).snapshot_ts;
        const uint64_t hi = store.clock();
        const uint64_t ts = lo + (hi > lo ? rng() % (hi - lo + 1) : 0);
        const auto& snap = store.build_snapshot(t, ts);
        ++rep.checks;
        uint64_t visible = 0;
        for (uint64_t r = 0; r < store.table(t).rows(); ++r) {
            ++rep.rows_checked;
            const auto ref = store.visible_version(t, r, ts);
            if (ref) {
                ++visible;
                if (!snap.visible(*ref)) ++rep.mismatches;
            }
        }
        if (snap.data_bits.count() + snap.delta_bits.count() != visible) ++rep.mismatches;
    };

    for (uint64_t i = 0; i < transactions; ++i) {
        ++rep.transactions;
        // Keep a few transactions in flight so conflicts and aborts happen.
        if (open.size() < 4) open.push_back(store.begin());
        const size_t pick = rng() % open.size();
        const TxnId id = open[pick];
        const uint64_t n = store.table(t).rows();
        try {
            const uint32_t ops = 1 + rng() % 3;
            for (uint32_t k = 0; k < ops; ++k) {
                const uint32_t what = rng() % 10;
                const uint64_t row = rng() % n;
                if (what < 6) store.update(id, t, row, random_row(s, rng, 0));
                else if (what < 8) store.insert(id, t, random_row(s, rng, 0));
                else store.remove(id, t, row);
            }
            if (rng() % 8 == 0) store.abort(id);
            else if (store.commit(id).committed) ++rep.committed;
        } catch (const LookupError&) {
            store.abort(id);  // row not visible to this transaction
        }
        open.erase(open.begin() + pick);
        if ((i + 1) % every == 0) {
            check();
            if (rng() % 3 == 0) {
                for (auto o : open) store.abort(o);
                open.clear();
                store.collapse_deltas(t);
            }
        }
    }
    for (auto o : open) store.abort(o);
    check();
    return rep;
}

QueryOracleReport query_round(uint64_t seed, uint64_t rows) {
    std::mt19937_64 rng(seed);
    const Geometry g = small_geometry();
    MemorySystem mem(g);
    mem.set_timeline_enabled(false);
    MvccStore store(g, &mem);

    auto width = [&] { return uint32_t(1 + rng() % 8); };
    TableSchema a;
    a.name = "a";
    a.row_count = rows;
    a.columns = {{"k", width(), true}, {"grp", 1, true}, {"val", 8, true}, {"jk", 4, true}, {"note", 12, false},
                 {"wide", 10, true}};
    TableSchema b;
    b.name = "b";
    b.row_count = rows / 2 + 1;
    b.columns = {{"jk", 4, true}, {"x", 3, false}, {"y", 8, true}};
    const double th = double(rng() % 5) / 4.0;
    const uint32_t ta = store.add_table(generate_compact_layout(a, g, th), a.row_count);
    const uint32_t tb = store.add_table(generate_compact_layout(b, g, th), b.row_count);

    auto row_a = [&] {
        auto img = random_row(a, rng, 0);
        const uint64_t grp = rng() % 16, jk = rng() % (rows / 4 + 1);
        img[a.column_offset(1)] = uint8_t(grp);
        for (int i = 0; i < 4; ++i) img[a.column_offset(3) + i] = uint8_t(jk >> (8 * i));
        return img;
    };
    auto row_b = [&] {
        auto img = random_row(b, rng, 0);
        const uint64_t jk = rng() % (rows / 4 + 1);
        for (int i = 0; i < 4; ++i) img[b.column_offset(0) + i] = uint8_t(jk >> (8 * i));
        return img;
    };
    for (uint64_t r = 0; r < a.row_count; ++r) store.load_row(ta, r, row_a());
    for (uint64_t r = 0; r < b.row_count; ++r) store.load_row(tb, r, row_b());

    auto churn = [&](uint64_t txns) {
        for (uint64_t i = 0; i < txns; ++i) {
            const TxnId id = store.begin();
            const uint64_t r = rng() % store.table(ta).rows();
            try {
                switch (rng() % 4) {
                    case 0: store.insert(id, ta, row_a()); break;
                    case 1: store.remove(id, ta, r); break;
                    default: store.update(id, ta, r, row_a());
                }
                store.update(id, tb, rng() % store.table(tb).rows(), row_b());
            } catch (const LookupError&) {
                store.abort(id);  // picked a deleted row
                continue;
            }
            store.commit(id);
        }
    };
    churn(rows / 4);
    const uint64_t ts = store.clock();
    // Work committed after the snapshot plus one transaction left open.
    churn(rows / 20);
    const TxnId pending = store.begin();
    for (uint64_t r = 0; r < store.table(ta).rows(); ++r) {
        if (!store.visible_version(ta, r, store.clock())) continue;
        store.update(pending, ta, r, row_a());
        break;
    }

    PimRuntime rt(g, mem);
    QueryEngine qe(store, rt, rng());
    QueryOracleReport rep;
    const auto snap_a = store.build_snapshot(ta, ts);
    const auto snap_b = store.build_snapshot(tb, ts);
    auto fail = [&](const std::string& what) {
        ++rep.mismatches;
        if (rep.first_failure.empty()) rep.first_failure = what + " (seed " + std::to_string(seed) + ")";
    };

    const CompareOp ops[] = {CompareOp::Eq, CompareOp::Ne, CompareOp::Lt, CompareOp::Le,
                             CompareOp::Gt, CompareOp::Ge, CompareOp::Between, CompareOp::True};
    const auto& sa = store.table(ta).layout().schema();
    for (size_t c : {sa.index_of("k"), sa.index_of("val"), sa.index_of("note"), sa.index_of("wide")}) {
        const uint32_t w = sa.columns[c].width;
        const uint64_t m = w >= 8 ? ~uint64_t{0} : (uint64_t{1} << (8 * w)) - 1;
        uint64_t lo = rng() & m, hi = rng() & m;
        if (lo > hi) std::swap(lo, hi);
        const Predicate p{ops[rng() % 8], lo, hi};
        ++rep.queries;
        if (qe.run_filter(ta, c, p, snap_a) != reference::filter(store, ta, c, p, ts)) fail("filter on " + sa.columns[c].name);
    }
    const Bitmap mask = reference::filter(store, ta, sa.index_of("val"), {CompareOp::Lt, uint64_t{1} << 63, 0}, ts);
    ++rep.queries;
    if (qe.run_group_aggregate(ta, sa.index_of("grp"), sa.index_of("val"), snap_a, &mask) !=
        reference::group_sum(store, ta, sa.index_of("grp"), sa.index_of("val"), ts, &mask))
        fail("group-sum");
    ++rep.queries;
    if (qe.run_group_aggregate(ta, sa.index_of("k"), sa.index_of("jk"), snap_a) !=
        reference::group_sum(store, ta, sa.index_of("k"), sa.index_of("jk"), ts))
        fail("group-sum by k");
    ++rep.queries;
    if (qe.run_sum(ta, sa.index_of("val"), snap_a) != reference::sum(store, ta, sa.index_of("val"), ts)) fail("sum");
    ++rep.queries;
    if (qe.run_hash_join(ta, sa.index_of("jk"), snap_a, tb, 0, snap_b) != reference::join(store, ta, sa.index_of("jk"), tb, 0, ts))
        fail("hash join");
    store.abort(pending);
    rep.cpu_fallbacks = qe.cpu_fallbacks();
    return rep;
}

}  // namespace pimhtap::verify
