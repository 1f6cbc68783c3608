#include "pimhtap/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "pimhtap/csv.hpp"
#include "pimhtap/defrag.hpp"
#include "pimhtap/error.hpp"

namespace pimhtap {

// ---- named queries ----

const std::vector<std::string>& query_names() {
    static const std::vector<std::string> names{"q1", "q6", "q9"};
    return names;
}

NamedQueryResult run_named_query(QueryEngine& engine, Bench& bench, std::string_view name, uint64_t ts) {
    auto& store = *bench.store;
    const uint32_t OL = bench.id("orderline");
    NamedQueryResult out;
    engine.begin(std::string(name), ts);
    const auto& ol_snap = store.build_snapshot(OL, ts);
    auto col = [&](std::string_view t, std::string_view c) { return bench.column(t, c); };
    if (name == "q1") {
        const Bitmap m = engine.run_filter(OL, col("orderline", "ol_delivery_d"), {CompareOp::Gt, 500000, 0}, ol_snap);
        out.groups = engine.run_group_aggregate(OL, col("orderline", "ol_number"), col("orderline", "ol_amount"), ol_snap, &m);
        for (const auto& [g, s] : out.groups) out.value += s;
    } else if (name == "q6") {
        const Bitmap a =
            engine.run_filter(OL, col("orderline", "ol_delivery_d"), {CompareOp::Between, 200000, 600000}, ol_snap);
        const Bitmap b = engine.run_filter(OL, col("orderline", "ol_quantity"), {CompareOp::Between, 1, 5}, ol_snap, &a);
        out.value = engine.run_sum(OL, col("orderline", "ol_amount"), ol_snap, &b);
    } else if (name == "q9") {
        const uint32_t IT = bench.id("item");
        const auto& it_snap = store.build_snapshot(IT, ts);
        const uint64_t half = std::max<uint64_t>(1, store.table(IT).rows() / 2);
        const Bitmap items = engine.run_filter(IT, col("item", "i_id"), {CompareOp::Le, half, 0}, it_snap);
        const auto pairs = engine.run_hash_join(OL, col("orderline", "ol_i_id"), ol_snap, IT, col("item", "i_id"), it_snap,
                                                nullptr, &items);
        Bitmap lines(store.table(OL).rows());
        for (const auto& [l, r] : pairs) lines.set(l);
        out.value = engine.run_sum(OL, col("orderline", "ol_amount"), ol_snap, &lines);
    } else {
        throw ValidationError("unknown query '" + std::string(name) + "'");
    }
    out.plan = engine.finish();
    return out;
}

// ---- layout experiments ----

std::vector<ThPoint> th_sweep(const Catalog& catalog, const Geometry& geometry, const std::vector<double>& th_list) {
    std::vector<ThPoint> out;
    for (double th : th_list) {
        uint64_t cu = 0, cf = 0, pu = 0, pf = 0;
        for (const auto& t : catalog.tables) {
            const auto eb = effective_bandwidth(generate_compact_layout(t, geometry, th), geometry);
            cu += eb.cpu_useful;
            cf += eb.cpu_fetched;
            pu += eb.pim_useful;
            pf += eb.pim_fetched;
        }
        out.push_back({th, cf ? double(cu) / double(cf) : 1.0, pf ? double(pu) / double(pf) : 1.0});
    }
    return out;
}

double StorageBreakdown::padding_fraction() const {
    const double all = double(total.data_bytes + total.padding_bytes + total.bitmap_bytes);
    return all > 0 ? double(total.padding_bytes) / all : 0;
}

double StorageBreakdown::bitmap_fraction() const {
    const double all = double(total.data_bytes + total.padding_bytes + total.bitmap_bytes);
    return all > 0 ? double(total.bitmap_bytes) / all : 0;
}

StorageBreakdown storage_breakdown(const Catalog& catalog, const Geometry& geometry, double th) {
    StorageBreakdown out;
    out.total.table = "total";
    for (const auto& t : catalog.tables) {
        const auto layout = generate_compact_layout(t, geometry, th);
        StorageRow r;
        r.table = t.name;
        for (const auto& p : layout.parts()) {
            r.data_bytes += t.row_count * p.data_bytes();
            r.padding_bytes += t.row_count * p.padding_bytes();
        }
        // One visibility bit per row, replicated on each device of every part.
        r.bitmap_bytes = (t.row_count * layout.devices() * layout.parts().size() + 7) / 8;
        out.total.data_bytes += r.data_bytes;
        out.total.padding_bytes += r.padding_bytes;
        out.total.bitmap_bytes += r.bitmap_bytes;
        out.tables.push_back(std::move(r));
    }
    return out;
}

// ---- OLTP ----

std::string_view to_string(StoreFormat f) {
    switch (f) {
        case StoreFormat::RowStore: return "row_store";
        case StoreFormat::ColumnStore: return "column_store";
        case StoreFormat::Unified: return "unified";
    }
    return "?";
}

uint64_t access_lines(StoreFormat f, const TableLayout& layout, const AccessRecord& a, uint32_t line) {
    const auto& schema = layout.schema();
    std::set<std::pair<uint32_t, uint64_t>> lines;
    auto add_range = [&](uint32_t space, uint64_t begin, uint64_t len) {
        if (!len) return;
        for (uint64_t l = begin / line; l <= (begin + len - 1) / line; ++l) lines.insert({space, l});
    };
    switch (f) {
        case StoreFormat::RowStore: {
            const uint64_t base = a.row * schema.row_bytes();
            for (uint32_t c : a.columns) add_range(0, base + schema.column_offset(c), schema.columns[c].width);
            break;
        }
        case StoreFormat::ColumnStore:
            for (uint32_t c : a.columns) add_range(c, a.row * schema.columns[c].width, schema.columns[c].width);
            break;
        case StoreFormat::Unified: {
            const uint64_t d = layout.devices();
            const uint64_t block = a.row / layout.block_size();
            for (uint32_t c : a.columns)
                for (const auto& fr : layout.fragments(c)) {
                    const uint64_t rw = layout.part(fr.part).row_width;
                    const uint64_t dev = layout.rotated_device(fr.device, block);
                    const uint64_t base = a.row * d * rw;
                    // 8-byte interleaving: device-local byte j sits at (j/8)*8*d + dev*8 + j%8.
                    for (uint64_t j = fr.device_offset; j < fr.device_offset + fr.length;) {
                        const uint64_t run = std::min<uint64_t>(8 - j % 8, fr.device_offset + fr.length - j);
                        add_range(fr.part, base + (j / 8) * 8 * d + dev * 8 + j % 8, run);
                        j += run;
                    }
                }
            break;
        }
    }
    return lines.size();
}

std::vector<OltpRow> oltp_time(const ExperimentConfig& config) {
    Bench bench = generate_tables(config, config.th);
    TxnGenerator gen(bench, config.seed ^ 0x7a11, config.payment_ratio, config.txn_compute_s);
    std::vector<OltpRow> out;
    for (auto f : {StoreFormat::RowStore, StoreFormat::ColumnStore, StoreFormat::Unified})
        out.push_back({f, config.transactions, 0, 0, config.transactions * config.txn_compute_s});
    for (uint64_t i = 0; i < config.transactions; ++i) {
        const auto rec = gen.run_one();
        for (const auto& a : rec.accesses) {
            const auto& layout = bench.store->table(a.table).layout();
            for (auto& row : out) row.lines += access_lines(row.format, layout, a, config.geometry.cache_line);
        }
    }
    for (auto& row : out)
        row.memory_s = double(row.lines) * config.geometry.cache_line / config.geometry.cpu_bandwidth();
    return out;
}

// ---- OLAP and consistency ----

namespace {

using RowSet = std::set<std::pair<uint32_t, uint64_t>>;

void note_writes(const TxnRecord& rec, RowSet& rows) {
    for (const auto& a : rec.accesses)
        if (a.write) rows.insert({a.table, a.row});
}

struct RebuildCost {
    double transfer_s = 0;
    double merge_s = 0;
};

// Multi-instance refresh: every new-versioned row is read out of the row-wise
// OLTP copy with its metadata and written column-wise into the analytical
// copy, which then merges the batch with the in-bank copy path.
RebuildCost rebuild_cost(const MvccStore& store, const RowSet& rows) {
    const auto& g = store.geometry();
    RebuildCost c;
    std::map<uint32_t, uint64_t> per_table;
    uint64_t lines = 0;
    for (const auto& [t, r] : rows) {
        const auto& layout = store.table(t).layout();
        AccessRecord a{t, r, {}, true};
        for (uint32_t i = 0; i < layout.schema().columns.size(); ++i) a.columns.push_back(i);
        lines += access_lines(StoreFormat::RowStore, layout, a, g.cache_line) +
                 access_lines(StoreFormat::ColumnStore, layout, a, g.cache_line);
        ++per_table[t];
    }
    const double meta = double(rows.size()) * g.metadata_bytes;
    c.transfer_s = (double(lines) * g.cache_line + meta) / g.cpu_bandwidth();
    for (const auto& [t, n] : per_table) {
        const auto& layout = store.table(t).layout();
        DefragParams p;
        p.d = layout.devices();
        p.w = std::ceil(double(layout.schema().row_bytes()) / layout.devices());
        p.m = g.metadata_bytes;
        p.n = double(n);
        p.p = 1;
        p.bdw_cpu = g.cpu_channel_bandwidth;
        p.bdw_pim = double(g.ranks_per_channel) * g.units_per_rank() * g.pim_unit_bandwidth;
        c.merge_s += comm_pim_cost(p);
    }
    return c;
}

struct StreamState {
    double snapshot_s = 0;
    double defrag_s = 0;
    uint64_t defrags = 0;
    RowSet written;
};

// Runs `count` transactions, defragmenting every `interval`.
void run_stream(Bench& bench, TxnGenerator& gen, uint64_t count, uint64_t interval, StreamState& st) {
    for (uint64_t i = 0; i < count; ++i) {
        note_writes(gen.run_one(), st.written);
        if (gen.executed() % interval == 0) {
            st.defrag_s += defragment(*bench.store, DefragMode::Auto).elapsed;
            ++st.defrags;
        }
    }
}

double snapshot_all(MvccStore& store, uint64_t ts) {
    const double before = store.snapshot_time();
    store.build_snapshot(ts);
    return store.snapshot_time() - before;
}

void collapse_all(MvccStore& store) {
    for (uint32_t t = 0; t < store.table_count(); ++t) store.collapse_deltas(t);
}

// Queries start once both the CPU stream and earlier PIM work are past.
void sync_engine(QueryEngine& engine, const MvccStore& store) { engine.set_now(std::max(engine.now(), store.cpu_time())); }

}  // namespace

std::vector<OlapRow> olap_time(const ExperimentConfig& config) {
    std::vector<OlapRow> out;
    for (uint64_t n : config.txn_counts) {
        Bench bench = generate_tables(config, config.th);
        PimRuntime runtime(bench.geometry, *bench.memory);
        QueryEngine engine(*bench.store, runtime, config.seed);
        TxnGenerator gen(bench, config.seed ^ 0x7a11, config.payment_ratio, config.txn_compute_s);
        StreamState st;
        run_stream(bench, gen, n, config.defrag_interval, st);
        auto& store = *bench.store;
        const uint64_t ts = store.clock();
        const double snap = snapshot_all(store, ts);
        const RebuildCost rb = rebuild_cost(store, st.written);

        std::vector<double> unified_scan;
        for (const auto& q : query_names()) {
            sync_engine(engine, store);
            const auto r = run_named_query(engine, bench, q, ts);
            unified_scan.push_back(r.plan.end() - r.plan.start());
        }
        // The rebuilt analytical copy holds only newest versions.
        collapse_all(store);
        for (size_t i = 0; i < query_names().size(); ++i) {
            const auto& q = query_names()[i];
            sync_engine(engine, store);
            const auto r = run_named_query(engine, bench, q, store.clock());
            out.push_back({n, q, "unified", unified_scan[i], snap + st.defrag_s});
            out.push_back({n, q, "rebuild", r.plan.end() - r.plan.start(), rb.transfer_s + rb.merge_s});
        }
    }
    return out;
}

// ---- frontier ----

std::string_view to_string(Design d) { return d == Design::Unified ? "unified" : "rebuild"; }

MixResult simulate_mix(const ExperimentConfig& config, Design design, double rate, double window) {
    Bench bench = generate_tables(config, config.th);
    auto& store = *bench.store;
    // The rebuild baseline scans its own analytical copy, so its bank holds
    // never stall the transaction stream.
    MemorySystem olap_memory(bench.geometry);
    olap_memory.set_timeline_enabled(false);
    MemorySystem& qmem = design == Design::Unified ? *bench.memory : olap_memory;
    PimRuntime runtime(bench.geometry, qmem);
    QueryEngine engine(store, runtime, config.seed);
    TxnGenerator gen(bench, config.seed ^ 0x7a11, config.payment_ratio, config.txn_compute_s);
    const double line = bench.geometry.cache_line;
    const double bw = bench.geometry.cpu_bandwidth();

    MixResult res;
    RowSet written;
    uint64_t since_defrag = 0;
    const double gap = rate > 0 ? 1.0 / rate : std::numeric_limits<double>::infinity();
    double next_arrival = rate > 0 ? 0 : gap;
    const double stall_before = bench.memory->stats(Actor::Cpu).stall_s;

    auto run_txns_until = [&](double t) {
        while (next_arrival < t && next_arrival < window) {
            store.set_cpu_time(std::max(store.cpu_time(), next_arrival));
            next_arrival += gap;
            auto rec = gen.run_one();
            if (design == Design::Rebuild) {
                // The OLTP copy is a plain row store.
                uint64_t rs = 0, un = 0;
                for (const auto& a : rec.accesses) {
                    const auto& layout = store.table(a.table).layout();
                    rs += access_lines(StoreFormat::RowStore, layout, a);
                    un += access_lines(StoreFormat::Unified, layout, a);
                }
                const double adjusted = rec.end + (double(rs) - double(un)) * line / bw;
                store.set_cpu_time(std::max(rec.start + config.txn_compute_s, adjusted));
                rec.end = store.cpu_time();
            }
            note_writes(rec, written);
            ++since_defrag;
            if (rec.end <= window) ++res.transactions;
        }
    };

    size_t q = 0;
    while (engine.now() < window) {
        const double tq = engine.now();
        run_txns_until(tq);
        // Consistency work runs ahead of the query and takes the same time
        // away from the transaction stream.
        double cpu_share = 0;
        if (design == Design::Unified) {
            if (since_defrag >= config.defrag_interval) {
                // Defragmentation hands banks to PIM, so it waits for the stream.
                store.set_cpu_time(std::max(store.cpu_time(), tq));
                const double d0 = store.cpu_time();
                defragment(store, DefragMode::Auto);
                since_defrag = 0;
                res.consistency_s += store.cpu_time() - d0;
                sync_engine(engine, store);
            }
            const double saved = store.cpu_time();
            store.set_cpu_time(engine.now());
            const double s0 = engine.now();
            snapshot_all(store, store.clock());
            cpu_share = store.cpu_time() - s0;
            engine.set_now(store.cpu_time());
            store.set_cpu_time(saved);
        } else {
            const auto rb = rebuild_cost(store, written);
            written.clear();
            MemorySystem* m = store.memory();
            store.attach(nullptr);
            collapse_all(store);
            snapshot_all(store, store.clock());
            store.attach(m);
            cpu_share = rb.transfer_s;
            engine.set_now(engine.now() + rb.transfer_s + rb.merge_s);
        }
        res.consistency_s += cpu_share;
        store.set_cpu_time(std::max(store.cpu_time(), tq) + cpu_share);
        const double start = engine.now();
        if (start >= window) break;
        run_named_query(engine, bench, query_names()[q++ % query_names().size()], store.clock());
        const double end = engine.now();
        res.queries += end <= window ? 1.0 : (window - start) / (end - start);
        run_txns_until(std::min(end, window));
    }
    run_txns_until(window);
    res.oltp_tps = double(res.transactions) / window;
    res.olap_qps = res.queries / window;
    res.stall_s = bench.memory->stats(Actor::Cpu).stall_s - stall_before;
    return res;
}

FrontierResult frontier(const ExperimentConfig& config, const std::vector<double>& fractions, double window) {
    FrontierResult out;
    {
        // Query-free capacity of the unified stream.
        Bench bench = generate_tables(config, config.th);
        TxnGenerator gen(bench, config.seed ^ 0x7a11, config.payment_ratio, config.txn_compute_s);
        const uint64_t n = 2000;
        const double t0 = bench.store->cpu_time();
        for (uint64_t i = 0; i < n; ++i) gen.run_one();
        out.capacity = double(n) / (bench.store->cpu_time() - t0);
    }
    for (double f : fractions) {
        const double rate = f * out.capacity;
        const auto u = simulate_mix(config, Design::Unified, rate, window);
        const auto r = simulate_mix(config, Design::Rebuild, rate, window);
        out.points.push_back({rate, u.oltp_tps, u.olap_qps, r.oltp_tps, r.olap_qps});
    }
    return out;
}

bool frontier_dominates(const FrontierResult& f) {
    // Every rebuild point must be weakly dominated by some unified point.
    for (const auto& r : f.points) {
        bool covered = false;
        for (const auto& u : f.points)
            if (u.unified_oltp >= r.rebuild_oltp && u.unified_olap >= r.rebuild_olap) covered = true;
        if (!covered) return false;
    }
    return !f.points.empty();
}

// ---- defragmentation interval ----

std::vector<DefragTradeoffRow> defrag_tradeoff(const ExperimentConfig& config, const std::vector<uint64_t>& checkpoints) {
    std::vector<DefragTradeoffRow> out;
    if (checkpoints.empty()) return out;
    std::vector<uint64_t> marks = checkpoints;
    std::sort(marks.begin(), marks.end());
    Bench bench = generate_tables(config, config.th);
    TxnGenerator gen(bench, config.seed ^ 0x7a11, config.payment_ratio, config.txn_compute_s);
    auto& store = *bench.store;
    const auto& g = bench.geometry;
    const double units = double(g.ranks_per_channel) * g.units_per_rank();

    // One pass over every key column; returns (data region, delta region) seconds.
    auto pass_s = [&]() {
        double data = 0, delta = 0;
        for (uint32_t t = 0; t < store.table_count(); ++t) {
            const auto& ts = store.table(t);
            const auto& layout = ts.layout();
            uint64_t slots = 0;
            for (const auto& b : ts.delta_blocks())
                if (b.shadow) slots += b.high_water;
            for (size_t c = 0; c < layout.schema().columns.size(); ++c) {
                const auto& cs = layout.schema().columns[c];
                if (!cs.is_key) continue;
                const auto& f = layout.fragments(c).front();
                const uint64_t fetch = std::min<uint64_t>(layout.part(f.part).row_width, (cs.width + 7) / 8 * 8);
                data += double(ts.rows() * fetch) / (g.pim_unit_bandwidth * units);
                delta += double(slots * fetch) / (g.pim_unit_bandwidth * units);
            }
        }
        return std::pair{data, delta};
    };

    // Passes run back to back beside the stream and nothing is defragmented,
    // so the delta share of each pass is the fragmentation penalty.
    const double t0 = store.cpu_time();
    double olap_clock = t0;
    double frag_s = 0;
    size_t next = 0;
    for (uint64_t i = 1; i <= marks.back(); ++i) {
        gen.run_one();
        while (olap_clock < store.cpu_time()) {
            const auto [data, delta] = pass_s();
            frag_s += delta;
            olap_clock += data + delta;
        }
        while (next < marks.size() && marks[next] == i) {
            const double defrag_s = plan_defragment(store, DefragMode::Auto).elapsed;
            out.push_back({i, defrag_s / double(i), frag_s / double(i)});
            ++next;
        }
    }
    return out;
}

// ---- WRAM budget ----

std::vector<WramRow> wram_sweep(const ExperimentConfig& config, const std::vector<uint32_t>& budgets, uint64_t rows) {
    std::vector<WramRow> out;
    TableSchema schema;
    schema.name = "scan";
    schema.columns = {{"v", 8, true}};
    schema.row_count = rows;
    std::mt19937_64 rng(config.seed);
    std::vector<std::vector<uint8_t>> images(rows, std::vector<uint8_t>(8));
    for (auto& img : images) {
        const uint64_t v = rng();
        for (int i = 0; i < 8; ++i) img[i] = static_cast<uint8_t>(v >> (8 * i));
    }
    for (uint32_t budget : budgets) {
        Geometry g = config.geometry;
        g.channels = 1;
        g.ranks_per_channel = 1;
        g.banks_per_device = 2;
        g.wram_data_budget = budget;
        g.wram_capacity = 2 * budget;
        MemorySystem mem(g);
        mem.set_timeline_enabled(false);
        MvccStore store(g, &mem);
        const uint32_t t = store.add_table(generate_compact_layout(schema, g, config.th), rows);
        store.attach(nullptr);
        for (uint64_t r = 0; r < rows; ++r) store.load_row(t, r, images[r]);
        store.attach(&mem);
        const auto& snap = store.build_snapshot(t, 0);
        PimRuntime rt(g, mem);
        ColumnOpSpec spec;
        spec.op = OpType::Filter;
        spec.compare = CompareOp::True;
        const auto res = rt.execute_column_op(spec, store.table(t), 0, snap, 0);
        WramRow row;
        row.data_budget = budget;
        row.load_phases = res.load_phases;
        for (const auto& p : res.phases)
            if (p.kind == PhaseRecord::Kind::Load)
                row.max_blocked_s = std::max(row.max_blocked_s, p.blocked_end - p.blocked_begin);
        row.total_blocked_s = res.blocked_s;
        row.handover_s = double(res.load_phases) * 2 * res.ranks.size() * g.handover_latency;
        row.elapsed_s = res.end - res.start;
        out.push_back(row);
    }
    return out;
}

// ---- driver ----

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"th_sweep", "storage_breakdown", "oltp_time", "olap_time",
                                                "frontier", "defrag_tradeoff",  "wram_sweep"};
    return names;
}

std::map<std::string, std::string> run_experiment(const std::string& name, const ExperimentConfig& config) {
    config.validate();
    std::ostringstream os;
    if (name == "th_sweep") {
        CsvWriter w(os, "th_sweep", {"th", "cpu_eff", "pim_eff"});
        for (const auto& p : th_sweep(config.catalog, config.geometry, config.th_list)) w.row(p.th, p.cpu_eff, p.pim_eff);
    } else if (name == "storage_breakdown") {
        CsvWriter w(os, "storage_breakdown",
                    {"th", "table", "data_bytes", "padding_bytes", "bitmap_bytes", "padding_fraction", "bitmap_fraction"});
        for (double th : config.th_list) {
            const auto sb = storage_breakdown(config.catalog, config.geometry, th);
            auto emit = [&](const StorageRow& r) {
                const double all = double(r.data_bytes + r.padding_bytes + r.bitmap_bytes);
                w.row(th, r.table, r.data_bytes, r.padding_bytes, r.bitmap_bytes,
                      all > 0 ? double(r.padding_bytes) / all : 0.0, all > 0 ? double(r.bitmap_bytes) / all : 0.0);
            };
            for (const auto& r : sb.tables) emit(r);
            emit(sb.total);
        }
    } else if (name == "oltp_time") {
        const auto rows = oltp_time(config);
        CsvWriter w(os, "oltp_time", {"format", "transactions", "lines", "memory_s", "compute_s", "total_s", "relative"});
        const double base = rows.front().total_s();
        for (const auto& r : rows)
            w.row(to_string(r.format), r.transactions, r.lines, r.memory_s, r.compute_s, r.total_s(), r.total_s() / base);
    } else if (name == "olap_time") {
        CsvWriter w(os, "olap_time", {"transactions", "query", "design", "scan_s", "consistency_s", "consistency_share"});
        for (const auto& r : olap_time(config))
            w.row(r.transactions, r.query, r.design, r.scan_s, r.consistency_s, r.consistency_share());
    } else if (name == "frontier") {
        CsvWriter w(os, "frontier",
                    {"injection_rate", "unified_oltp", "unified_olap", "rebuild_oltp", "rebuild_olap"});
        for (const auto& p : frontier(config).points)
            w.row(p.injection_rate, p.unified_oltp, p.unified_olap, p.rebuild_oltp, p.rebuild_olap);
    } else if (name == "defrag_tradeoff") {
        CsvWriter w(os, "defrag_tradeoff", {"interval", "defrag_s_per_txn", "fragmentation_s_per_txn"});
        for (const auto& r : defrag_tradeoff(config)) w.row(r.interval, r.defrag_s_per_txn, r.fragmentation_s_per_txn);
    } else if (name == "wram_sweep") {
        CsvWriter w(os, "wram_sweep",
                    {"data_budget", "load_phases", "max_blocked_s", "total_blocked_s", "handover_s", "elapsed_s"});
        for (const auto& r : wram_sweep(config))
            w.row(r.data_budget, r.load_phases, r.max_blocked_s, r.total_blocked_s, r.handover_s, r.elapsed_s);
    } else {
        throw ValidationError("unknown experiment '" + name + "'");
    }
    return {{name + ".csv", os.str()}};
}

void write_outputs(const std::map<std::string, std::string>& files, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] : files) {
        std::ofstream out(std::filesystem::path(dir) / name);
        if (!out) throw ValidationError("cannot write " + name + " in " + dir);
        out << text;
    }
}

}  // namespace pimhtap
