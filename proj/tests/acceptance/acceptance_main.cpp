// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "pimhtap/defrag.hpp"
#include "pimhtap/experiments.hpp"
#include "pimhtap/launch_request.hpp"
#include "pimhtap/layout.hpp"
#include "pimhtap/pim_runtime.hpp"
#include "pimhtap/verify.hpp"

using namespace pimhtap;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

DefragParams threshold_params(double w) {
    DefragParams p;
    p.m = 16;
    p.p = 1;
    p.n = 1000;
    p.d = 8;
    p.w = w;
    p.bdw_cpu = 1e9;
    p.bdw_pim = 3e9;
    return p;
}

Outcome strategy_crossover() {
    const auto at16 = choose_strategy(threshold_params(16)).strategy;
    const auto at17 = choose_strategy(threshold_params(17)).strategy;
    return {at16 == Strategy::Cpu && at17 == Strategy::Pim,
            fmt("w=16 -> %s, w=17 -> %s", std::string(to_string(at16)).c_str(), std::string(to_string(at17)).c_str())};
}

Outcome cost_model_consistency() {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0, 1);
    int disagree = 0, ties = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
        DefragParams p;
        p.d = double(1 + rng() % 16);
        p.w = rng() % 4 == 0 ? double(1 + rng() % 64) : 1 + 63 * u(rng);
        p.m = rng() % 4 == 0 ? 16 : 1 + 31 * u(rng);
        p.n = rng() % 20 == 0 ? 0 : double(rng() % 1000000);
        p.p = rng() % 4 == 0 ? 1 : 0.01 + 0.99 * u(rng);
        p.bdw_cpu = 1e9 * (0.1 + 10 * u(rng));
        p.bdw_pim = 1e9 * (0.1 + 30 * u(rng));
        const double cpu = comm_cpu_cost(p), pim = comm_pim_cost(p);
        ties += cpu == pim;
        const Strategy want = pim < cpu ? Strategy::Pim : Strategy::Cpu;
        disagree += choose_strategy(p).strategy != want;
    }
    return {disagree == 0, fmt("%d/%d disagreements, %d ties", disagree, draws, ties)};
}

Outcome snapshot_oracle() {
    uint64_t mismatches = 0, rows = 0, checks = 0, committed = 0;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        const auto r = verify::snapshot_history(seed, 10000, 1000);
        mismatches += r.mismatches;
        rows += r.rows_checked;
        checks += r.checks;
        committed += r.committed;
    }
    return {mismatches == 0, fmt("100 histories, %llu commits, %llu snapshots, %llu row checks, %llu mismatches",
                                 (unsigned long long)committed, (unsigned long long)checks, (unsigned long long)rows,
                                 (unsigned long long)mismatches)};
}

Outcome query_oracle() {
    uint64_t mismatches = 0, queries = 0;
    std::string first;
    for (uint64_t seed = 1; seed <= 50; ++seed) {
        const auto r = verify::query_round(seed, 1000 + 40 * seed);
        mismatches += r.mismatches;
        queries += r.queries;
        if (first.empty()) first = r.first_failure;
    }
    return {mismatches == 0, fmt("50 seeds, %llu queries, %llu mismatches%s%s", (unsigned long long)queries,
                                 (unsigned long long)mismatches, first.empty() ? "" : ", first: ", first.c_str())};
}

TableSchema random_schema(std::mt19937_64& rng, uint64_t rows) {
    TableSchema s;
    s.name = "r";
    s.row_count = rows;
    const int n = 2 + int(rng() % 31);
    for (int c = 0; c < n; ++c) s.columns.push_back({"c" + std::to_string(c), uint32_t(1 + rng() % 32), rng() % 2 == 0});
    return s;
}

// Bijectivity, ADE and IDE over a sample of rows; returns an empty string when all hold.
std::string check_layout(const TableLayout& l) {
    const auto& s = l.schema();
    const uint64_t B = l.block_size();
    std::set<BytePlacement> seen;
    size_t total = 0;
    std::vector<uint64_t> rows;
    for (uint64_t b = 0; b < 3 * l.devices(); ++b)
        for (uint64_t r : {uint64_t{0}, uint64_t{1}, B / 2, B - 1}) rows.push_back(b * B + r);
    for (uint64_t row : rows) {
        std::map<uint32_t, std::set<uint64_t>> base_per_part;
        std::map<uint32_t, std::set<std::tuple<uint32_t, uint32_t, uint32_t>>> where_per_part;
        for (size_t c = 0; c < s.columns.size(); ++c) {
            const auto bytes = locate_unchecked(l, row, c);
            if (bytes.size() != s.columns[c].width) return "byte count of " + s.columns[c].name;
            for (const auto& p : bytes) {
                seen.insert(p);
                ++total;
                const uint32_t rw = l.part(p.part).row_width;
                base_per_part[p.part].insert(p.local_offset / rw);
                where_per_part[p.part].insert({p.channel, p.rank, p.bank});
            }
            if (s.columns[c].is_key && s.columns[c].width <= l.part(l.fragments(c)[0].part).row_width) {
                // IDE: one device, contiguous, and the next row sits one stride further.
                for (size_t i = 1; i < bytes.size(); ++i)
                    if (bytes[i].device != bytes[0].device || bytes[i].local_offset != bytes[0].local_offset + i)
                        return "IDE contiguity of " + s.columns[c].name;
                if (row % B + 1 < B) {
                    const auto next = locate_unchecked(l, row + 1, c);
                    const uint32_t rw = l.part(bytes[0].part).row_width;
                    if (next[0].device != bytes[0].device || next[0].local_offset != bytes[0].local_offset + rw)
                        return "IDE stride of " + s.columns[c].name;
                }
            }
        }
        for (const auto& [part, bases] : base_per_part)
            if (bases.size() != 1 || where_per_part[part].size() != 1) return "ADE alignment of part " + std::to_string(part);
    }
    if (seen.size() != total) return "placement collision";
    return {};
}

Outcome layout_invariants() {
    std::mt19937_64 rng(5150);
    int broken = 0, padding_worse = 0, padding_worse_075 = 0;
    std::string first;
    for (int i = 0; i < 100; ++i) {
        Geometry g;
        g.devices_per_rank = uint32_t{2} << (rng() % 3);
        const auto s = random_schema(rng, 64 * 1024);
        const auto naive = generate_naive_layout(s, g);
        for (double th : {0.0, 0.25, 0.5, 0.6, 0.75, 1.0}) {
            const auto l = generate_compact_layout(s, g, th);
            const auto err = check_layout(l);
            if (!err.empty()) {
                ++broken;
                if (first.empty()) first = fmt("schema %d th %.2f: %s", i, th, err.c_str());
            }
        }
        padding_worse += generate_compact_layout(s, g, 0.0).padding_fraction() > naive.padding_fraction() + 1e-12;
        padding_worse_075 += generate_compact_layout(s, g, 0.75).padding_fraction() > naive.padding_fraction() + 1e-12;
    }
    const bool pass = broken == 0 && padding_worse == 0;
    return {pass, fmt("100 schemas x 6 th: %d structural failures%s%s; padding > naive at th=0: %d "
                      "(informational, th=0.75: %d)",
                      broken, first.empty() ? "" : " ", first.c_str(), padding_worse, padding_worse_075)};
}

Outcome circulant_balance() {
    int bad = 0, cases = 0;
    for (uint32_t d : {2u, 4u, 8u}) {
        Geometry g;
        g.devices_per_rank = d;
        TableSchema s;
        s.name = "c";
        s.columns = {{"k1", 4, true}, {"k2", 2, true}, {"k3", 8, true}, {"n", 11}};
        for (uint64_t n = 1; n <= 64; ++n) {
            s.row_count = n * g.block_size;
            const auto l = generate_compact_layout(s, g, 0.5);
            for (size_t c = 0; c < s.columns.size(); ++c) {
                if (!s.columns[c].is_key) continue;
                ++cases;
                std::vector<uint64_t> touches(d, 0);
                for (uint64_t b = 0; b < n; ++b) {
                    const uint64_t row = b * g.block_size;
                    std::set<uint32_t> devs;
                    for (uint64_t r : {row, row + g.block_size - 1})
                        for (const auto& p : locate_unchecked(l, r, c)) devs.insert(p.device);
                    if (devs.size() != 1) {
                        ++bad;
                        continue;
                    }
                    ++touches[*devs.begin()];
                }
                for (uint64_t t : touches)
                    if (t != n / d && t != (n + d - 1) / d) {
                        ++bad;
                        break;
                    }
            }
        }
    }
    return {bad == 0, fmt("%d column/N/d cases, %d unbalanced", cases, bad)};
}

Outcome th_trend() {
    const ExperimentConfig cfg;
    const auto pts = th_sweep(cfg.catalog, cfg.geometry, cfg.th_list);
    bool ok = pts.size() == cfg.th_list.size();
    for (size_t i = 1; i < pts.size(); ++i) {
        ok = ok && pts[i].cpu_eff <= pts[i - 1].cpu_eff + 1e-12;
        ok = ok && pts[i].pim_eff + 1e-12 >= pts[i - 1].pim_eff;
    }
    std::string line;
    for (const auto& p : pts) line += fmt(" th=%.2f:%.4f/%.4f", p.th, p.cpu_eff, p.pim_eff);
    return {ok, "cpu/pim" + line};
}

Outcome storage_bound() {
    const ExperimentConfig cfg;
    const auto s = storage_breakdown(cfg.catalog, cfg.geometry, 0.6);
    return {s.padding_fraction() < 0.05 && s.bitmap_fraction() < 0.05,
            fmt("padding %.3f%%, bitmap %.3f%%", 100 * s.padding_fraction(), 100 * s.bitmap_fraction())};
}

Outcome two_phase_blocking() {
    const Geometry g;  // defaults: 32 KiB data budget, 1 GB/s per unit, 0.2 us per rank
    MemorySystem mem(g);
    MvccStore store(g, &mem);
    TableSchema s;
    s.name = "scan";
    s.row_count = 1u << 20;
    for (int i = 0; i < 8; ++i) s.columns.push_back({"k" + std::to_string(i), 8, true});
    const uint32_t t = store.add_table(generate_compact_layout(s, g, 0.6), s.row_count);
    const auto& snap = store.build_snapshot(t, store.clock());
    PimRuntime rt(g, mem);
    ColumnOpSpec spec;
    spec.compare = CompareOp::Gt;
    spec.lo = 0;
    const auto res = rt.execute_column_op(spec, store.table(t), 0, snap, 0);

    double worst = 0;
    uint64_t probes = 0, compute_stalls = 0, full_chunks = 0;
    for (const auto& ph : res.phases) {
        if (ph.kind == PhaseRecord::Kind::Load) {
            worst = std::max(worst, ph.blocked_end - ph.blocked_begin);
            full_chunks += ph.max_unit_bytes * 100 >= uint64_t(g.wram_data_budget) * 90;
            continue;
        }
        // CPU traffic to every rank of the scan while the units compute.
        for (const auto& r : res.ranks) {
            const double at = ph.start + 0.5 * (ph.end - ph.start);
            compute_stalls += mem.cpu_access(r, 64, AccessKind::Read, at).stall > 0;
            ++probes;
        }
    }
    const bool pass = res.load_phases > 0 && full_chunks > 0 && worst <= 300e-6 && compute_stalls == 0 && probes > 0;
    return {pass, fmt("%u load phases, max blocked %.2f us, %llu compute-phase probes, %llu stalled", res.load_phases,
                      worst * 1e6, (unsigned long long)probes, (unsigned long long)compute_stalls)};
}

Outcome defrag_properties() {
    ExperimentConfig cfg;
    Bench bench = generate_tables(cfg, cfg.th);
    TxnGenerator gen(bench, cfg.seed, cfg.payment_ratio, cfg.txn_compute_s);
    gen.run(10000);
    auto& store = *bench.store;

    const double hybrid = plan_defragment(store, DefragMode::Auto).elapsed;
    const double cpu = plan_defragment(store, DefragMode::Cpu).elapsed;
    const double pim = plan_defragment(store, DefragMode::Pim).elapsed;

    auto scan_all = [&] {
        const auto db = store.build_snapshot(store.clock());
        std::vector<ColumnValues> out;
        for (uint32_t t = 0; t < store.table_count(); ++t)
            for (size_t c = 0; c < store.table(t).layout().schema().columns.size(); ++c)
                out.push_back(store.visible_scan(t, c, db.tables[t]));
        return out;
    };
    const auto before = scan_all();
    const auto first = defragment(store, DefragMode::Auto);
    const auto after = scan_all();
    bool same = before.size() == after.size();
    for (size_t i = 0; same && i < before.size(); ++i)
        same = before[i].rows == after[i].rows && before[i].bytes == after[i].bytes;
    const auto second = defragment(store, DefragMode::Auto);
    const bool pass = same && first.rows_moved > 0 && second.rows_moved == 0 && hybrid <= std::min(cpu, pim);
    return {pass, fmt("moved %llu then %llu rows, scans %s; hybrid %.1f us, cpu %.1f us, pim %.1f us",
                      (unsigned long long)first.rows_moved, (unsigned long long)second.rows_moved,
                      same ? "equal" : "DIFFER", hybrid * 1e6, cpu * 1e6, pim * 1e6)};
}

LaunchRequest random_request(std::mt19937_64& rng, int kind) {
    auto u16 = [&] { return uint16_t(rng()); };
    auto u24 = [&] { return uint32_t(rng() & 0xffffff); };
    auto f = [&] { return ColumnOpFields{u16(), u16(), u16(), uint8_t(rng())}; };
    switch (kind) {
        case 0: return {LsParams{u24(), u16(), u16(), u16(), u24(), u16(), u16(), u16()}};
        case 1: return {DefragmentParams{u24(), u24(), u16(), u24(), u16()}};
        case 2: return {FilterParams{f(), rng(), CompareOp(rng() % 8), rng()}};
        case 3: return {GroupParams{f(), u16(), u16()}};
        case 4: return {HashParams{f(), rng()}};
        case 5: return {JoinParams{u16(), u16(), u16(), uint8_t(rng())}};
        default: return {AggregationParams{f(), u16(), u16()}};
    }
}

Outcome encoding_round_trip() {
    std::mt19937_64 rng(64);
    int bad = 0;
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto req = random_request(rng, i % 7);
        const EncodedRequest bytes = encode(req);
        bad += bytes.size() != kLaunchRequestBytes || !(decode(bytes) == req);
    }
    return {bad == 0, fmt("%d requests over 7 op types, %d failures", n, bad)};
}

Outcome frontier_dominance() {
    const ExperimentConfig cfg;
    const auto f = frontier(cfg);
    double peak_u = 0, peak_r = 0, olap_at_peak_r = 0;
    for (const auto& p : f.points) {
        peak_u = std::max(peak_u, p.unified_oltp);
        if (p.rebuild_oltp > peak_r) {
            peak_r = p.rebuild_oltp;
            olap_at_peak_r = p.rebuild_olap;
        }
    }
    double olap_u = 0;
    for (const auto& p : f.points)
        if (p.unified_oltp >= peak_r) olap_u = std::max(olap_u, p.unified_olap);
    const double oltp_ratio = peak_r > 0 ? peak_u / peak_r : 0;
    const double olap_ratio = olap_at_peak_r > 0 ? olap_u / olap_at_peak_r : 0;
    const bool pass = frontier_dominates(f) && oltp_ratio > 1 && olap_ratio > 1;
    return {pass, fmt("%zu rates, peak OLTP ratio %.3f, OLAP ratio at rebuild peak %.3f", f.points.size(), oltp_ratio,
                      olap_ratio)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "defrag strategy crossover", 1, strategy_crossover},
        {2, "cost-model consistency", 5, cost_model_consistency},
        {3, "snapshot oracle equivalence", 60, snapshot_oracle},
        {4, "query oracle equivalence", 120, query_oracle},
        {5, "layout invariants", 60, layout_invariants},
        {6, "block-circulant load balance", 10, circulant_balance},
        {7, "th-sweep trend", 30, th_trend},
        {8, "storage breakdown", 10, storage_bound},
        {9, "two-phase blocking", 30, two_phase_blocking},
        {10, "defragmentation properties", 60, defrag_properties},
        {11, "launch request round-trip", 5, encoding_round_trip},
        {12, "frontier dominance", 300, frontier_dominance},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs <= c.budget_s;
        const bool pass = o.pass && in_time;
        failed += !pass;
        std::printf("%-4s criterion %2d %-30s %6.2fs/%gs  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                    c.budget_s, o.detail.c_str(), in_time ? "" : " [over time budget]");
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
    return failed ? 1 : 0;
}
