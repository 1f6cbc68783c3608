#include "pimhtap/defrag.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "pimhtap/csv.hpp"
#include "pimhtap/error.hpp"

namespace pimhtap {

void DefragParams::validate() const {
    if (!(d > 0 && w > 0 && m > 0 && bdw_cpu > 0 && bdw_pim > 0))
        throw ValidationError("defrag parameters d, w, m and bandwidths must be positive");
    if (!(n >= 0)) throw ValidationError("delta row count must be non-negative");
    if (!(p > 0 && p <= 1)) throw ValidationError("newest-version fraction must lie in (0, 1]");
}

double comm_cpu_cost(const DefragParams& x) {
    x.validate();
    return (x.m * x.n + 2 * x.n * x.p * x.d * x.w) / x.bdw_cpu;
}

double comm_pim_cost(const DefragParams& x) {
    x.validate();
    return (x.m * x.n + x.d * x.m * x.n) / x.bdw_cpu + (x.d * x.m * x.n + 2 * x.n * x.p * x.d * x.w) / x.bdw_pim;
}

std::string_view to_string(Strategy s) { return s == Strategy::Cpu ? "cpu" : "pim"; }

std::string_view to_string(DefragMode m) {
    switch (m) {
        case DefragMode::Auto: return "auto";
        case DefragMode::Cpu: return "cpu";
        case DefragMode::Pim: return "pim";
    }
    return "auto";
}

DefragMode defrag_mode_from_string(std::string_view s) {
    if (s == "auto" || s == "hybrid") return DefragMode::Auto;
    if (s == "cpu") return DefragMode::Cpu;
    if (s == "pim") return DefragMode::Pim;
    throw ValidationError("unknown defrag mode '" + std::string(s) + "'");
}

StrategyChoice choose_strategy(const DefragParams& x) {
    x.validate();
    StrategyChoice c;
    if (x.bdw_pim <= x.bdw_cpu) {
        c.strategy = Strategy::Cpu;
        c.threshold_w = std::numeric_limits<double>::infinity();
        c.diagnostic = "PIM bandwidth does not exceed CPU bandwidth; the CPU path always wins";
        return c;
    }
    c.threshold_w = x.m * (x.bdw_pim + x.bdw_cpu) / (2 * x.p * (x.bdw_pim - x.bdw_cpu));
    // With nothing to move both paths cost zero; ties go to the CPU.
    c.strategy = x.n > 0 && x.w > c.threshold_w ? Strategy::Pim : Strategy::Cpu;
    return c;
}

DefragParams measure_params(const MvccStore& store, uint32_t table, uint32_t part) {
    const auto& g = store.geometry();
    const auto& t = store.table(table);
    DefragParams x;
    x.d = g.devices_per_rank;
    x.w = t.layout().part(part).row_width;
    x.m = g.metadata_bytes;
    x.n = static_cast<double>(store.delta_versions(table));
    const auto newest = store.newest_in_delta(table);
    x.p = x.n > 0 && newest > 0 ? static_cast<double>(newest) / x.n : 1.0;
    // A part lives in one channel: one channel of CPU bandwidth, all of its units.
    x.bdw_cpu = g.cpu_channel_bandwidth;
    x.bdw_pim = g.ranks_per_channel * g.units_per_rank() * g.pim_unit_bandwidth;
    return x;
}

namespace {

std::vector<RankId> channel_ranks(const Geometry& g, uint32_t channel) {
    std::vector<RankId> out;
    for (uint32_t r = 0; r < g.ranks_per_channel; ++r) out.push_back({channel, r});
    return out;
}

}  // namespace

DefragReport plan_defragment(const MvccStore& store, DefragMode mode) {
    const auto& g = store.geometry();
    DefragReport rep;
    rep.mode = mode;
    std::set<uint32_t> pim_channels;
    for (uint32_t t = 0; t < store.table_count(); ++t) {
        const auto& ts = store.table(t);
        const uint64_t moved = store.newest_in_delta(t);
        rep.rows_moved += moved;
        if (store.delta_versions(t) == 0) continue;
        for (const auto& part : ts.layout().parts()) {
            PartDefrag pd;
            pd.table = ts.name();
            pd.part = part.part_id;
            pd.row_width = part.row_width;
            pd.params = measure_params(store, t, part.part_id);
            pd.rows_moved = moved;
            switch (mode) {
                case DefragMode::Auto: pd.strategy = choose_strategy(pd.params).strategy; break;
                case DefragMode::Cpu: pd.strategy = Strategy::Cpu; break;
                case DefragMode::Pim: pd.strategy = Strategy::Pim; break;
            }
            const auto& x = pd.params;
            if (pd.strategy == Strategy::Cpu) {
                pd.cpu_bytes = static_cast<uint64_t>(x.m * x.n + 2 * x.n * x.p * x.d * x.w);
                pd.elapsed = comm_cpu_cost(x);
            } else {
                pd.cpu_bytes = static_cast<uint64_t>(x.m * x.n + x.d * x.m * x.n);
                pd.pim_bytes = static_cast<uint64_t>(x.d * x.m * x.n + 2 * x.n * x.p * x.d * x.w);
                pd.elapsed = comm_pim_cost(x);
                pim_channels.insert(part.channel);
            }
            rep.transfer_s += pd.elapsed;
            rep.parts.push_back(std::move(pd));
        }
    }
    // Each PIM channel's ranks are handed over and back once.
    rep.handover_s = 2.0 * static_cast<double>(pim_channels.size() * g.ranks_per_channel) * g.handover_latency;
    rep.fixed_s = rep.parts.empty() ? 0.0 : g.defrag_fixed_overhead;
    rep.elapsed = rep.transfer_s + rep.handover_s + rep.fixed_s;
    return rep;
}

DefragReport defragment(MvccStore& store, DefragMode mode) {
    if (store.has_active_transactions()) throw ContractViolation("defragmentation requires OLTP to be paused");
    auto rep = plan_defragment(store, mode);
    const auto& g = store.geometry();
    auto* mem = store.memory();
    double t = store.cpu_time() + rep.fixed_s;
    auto channel_of = [&](const PartDefrag& pd) {
        return store.table(store.table_id(pd.table)).layout().part(pd.part).channel;
    };
    // CPU parts first, then each PIM channel inside one handover window.
    std::map<uint32_t, std::vector<const PartDefrag*>> by_channel;
    for (const auto& pd : rep.parts) {
        if (mem) {
            mem->account(Actor::Cpu, pd.cpu_bytes, pd.cpu_bytes);
            if (pd.pim_bytes) mem->account(Actor::Pim, pd.pim_bytes, pd.pim_bytes);
        }
        if (pd.strategy == Strategy::Pim) {
            by_channel[channel_of(pd)].push_back(&pd);
            continue;
        }
        if (mem) mem->log(Actor::Cpu, "defrag_part_cpu", {}, t, pd.elapsed);
        t += pd.elapsed;
    }
    for (const auto& [channel, parts] : by_channel) {
        auto ranks = channel_ranks(g, channel);
        t += mem ? mem->handover(ranks, Controller::Pim, t)
                 : static_cast<double>(ranks.size()) * g.handover_latency;
        for (const auto* pd : parts) {
            if (mem) mem->log(Actor::Pim, "defrag_part_pim", ranks, t, pd->elapsed);
            t += pd->elapsed;
        }
        t += mem ? mem->handover(ranks, Controller::Cpu, t)
                 : static_cast<double>(ranks.size()) * g.handover_latency;
    }
    for (uint32_t i = 0; i < store.table_count(); ++i) store.collapse_deltas(i);
    store.set_cpu_time(t);
    return rep;
}

std::string DefragReport::to_csv() const {
    std::ostringstream os;
    CsvWriter w(os, "defrag", {"table", "part", "w", "strategy", "rows_moved", "bytes", "elapsed"});
    for (const auto& p : parts)
        w.row(p.table, p.part, p.row_width, to_string(p.strategy), p.rows_moved, p.cpu_bytes + p.pim_bytes, p.elapsed);
    return os.str();
}

}  // namespace pimhtap
