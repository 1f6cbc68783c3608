#include "pimhtap/memory_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pimhtap/csv.hpp"
#include "pimhtap/error.hpp"

namespace pimhtap {

std::string_view to_string(Actor a) { return a == Actor::Cpu ? "cpu" : "pim"; }

MemorySystem::MemorySystem(const Geometry& geometry) : geometry_(geometry) {
    geometry_.validate();
    controllers_.assign(geometry_.total_ranks(), Controller::Cpu);
    holds_.resize(geometry_.total_ranks());
}

size_t MemorySystem::index(RankId rank) const {
    if (rank.channel >= geometry_.channels || rank.rank >= geometry_.ranks_per_channel)
        throw LookupError("rank " + to_string(rank) + " outside the geometry");
    return size_t{rank.channel} * geometry_.ranks_per_channel + rank.rank;
}

Controller MemorySystem::controller(RankId rank) const { return controllers_[index(rank)]; }

const std::vector<HoldInterval>& MemorySystem::holds(RankId rank) const { return holds_[index(rank)]; }

double MemorySystem::release_time(RankId rank, double at) const {
    const auto& h = holds_[index(rank)];
    // Holds on one rank never overlap and are kept sorted by begin.
    auto it = std::upper_bound(h.begin(), h.end(), at, [](double t, const HoldInterval& iv) { return t < iv.begin; });
    if (it == h.begin()) return at;
    --it;
    if (at < it->end) {
        if (std::isinf(it->end))
            throw ProtocolError("CPU access to " + to_string(rank) + " while PIM holds it with no release scheduled");
        return it->end;
    }
    return at;
}

AccessResult MemorySystem::cpu_access(std::span<const CpuSegment> segments, AccessKind kind, double at) {
    (void)kind;
    const uint64_t line = geometry_.cache_line;
    double start = at;
    for (bool moved = true; moved;) {
        moved = false;
        for (const auto& s : segments) {
            if (!s.rank) continue;
            double r = release_time(*s.rank, start);
            if (r > start) {
                start = r;
                moved = true;
            }
        }
    }
    std::vector<uint64_t> per_channel(geometry_.channels, 0);
    uint64_t host = 0;
    uint64_t billed = 0;
    uint64_t useful = 0;
    for (const auto& s : segments) {
        if (s.bytes == 0) continue;
        const uint64_t b = (s.bytes + line - 1) / line * line;
        billed += b;
        useful += s.bytes;
        if (s.rank)
            per_channel[s.rank->channel] += b;
        else
            host += b;
    }
    double transfer = static_cast<double>(host) / geometry_.cpu_bandwidth();
    double worst = 0;
    for (auto b : per_channel) worst = std::max(worst, static_cast<double>(b) / geometry_.cpu_channel_bandwidth);
    transfer += worst;

    cpu_.accesses += 1;
    cpu_.bytes += billed;
    cpu_.useful_bytes += useful;
    cpu_.stall_s += start - at;
    return {start, start + transfer, start - at, billed};
}

AccessResult MemorySystem::cpu_access(std::optional<RankId> rank, uint64_t bytes, AccessKind kind, double at) {
    CpuSegment s{rank, bytes};
    return cpu_access(std::span<const CpuSegment>(&s, 1), kind, at);
}

double MemorySystem::pim_access(RankId rank, uint64_t bytes, AccessKind kind) {
    (void)kind;
    if (controllers_[index(rank)] != Controller::Pim)
        throw ProtocolError("PIM access to " + to_string(rank) + " while the CPU controls it");
    const uint64_t g = geometry_.interleave_granularity;
    const uint64_t billed = (bytes + g - 1) / g * g;
    pim_.accesses += 1;
    pim_.bytes += billed;
    pim_.useful_bytes += bytes;
    return static_cast<double>(billed) / geometry_.pim_unit_bandwidth;
}

double MemorySystem::handover(std::span<const RankId> ranks, Controller to, double at) {
    uint64_t changed = 0;
    std::vector<RankId> moved;
    for (const auto& r : ranks) {
        const size_t i = index(r);
        if (controllers_[i] == to) continue;
        ++changed;
        moved.push_back(r);
    }
    const double cost = static_cast<double>(changed) * geometry_.handover_latency;
    for (const auto& r : moved) {
        const size_t i = index(r);
        controllers_[i] = to;
        auto& h = holds_[i];
        if (to == Controller::Pim) {
            HoldInterval iv{at, std::numeric_limits<double>::infinity()};
            auto pos = std::upper_bound(h.begin(), h.end(), at,
                                        [](double t, const HoldInterval& x) { return t < x.begin; });
            if (pos != h.begin() && std::prev(pos)->end > at)
                throw ProtocolError("overlapping PIM hold on " + to_string(r));
            if (pos != h.end() && pos->begin < at + cost) throw ProtocolError("overlapping PIM hold on " + to_string(r));
            h.insert(pos, iv);
        } else {
            auto open = std::find_if(h.rbegin(), h.rend(), [](const HoldInterval& x) { return std::isinf(x.end); });
            if (open == h.rend()) throw ProtocolError("release of " + to_string(r) + " without an open hold");
            open->end = std::max(open->begin, at + cost);
        }
    }
    auto& st = to == Controller::Pim ? pim_ : cpu_;
    st.handovers += changed;
    if (changed)
        log(to == Controller::Pim ? Actor::Pim : Actor::Cpu, to == Controller::Pim ? "handover_to_pim" : "handover_to_cpu",
            std::move(moved), at, cost);
    return cost;
}

void MemorySystem::account(Actor actor, uint64_t bytes, uint64_t useful) {
    auto& st = actor == Actor::Cpu ? cpu_ : pim_;
    st.accesses += 1;
    st.bytes += bytes;
    st.useful_bytes += useful;
}

void MemorySystem::log(Actor actor, std::string event, std::vector<RankId> ranks, double time, double duration) {
    if (!timeline_enabled_) return;
    timeline_.push_back({time, duration, actor, std::move(event), std::move(ranks)});
}

std::string MemorySystem::stats_csv() const {
    std::ostringstream os;
    CsvWriter w(os, "stats", {"actor", "bytes", "useful_bytes", "stall_s", "handovers"});
    for (Actor a : {Actor::Cpu, Actor::Pim}) {
        const auto& s = stats(a);
        w.row(to_string(a), s.bytes, s.useful_bytes, s.stall_s, s.handovers);
    }
    return os.str();
}

std::string MemorySystem::timeline_csv() const {
    std::ostringstream os;
    CsvWriter w(os, "timeline", {"time", "actor", "event", "bank_set", "duration"});
    for (const auto& e : timeline_) {
        std::string set;
        for (size_t i = 0; i < e.ranks.size(); ++i) set += (i ? ";" : "") + to_string(e.ranks[i]);
        w.row(e.time, to_string(e.actor), e.event, set.empty() ? std::string("-") : set, e.duration);
    }
    return os.str();
}

void MemorySystem::reset() {
    std::fill(controllers_.begin(), controllers_.end(), Controller::Cpu);
    for (auto& h : holds_) h.clear();
    cpu_ = {};
    pim_ = {};
    timeline_.clear();
}

}  // namespace pimhtap
