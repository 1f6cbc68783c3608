#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pimhtap/geometry.hpp"

namespace pimhtap {

enum class Actor { Cpu, Pim };
enum class Controller { Cpu, Pim };
enum class AccessKind { Read, Write };

std::string_view to_string(Actor a);

struct AccessStats {
    uint64_t accesses = 0;
    uint64_t bytes = 0;         // billed (lines for CPU, bursts for PIM)
    uint64_t useful_bytes = 0;  // requested
    double stall_s = 0;
    uint64_t handovers = 0;     // rank handovers granting control to this actor
};

// Bytes requested from one rank (or from host memory when rank is empty).
struct CpuSegment {
    std::optional<RankId> rank;
    uint64_t bytes = 0;
};

struct AccessResult {
    double start = 0;  // after any stall
    double end = 0;
    double stall = 0;
    uint64_t billed_bytes = 0;
};

struct HoldInterval {
    double begin = 0;
    double end = std::numeric_limits<double>::infinity();  // open while PIM holds the rank
};

struct TimelineEvent {
    double time = 0;
    double duration = 0;
    Actor actor = Actor::Cpu;
    std::string event;
    std::vector<RankId> ranks;
};

// Bus and bank-ownership model. Each rank is controlled by either the CPU or
// the PIM units; CPU requests to a PIM-held rank wait until it is released.
class MemorySystem {
public:
    explicit MemorySystem(const Geometry& geometry);

    const Geometry& geometry() const { return geometry_; }
    Controller controller(RankId rank) const;

    // Each segment is billed whole cache lines. Ranks held by PIM at `at`
    // delay the start until released; a rank held with no release scheduled
    // raises ProtocolError.
    AccessResult cpu_access(std::span<const CpuSegment> segments, AccessKind kind, double at);
    AccessResult cpu_access(std::optional<RankId> rank, uint64_t bytes, AccessKind kind, double at);

    // One unit moving `bytes` between its bank and WRAM, billed in 8 B bursts.
    // Returns the transfer time. Throws ProtocolError unless PIM holds the rank.
    double pim_access(RankId rank, uint64_t bytes, AccessKind kind);

    // Hands the ranks to `to`, serialised at handover_latency per rank that
    // actually changes controller. Returns the time spent.
    double handover(std::span<const RankId> ranks, Controller to, double at);

    // Earliest time >= at at which the CPU may touch the rank.
    double release_time(RankId rank, double at) const;
    const std::vector<HoldInterval>& holds(RankId rank) const;

    // Bulk accounting for paths that are timed analytically.
    void account(Actor actor, uint64_t bytes, uint64_t useful);
    void log(Actor actor, std::string event, std::vector<RankId> ranks, double time, double duration);
    void set_timeline_enabled(bool on) { timeline_enabled_ = on; }

    const AccessStats& stats(Actor actor) const { return actor == Actor::Cpu ? cpu_ : pim_; }
    uint64_t total_bytes() const { return cpu_.bytes + pim_.bytes; }
    const std::vector<TimelineEvent>& timeline() const { return timeline_; }

    std::string stats_csv() const;
    std::string timeline_csv() const;

    void reset();

private:
    size_t index(RankId rank) const;

    Geometry geometry_;
    std::vector<Controller> controllers_;
    std::vector<std::vector<HoldInterval>> holds_;
    AccessStats cpu_;
    AccessStats pim_;
    std::vector<TimelineEvent> timeline_;
    bool timeline_enabled_ = true;
};

}  // namespace pimhtap
