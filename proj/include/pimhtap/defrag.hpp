#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pimhtap/mvcc_store.hpp"

namespace pimhtap {

struct DefragParams {
    double d = 8;        // devices per rank
    double w = 8;        // row width of the part, bytes
    double m = 16;       // metadata bytes per delta row
    double n = 0;        // delta rows
    double p = 1;        // fraction of delta rows that are newest versions
    double bdw_cpu = 1;  // bytes/s
    double bdw_pim = 1;  // bytes/s

    // Throws ValidationError unless d, w, m, bandwidths > 0, n >= 0, 0 < p <= 1.
    void validate() const;
};

// CPU path: fetch metadata, then read + write each newest row over the bus.
double comm_cpu_cost(const DefragParams& params);
// PIM path: broadcast metadata to every device, then copy inside the banks.
double comm_pim_cost(const DefragParams& params);

enum class Strategy { Cpu, Pim };
enum class DefragMode { Auto, Cpu, Pim };

std::string_view to_string(Strategy s);
std::string_view to_string(DefragMode m);
DefragMode defrag_mode_from_string(std::string_view s);

struct StrategyChoice {
    Strategy strategy = Strategy::Cpu;
    double threshold_w = 0;  // PIM wins for row widths strictly above this
    std::string diagnostic;  // set when PIM bandwidth does not exceed CPU bandwidth
};

StrategyChoice choose_strategy(const DefragParams& params);

struct PartDefrag {
    std::string table;
    uint32_t part = 0;
    uint32_t row_width = 0;
    Strategy strategy = Strategy::Cpu;
    DefragParams params;
    uint64_t rows_moved = 0;
    uint64_t cpu_bytes = 0;
    uint64_t pim_bytes = 0;
    double elapsed = 0;
};

struct DefragReport {
    DefragMode mode = DefragMode::Auto;
    std::vector<PartDefrag> parts;
    uint64_t rows_moved = 0;  // logical rows copied back, counted once per table
    double transfer_s = 0;
    double handover_s = 0;
    double fixed_s = 0;
    double elapsed = 0;

    std::string to_csv() const;
};

// Per-part parameters measured from the live store.
DefragParams measure_params(const MvccStore& store, uint32_t table, uint32_t part);

// Costs every part without touching the store.
DefragReport plan_defragment(const MvccStore& store, DefragMode mode);

// Plans, bills traffic and handovers, then collapses every table's delta
// region. Throws ContractViolation when transactions are open.
DefragReport defragment(MvccStore& store, DefragMode mode);

}  // namespace pimhtap
