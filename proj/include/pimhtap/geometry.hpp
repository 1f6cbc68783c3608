#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace pimhtap {

// DDR5-3200 timing parameters in seconds. Carried for documentation and
// config round-trips; the bandwidth model below does not consume them.
struct DdrTiming {
    double tBURST = 2.5e-9;
    double tRCD = 7.5e-9;
    double tCL = 7.5e-9;
    double tRP = 7.5e-9;
    double tRAS = 16.3e-9;
    double tRRD = 2.5e-9;
    double tRFC = 121.9e-9;
    double tWR = 15e-9;
    double tWTR = 11.2e-9;
    double tRTP = 3.75e-9;
    double tRTW = 4.4e-9;
    double tCS = 4.4e-9;
    double tREFI = 3.9e-6;

    bool operator==(const DdrTiming&) const = default;
};

struct Geometry {
    uint32_t channels = 4;
    uint32_t ranks_per_channel = 4;
    uint32_t devices_per_rank = 8;
    uint32_t banks_per_device = 8;
    uint32_t interleave_granularity = 8;  // bytes handed to one device per burst
    uint32_t cache_line = 64;
    uint32_t block_size = 1024;           // rows per circulant block

    double cpu_channel_bandwidth = 25.6e9;  // bytes/s, one DDR5-3200 channel
    double pim_unit_bandwidth = 1e9;        // bytes/s, bank <-> unit
    double pim_compute_rate = 1e8;          // elements/s per unit (500 MHz, 16 tasklets)
    double handover_latency = 0.2e-6;       // seconds per rank, serialised
    double control_latency = 0.1e-6;        // one CPU <-> scheduler message
    double defrag_fixed_overhead = 20e-6;   // per defragmentation pass with moved rows

    uint32_t wram_capacity = 64 * 1024;
    uint32_t wram_data_budget = 32 * 1024;
    uint32_t metadata_bytes = 16;           // size of one version metadata entry

    uint64_t special_address = ~uint64_t{0};  // scheduler mailbox; top of the address space

    DdrTiming timing;

    uint32_t units_per_rank() const { return devices_per_rank * banks_per_device; }
    uint32_t total_ranks() const { return channels * ranks_per_channel; }
    uint64_t total_units() const { return uint64_t{total_ranks()} * units_per_rank(); }
    double cpu_bandwidth() const { return cpu_channel_bandwidth * channels; }
    double pim_total_bandwidth() const { return static_cast<double>(total_units()) * pim_unit_bandwidth; }
    // Result staging in WRAM: half of what the data budget leaves over.
    uint32_t wram_result_budget() const { return (wram_capacity - wram_data_budget) / 2; }

    // Throws ValidationError on inconsistent values.
    void validate() const;

    bool operator==(const Geometry&) const = default;
};

struct RankId {
    uint32_t channel = 0;
    uint32_t rank = 0;

    auto operator<=>(const RankId&) const = default;
};

std::string to_string(const RankId& r);

Geometry parse_geometry(std::string_view json_text);
std::string dump_geometry(const Geometry& g);
Geometry load_geometry(const std::string& path);

}  // namespace pimhtap
