#include "pimhtap/geometry.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "pimhtap/error.hpp"

namespace pimhtap {

using nlohmann::json;

void Geometry::validate() const {
    if (channels == 0 || ranks_per_channel == 0 || devices_per_rank == 0 || banks_per_device == 0)
        throw ValidationError("geometry counts must be positive");
    if (devices_per_rank > 255) throw ValidationError("at most 255 devices per rank");
    if (interleave_granularity != 8) throw ValidationError("interleave granularity must be 8 bytes");
    if (cache_line == 0 || cache_line % interleave_granularity != 0)
        throw ValidationError("cache line must be a multiple of the interleave granularity");
    if (block_size < 1024 || block_size % 64 != 0)
        throw ValidationError("block size must be a multiple of 64 and at least 1024 rows");
    if (!(cpu_channel_bandwidth > 0) || !(pim_unit_bandwidth > 0) || !(pim_compute_rate > 0))
        throw ValidationError("bandwidths and compute rate must be positive");
    if (handover_latency < 0 || control_latency < 0 || defrag_fixed_overhead < 0)
        throw ValidationError("latencies must be non-negative");
    if (wram_data_budget == 0 || wram_data_budget > wram_capacity / 2)
        throw ValidationError("WRAM data budget must be in (0, capacity / 2]");
    if (metadata_bytes == 0) throw ValidationError("metadata entry size must be positive");
}

std::string to_string(const RankId& r) {
    return "c" + std::to_string(r.channel) + "r" + std::to_string(r.rank);
}

namespace {

template <typename T>
void maybe(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

}  // namespace

Geometry parse_geometry(std::string_view json_text) {
    Geometry g;
    json j;
    try {
        j = json::parse(json_text);
        maybe(j, "channels", g.channels);
        maybe(j, "ranks_per_channel", g.ranks_per_channel);
        maybe(j, "devices_per_rank", g.devices_per_rank);
        maybe(j, "banks_per_device", g.banks_per_device);
        maybe(j, "interleave_granularity", g.interleave_granularity);
        maybe(j, "cache_line", g.cache_line);
        maybe(j, "block_size", g.block_size);
        maybe(j, "cpu_channel_bandwidth", g.cpu_channel_bandwidth);
        maybe(j, "pim_unit_bandwidth", g.pim_unit_bandwidth);
        maybe(j, "pim_compute_rate", g.pim_compute_rate);
        maybe(j, "handover_latency", g.handover_latency);
        maybe(j, "control_latency", g.control_latency);
        maybe(j, "defrag_fixed_overhead", g.defrag_fixed_overhead);
        maybe(j, "wram_capacity", g.wram_capacity);
        maybe(j, "wram_data_budget", g.wram_data_budget);
        maybe(j, "metadata_bytes", g.metadata_bytes);
        maybe(j, "special_address", g.special_address);
        if (j.contains("timing")) {
            const auto& t = j.at("timing");
            maybe(t, "tBURST", g.timing.tBURST);
            maybe(t, "tRCD", g.timing.tRCD);
            maybe(t, "tCL", g.timing.tCL);
            maybe(t, "tRP", g.timing.tRP);
            maybe(t, "tRAS", g.timing.tRAS);
            maybe(t, "tRRD", g.timing.tRRD);
            maybe(t, "tRFC", g.timing.tRFC);
            maybe(t, "tWR", g.timing.tWR);
            maybe(t, "tWTR", g.timing.tWTR);
            maybe(t, "tRTP", g.timing.tRTP);
            maybe(t, "tRTW", g.timing.tRTW);
            maybe(t, "tCS", g.timing.tCS);
            maybe(t, "tREFI", g.timing.tREFI);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed geometry config: ") + e.what());
    }
    g.validate();
    return g;
}

std::string dump_geometry(const Geometry& g) {
    json j{{"channels", g.channels},
           {"ranks_per_channel", g.ranks_per_channel},
           {"devices_per_rank", g.devices_per_rank},
           {"banks_per_device", g.banks_per_device},
           {"interleave_granularity", g.interleave_granularity},
           {"cache_line", g.cache_line},
           {"block_size", g.block_size},
           {"cpu_channel_bandwidth", g.cpu_channel_bandwidth},
           {"pim_unit_bandwidth", g.pim_unit_bandwidth},
           {"pim_compute_rate", g.pim_compute_rate},
           {"handover_latency", g.handover_latency},
           {"control_latency", g.control_latency},
           {"defrag_fixed_overhead", g.defrag_fixed_overhead},
           {"wram_capacity", g.wram_capacity},
           {"wram_data_budget", g.wram_data_budget},
           {"metadata_bytes", g.metadata_bytes},
           {"special_address", g.special_address}};
    j["timing"] = {{"tBURST", g.timing.tBURST}, {"tRCD", g.timing.tRCD}, {"tCL", g.timing.tCL},
                   {"tRP", g.timing.tRP},       {"tRAS", g.timing.tRAS}, {"tRRD", g.timing.tRRD},
                   {"tRFC", g.timing.tRFC},     {"tWR", g.timing.tWR},   {"tWTR", g.timing.tWTR},
                   {"tRTP", g.timing.tRTP},     {"tRTW", g.timing.tRTW}, {"tCS", g.timing.tCS},
                   {"tREFI", g.timing.tREFI}};
    return j.dump(2);
}

Geometry load_geometry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LookupError("cannot open geometry config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_geometry(ss.str());
}

}  // namespace pimhtap
