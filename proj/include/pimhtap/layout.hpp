#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pimhtap/geometry.hpp"
#include "pimhtap/schema.hpp"

namespace pimhtap {

// One run of column bytes placed in a device slot of a part.
struct SlotEntry {
    uint32_t column = 0;         // index into the schema's columns
    uint32_t column_begin = 0;   // first byte of the column covered by this entry
    uint32_t length = 0;
    uint32_t device_offset = 0;  // offset inside the device's row_width stride

    bool operator==(const SlotEntry&) const = default;
};

struct DeviceSlot {
    std::vector<SlotEntry> entries;  // sorted by device_offset

    uint32_t used() const;
    bool operator==(const DeviceSlot&) const = default;
};

struct PartLayout {
    uint32_t part_id = 0;
    uint32_t row_width = 0;
    uint32_t channel = 0;
    std::vector<DeviceSlot> devices;  // size d, indexed by static device slot

    uint32_t data_bytes() const;
    uint32_t padding_bytes() const;  // per row: d * row_width - data_bytes
    bool operator==(const PartLayout&) const = default;
};

// Where a column's bytes live. A key column has exactly one fragment.
struct Fragment {
    uint32_t part = 0;
    uint32_t device = 0;  // static slot, before block rotation
    uint32_t device_offset = 0;
    uint32_t column_begin = 0;
    uint32_t length = 0;

    bool operator==(const Fragment&) const = default;
};

enum class LayoutKind { Naive, Compact };

// Physical coordinates of one logical byte.
struct BytePlacement {
    uint32_t part = 0;
    uint32_t channel = 0;
    uint32_t rank = 0;
    uint32_t bank = 0;
    uint32_t device = 0;  // physical device after rotation
    uint64_t local_offset = 0;

    auto operator<=>(const BytePlacement&) const = default;
};

class TableLayout {
public:
    TableLayout(TableSchema schema, std::vector<PartLayout> parts, const Geometry& geometry, double threshold,
                LayoutKind kind);

    const TableSchema& schema() const { return schema_; }
    const std::vector<PartLayout>& parts() const { return parts_; }
    const PartLayout& part(size_t i) const { return parts_.at(i); }
    uint32_t devices() const { return devices_; }
    uint32_t block_size() const { return block_size_; }
    uint32_t ranks_per_channel() const { return ranks_per_channel_; }
    uint32_t banks_per_device() const { return banks_per_device_; }
    // Bank slots available to one part: ranks_per_channel * banks_per_device.
    uint32_t bank_slots() const { return ranks_per_channel_ * banks_per_device_; }
    double threshold() const { return threshold_; }
    LayoutKind kind() const { return kind_; }

    const std::vector<Fragment>& fragments(size_t column) const { return fragments_.at(column); }
    const std::vector<Fragment>& fragments(std::string_view column) const;
    // True when the column is a single contiguous run inside one device.
    bool device_contiguous(size_t column) const { return fragments_.at(column).size() == 1; }

    // Bytes reserved per logical row across all parts and devices.
    uint64_t footprint_per_row() const;
    uint64_t padding_per_row() const;
    double padding_fraction() const;

    // Physical device holding static slot `device` for rows of `block`.
    uint32_t rotated_device(uint32_t device, uint64_t block) const {
        return static_cast<uint32_t>((device + block) % devices_);
    }
    // Runs of d consecutive blocks share a bank slot, so the rotation spreads
    // a column over every device of that bank.
    uint32_t bank_slot(uint64_t block) const;
    // Index of the block inside its (bank, device) region.
    uint64_t local_block(uint64_t block) const;
    RankId rank_of_block(uint32_t part, uint64_t block) const;
    uint32_t bank_of_block(uint64_t block) const;

    // Structured text export: parts, devices, entries and padding spans.
    std::string to_text() const;

private:
    TableSchema schema_;
    std::vector<PartLayout> parts_;
    std::vector<std::vector<Fragment>> fragments_;
    uint32_t devices_ = 0;
    uint32_t block_size_ = 0;
    uint32_t ranks_per_channel_ = 0;
    uint32_t banks_per_device_ = 0;
    double threshold_ = 0;
    LayoutKind kind_ = LayoutKind::Naive;
};

TableLayout generate_naive_layout(const TableSchema& schema, const Geometry& geometry);
TableLayout generate_compact_layout(const TableSchema& schema, const Geometry& geometry, double th);

// One entry per column byte, in column byte order.
std::vector<BytePlacement> locate(const TableLayout& layout, uint64_t row, std::string_view column);
// Same as above without the row_count precondition (used when tables grow).
std::vector<BytePlacement> locate_unchecked(const TableLayout& layout, uint64_t row, size_t column);

struct PartEfficiency {
    uint32_t part = 0;
    uint32_t row_width = 0;
    uint64_t useful_bytes = 0;     // data bytes per row in this part
    uint64_t footprint_bytes = 0;  // d * row_width
    uint64_t fetched_bytes = 0;    // whole cache lines for one row
};

struct EffectiveBandwidth {
    double cpu_eff = 0;
    double pim_eff = 0;
    uint64_t cpu_useful = 0;
    uint64_t cpu_fetched = 0;
    uint64_t pim_useful = 0;
    uint64_t pim_fetched = 0;
    std::vector<PartEfficiency> parts;
};

EffectiveBandwidth effective_bandwidth(const TableLayout& layout, const Geometry& geometry);

// Placed image of one row: parts concatenated, each part d * row_width bytes
// in physical device order (rotation applied for the row's block).
std::vector<uint8_t> scatter_row(const TableLayout& layout, uint64_t row, std::span<const uint8_t> row_bytes);
std::vector<uint8_t> gather_row(const TableLayout& layout, uint64_t row, std::span<const uint8_t> placed);

}  // namespace pimhtap
