#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>

namespace pimhtap {

inline constexpr size_t kLaunchRequestBytes = 64;

enum class OpType : uint8_t {
    LS = 0x01,
    Defragment = 0x02,
    Filter = 0x03,
    Group = 0x04,
    Hash = 0x05,
    Join = 0x06,
    Aggregation = 0x07,
};

std::string_view to_string(OpType op);
// Only LS and Defragment give the units control of the banks.
constexpr bool hands_over_banks(OpType op) { return op == OpType::LS || op == OpType::Defragment; }

enum class CompareOp : uint8_t { Eq = 0, Ne = 1, Lt = 2, Le = 3, Gt = 4, Ge = 5, Between = 6, True = 7 };

// Address fields are in 8-byte burst units relative to the unit's bank region;
// 3-byte fields hold values below 2^24.
struct LsParams {
    uint32_t result_addr = 0;
    uint16_t result_len = 0;
    uint16_t result_offset = 0;
    uint16_t result_stride = 0;
    uint32_t op0_addr = 0;
    uint16_t op0_len = 0;
    uint16_t op0_offset = 0;
    uint16_t op0_stride = 0;

    bool operator==(const LsParams&) const = default;
};

struct DefragmentParams {
    uint32_t meta_addr = 0;
    uint32_t data_addr = 0;
    uint16_t data_stride = 0;
    uint32_t delta_addr = 0;
    uint16_t delta_stride = 0;

    bool operator==(const DefragmentParams&) const = default;
};

// Offsets inside WRAM.
struct ColumnOpFields {
    uint16_t bitmap_offset = 0;
    uint16_t data_offset = 0;
    uint16_t result_offset = 0;
    uint8_t data_width = 0;

    bool operator==(const ColumnOpFields&) const = default;
};

struct FilterParams {
    ColumnOpFields f;
    uint64_t condition = 0;  // low bound, or the operand of a one-sided compare
    CompareOp compare = CompareOp::Eq;
    uint64_t condition_hi = 0;  // upper bound for Between

    bool operator==(const FilterParams&) const = default;
};

struct GroupParams {
    ColumnOpFields f;
    uint16_t dictionary_offset = 0;
    uint16_t dictionary_capacity = 0;

    bool operator==(const GroupParams&) const = default;
};

struct HashParams {
    ColumnOpFields f;
    uint64_t seed = 0;

    bool operator==(const HashParams&) const = default;
};

struct AggregationParams {
    ColumnOpFields f;
    uint16_t index_offset = 0;
    uint16_t group_count = 0;

    bool operator==(const AggregationParams&) const = default;
};

struct JoinParams {
    uint16_t hash1_offset = 0;
    uint16_t hash2_offset = 0;
    uint16_t result_offset = 0;
    uint8_t data_width = 0;

    bool operator==(const JoinParams&) const = default;
};

using LaunchParams =
    std::variant<LsParams, DefragmentParams, FilterParams, GroupParams, HashParams, JoinParams, AggregationParams>;

struct LaunchRequest {
    LaunchParams params;

    OpType op() const;
    bool operator==(const LaunchRequest&) const = default;
};

using EncodedRequest = std::array<uint8_t, kLaunchRequestBytes>;

// Little-endian fields packed from byte 1; unused payload bytes are zero.
// Throws ProtocolError when a 3-byte field overflows.
EncodedRequest encode(const LaunchRequest& request);
// Throws ProtocolError on unknown op bytes, bad compare codes or non-zero padding.
LaunchRequest decode(std::span<const uint8_t, kLaunchRequestBytes> bytes);

// Bytes of payload used by each op (excluding the op byte).
size_t payload_size(OpType op);

}  // namespace pimhtap
