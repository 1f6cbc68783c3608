#include "pimhtap/launch_request.hpp"

#include <cstdio>
#include <string>

#include "pimhtap/error.hpp"

namespace pimhtap {

std::string_view to_string(OpType op) {
    switch (op) {
        case OpType::LS: return "LS";
        case OpType::Defragment: return "Defragment";
        case OpType::Filter: return "Filter";
        case OpType::Group: return "Group";
        case OpType::Hash: return "Hash";
        case OpType::Join: return "Join";
        case OpType::Aggregation: return "Aggregation";
    }
    return "?";
}

OpType LaunchRequest::op() const {
    return std::visit(
        [](const auto& p) -> OpType {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LsParams>) return OpType::LS;
            if constexpr (std::is_same_v<T, DefragmentParams>) return OpType::Defragment;
            if constexpr (std::is_same_v<T, FilterParams>) return OpType::Filter;
            if constexpr (std::is_same_v<T, GroupParams>) return OpType::Group;
            if constexpr (std::is_same_v<T, HashParams>) return OpType::Hash;
            if constexpr (std::is_same_v<T, JoinParams>) return OpType::Join;
            if constexpr (std::is_same_v<T, AggregationParams>) return OpType::Aggregation;
        },
        params);
}

namespace {

class Writer {
public:
    explicit Writer(EncodedRequest& out) : out_(out) {}
    void put(uint64_t v, size_t n) {
        if (n < 8 && (v >> (8 * n)) != 0)
            throw ProtocolError("value " + std::to_string(v) + " does not fit in " + std::to_string(n) + " bytes");
        for (size_t i = 0; i < n; ++i) out_[pos_++] = static_cast<uint8_t>(v >> (8 * i));
    }
    void fields(const ColumnOpFields& f) {
        put(f.bitmap_offset, 2);
        put(f.data_offset, 2);
        put(f.result_offset, 2);
        put(f.data_width, 1);
    }
    size_t pos() const { return pos_; }

private:
    EncodedRequest& out_;
    size_t pos_ = 1;
};

class Reader {
public:
    explicit Reader(std::span<const uint8_t, kLaunchRequestBytes> in) : in_(in) {}
    uint64_t get(size_t n) {
        uint64_t v = 0;
        for (size_t i = 0; i < n; ++i) v |= uint64_t{in_[pos_++]} << (8 * i);
        return v;
    }
    uint16_t u16() { return static_cast<uint16_t>(get(2)); }
    uint32_t u24() { return static_cast<uint32_t>(get(3)); }
    uint8_t u8() { return static_cast<uint8_t>(get(1)); }
    ColumnOpFields fields() {
        ColumnOpFields f;
        f.bitmap_offset = u16();
        f.data_offset = u16();
        f.result_offset = u16();
        f.data_width = u8();
        return f;
    }
    size_t pos() const { return pos_; }

private:
    std::span<const uint8_t, kLaunchRequestBytes> in_;
    size_t pos_ = 1;
};

}  // namespace

size_t payload_size(OpType op) {
    switch (op) {
        case OpType::LS: return 18;
        case OpType::Defragment: return 13;
        case OpType::Filter: return 7 + 8 + 1 + 8;
        case OpType::Group: return 7 + 4;
        case OpType::Hash: return 7 + 8;
        case OpType::Aggregation: return 7 + 4;
        case OpType::Join: return 7;
    }
    return 0;
}

EncodedRequest encode(const LaunchRequest& request) {
    EncodedRequest out{};
    out[0] = static_cast<uint8_t>(request.op());
    Writer w(out);
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, LsParams>) {
                w.put(p.result_addr, 3);
                w.put(p.result_len, 2);
                w.put(p.result_offset, 2);
                w.put(p.result_stride, 2);
                w.put(p.op0_addr, 3);
                w.put(p.op0_len, 2);
                w.put(p.op0_offset, 2);
                w.put(p.op0_stride, 2);
            } else if constexpr (std::is_same_v<T, DefragmentParams>) {
                w.put(p.meta_addr, 3);
                w.put(p.data_addr, 3);
                w.put(p.data_stride, 2);
                w.put(p.delta_addr, 3);
                w.put(p.delta_stride, 2);
            } else if constexpr (std::is_same_v<T, FilterParams>) {
                w.fields(p.f);
                w.put(p.condition, 8);
                w.put(static_cast<uint8_t>(p.compare), 1);
                w.put(p.condition_hi, 8);
            } else if constexpr (std::is_same_v<T, GroupParams>) {
                w.fields(p.f);
                w.put(p.dictionary_offset, 2);
                w.put(p.dictionary_capacity, 2);
            } else if constexpr (std::is_same_v<T, HashParams>) {
                w.fields(p.f);
                w.put(p.seed, 8);
            } else if constexpr (std::is_same_v<T, AggregationParams>) {
                w.fields(p.f);
                w.put(p.index_offset, 2);
                w.put(p.group_count, 2);
            } else if constexpr (std::is_same_v<T, JoinParams>) {
                w.put(p.hash1_offset, 2);
                w.put(p.hash2_offset, 2);
                w.put(p.result_offset, 2);
                w.put(p.data_width, 1);
            }
        },
        request.params);
    return out;
}

LaunchRequest decode(std::span<const uint8_t, kLaunchRequestBytes> bytes) {
    Reader r(bytes);
    LaunchRequest req;
    const uint8_t op = bytes[0];
    switch (static_cast<OpType>(op)) {
        case OpType::LS: {
            LsParams p;
            p.result_addr = r.u24();
            p.result_len = r.u16();
            p.result_offset = r.u16();
            p.result_stride = r.u16();
            p.op0_addr = r.u24();
            p.op0_len = r.u16();
            p.op0_offset = r.u16();
            p.op0_stride = r.u16();
            req.params = p;
            break;
        }
        case OpType::Defragment: {
            DefragmentParams p;
            p.meta_addr = r.u24();
            p.data_addr = r.u24();
            p.data_stride = r.u16();
            p.delta_addr = r.u24();
            p.delta_stride = r.u16();
            req.params = p;
            break;
        }
        case OpType::Filter: {
            FilterParams p;
            p.f = r.fields();
            p.condition = r.get(8);
            const uint8_t cmp = r.u8();
            if (cmp > static_cast<uint8_t>(CompareOp::True))
                throw ProtocolError("unknown compare code " + std::to_string(cmp));
            p.compare = static_cast<CompareOp>(cmp);
            p.condition_hi = r.get(8);
            req.params = p;
            break;
        }
        case OpType::Group: {
            GroupParams p;
            p.f = r.fields();
            p.dictionary_offset = r.u16();
            p.dictionary_capacity = r.u16();
            req.params = p;
            break;
        }
        case OpType::Hash: {
            HashParams p;
            p.f = r.fields();
            p.seed = r.get(8);
            req.params = p;
            break;
        }
        case OpType::Aggregation: {
            AggregationParams p;
            p.f = r.fields();
            p.index_offset = r.u16();
            p.group_count = r.u16();
            req.params = p;
            break;
        }
        case OpType::Join: {
            JoinParams p;
            p.hash1_offset = r.u16();
            p.hash2_offset = r.u16();
            p.result_offset = r.u16();
            p.data_width = r.u8();
            req.params = p;
            break;
        }
        default: {
            char buf[8];
            std::snprintf(buf, sizeof buf, "0x%02x", op);
            throw ProtocolError(std::string("unknown launch op type ") + buf);
        }
    }
    for (size_t i = r.pos(); i < kLaunchRequestBytes; ++i)
        if (bytes[i] != 0) throw ProtocolError("non-zero padding byte at offset " + std::to_string(i));
    return req;
}

}  // namespace pimhtap
