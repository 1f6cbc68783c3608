#include "pimhtap/reference_executor.hpp"

#include <algorithm>
#include <optional>

namespace pimhtap::reference {

namespace {

std::optional<uint64_t> value_at(const MvccStore& store, uint32_t table, uint64_t row, size_t column, uint64_t ts) {
    const auto ref = store.visible_version(table, row, ts);
    if (!ref) return std::nullopt;
    const auto& t = store.table(table);
    uint8_t buf[256] = {};
    t.read_column(*ref, column, buf);
    const uint32_t w = t.layout().schema().columns.at(column).width;
    uint64_t v = 0;
    for (uint32_t i = 0; i < std::min<uint32_t>(w, 8); ++i) v |= uint64_t{buf[i]} << (8 * i);
    return v;
}

bool in_mask(const Bitmap* mask, uint64_t row) { return !mask || (row < mask->size() && mask->test(row)); }

}  // namespace

Bitmap filter(const MvccStore& store, uint32_t table, size_t column, const Predicate& pred, uint64_t ts,
              const Bitmap* mask) {
    const uint64_t rows = store.table(table).rows();
    Bitmap out(rows);
    for (uint64_t r = 0; r < rows; ++r) {
        if (!in_mask(mask, r)) continue;
        const auto v = value_at(store, table, r, column, ts);
        if (v && pred.matches(*v)) out.set(r);
    }
    return out;
}

std::map<uint64_t, uint64_t> group_sum(const MvccStore& store, uint32_t table, size_t group_col, size_t agg_col,
                                       uint64_t ts, const Bitmap* mask) {
    std::map<uint64_t, uint64_t> out;
    const uint64_t rows = store.table(table).rows();
    for (uint64_t r = 0; r < rows; ++r) {
        if (!in_mask(mask, r)) continue;
        const auto g = value_at(store, table, r, group_col, ts);
        if (!g) continue;
        out[*g] += *value_at(store, table, r, agg_col, ts);
    }
    return out;
}

uint64_t sum(const MvccStore& store, uint32_t table, size_t column, uint64_t ts, const Bitmap* mask) {
    uint64_t total = 0;
    const uint64_t rows = store.table(table).rows();
    for (uint64_t r = 0; r < rows; ++r)
        if (in_mask(mask, r))
            if (const auto v = value_at(store, table, r, column, ts)) total += *v;
    return total;
}

JoinPairs join(const MvccStore& store, uint32_t table_a, size_t col_a, uint32_t table_b, size_t col_b, uint64_t ts,
               const Bitmap* mask_a, const Bitmap* mask_b) {
    std::vector<std::pair<uint64_t, uint64_t>> a, b;  // (row, value)
    for (uint64_t r = 0; r < store.table(table_a).rows(); ++r)
        if (in_mask(mask_a, r))
            if (const auto v = value_at(store, table_a, r, col_a, ts)) a.emplace_back(r, *v);
    for (uint64_t r = 0; r < store.table(table_b).rows(); ++r)
        if (in_mask(mask_b, r))
            if (const auto v = value_at(store, table_b, r, col_b, ts)) b.emplace_back(r, *v);
    JoinPairs out;
    for (const auto& [ra, va] : a)
        for (const auto& [rb, vb] : b)
            if (va == vb) out.emplace_back(ra, rb);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace pimhtap::reference
