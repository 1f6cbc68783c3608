#pragma once

#include <cstdint>
#include <map>

#include "pimhtap/mvcc_store.hpp"
#include "pimhtap/query_engine.hpp"

namespace pimhtap::reference {

// Brute-force executors that resolve each row by walking its version chain.

Bitmap filter(const MvccStore& store, uint32_t table, size_t column, const Predicate& pred, uint64_t ts,
              const Bitmap* mask = nullptr);
std::map<uint64_t, uint64_t> group_sum(const MvccStore& store, uint32_t table, size_t group_col, size_t agg_col,
                                       uint64_t ts, const Bitmap* mask = nullptr);
uint64_t sum(const MvccStore& store, uint32_t table, size_t column, uint64_t ts, const Bitmap* mask = nullptr);
// Nested-loop equi-join, sorted.
JoinPairs join(const MvccStore& store, uint32_t table_a, size_t col_a, uint32_t table_b, size_t col_b, uint64_t ts,
               const Bitmap* mask_a = nullptr, const Bitmap* mask_b = nullptr);

}  // namespace pimhtap::reference
