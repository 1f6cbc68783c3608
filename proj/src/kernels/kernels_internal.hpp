#pragma once

#include "pimhtap/kernels.hpp"

namespace pimhtap::kernels::detail {

void extract_u64_scalar(const uint8_t* src, size_t src_len, size_t stride, uint32_t width, size_t n, uint64_t* out);
void filter_range_scalar(const uint64_t* values, size_t n, uint64_t lo, uint64_t hi, bool negate, const uint64_t* mask,
                         uint64_t* out);
uint64_t masked_sum_scalar(const uint64_t* values, const uint64_t* mask, size_t n);
void grouped_sum_scalar(const uint64_t* values, const uint32_t* groups, const uint64_t* mask, size_t n, uint64_t* sums);
void hash_u64_scalar(const uint64_t* values, size_t n, uint64_t seed, uint64_t* out);
uint64_t popcount_scalar(const uint64_t* words, size_t n_words);

#if defined(PIMHTAP_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace pimhtap::kernels::detail
