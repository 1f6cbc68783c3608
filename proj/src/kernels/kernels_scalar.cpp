#include <bit>
#include <cstring>

#include "kernels_internal.hpp"

namespace pimhtap::kernels::detail {

void extract_u64_scalar(const uint8_t* src, size_t /*src_len*/, size_t stride, uint32_t width, size_t n, uint64_t* out) {
    for (size_t i = 0; i < n; ++i) {
        const uint8_t* p = src + i * stride;
        uint64_t v = 0;
        for (uint32_t b = 0; b < width; ++b) v |= uint64_t{p[b]} << (8 * b);
        out[i] = v;
    }
}

void filter_range_scalar(const uint64_t* values, size_t n, uint64_t lo, uint64_t hi, bool negate, const uint64_t* mask,
                         uint64_t* out) {
    const size_t words = (n + 63) / 64;
    for (size_t w = 0; w < words; ++w) {
        uint64_t bits = 0;
        const size_t base = w * 64;
        const size_t lim = n - base < 64 ? n - base : 64;
        for (size_t i = 0; i < lim; ++i) {
            const uint64_t v = values[base + i];
            const bool hit = (v >= lo && v <= hi) != negate;
            bits |= uint64_t{hit} << i;
        }
        out[w] = bits & mask[w];
    }
    if (n % 64) out[words - 1] &= (uint64_t{1} << (n % 64)) - 1;
}

uint64_t masked_sum_scalar(const uint64_t* values, const uint64_t* mask, size_t n) {
    uint64_t s = 0;
    for (size_t i = 0; i < n; ++i)
        if ((mask[i >> 6] >> (i & 63)) & 1u) s += values[i];
    return s;
}

void grouped_sum_scalar(const uint64_t* values, const uint32_t* groups, const uint64_t* mask, size_t n, uint64_t* sums) {
    for (size_t i = 0; i < n; ++i)
        if ((mask[i >> 6] >> (i & 63)) & 1u) sums[groups[i]] += values[i];
}

void hash_u64_scalar(const uint64_t* values, size_t n, uint64_t seed, uint64_t* out) {
    for (size_t i = 0; i < n; ++i) out[i] = mix64(values[i], seed);
}

uint64_t popcount_scalar(const uint64_t* words, size_t n_words) {
    uint64_t c = 0;
    for (size_t i = 0; i < n_words; ++i) c += static_cast<uint64_t>(std::popcount(words[i]));
    return c;
}

}  // namespace pimhtap::kernels::detail
