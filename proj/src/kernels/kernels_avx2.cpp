#include <immintrin.h>

#include <bit>

#include "kernels_internal.hpp"

namespace pimhtap::kernels::detail {
namespace {

inline __m256i mullo_epi64(__m256i a, __m256i b) {
    const __m256i lo = _mm256_mul_epu32(a, b);
    const __m256i a_hi = _mm256_srli_epi64(a, 32);
    const __m256i b_hi = _mm256_srli_epi64(b, 32);
    const __m256i cross = _mm256_add_epi64(_mm256_mul_epu32(a_hi, b), _mm256_mul_epu32(a, b_hi));
    return _mm256_add_epi64(lo, _mm256_slli_epi64(cross, 32));
}

// Lane k is all-ones when bit k of `bits` (0..3) is set.
inline __m256i expand4(uint64_t bits) {
    const __m256i sel = _mm256_setr_epi64x(1, 2, 4, 8);
    const __m256i b = _mm256_set1_epi64x(static_cast<long long>(bits & 0xF));
    return _mm256_cmpeq_epi64(_mm256_and_si256(b, sel), sel);
}

void extract_u64_avx2(const uint8_t* src, size_t src_len, size_t stride, uint32_t width, size_t n, uint64_t* out) {
    const uint64_t keep = width >= 8 ? ~uint64_t{0} : (uint64_t{1} << (8 * width)) - 1;
    const __m256i vkeep = _mm256_set1_epi64x(static_cast<long long>(keep));
    const __m256i step = _mm256_setr_epi64x(0, static_cast<long long>(stride), static_cast<long long>(2 * stride),
                                            static_cast<long long>(3 * stride));
    size_t i = 0;
    // Full 8-byte gathers are only safe while they stay inside the buffer.
    while (i + 4 <= n && (i + 3) * stride + 8 <= src_len) {
        const __m256i idx = _mm256_add_epi64(_mm256_set1_epi64x(static_cast<long long>(i * stride)), step);
        __m256i v = _mm256_i64gather_epi64(reinterpret_cast<const long long*>(src), idx, 1);
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), _mm256_and_si256(v, vkeep));
        i += 4;
    }
    if (i < n) extract_u64_scalar(src + i * stride, src_len - i * stride, stride, width, n - i, out + i);
}

void filter_range_avx2(const uint64_t* values, size_t n, uint64_t lo, uint64_t hi, bool negate, const uint64_t* mask,
                       uint64_t* out) {
    const __m256i flip = _mm256_set1_epi64x(static_cast<long long>(0x8000000000000000ULL));
    const __m256i vlo = _mm256_xor_si256(_mm256_set1_epi64x(static_cast<long long>(lo)), flip);
    const __m256i vhi = _mm256_xor_si256(_mm256_set1_epi64x(static_cast<long long>(hi)), flip);
    const size_t words = (n + 63) / 64;
    for (size_t w = 0; w < words; ++w) {
        const size_t base = w * 64;
        const size_t lim = n - base < 64 ? n - base : 64;
        uint64_t bits = 0;
        size_t i = 0;
        for (; i + 4 <= lim; i += 4) {
            const __m256i v = _mm256_xor_si256(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(values + base + i)), flip);
            const __m256i below = _mm256_cmpgt_epi64(vlo, v);
            const __m256i above = _mm256_cmpgt_epi64(v, vhi);
            const int out_of_range = _mm256_movemask_pd(_mm256_castsi256_pd(_mm256_or_si256(below, above)));
            uint64_t hit = static_cast<uint64_t>(~out_of_range & 0xF);
            if (negate) hit ^= 0xF;
            bits |= hit << i;
        }
        for (; i < lim; ++i) {
            const uint64_t v = values[base + i];
            bits |= uint64_t{(v >= lo && v <= hi) != negate} << i;
        }
        out[w] = bits & mask[w];
    }
    if (n % 64) out[words - 1] &= (uint64_t{1} << (n % 64)) - 1;
}

uint64_t masked_sum_avx2(const uint64_t* values, const uint64_t* mask, size_t n) {
    __m256i acc = _mm256_setzero_si256();
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const uint64_t bits = mask[i >> 6] >> (i & 63);
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(values + i));
        acc = _mm256_add_epi64(acc, _mm256_and_si256(v, expand4(bits)));
    }
    alignas(32) uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    uint64_t s = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n; ++i)
        if ((mask[i >> 6] >> (i & 63)) & 1u) s += values[i];
    return s;
}

void hash_u64_avx2(const uint64_t* values, size_t n, uint64_t seed, uint64_t* out) {
    const __m256i add = _mm256_set1_epi64x(static_cast<long long>(seed + 0x9e3779b97f4a7c15ULL));
    const __m256i m1 = _mm256_set1_epi64x(static_cast<long long>(0xbf58476d1ce4e5b9ULL));
    const __m256i m2 = _mm256_set1_epi64x(static_cast<long long>(0x94d049bb133111ebULL));
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256i z = _mm256_add_epi64(_mm256_loadu_si256(reinterpret_cast<const __m256i*>(values + i)), add);
        z = mullo_epi64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 30)), m1);
        z = mullo_epi64(_mm256_xor_si256(z, _mm256_srli_epi64(z, 27)), m2);
        z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
        _mm256_storeu_si256(reinterpret_cast<__m256i*>(out + i), z);
    }
    for (; i < n; ++i) out[i] = mix64(values[i], seed);
}

// Nibble lookup popcount, summed with SAD against zero.
uint64_t popcount_avx2(const uint64_t* words, size_t n_words) {
    const __m256i lut = _mm256_setr_epi8(0, 1, 1, 2, 1, 2, 2, 3, 1, 2, 2, 3, 2, 3, 3, 4, 0, 1, 1, 2, 1, 2, 2, 3, 1, 2,
                                         2, 3, 2, 3, 3, 4);
    const __m256i low = _mm256_set1_epi8(0x0f);
    __m256i acc = _mm256_setzero_si256();
    size_t i = 0;
    for (; i + 4 <= n_words; i += 4) {
        const __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(words + i));
        const __m256i lo = _mm256_shuffle_epi8(lut, _mm256_and_si256(v, low));
        const __m256i hi = _mm256_shuffle_epi8(lut, _mm256_and_si256(_mm256_srli_epi16(v, 4), low));
        acc = _mm256_add_epi64(acc, _mm256_sad_epu8(_mm256_add_epi8(lo, hi), _mm256_setzero_si256()));
    }
    alignas(32) uint64_t lanes[4];
    _mm256_store_si256(reinterpret_cast<__m256i*>(lanes), acc);
    uint64_t c = lanes[0] + lanes[1] + lanes[2] + lanes[3];
    for (; i < n_words; ++i) c += static_cast<uint64_t>(std::popcount(words[i]));
    return c;
}

}  // namespace

// Grouped sums scatter into arbitrary slots; the scalar loop is used as is.
const KernelTable kAvx2Table{Isa::Avx2,          extract_u64_avx2, filter_range_avx2, masked_sum_avx2,
                             grouped_sum_scalar, hash_u64_avx2,    popcount_avx2};

}  // namespace pimhtap::kernels::detail
