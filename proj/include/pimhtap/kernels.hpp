#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

// Inner loops of the PIM compute phases. Each kernel has a scalar reference
// and, on x86-64, an AVX2 variant picked at runtime.
namespace pimhtap::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

struct KernelTable {
    Isa isa;
    // out[i] = little-endian value of `width` (1..8) bytes at src + i*stride.
    void (*extract_u64)(const uint8_t* src, size_t src_len, size_t stride, uint32_t width, size_t n, uint64_t* out);
    // Bit i of out = mask bit i AND (lo <= values[i] <= hi) XOR negate.
    // out must hold ceil(n/64) words; spare bits are cleared.
    void (*filter_range)(const uint64_t* values, size_t n, uint64_t lo, uint64_t hi, bool negate, const uint64_t* mask,
                         uint64_t* out);
    // Wrapping sum of values[i] whose mask bit is set.
    uint64_t (*masked_sum)(const uint64_t* values, const uint64_t* mask, size_t n);
    // sums[groups[i]] += values[i] for set mask bits.
    void (*grouped_sum)(const uint64_t* values, const uint32_t* groups, const uint64_t* mask, size_t n, uint64_t* sums);
    void (*hash_u64)(const uint64_t* values, size_t n, uint64_t seed, uint64_t* out);
    uint64_t (*popcount)(const uint64_t* words, size_t n_words);
};

const KernelTable& scalar();
// nullptr when the binary or the CPU lacks AVX2.
const KernelTable* avx2();
// Best table for this CPU unless overridden by force_isa().
const KernelTable& active();
// Test hook; throws std::invalid_argument when the ISA is unavailable.
void force_isa(Isa isa);
void reset_isa();

// Scalar single-value hash shared by both variants.
inline uint64_t mix64(uint64_t x, uint64_t seed) {
    uint64_t z = x + seed + 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace pimhtap::kernels
