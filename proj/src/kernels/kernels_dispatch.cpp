#include <atomic>
#include <stdexcept>

#include "kernels_internal.hpp"

namespace pimhtap::kernels {
namespace {

const KernelTable kScalarTable{Isa::Scalar,
                               detail::extract_u64_scalar,
                               detail::filter_range_scalar,
                               detail::masked_sum_scalar,
                               detail::grouped_sum_scalar,
                               detail::hash_u64_scalar,
                               detail::popcount_scalar};

bool cpu_has_avx2() {
#if defined(PIMHTAP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

const KernelTable& detect() {
#if defined(PIMHTAP_HAVE_AVX2)
    if (cpu_has_avx2()) return detail::kAvx2Table;
#endif
    return kScalarTable;
}

std::atomic<const KernelTable*> g_forced{nullptr};

}  // namespace

std::string_view to_string(Isa isa) { return isa == Isa::Avx2 ? "avx2" : "scalar"; }

const KernelTable& scalar() { return kScalarTable; }

const KernelTable* avx2() {
#if defined(PIMHTAP_HAVE_AVX2)
    if (cpu_has_avx2()) return &detail::kAvx2Table;
#endif
    return nullptr;
}

const KernelTable& active() {
    if (auto* f = g_forced.load(std::memory_order_acquire)) return *f;
    static const KernelTable& best = detect();
    return best;
}

void force_isa(Isa isa) {
    if (isa == Isa::Scalar) {
        g_forced.store(&kScalarTable, std::memory_order_release);
        return;
    }
    auto* t = avx2();
    if (!t) throw std::invalid_argument("AVX2 kernels are not available on this machine");
    g_forced.store(t, std::memory_order_release);
}

void reset_isa() { g_forced.store(nullptr, std::memory_order_release); }

}  // namespace pimhtap::kernels
