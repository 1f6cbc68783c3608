#include "pimhtap/bitmap.hpp"

#include <algorithm>
#include <bit>

namespace pimhtap {

void Bitmap::resize(uint64_t size) {
    words_.resize((size + 63) / 64, 0);
    if (size < size_ && (size & 63) && !words_.empty()) words_.back() &= (uint64_t{1} << (size & 63)) - 1;
    size_ = size;
}

void Bitmap::clear_all() { std::fill(words_.begin(), words_.end(), 0); }

uint64_t Bitmap::count() const {
    uint64_t n = 0;
    for (auto w : words_) n += static_cast<uint64_t>(std::popcount(w));
    return n;
}

std::vector<uint64_t> Bitmap::indices() const {
    std::vector<uint64_t> out;
    for (size_t wi = 0; wi < words_.size(); ++wi) {
        uint64_t w = words_[wi];
        while (w) {
            out.push_back(wi * 64 + static_cast<uint64_t>(std::countr_zero(w)));
            w &= w - 1;
        }
    }
    return out;
}

}  // namespace pimhtap
