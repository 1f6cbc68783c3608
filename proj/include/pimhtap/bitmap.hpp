#pragma once

#include <cstdint>
#include <vector>

namespace pimhtap {

// Growable bitset with 64-bit words; spare bits in the last word stay zero.
class Bitmap {
public:
    Bitmap() = default;
    explicit Bitmap(uint64_t size) { resize(size); }

    uint64_t size() const { return size_; }
    void resize(uint64_t size);
    void clear_all();

    bool test(uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1u; }
    void set(uint64_t i) { words_[i >> 6] |= uint64_t{1} << (i & 63); }
    void reset(uint64_t i) { words_[i >> 6] &= ~(uint64_t{1} << (i & 63)); }
    void assign(uint64_t i, bool v) { v ? set(i) : reset(i); }

    uint64_t count() const;
    std::vector<uint64_t> indices() const;

    const std::vector<uint64_t>& words() const { return words_; }
    std::vector<uint64_t>& words() { return words_; }

    bool operator==(const Bitmap&) const = default;

private:
    std::vector<uint64_t> words_;
    uint64_t size_ = 0;
};

}  // namespace pimhtap
