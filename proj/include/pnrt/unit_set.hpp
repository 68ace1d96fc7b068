#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace pnrt {

// Subset of the units {0..n-1}, packed 64 per word.
class UnitSet {
 public:
  UnitSet() = default;
  explicit UnitSet(std::size_t n) : n_(n), words_((n + 63) / 64, 0) {}

  static UnitSet all(std::size_t n) {
    UnitSet s(n);
    for (auto& w : s.words_) w = ~0ULL;
    s.trim();
    return s;
  }

  std::size_t universe_size() const { return n_; }

  void add(std::size_t i) { words_[i >> 6] |= (1ULL << (i & 63)); }
  void remove(std::size_t i) { words_[i >> 6] &= ~(1ULL << (i & 63)); }
  bool contains(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }

  std::size_t count() const {
    std::size_t c = 0;
    for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
    return c;
  }

  bool empty() const {
    for (auto w : words_) if (w) return false;
    return true;
  }

  UnitSet& intersect_with(const UnitSet& o) {
    for (std::size_t k = 0; k < words_.size(); ++k) words_[k] &= o.words_[k];
    return *this;
  }

  friend UnitSet operator&(UnitSet a, const UnitSet& b) { return a.intersect_with(b); }

  UnitSet complement() const {
    UnitSet s(n_);
    for (std::size_t k = 0; k < words_.size(); ++k) s.words_[k] = ~words_[k];
    s.trim();
    return s;
  }

  bool is_subset_of(const UnitSet& o) const {
    for (std::size_t k = 0; k < words_.size(); ++k)
      if (words_[k] & ~o.words_[k]) return false;
    return true;
  }

  bool operator==(const UnitSet& o) const { return n_ == o.n_ && words_ == o.words_; }

  template <class Fn>
  void for_each(Fn&& fn) const {
    for (std::size_t k = 0; k < words_.size(); ++k) {
      std::uint64_t w = words_[k];
      while (w) {
        unsigned b = static_cast<unsigned>(std::countr_zero(w));
        fn(k * 64 + b);
        w &= w - 1;
      }
    }
  }

  std::vector<std::size_t> to_indices() const {
    std::vector<std::size_t> out;
    out.reserve(count());
    for_each([&](std::size_t i) { out.push_back(i); });
    return out;
  }

 private:
  void trim() {
    if (n_ % 64 != 0 && !words_.empty()) words_.back() &= (1ULL << (n_ % 64)) - 1;
  }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace pnrt
