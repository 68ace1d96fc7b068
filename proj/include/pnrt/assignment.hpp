#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pnrt/unit_set.hpp"

namespace pnrt {

// Treatment assignment: one bit per unit.
class AssignmentVector {
 public:
  AssignmentVector() = default;
  explicit AssignmentVector(std::size_t n) : bits_(n, 0) {}
  explicit AssignmentVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}

  static AssignmentVector from_treated(std::size_t n, const std::vector<std::size_t>& treated) {
    AssignmentVector d(n);
    for (auto i : treated) d.bits_[i] = 1;
    return d;
  }

  std::size_t size() const { return bits_.size(); }
  bool treated(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t treated_count() const {
    std::size_t c = 0;
    for (auto b : bits_) c += b;
    return c;
  }

  std::vector<std::size_t> treated_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) out.push_back(i);
    return out;
  }

  UnitSet treated_set() const {
    UnitSet s(bits_.size());
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) s.add(i);
    return s;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  std::string to_bitstring() const {
    std::string s(bits_.size(), '0');
    for (std::size_t i = 0; i < bits_.size(); ++i)
      if (bits_[i]) s[i] = '1';
    return s;
  }

  bool operator==(const AssignmentVector& o) const { return bits_ == o.bits_; }

  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bits_) {
      h ^= b;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::vector<std::uint8_t> bits_;
};

struct AssignmentVectorHash {
  std::size_t operator()(const AssignmentVector& d) const {
    return static_cast<std::size_t>(d.hash());
  }
};

}  // namespace pnrt
