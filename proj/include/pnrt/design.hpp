#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "pnrt/assignment.hpp"
#include "pnrt/errors.hpp"
#include "pnrt/rng.hpp"

namespace pnrt {

// Independent Bernoulli treatment per unit. probs holds either one entry
// (shared) or one per unit.
struct BernoulliDesign {
  std::size_t n = 0;
  std::vector<double> probs;
};

// Uniformly random size-m treated subset.
struct CompleteDesign {
  std::size_t n = 0;
  std::size_t m = 0;
};

// Complete randomization within each stratum. strata[i] names unit i's
// stratum; m[s] units are treated in stratum s.
struct StratifiedDesign {
  std::vector<std::size_t> strata;
  std::vector<std::size_t> m;
};

// Explicit list of assignments with sampling probabilities.
struct PoolDesign {
  std::vector<AssignmentVector> assignments;
  std::vector<double> probs;
  std::vector<std::string> ids;  // optional labels, parallel to assignments
};

struct WeightedAssignment {
  AssignmentVector d;
  double prob;
};

inline constexpr std::size_t kDefaultEnumerationCap = 1000000;

// A randomization design: sample draws, or enumerate the support with exact
// probabilities when it is small enough.
class AssignmentMechanism {
 public:
  explicit AssignmentMechanism(BernoulliDesign d);
  explicit AssignmentMechanism(CompleteDesign d);
  explicit AssignmentMechanism(StratifiedDesign d);
  explicit AssignmentMechanism(PoolDesign d);

  std::size_t n() const { return n_; }

  AssignmentVector sample(Rng& rng) const;

  // Exact support with probabilities. Throws InputError when the support
  // exceeds cap.
  std::vector<WeightedAssignment> enumerate(std::size_t cap = kDefaultEnumerationCap) const;

  // Support size if cheap to compute, 0 if astronomically large.
  double support_size() const;

  // True when d has positive probability under this design.
  bool contains(const AssignmentVector& d) const;

  const PoolDesign* pool() const { return std::get_if<PoolDesign>(&design_); }

  std::string describe() const;

 private:
  std::variant<BernoulliDesign, CompleteDesign, StratifiedDesign, PoolDesign> design_;
  std::size_t n_ = 0;
};

}  // namespace pnrt
