#pragma once

#include <cstddef>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "pnrt/assignment.hpp"
#include "pnrt/errors.hpp"
#include "pnrt/unit_set.hpp"

namespace pnrt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Strictly increasing grid eps_0 < ... < eps_K, entries >= 0, at least two.
class DistanceThresholds {
 public:
  explicit DistanceThresholds(std::vector<double> grid);
  const std::vector<double>& grid() const { return grid_; }
  std::size_t K() const { return grid_.size() - 1; }
  double operator[](std::size_t k) const { return grid_[k]; }

 private:
  std::vector<double> grid_;
};

// The three unit classes an evaluation works with, all derived from one
// assignment at thresholds (eps_s, eps_c):
//   imputable: exposure >  eps_s
//   spill:     eps_s < exposure <= eps_c
//   ctrl:      exposure >  eps_c
// spill and ctrl partition imputable.
struct ExposureSets {
  UnitSet imputable;
  UnitSet spill;
  UnitSet ctrl;
};

// Label-form proximity data: per-assignment interval categories on a declared
// grid, for a finite pool of assignments. Category c of a unit means its
// exposure lies in (eps_{c-1}, eps_c], with category 0 = [0, eps_0] and
// category K+1 = (eps_K, inf).
struct MembershipTable {
  std::vector<double> thresholds;
  std::vector<std::string> unit_ids;
  std::vector<std::string> assignment_ids;
  std::vector<AssignmentVector> pool;
  std::vector<std::vector<std::uint8_t>> category;  // [assignment][unit]
};

// Proximity between units, answering exposure and interval queries per
// assignment. Matrix and coordinate sources carry raw distances; label-form
// sources only answer interval queries on their declared grid and pool.
class ProximityStructure {
 public:
  static ProximityStructure dense(std::vector<double> matrix, std::size_t n,
                                  std::vector<std::string> unit_ids = {});
  static ProximityStructure coordinates(std::vector<double> xs, std::vector<double> ys,
                                        std::vector<std::string> unit_ids = {});
  static ProximityStructure membership(MembershipTable table);

  std::size_t size() const { return n_; }
  const std::vector<std::string>& unit_ids() const { return unit_ids_; }

  bool has_exposure() const { return kind_ != Kind::membership; }

  // exposure(i, d) = min distance from i to the treated set, +inf if none.
  // Treated units sit at exposure 0.
  std::vector<double> exposure_profile(const AssignmentVector& d) const;

  // Units with exposure(i, d) > eps. Any real eps for distance-backed
  // sources; grid points, 0, and negatives for label-form sources.
  UnitSet imputable_set(const AssignmentVector& d, double eps) const;

  // Units with a < exposure(i, d) <= b. Requires a < b; b = +inf selects the
  // pure-control tail.
  UnitSet interval_members(const AssignmentVector& d, double a, double b) const;

  ExposureSets exposure_sets(const AssignmentVector& d, double eps_s, double eps_c) const;

  // Units at infinite distance from every other unit. They land in every
  // imputable set and every pure-control interval; callers surface this in
  // diagnostics.
  std::vector<std::size_t> isolated_units() const;

  double distance(std::size_t i, std::size_t j) const;

  const MembershipTable& membership_table() const;

 private:
  enum class Kind { dense, coords, membership };

  ProximityStructure() = default;
  void check_assignment(const AssignmentVector& d) const;
  const std::vector<std::uint8_t>& membership_row(const AssignmentVector& d) const;

  // Resolved interval boundary for label-form queries.
  struct Boundary {
    enum class Tag { below_all, zero, grid, above_all } tag;
    std::size_t grid_index = 0;
  };
  Boundary resolve_boundary(double x) const;

  Kind kind_ = Kind::dense;
  std::size_t n_ = 0;
  std::vector<std::string> unit_ids_;
  std::vector<double> matrix_;  // dense, row-major
  std::vector<double> xs_, ys_;
  std::shared_ptr<const MembershipTable> table_;
  std::shared_ptr<const std::vector<std::pair<std::uint64_t, std::size_t>>> pool_index_;
};

}  // namespace pnrt
