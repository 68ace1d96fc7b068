#include "pnrt/network.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace pnrt {

namespace {

std::vector<std::string> default_ids(std::size_t n) {
  std::vector<std::string> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = "u" + std::to_string(i + 1);
  return ids;
}

}  // namespace

DistanceThresholds::DistanceThresholds(std::vector<double> grid) : grid_(std::move(grid)) {
  if (grid_.size() < 2) throw InputError("threshold grid needs at least two entries");
  for (std::size_t k = 0; k < grid_.size(); ++k) {
    if (std::isnan(grid_[k])) throw InputError("threshold grid contains NaN");
    if (grid_[k] < 0) throw InputError("threshold grid entries must be nonnegative");
    if (k > 0 && !(grid_[k] > grid_[k - 1]))
      throw InputError("threshold grid must be strictly increasing");
  }
  if (std::isinf(grid_.back())) throw InputError("threshold grid entries must be finite");
}

ProximityStructure ProximityStructure::dense(std::vector<double> matrix, std::size_t n,
                                             std::vector<std::string> unit_ids) {
  if (matrix.size() != n * n) throw InputError("distance matrix size does not match unit count");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double v = matrix[i * n + j];
      if (std::isnan(v)) throw InputError("distance matrix contains NaN");
      if (i == j) {
        if (v != 0.0)
          throw InputError("distance matrix diagonal must be zero (unit " + std::to_string(i + 1) + ")");
      } else {
        if (!(v > 0.0))
          throw InputError("off-diagonal distances must be positive (units " + std::to_string(i + 1) +
                           "," + std::to_string(j + 1) + ")");
        if (v != matrix[j * n + i])
          throw InputError("distance matrix is not symmetric (units " + std::to_string(i + 1) + "," +
                           std::to_string(j + 1) + ")");
      }
    }
  }
  ProximityStructure g;
  g.kind_ = Kind::dense;
  g.n_ = n;
  g.matrix_ = std::move(matrix);
  g.unit_ids_ = unit_ids.empty() ? default_ids(n) : std::move(unit_ids);
  if (g.unit_ids_.size() != n) throw InputError("unit id list does not match unit count");
  return g;
}

ProximityStructure ProximityStructure::coordinates(std::vector<double> xs, std::vector<double> ys,
                                                   std::vector<std::string> unit_ids) {
  if (xs.size() != ys.size()) throw InputError("coordinate arrays differ in length");
  for (std::size_t i = 0; i < xs.size(); ++i)
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]))
      throw InputError("coordinates must be finite (unit " + std::to_string(i + 1) + ")");
  ProximityStructure g;
  g.kind_ = Kind::coords;
  g.n_ = xs.size();
  g.xs_ = std::move(xs);
  g.ys_ = std::move(ys);
  g.unit_ids_ = unit_ids.empty() ? default_ids(g.n_) : std::move(unit_ids);
  if (g.unit_ids_.size() != g.n_) throw InputError("unit id list does not match unit count");
  return g;
}

ProximityStructure ProximityStructure::membership(MembershipTable table) {
  DistanceThresholds check(table.thresholds);  // validates the grid
  std::size_t n = table.unit_ids.size();
  if (n == 0) throw InputError("membership table has no units");
  if (table.pool.size() != table.category.size() ||
      table.pool.size() != table.assignment_ids.size())
    throw InputError("membership table pool, ids, and categories differ in length");
  std::size_t ncat = table.thresholds.size() + 1;
  for (std::size_t a = 0; a < table.pool.size(); ++a) {
    if (table.pool[a].size() != n)
      throw InputError("membership table assignment " + table.assignment_ids[a] +
                       " has wrong unit count");
    if (table.category[a].size() != n)
      throw InputError("membership table categories for assignment " + table.assignment_ids[a] +
                       " have wrong unit count");
    for (std::size_t i = 0; i < n; ++i) {
      if (table.category[a][i] >= ncat)
        throw InputError("membership table category out of range for assignment " +
                         table.assignment_ids[a]);
      // A treated unit is at exposure 0, which lies in [0, eps_0].
      if (table.pool[a].treated(i) && table.category[a][i] != 0)
        throw InputError("treated unit " + table.unit_ids[i] + " not in the innermost class of assignment " +
                         table.assignment_ids[a]);
      if (table.thresholds[0] == 0.0 && !table.pool[a].treated(i) && table.category[a][i] == 0)
        throw InputError("untreated unit " + table.unit_ids[i] + " labeled at exposure zero in assignment " +
                         table.assignment_ids[a]);
    }
  }
  ProximityStructure g;
  g.kind_ = Kind::membership;
  g.n_ = n;
  g.unit_ids_ = table.unit_ids;
  auto idx = std::make_shared<std::vector<std::pair<std::uint64_t, std::size_t>>>();
  idx->reserve(table.pool.size());
  for (std::size_t a = 0; a < table.pool.size(); ++a) idx->push_back({table.pool[a].hash(), a});
  std::sort(idx->begin(), idx->end());
  g.table_ = std::make_shared<const MembershipTable>(std::move(table));
  g.pool_index_ = std::move(idx);
  return g;
}

void ProximityStructure::check_assignment(const AssignmentVector& d) const {
  if (d.size() != n_) throw InputError("assignment length does not match unit count");
}

double ProximityStructure::distance(std::size_t i, std::size_t j) const {
  switch (kind_) {
    case Kind::dense:
      return matrix_[i * n_ + j];
    case Kind::coords: {
      double dx = xs_[i] - xs_[j];
      double dy = ys_[i] - ys_[j];
      return i == j ? 0.0 : std::sqrt(dx * dx + dy * dy);
    }
    case Kind::membership:
      throw UnsupportedQuery("label-form proximity source has no raw distances");
  }
  return 0.0;
}

std::vector<double> ProximityStructure::exposure_profile(const AssignmentVector& d) const {
  check_assignment(d);
  if (kind_ == Kind::membership)
    throw UnsupportedQuery(
        "label-form proximity source cannot produce exposure profiles; only interval queries on "
        "its declared grid are supported");
  auto treated = d.treated_indices();
  std::vector<double> e(n_, kInf);
  if (kind_ == Kind::dense) {
    for (std::size_t i = 0; i < n_; ++i) {
      double best = kInf;
      const double* row = matrix_.data() + i * n_;
      for (auto j : treated) best = std::min(best, row[j]);
      e[i] = best;
    }
  } else {
    for (std::size_t i = 0; i < n_; ++i) {
      double best = kInf;
      for (auto j : treated) {
        double dx = xs_[i] - xs_[j];
        double dy = ys_[i] - ys_[j];
        double dist = (i == j) ? 0.0 : std::sqrt(dx * dx + dy * dy);
        best = std::min(best, dist);
      }
      e[i] = best;
    }
  }
  return e;
}

const std::vector<std::uint8_t>& ProximityStructure::membership_row(const AssignmentVector& d) const {
  auto key = d.hash();
  auto it = std::lower_bound(pool_index_->begin(), pool_index_->end(),
                             std::make_pair(key, std::size_t{0}));
  for (; it != pool_index_->end() && it->first == key; ++it) {
    if (table_->pool[it->second] == d) return table_->category[it->second];
  }
  throw UnsupportedQuery("assignment " + d.to_bitstring() +
                         " is not in the label-form source's declared pool");
}

ProximityStructure::Boundary ProximityStructure::resolve_boundary(double x) const {
  Boundary b{Boundary::Tag::below_all, 0};
  if (x < 0.0) return b;
  if (std::isinf(x) && x > 0) {
    b.tag = Boundary::Tag::above_all;
    return b;
  }
  const auto& grid = table_->thresholds;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (x == grid[k]) {
      b.tag = Boundary::Tag::grid;
      b.grid_index = k;
      return b;
    }
  }
  if (x == 0.0) {
    // Exposure is zero exactly for treated units, so a zero boundary is
    // resolvable from the pool bits even off the grid.
    b.tag = Boundary::Tag::zero;
    return b;
  }
  std::ostringstream os;
  os << "threshold " << x << " is not on the label-form source's declared grid";
  throw UnsupportedQuery(os.str());
}

UnitSet ProximityStructure::imputable_set(const AssignmentVector& d, double eps) const {
  check_assignment(d);
  if (kind_ != Kind::membership) {
    auto e = exposure_profile(d);
    UnitSet s(n_);
    for (std::size_t i = 0; i < n_; ++i)
      if (e[i] > eps) s.add(i);
    return s;
  }
  Boundary b = resolve_boundary(eps);
  const auto& cat = membership_row(d);
  UnitSet s(n_);
  switch (b.tag) {
    case Boundary::Tag::below_all:
      return UnitSet::all(n_);
    case Boundary::Tag::zero:
      for (std::size_t i = 0; i < n_; ++i)
        if (!d.treated(i)) s.add(i);
      return s;
    case Boundary::Tag::grid:
      for (std::size_t i = 0; i < n_; ++i)
        if (cat[i] > b.grid_index) s.add(i);
      return s;
    case Boundary::Tag::above_all:
      return s;
  }
  return s;
}

UnitSet ProximityStructure::interval_members(const AssignmentVector& d, double a, double b) const {
  check_assignment(d);
  if (!(a < b)) throw InputError("interval bounds must satisfy a < b");
  if (kind_ != Kind::membership) {
    auto e = exposure_profile(d);
    UnitSet s(n_);
    for (std::size_t i = 0; i < n_; ++i)
      if (e[i] > a && e[i] <= b) s.add(i);
    return s;
  }
  // (a, b] membership from categories: every category cell lies wholly on one
  // side of a resolvable boundary, so the test is exact.
  UnitSet lo = imputable_set(d, a);       // exposure > a
  Boundary hb = resolve_boundary(b);
  const auto& cat = membership_row(d);
  UnitSet s(n_);
  switch (hb.tag) {
    case Boundary::Tag::below_all:
      return s;  // unreachable: a < b and a resolvable
    case Boundary::Tag::zero:
      for (std::size_t i = 0; i < n_; ++i)
        if (d.treated(i)) s.add(i);
      break;
    case Boundary::Tag::grid:
      for (std::size_t i = 0; i < n_; ++i)
        if (cat[i] <= hb.grid_index) s.add(i);
      break;
    case Boundary::Tag::above_all:
      s = UnitSet::all(n_);
      break;
  }
  return s.intersect_with(lo);
}

ExposureSets ProximityStructure::exposure_sets(const AssignmentVector& d, double eps_s,
                                               double eps_c) const {
  check_assignment(d);
  if (!(eps_s < eps_c)) throw InputError("spillover threshold must be below the control threshold");
  ExposureSets out;
  if (kind_ != Kind::membership) {
    auto e = exposure_profile(d);
    out.imputable = UnitSet(n_);
    out.spill = UnitSet(n_);
    out.ctrl = UnitSet(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (e[i] > eps_s) {
        out.imputable.add(i);
        if (e[i] <= eps_c)
          out.spill.add(i);
        else
          out.ctrl.add(i);
      }
    }
    return out;
  }
  out.imputable = imputable_set(d, eps_s);
  out.ctrl = imputable_set(d, eps_c);
  out.spill = out.imputable & out.ctrl.complement();
  return out;
}

std::vector<std::size_t> ProximityStructure::isolated_units() const {
  std::vector<std::size_t> out;
  if (kind_ == Kind::dense) {
    for (std::size_t i = 0; i < n_; ++i) {
      bool isolated = true;
      for (std::size_t j = 0; j < n_ && isolated; ++j)
        if (j != i && !std::isinf(matrix_[i * n_ + j])) isolated = false;
      if (isolated && n_ > 1) out.push_back(i);
    }
  }
  return out;
}

const MembershipTable& ProximityStructure::membership_table() const {
  if (kind_ != Kind::membership)
    throw UnsupportedQuery("proximity source is not label-form");
  return *table_;
}

}  // namespace pnrt
