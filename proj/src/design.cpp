#include "pnrt/design.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

namespace pnrt {

namespace {

double binom(std::size_t n, std::size_t k) {
  if (k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// All size-m index subsets of [0, n), lexicographic.
void combinations(std::size_t n, std::size_t m,
                  const std::function<void(const std::vector<std::size_t>&)>& emit) {
  std::vector<std::size_t> c(m);
  std::iota(c.begin(), c.end(), 0);
  if (m == 0) {
    emit(c);
    return;
  }
  while (true) {
    emit(c);
    std::size_t i = m;
    while (i > 0 && c[i - 1] == n - m + i - 1) --i;
    if (i == 0) break;
    ++c[i - 1];
    for (std::size_t j = i; j < m; ++j) c[j] = c[j - 1] + 1;
  }
}

}  // namespace

AssignmentMechanism::AssignmentMechanism(BernoulliDesign d) : design_(std::move(d)) {
  auto& b = std::get<BernoulliDesign>(design_);
  if (b.n == 0) throw InputError("design needs at least one unit");
  if (b.probs.size() == 1) b.probs.assign(b.n, b.probs[0]);
  if (b.probs.size() != b.n) throw InputError("treatment probability list does not match unit count");
  for (double p : b.probs)
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("treatment probabilities must lie in [0, 1]");
  n_ = b.n;
}

AssignmentMechanism::AssignmentMechanism(CompleteDesign d) : design_(d) {
  if (d.n == 0) throw InputError("design needs at least one unit");
  if (d.m > d.n) throw InputError("treated count exceeds unit count");
  n_ = d.n;
}

AssignmentMechanism::AssignmentMechanism(StratifiedDesign d) : design_(std::move(d)) {
  auto& s = std::get<StratifiedDesign>(design_);
  if (s.strata.empty()) throw InputError("design needs at least one unit");
  std::size_t n_strata = *std::max_element(s.strata.begin(), s.strata.end()) + 1;
  if (s.m.size() != n_strata)
    throw InputError("stratified design needs one treated count per stratum");
  std::vector<std::size_t> sizes(n_strata, 0);
  for (auto g : s.strata) ++sizes[g];
  for (std::size_t g = 0; g < n_strata; ++g)
    if (s.m[g] > sizes[g])
      throw InputError("stratum " + std::to_string(g) + " treats more units than it has");
  n_ = s.strata.size();
}

AssignmentMechanism::AssignmentMechanism(PoolDesign d) : design_(std::move(d)) {
  auto& p = std::get<PoolDesign>(design_);
  if (p.assignments.empty()) throw InputError("assignment pool is empty");
  n_ = p.assignments[0].size();
  for (const auto& a : p.assignments)
    if (a.size() != n_) throw InputError("assignment pool entries differ in length");
  if (p.probs.empty()) p.probs.assign(p.assignments.size(), 1.0 / static_cast<double>(p.assignments.size()));
  if (p.probs.size() != p.assignments.size())
    throw InputError("assignment pool probabilities do not match pool size");
  double total = 0.0;
  for (double w : p.probs) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InputError("assignment pool probabilities must be nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw InputError("assignment pool probabilities sum to zero");
  if (std::abs(total - 1.0) > 1e-9)
    throw InputError("assignment pool probabilities must sum to 1");
  if (!p.ids.empty() && p.ids.size() != p.assignments.size())
    throw InputError("assignment pool ids do not match pool size");
}

AssignmentVector AssignmentMechanism::sample(Rng& rng) const {
  if (const auto* b = std::get_if<BernoulliDesign>(&design_)) {
    AssignmentVector d(n_);
    for (std::size_t i = 0; i < n_; ++i) d.set(i, rng.bernoulli(b->probs[i]));
    return d;
  }
  if (const auto* c = std::get_if<CompleteDesign>(&design_)) {
    return AssignmentVector::from_treated(n_, rng.choose(c->n, c->m));
  }
  if (const auto* s = std::get_if<StratifiedDesign>(&design_)) {
    std::size_t n_strata = s->m.size();
    std::vector<std::vector<std::size_t>> members(n_strata);
    for (std::size_t i = 0; i < n_; ++i) members[s->strata[i]].push_back(i);
    AssignmentVector d(n_);
    for (std::size_t g = 0; g < n_strata; ++g) {
      auto pick = rng.choose(members[g].size(), s->m[g]);
      for (auto k : pick) d.set(members[g][k], true);
    }
    return d;
  }
  const auto& p = std::get<PoolDesign>(design_);
  double u = rng.u01();
  double acc = 0.0;
  for (std::size_t k = 0; k < p.assignments.size(); ++k) {
    acc += p.probs[k];
    if (u < acc) return p.assignments[k];
  }
  return p.assignments.back();
}

double AssignmentMechanism::support_size() const {
  if (const auto* b = std::get_if<BernoulliDesign>(&design_)) {
    double s = 1.0;
    for (double p : b->probs)
      if (p > 0.0 && p < 1.0) s *= 2.0;
    return s;
  }
  if (const auto* c = std::get_if<CompleteDesign>(&design_)) return binom(c->n, c->m);
  if (const auto* s = std::get_if<StratifiedDesign>(&design_)) {
    std::size_t n_strata = s->m.size();
    std::vector<std::size_t> sizes(n_strata, 0);
    for (auto g : s->strata) ++sizes[g];
    double total = 1.0;
    for (std::size_t g = 0; g < n_strata; ++g) total *= binom(sizes[g], s->m[g]);
    return total;
  }
  return static_cast<double>(std::get<PoolDesign>(design_).assignments.size());
}

std::vector<WeightedAssignment> AssignmentMechanism::enumerate(std::size_t cap) const {
  double size = support_size();
  if (!(size <= static_cast<double>(cap)))
    throw InputError("design support (" + std::to_string(size) +
                     " assignments) exceeds the enumeration cap of " + std::to_string(cap));
  std::vector<WeightedAssignment> out;
  out.reserve(static_cast<std::size_t>(size));

  if (const auto* b = std::get_if<BernoulliDesign>(&design_)) {
    // Enumerate only over units whose treatment is actually random.
    std::vector<std::size_t> free_units;
    AssignmentVector base(n_);
    for (std::size_t i = 0; i < n_; ++i) {
      if (b->probs[i] >= 1.0)
        base.set(i, true);
      else if (b->probs[i] > 0.0)
        free_units.push_back(i);
    }
    std::size_t nf = free_units.size();
    for (std::uint64_t mask = 0; mask < (1ULL << nf); ++mask) {
      AssignmentVector d = base;
      double prob = 1.0;
      for (std::size_t k = 0; k < nf; ++k) {
        double p = b->probs[free_units[k]];
        if (mask & (1ULL << k)) {
          d.set(free_units[k], true);
          prob *= p;
        } else {
          prob *= 1.0 - p;
        }
      }
      out.push_back({std::move(d), prob});
    }
    return out;
  }

  if (const auto* c = std::get_if<CompleteDesign>(&design_)) {
    double prob = 1.0 / size;
    combinations(c->n, c->m, [&](const std::vector<std::size_t>& treated) {
      out.push_back({AssignmentVector::from_treated(n_, treated), prob});
    });
    return out;
  }

  if (const auto* s = std::get_if<StratifiedDesign>(&design_)) {
    std::size_t n_strata = s->m.size();
    std::vector<std::vector<std::size_t>> members(n_strata);
    for (std::size_t i = 0; i < n_; ++i) members[s->strata[i]].push_back(i);
    double prob = 1.0 / size;
    std::vector<WeightedAssignment> acc;
    acc.push_back({AssignmentVector(n_), 1.0});
    for (std::size_t g = 0; g < n_strata; ++g) {
      std::vector<WeightedAssignment> next;
      combinations(members[g].size(), s->m[g], [&](const std::vector<std::size_t>& pick) {
        for (const auto& partial : acc) {
          AssignmentVector d = partial.d;
          for (auto k : pick) d.set(members[g][k], true);
          next.push_back({std::move(d), 0.0});
        }
      });
      acc = std::move(next);
    }
    for (auto& w : acc) {
      w.prob = prob;
      out.push_back(std::move(w));
    }
    return out;
  }

  const auto& p = std::get<PoolDesign>(design_);
  // Duplicate pool rows collapse into one support point with summed mass.
  std::map<std::string, std::size_t> seen;
  for (std::size_t k = 0; k < p.assignments.size(); ++k) {
    if (p.probs[k] <= 0.0) continue;
    auto key = p.assignments[k].to_bitstring();
    auto it = seen.find(key);
    if (it == seen.end()) {
      seen.emplace(key, out.size());
      out.push_back({p.assignments[k], p.probs[k]});
    } else {
      out[it->second].prob += p.probs[k];
    }
  }
  return out;
}

bool AssignmentMechanism::contains(const AssignmentVector& d) const {
  if (d.size() != n_) return false;
  if (const auto* b = std::get_if<BernoulliDesign>(&design_)) {
    for (std::size_t i = 0; i < n_; ++i) {
      if (d.treated(i) && b->probs[i] <= 0.0) return false;
      if (!d.treated(i) && b->probs[i] >= 1.0) return false;
    }
    return true;
  }
  if (const auto* c = std::get_if<CompleteDesign>(&design_)) return d.treated_count() == c->m;
  if (const auto* s = std::get_if<StratifiedDesign>(&design_)) {
    std::vector<std::size_t> counts(s->m.size(), 0);
    for (std::size_t i = 0; i < n_; ++i)
      if (d.treated(i)) ++counts[s->strata[i]];
    return counts == s->m;
  }
  const auto& p = std::get<PoolDesign>(design_);
  for (std::size_t k = 0; k < p.assignments.size(); ++k)
    if (p.probs[k] > 0.0 && p.assignments[k] == d) return true;
  return false;
}

std::string AssignmentMechanism::describe() const {
  std::ostringstream os;
  if (const auto* b = std::get_if<BernoulliDesign>(&design_)) {
    os << "bernoulli(n=" << b->n << ")";
  } else if (const auto* c = std::get_if<CompleteDesign>(&design_)) {
    os << "complete(n=" << c->n << ", m=" << c->m << ")";
  } else if (const auto* s = std::get_if<StratifiedDesign>(&design_)) {
    os << "stratified(n=" << s->strata.size() << ", strata=" << s->m.size() << ")";
  } else {
    os << "pool(size=" << std::get<PoolDesign>(design_).assignments.size() << ")";
  }
  return os.str();
}

}  // namespace pnrt
