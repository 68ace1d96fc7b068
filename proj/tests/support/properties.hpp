#pragma once

// Randomized invariant checks shared by the standalone property runner and
// the acceptance gate. Each suite derives every case from (master seed, case
// index), so a reported failure pinpoints a reproducible instance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pnrt/design.hpp"
#include "pnrt/engines.hpp"
#include "pnrt/network.hpp"
#include "pnrt/rng.hpp"
#include "pnrt/stats.hpp"
#include "pnrt/unit_set.hpp"
#include "reference.hpp"

namespace props {

struct SuiteResult {
  std::string name;
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;
};

namespace detail {

using namespace pnrt;

constexpr double kTol = 1e-12;

inline double inf() { return std::numeric_limits<double>::infinity(); }

// Records at most the first failure per suite; later ones only count.
struct Check {
  SuiteResult* out;
  std::size_t case_idx = 0;

  void fail(const std::string& what) {
    ++out->failures;
    if (out->first_failure.empty()) {
      std::ostringstream os;
      os << "case " << case_idx << ": " << what;
      out->first_failure = os.str();
    }
  }
  void require(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
  void require_close(double a, double b, double tol, const std::string& what) {
    bool ok = (a == b) || std::fabs(a - b) <= tol;
    if (!ok) {
      std::ostringstream os;
      os << what << " (" << a << " vs " << b << ")";
      fail(os.str());
    }
  }
};

enum class MechFamily { complete, bernoulli, stratified, pool };

struct Instance {
  std::size_t n;
  std::vector<double> dist;  // dense, row-major
  ProximityStructure G;
  AssignmentMechanism mech;
  AssignmentVector d_obs;
  OutcomeData data;
  double eps_s = 0.0;
  double eps_c = inf();

  Instance(ProximityStructure g, AssignmentMechanism m)
      : n(g.size()), G(std::move(g)), mech(std::move(m)) {}

  ref::StatRequest request(bool rank) const {
    ref::StatRequest req;
    req.eps_s = eps_s;
    req.eps_c = eps_c;
    req.rank = rank;
    return req;
  }
};

// Distances land on a half-integer grid so exposures tie with interval
// endpoints; a slice of pairs sits at infinite distance.
inline std::vector<double> random_distances(Rng& rng, std::size_t n) {
  std::vector<double> dist(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = rng.bernoulli(0.12) ? inf() : 0.5 * static_cast<double>(1 + rng.below(6));
      dist[i * n + j] = v;
      dist[j * n + i] = v;
    }
  }
  return dist;
}

inline AssignmentMechanism random_mechanism(Rng& rng, std::size_t n, MechFamily fam) {
  switch (fam) {
    case MechFamily::complete: {
      CompleteDesign d;
      d.n = n;
      d.m = 1 + rng.below(n - 1);
      return AssignmentMechanism(d);
    }
    case MechFamily::bernoulli: {
      BernoulliDesign d;
      d.n = n;
      if (rng.bernoulli(0.5)) {
        d.probs = {0.2 + 0.5 * rng.u01()};
      } else {
        d.probs.resize(n);
        for (auto& p : d.probs) p = 0.15 + 0.6 * rng.u01();
      }
      return AssignmentMechanism(d);
    }
    case MechFamily::stratified: {
      StratifiedDesign d;
      d.strata.resize(n);
      std::size_t cut = 2 + rng.below(n - 3);  // both strata sized >= 2
      for (std::size_t i = 0; i < n; ++i) d.strata[i] = i < cut ? 0 : 1;
      d.m = {1 + rng.below(cut - 1), 1 + rng.below(n - cut - 1)};
      return AssignmentMechanism(d);
    }
    case MechFamily::pool: {
      PoolDesign d;
      std::size_t k = 3 + rng.below(6);
      std::vector<std::string> seen;
      for (std::size_t a = 0; a < k; ++a) {
        AssignmentVector v(n);
        for (std::size_t i = 0; i < n; ++i) v.set(i, rng.bernoulli(0.4));
        if (v.treated_count() == 0) v.set(rng.below(n), true);
        if (v.treated_count() == n) v.set(rng.below(n), false);
        auto key = v.to_bitstring();
        if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
        seen.push_back(key);
        d.assignments.push_back(v);
        d.probs.push_back(0.1 + rng.u01());
      }
      double total = 0;
      for (double p : d.probs) total += p;
      for (auto& p : d.probs) p /= total;
      return AssignmentMechanism(d);
    }
  }
  throw std::logic_error("unreachable");
}

// When no unit is imputable under the observed assignment, the engines
// return the advisory early-out instead of running a test. That path has its
// own unit coverage; these suites sample the live regime.
inline void pick_live_thresholds(Rng& rng, const ProximityStructure& G,
                                 const AssignmentMechanism& mech, AssignmentVector& d_obs,
                                 double& eps_s, double& eps_c) {
  static const double lo[] = {0.0, 0.5, 1.0, 1.5};
  static const double hi[] = {1.0, 1.5, 2.0, 2.5};
  while (G.imputable_set(d_obs, 0.0).empty()) d_obs = mech.sample(rng);
  std::vector<double> ok;
  for (double e : lo)
    if (!G.imputable_set(d_obs, e).empty()) ok.push_back(e);
  eps_s = ok[rng.below(ok.size())];
  do {
    eps_c = rng.bernoulli(0.2) ? inf() : hi[rng.below(4)];
  } while (!(eps_c > eps_s));
}

// Integer outcomes tie heavily; the constant mode degenerates every contrast.
inline std::vector<double> random_outcomes(Rng& rng, std::size_t n) {
  std::vector<double> y(n);
  std::uint64_t mode = rng.below(5);
  for (auto& v : y) {
    if (mode == 0)
      v = 3.0;
    else if (mode <= 2)
      v = static_cast<double>(rng.below(6));
    else
      v = rng.normal();
  }
  return y;
}

inline Instance random_instance(Rng& rng, std::size_t n_min, std::size_t n_max,
                                std::size_t n_covariates = 0) {
  std::size_t n = n_min + rng.below(n_max - n_min + 1);
  auto fam = static_cast<MechFamily>(rng.below(4));
  auto dist = random_distances(rng, n);
  Instance inst(ProximityStructure::dense(dist, n), random_mechanism(rng, n, fam));
  inst.dist = std::move(dist);
  inst.d_obs = inst.mech.sample(rng);
  inst.data.y = random_outcomes(rng, n);
  inst.data.n_covariates = n_covariates;
  if (n_covariates > 0) {
    inst.data.x.resize(n * n_covariates);
    for (auto& v : inst.data.x) v = rng.normal();
  }
  pick_live_thresholds(rng, inst.G, inst.mech, inst.d_obs, inst.eps_s, inst.eps_c);
  return inst;
}

inline StatisticSpec spec_for(const Instance& inst, bool rank) {
  StatisticSpec spec;
  spec.kind = rank ? StatKind::rank_diff : StatKind::diff_in_means;
  spec.eps_s = inst.eps_s;
  spec.eps_c = inst.eps_c;
  return spec;
}

inline EngineConfig engine_config(EngineKind kind, Mode mode, std::uint64_t seed,
                                  std::size_t resamples = 80) {
  EngineConfig cfg;
  cfg.engine = kind;
  cfg.mode = mode;
  cfg.resamples = resamples;
  cfg.seed = seed;
  cfg.workers = 1;
  return cfg;
}

inline bool same_draws(const std::vector<ReplicateDraw>& a, const std::vector<ReplicateDraw>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    bool t_eq = a[i].t == b[i].t;
    bool r_eq = a[i].t_ref == b[i].t_ref;
    bool w_eq = a[i].weight == b[i].weight;
    if (!t_eq || !r_eq || !w_eq) return false;
  }
  return true;
}

// Independent support enumerations for the oracle comparison. These never
// call AssignmentMechanism::enumerate.
inline void combinations(std::size_t n, std::size_t m, std::vector<std::size_t>& cur,
                         std::size_t from, const std::function<void(const std::vector<std::size_t>&)>& emit) {
  if (cur.size() == m) {
    emit(cur);
    return;
  }
  for (std::size_t i = from; i + (m - cur.size()) <= n; ++i) {
    cur.push_back(i);
    combinations(n, m, cur, i + 1, emit);
    cur.pop_back();
  }
}

inline std::vector<ref::SupportPoint> own_support(const CompleteDesign& d) {
  std::vector<ref::SupportPoint> out;
  std::vector<std::size_t> cur;
  combinations(d.n, d.m, cur, 0, [&](const std::vector<std::size_t>& treated) {
    ref::SupportPoint p;
    p.d.assign(d.n, 0);
    for (auto i : treated) p.d[i] = 1;
    out.push_back(std::move(p));
  });
  for (auto& p : out) p.w = 1.0 / static_cast<double>(out.size());
  return out;
}

inline std::vector<ref::SupportPoint> own_support(const BernoulliDesign& d) {
  std::vector<ref::SupportPoint> out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << d.n); ++bits) {
    ref::SupportPoint p;
    p.d.resize(d.n);
    p.w = 1.0;
    for (std::size_t i = 0; i < d.n; ++i) {
      double pi = d.probs.size() == 1 ? d.probs[0] : d.probs[i];
      p.d[i] = (bits >> i) & 1;
      p.w *= p.d[i] ? pi : 1.0 - pi;
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline std::vector<ref::SupportPoint> own_support(const StratifiedDesign& d) {
  std::size_t n = d.strata.size();
  std::vector<std::vector<std::size_t>> members(d.m.size());
  for (std::size_t i = 0; i < n; ++i) members[d.strata[i]].push_back(i);
  std::vector<ref::SupportPoint> out;
  ref::SupportPoint base;
  base.d.assign(n, 0);
  out.push_back(base);
  for (std::size_t s = 0; s < members.size(); ++s) {
    std::vector<std::vector<std::size_t>> picks;
    std::vector<std::size_t> cur;
    combinations(members[s].size(), d.m[s], cur, 0,
                 [&](const std::vector<std::size_t>& c) { picks.push_back(c); });
    std::vector<ref::SupportPoint> next;
    for (const auto& p : out) {
      for (const auto& c : picks) {
        ref::SupportPoint q = p;
        for (auto local : c) q.d[members[s][local]] = 1;
        next.push_back(std::move(q));
      }
    }
    out = std::move(next);
  }
  for (auto& p : out) p.w = 1.0 / static_cast<double>(out.size());
  return out;
}

inline std::vector<ref::SupportPoint> own_support(const PoolDesign& d) {
  std::vector<ref::SupportPoint> out;
  for (std::size_t a = 0; a < d.assignments.size(); ++a) {
    ref::SupportPoint p;
    p.d = d.assignments[a].bits();
    p.w = d.probs[a];
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Suite 1: pairwise statistics read exactly the units imputable under both
// arguments. Rewriting every other unit's outcome and covariates must leave
// the value bit-identical.

inline void suite_mutation(std::uint64_t seed, SuiteResult& res) {
  res.name = "stat reads only jointly imputable units";
  const std::size_t cases = 1500;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 1, c);
    Check chk{&res, c};
    ++res.cases;

    bool with_cov = c % 3 == 0;
    Instance inst = random_instance(rng, 4, 9, with_cov ? 2 : 0);
    AssignmentVector filter = inst.mech.sample(rng);
    AssignmentVector group = rng.bernoulli(0.25) ? filter : inst.mech.sample(rng);

    StatisticSpec spec = spec_for(inst, c % 2 == 1);
    spec.pairwise_residuals = with_cov;
    if (with_cov) spec.covariates = {0, 1};

    UnitSet touched = inst.G.imputable_set(filter, inst.eps_s) &
                      inst.G.imputable_set(group, inst.eps_s);

    double before = evaluate(spec, inst.data, filter, group, inst.G);
    OutcomeData mutated = inst.data;
    for (std::size_t i = 0; i < inst.n; ++i) {
      if (touched.contains(i)) continue;
      mutated.y[i] = mutated.y[i] * 3.0 + 7.0 + static_cast<double>(i);
      for (std::size_t j = 0; j < mutated.n_covariates; ++j)
        mutated.x[i * mutated.n_covariates + j] -= 11.0;
    }
    double after = evaluate(spec, mutated, filter, group, inst.G);
    chk.require(before == after || (std::isnan(before) && std::isnan(after)),
                "statistic moved when only unread units changed");
  }
}

// ---------------------------------------------------------------------------
// Suite 2: the comparison kernel is total. With complementary tie values the
// two orderings account for exactly one unit of mass, and never less.

inline void suite_h_totality(std::uint64_t seed, SuiteResult& res) {
  res.name = "comparison kernel totality";
  const std::size_t cases = 2000;
  static const double palette[] = {-1e18, -3.5, -1.0, 0.0, 0.0, 1.0, 2.5, 1e18};
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 2, c);
    Check chk{&res, c};
    ++res.cases;

    auto draw = [&]() -> double {
      std::uint64_t k = rng.below(10);
      if (k == 8) return inf();
      if (k == 9) return -inf();
      return palette[k];
    };
    double a = draw();
    double b = rng.bernoulli(0.4) ? a : draw();
    double v = rng.bernoulli(0.5) ? rng.u01() : 0.25 * static_cast<double>(rng.below(5));

    double fwd = ref::h_of(a, b, v);
    double rev = ref::h_of(b, a, 1.0 - v);
    chk.require(fwd >= 0.0 && fwd <= 1.0, "kernel value left [0, 1]");
    chk.require(fwd + rev >= 1.0 - kTol, "orderings sum below one");
    chk.require(fwd + rev <= 1.0 + kTol, "orderings sum above one");
    if (a > b) chk.require(fwd == 1.0 && rev == 0.0, "strict order not respected");
    if (a == b) chk.require(fwd == v, "tie did not take the tie value");

    double a2 = a == inf() ? a : a + 1.0;
    chk.require(ref::h_of(a2, b, v) >= fwd, "kernel not monotone in its first argument");
  }
}

// ---------------------------------------------------------------------------
// Suite 3: imputable sets shrink as the threshold grows; treated units are
// never imputable at nonnegative thresholds; negative thresholds admit
// everyone.

inline void suite_nesting(std::uint64_t seed, SuiteResult& res) {
  res.name = "imputable set nesting";
  const std::size_t cases = 2000;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 3, c);
    Check chk{&res, c};
    ++res.cases;

    Instance inst = random_instance(rng, 4, 9);
    AssignmentVector d = inst.mech.sample(rng);
    double e1 = 4.0 * rng.u01() - 0.5;
    double e2 = 4.0 * rng.u01() - 0.5;
    if (e1 > e2) std::swap(e1, e2);

    UnitSet wide = inst.G.imputable_set(d, e1);
    UnitSet narrow = inst.G.imputable_set(d, e2);
    chk.require(narrow.is_subset_of(wide), "higher threshold admitted a new unit");

    UnitSet at_zero = inst.G.imputable_set(d, 0.0);
    for (auto i : d.treated_indices())
      chk.require(!at_zero.contains(i), "treated unit counted as imputable");

    chk.require(inst.G.imputable_set(d, -0.25) == UnitSet::all(inst.n),
                "negative threshold excluded a unit");
  }
}

// ---------------------------------------------------------------------------
// Suite 4: the spillover and control intervals partition the imputable set
// and agree with the direct interval queries.

inline void suite_partition(std::uint64_t seed, SuiteResult& res) {
  res.name = "interval partition of the imputable set";
  const std::size_t cases = 2000;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 4, c);
    Check chk{&res, c};
    ++res.cases;

    Instance inst = random_instance(rng, 4, 9);
    AssignmentVector d = inst.mech.sample(rng);
    ExposureSets sets = inst.G.exposure_sets(d, inst.eps_s, inst.eps_c);

    chk.require((sets.spill & sets.ctrl).empty(), "intervals overlap");
    UnitSet joined = sets.spill;
    sets.ctrl.for_each([&](std::size_t i) { joined.add(i); });
    chk.require(joined == sets.imputable, "intervals do not cover the imputable set");
    chk.require(sets.imputable == inst.G.imputable_set(d, inst.eps_s),
                "imputable set disagrees with the scalar query");
    chk.require(sets.spill == inst.G.interval_members(d, inst.eps_s, inst.eps_c),
                "spill interval disagrees with the window query");
    if (inst.eps_c < inf())
      chk.require(sets.ctrl == inst.G.interval_members(d, inst.eps_c, inf()),
                  "control tail disagrees with the window query");
  }
}

// ---------------------------------------------------------------------------
// Suite 5: a negative lower threshold makes every unit imputable, and all
// four unconditional engines collapse to the same test, draw for draw.

inline void suite_sharp_collapse(std::uint64_t seed, SuiteResult& res) {
  res.name = "engines collapse when nobody is filtered";
  const std::size_t cases = 400;
  static const EngineKind kinds[] = {EngineKind::frt, EngineKind::naive_rt, EngineKind::pnrt_pair,
                                     EngineKind::pnrt_min};
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 5, c);
    Check chk{&res, c};
    ++res.cases;

    Instance inst = random_instance(rng, 4, 9);
    inst.eps_s = -1.0;
    inst.eps_c = 0.0;
    StatisticSpec spec = spec_for(inst, c % 2 == 1);

    Mode mode = c % 2 == 0 ? Mode::monte_carlo : Mode::exhaustive;
    TieRule rule = c % 3 == 0 ? TieRule::uniform_break : TieRule::count_as_ge;
    std::vector<TestResult> results;
    for (EngineKind k : kinds) {
      EngineConfig cfg = engine_config(k, mode, derive_key(seed, 5, c, 99), 60);
      cfg.tie_rule = rule;
      results.push_back(run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G));
    }
    for (std::size_t k = 1; k < results.size(); ++k) {
      chk.require(results[k].pval == results[0].pval, "p-values diverge across engines");
      chk.require(results[k].n_ge == results[0].n_ge, "exceedance mass diverges");
      chk.require(results[k].n_tie == results[0].n_tie, "tie mass diverges");
      chk.require(same_draws(results[k].draws, results[0].draws), "draw records diverge");
    }
  }
}

// ---------------------------------------------------------------------------
// Suite 6: rank statistics depend on outcomes only through their ordering.
// Strictly increasing transforms leave the statistic and the whole test
// bit-identical.

inline void suite_rank_invariance(std::uint64_t seed, SuiteResult& res) {
  res.name = "rank statistic monotone invariance";
  const std::size_t cases = 800;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 6, c);
    Check chk{&res, c};
    ++res.cases;

    Instance inst = random_instance(rng, 4, 9);
    // Small-integer outcomes keep every transform exactly injective.
    for (auto& v : inst.data.y) v = static_cast<double>(rng.below(7));
    AssignmentVector filter = inst.mech.sample(rng);
    AssignmentVector group = inst.mech.sample(rng);
    StatisticSpec spec = spec_for(inst, true);

    OutcomeData warped = inst.data;
    std::uint64_t which = rng.below(3);
    for (auto& v : warped.y) {
      if (which == 0)
        v = 3.0 * v - 5.0;
      else if (which == 1)
        v = v * v * v + v;
      else
        v = std::exp(v / 4.0);
    }

    double before = evaluate(spec, inst.data, filter, group, inst.G);
    double after = evaluate(spec, warped, filter, group, inst.G);
    chk.require(before == after, "rank statistic moved under a monotone transform");

    if (c % 4 == 0) {
      EngineConfig cfg = engine_config(EngineKind::pnrt_pair, Mode::monte_carlo,
                                       derive_key(seed, 6, c, 99), 50);
      TestResult r1 = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
      TestResult r2 = run_test(cfg, spec, warped, inst.d_obs, inst.mech, inst.G);
      chk.require(r1.pval == r2.pval, "rank test p-value moved under a monotone transform");
    }
  }
}

// ---------------------------------------------------------------------------
// Suite 7: a Monte Carlo p-value is exactly (1 + sum of kernel values) over
// (1 + resamples), reconstructible from the stored draws, and the randomized
// rule stays inside the strict/inclusive envelope.

inline void suite_mc_reconstruction(std::uint64_t seed, SuiteResult& res) {
  res.name = "Monte Carlo p-value reconstruction";
  const std::size_t cases = 400;
  static const EngineKind kinds[] = {EngineKind::pnrt_pair, EngineKind::naive_rt, EngineKind::frt,
                                     EngineKind::pnrt_min};
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 7, c);
    Check chk{&res, c};
    ++res.cases;

    Instance inst = random_instance(rng, 4, 9);
    StatisticSpec spec = spec_for(inst, c % 2 == 1);
    EngineKind kind = kinds[c % 4];
    const std::size_t R = 80;

    for (TieRule rule : {TieRule::count_as_ge, TieRule::half_discount, TieRule::uniform_break}) {
      EngineConfig cfg = engine_config(kind, Mode::monte_carlo, derive_key(seed, 7, c, 99), R);
      cfg.tie_rule = rule;
      TestResult r = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
      chk.require(r.draws.size() == R, "draw record incomplete");

      double ge = 0, tie = 0, strict = 0;
      for (const auto& d : r.draws) {
        if (d.t > d.t_ref) {
          strict += d.weight;
          ge += d.weight;
        } else if (d.t == d.t_ref) {
          tie += d.weight;
          ge += d.weight;
        }
      }
      chk.require_close(r.n_ge, ge, kTol, "exceedance count off its draws");
      chk.require_close(r.n_tie, tie, kTol, "tie count off its draws");

      double denom = 1.0 + static_cast<double>(R);
      if (rule == TieRule::count_as_ge) {
        chk.require_close(r.pval, (1.0 + ge) / denom, kTol, "inclusive p-value off its draws");
      } else if (rule == TieRule::half_discount) {
        chk.require_close(r.pval, (1.0 + strict + 0.5 * tie) / denom, kTol,
                          "half-discount p-value off its draws");
      } else {
        chk.require(r.pval >= (1.0 + strict) / denom - kTol, "randomized p-value below envelope");
        chk.require(r.pval <= (1.0 + ge) / denom + kTol, "randomized p-value above envelope");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Suite 8: tie handling orders p-values (inclusive is the largest), every
// pairwise p-value keeps at least the observed assignment's own mass, and
// the minimum-reference test can only be more conservative.

inline void suite_dominance(std::uint64_t seed, SuiteResult& res) {
  res.name = "tie rule and engine dominance";
  const std::size_t cases = 700;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 8, c);
    Check chk{&res, c};
    ++res.cases;

    Instance inst = random_instance(rng, 4, 9);
    StatisticSpec spec = spec_for(inst, c % 2 == 1);
    const std::size_t R = 80;
    std::uint64_t engine_seed = derive_key(seed, 8, c, 99);

    double pvals[3];
    double strict_bound = 0, inclusive_bound = 0;
    TieRule rules[] = {TieRule::count_as_ge, TieRule::half_discount, TieRule::uniform_break};
    for (int k = 0; k < 3; ++k) {
      EngineConfig cfg = engine_config(EngineKind::pnrt_pair, Mode::monte_carlo, engine_seed, R);
      cfg.tie_rule = rules[k];
      TestResult r = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
      pvals[k] = r.pval;
      if (k == 0) {
        double denom = 1.0 + static_cast<double>(R);
        strict_bound = (1.0 + r.n_ge - r.n_tie) / denom;
        inclusive_bound = (1.0 + r.n_ge) / denom;
      }
    }
    chk.require(pvals[0] >= pvals[1] - kTol, "half-discount exceeded the inclusive rule");
    chk.require(pvals[0] >= pvals[2] - kTol, "randomized rule exceeded the inclusive rule");
    chk.require(pvals[1] >= strict_bound - kTol && pvals[1] <= inclusive_bound + kTol,
                "half-discount left the strict/inclusive envelope");
    chk.require(pvals[2] >= strict_bound - kTol && pvals[2] <= inclusive_bound + kTol,
                "randomized rule left the strict/inclusive envelope");

    if (c % 2 == 0) {
      EngineConfig cfg = engine_config(EngineKind::pnrt_pair, Mode::exhaustive, engine_seed);
      TestResult pair = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
      cfg.engine = EngineKind::pnrt_min;
      TestResult mn = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
      chk.require(mn.pval >= pair.pval - kTol, "minimum reference rejected more than pairwise");

      double self_mass = 0;
      for (const auto& wa : inst.mech.enumerate())
        if (wa.d == inst.d_obs) self_mass += wa.prob;
      chk.require(pair.pval >= self_mass - kTol, "pairwise p-value lost the observed mass");
    }
  }
}

// ---------------------------------------------------------------------------
// Suite 9: results do not depend on the worker count.

inline void suite_worker_invariance(std::uint64_t seed, SuiteResult& res) {
  res.name = "worker count invariance";
  const std::size_t cases = 300;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 9, c);
    Check chk{&res, c};
    ++res.cases;

    Instance inst = random_instance(rng, 4, 9);
    StatisticSpec spec = spec_for(inst, c % 2 == 1);
    EngineKind kind = c % 2 == 0 ? EngineKind::pnrt_pair : EngineKind::pnrt_min;
    Mode mode = c % 3 == 0 ? Mode::exhaustive : Mode::monte_carlo;

    EngineConfig cfg = engine_config(kind, mode, derive_key(seed, 9, c, 99), 120);
    cfg.tie_rule = c % 3 == 1 ? TieRule::uniform_break : TieRule::count_as_ge;
    TestResult one = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
    cfg.workers = 3;
    TestResult three = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);

    chk.require(one.pval == three.pval, "p-value depends on worker count");
    chk.require(one.n_ge == three.n_ge && one.n_tie == three.n_tie,
                "tallies depend on worker count");
    chk.require(same_draws(one.draws, three.draws), "draw records depend on worker count");
  }
}

// ---------------------------------------------------------------------------
// Suite 10: Monte Carlo estimates land within 5 / sqrt(R) of the exhaustive
// p-value. At R = 400 the slack is 25 points; chance failure is negligible.

inline void suite_mc_band(std::uint64_t seed, SuiteResult& res) {
  res.name = "Monte Carlo tracks exhaustive";
  const std::size_t cases = 300;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 10, c);
    Check chk{&res, c};
    ++res.cases;

    Instance inst = random_instance(rng, 5, 9);
    StatisticSpec spec = spec_for(inst, c % 2 == 1);
    EngineKind kind = c % 2 == 0 ? EngineKind::pnrt_pair : EngineKind::pnrt_min;
    const std::size_t R = 400;

    EngineConfig cfg = engine_config(kind, Mode::exhaustive, derive_key(seed, 10, c, 99));
    TestResult exact = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
    cfg.mode = Mode::monte_carlo;
    cfg.resamples = R;
    TestResult mc = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);

    double slack = 5.0 / std::sqrt(static_cast<double>(R));
    chk.require_close(mc.pval, exact.pval, slack, "Monte Carlo p-value far from exhaustive");
  }
}

// ---------------------------------------------------------------------------
// Suite 11: exhaustive engine p-values match direct evaluation of their
// defining formulas over an independently enumerated support.

inline void suite_formula_agreement(std::uint64_t seed, SuiteResult& res) {
  res.name = "engines match their defining formulas";
  const std::size_t cases = 800;
  for (std::size_t c = 0; c < cases; ++c) {
    Rng rng = Rng::stream(seed, 11, c);
    Check chk{&res, c};
    ++res.cases;

    std::size_t n = 4 + rng.below(6);
    auto fam = static_cast<MechFamily>(rng.below(4));
    auto dist = random_distances(rng, n);

    std::vector<ref::SupportPoint> support;
    AssignmentMechanism mech = [&]() -> AssignmentMechanism {
      switch (fam) {
        case MechFamily::complete: {
          CompleteDesign d;
          d.n = n;
          d.m = 1 + rng.below(n - 1);
          support = own_support(d);
          return AssignmentMechanism(d);
        }
        case MechFamily::bernoulli: {
          BernoulliDesign d;
          d.n = n;
          d.probs = {0.2 + 0.5 * rng.u01()};
          support = own_support(d);
          return AssignmentMechanism(d);
        }
        case MechFamily::stratified: {
          StratifiedDesign d;
          d.strata.resize(n);
          std::size_t cut = 2 + rng.below(n - 3);
          for (std::size_t i = 0; i < n; ++i) d.strata[i] = i < cut ? 0 : 1;
          d.m = {1 + rng.below(cut - 1), 1 + rng.below(n - cut - 1)};
          support = own_support(d);
          return AssignmentMechanism(d);
        }
        default: {
          PoolDesign d;
          std::size_t k = 3 + rng.below(6);
          std::vector<std::string> seen;
          for (std::size_t a = 0; a < k; ++a) {
            AssignmentVector v(n);
            for (std::size_t i = 0; i < n; ++i) v.set(i, rng.bernoulli(0.4));
            if (v.treated_count() == 0) v.set(rng.below(n), true);
            if (v.treated_count() == n) v.set(rng.below(n), false);
            auto key = v.to_bitstring();
            if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
            seen.push_back(key);
            d.assignments.push_back(v);
            d.probs.push_back(0.1 + rng.u01());
          }
          double total = 0;
          for (double p : d.probs) total += p;
          for (auto& p : d.probs) p /= total;
          support = own_support(d);
          return AssignmentMechanism(d);
        }
      }
    }();

    Instance inst(ProximityStructure::dense(dist, n), std::move(mech));
    inst.dist = dist;
    inst.d_obs = inst.mech.sample(rng);
    inst.data.y = random_outcomes(rng, n);
    pick_live_thresholds(rng, inst.G, inst.mech, inst.d_obs, inst.eps_s, inst.eps_c);

    bool rank = c % 2 == 1;
    StatisticSpec spec = spec_for(inst, rank);
    ref::StatRequest req = inst.request(rank);
    const auto& y = inst.data.y;
    const auto& d_obs_bits = inst.d_obs.bits();

    EngineConfig cfg = engine_config(EngineKind::pnrt_pair, Mode::exhaustive,
                                     derive_key(seed, 11, c, 99));
    TestResult pair = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
    chk.require_close(pair.pval, ref::pair_pval(y, dist, n, d_obs_bits, support, req), kTol,
                      "pairwise p-value off its formula");

    cfg.tie_rule = TieRule::half_discount;
    TestResult pair_half = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
    chk.require_close(pair_half.pval, ref::pair_pval(y, dist, n, d_obs_bits, support, req, 0.5),
                      kTol, "half-discount pairwise p-value off its formula");
    cfg.tie_rule = TieRule::count_as_ge;

    cfg.engine = EngineKind::pnrt_min;
    TestResult mn = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
    chk.require_close(mn.pval, ref::min_pval(y, dist, n, d_obs_bits, support, req), kTol,
                      "minimum-reference p-value off its formula");

    cfg.engine = EngineKind::naive_rt;
    TestResult naive = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
    chk.require_close(naive.pval, ref::naive_pval(y, dist, n, d_obs_bits, support, req), kTol,
                      "fixed-filter p-value off its formula");

    cfg.engine = EngineKind::frt;
    TestResult frt = run_test(cfg, spec, inst.data, inst.d_obs, inst.mech, inst.G);
    chk.require_close(frt.pval, ref::frt_pval(y, dist, n, d_obs_bits, support, req), kTol,
                      "unfiltered p-value off its formula");
  }
}

}  // namespace detail

inline std::vector<SuiteResult> run_property_suites(std::uint64_t seed) {
  std::vector<SuiteResult> out(11);
  detail::suite_mutation(seed, out[0]);
  detail::suite_h_totality(seed, out[1]);
  detail::suite_nesting(seed, out[2]);
  detail::suite_partition(seed, out[3]);
  detail::suite_sharp_collapse(seed, out[4]);
  detail::suite_rank_invariance(seed, out[5]);
  detail::suite_mc_reconstruction(seed, out[6]);
  detail::suite_dominance(seed, out[7]);
  detail::suite_worker_invariance(seed, out[8]);
  detail::suite_mc_band(seed, out[9]);
  detail::suite_formula_agreement(seed, out[10]);
  return out;
}

}  // namespace props
