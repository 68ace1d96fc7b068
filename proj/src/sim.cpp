#include "pnrt/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <tuple>
#include <utility>

#include "pnrt/parallel.hpp"
#include "pnrt/rng.hpp"
#include "pnrt/sequential.hpp"

namespace pnrt {

namespace {

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  if (v.empty()) return 0;
  double pos = q * static_cast<double>(v.size() - 1);
  std::size_t lo = static_cast<std::size_t>(pos);
  std::size_t hi = std::min(lo + 1, v.size() - 1);
  double frac = pos - static_cast<double>(lo);
  return v[lo] * (1 - frac) + v[hi] * frac;
}

std::vector<double> pairwise_distances(const ProximityStructure& G) {
  std::vector<double> d;
  for (std::size_t i = 0; i < G.size(); ++i)
    for (std::size_t j = i + 1; j < G.size(); ++j) d.push_back(G.distance(i, j));
  return d;
}

}  // namespace

void SimConfig::validate() const {
  if (n == 0) throw InputError("simulation needs at least one unit");
  if (n_hotspots == 0 || n_hotspots > n)
    throw InputError("hotspot count must lie in [1, n]");
  if (n_treated == 0 || n_treated > n_hotspots)
    throw InputError("treated count must lie in [1, hotspot count]");
  DistanceThresholds check(thresholds);
  if (!(cov_xx >= 0 && cov_yy >= 0 && cov_xx * cov_yy - cov_xy * cov_xy >= 0))
    throw InputError("spatial covariance must be positive semidefinite");
  if (!(hotspot_scale >= 0) || !std::isfinite(hotspot_scale))
    throw InputError("hotspot scale must be finite and nonnegative");
  if (!(hotspot_core_share >= 0 && hotspot_core_share <= 1))
    throw InputError("hotspot core share must lie in [0, 1]");
  if (!(cluster_share >= 0 && cluster_share <= 1))
    throw InputError("cluster share must lie in [0, 1]");
  if (!(cluster_scale >= 0) || !std::isfinite(cluster_scale))
    throw InputError("cluster scale must be finite and nonnegative");
  if (!(base_shape > 0 && base_scale > 0 && hot_shape > 0 && hot_scale > 0))
    throw InputError("gamma parameters must be positive");
  for (double t : taus)
    if (!std::isfinite(t)) throw InputError("spillover magnitudes must be finite");
  if (sims == 0) throw InputError("simulation needs at least one run");
  if (resamples == 0) throw InputError("simulation needs at least one resample");
  if (pool_size == 0) throw InputError("assignment pool must not be empty");
  if (hypotheses.empty()) throw InputError("at least one grid index must be tested");
  for (auto k : hypotheses)
    if (k + 1 >= thresholds.size())
      throw InputError("tested grid index " + std::to_string(k) +
                       " has no control interval above it");
  if (engines.empty()) throw InputError("at least one engine must be requested");
  for (auto e : engines)
    if (e == EngineKind::crt)
      throw InputError("the conditional engine is not part of the power study");
  if (!(alpha > 0 && alpha < 1)) throw InputError("alpha must lie strictly between 0 and 1");
}

AssignmentMechanism SyntheticNetwork::design(std::size_t n_treated) const {
  StratifiedDesign d;
  std::size_t n = G.size();
  d.strata.resize(n, 0);
  hotspots.for_each([&](std::size_t i) { d.strata[i] = 1; });
  d.m = {0, n_treated};
  return AssignmentMechanism(d);
}

SyntheticNetwork gen_network(const SimConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng = Rng::stream(seed, salt::network);
  // Cholesky factor of the spatial covariance.
  double lxx = std::sqrt(cfg.cov_xx);
  double lyx = lxx > 0 ? cfg.cov_xy / lxx : 0.0;
  double lyy = std::sqrt(std::max(cfg.cov_yy - lyx * lyx, 0.0));
  std::vector<double> xs(cfg.n), ys(cfg.n);
  // Rejection-samples a point into the unit square around (cx, cy).
  auto place = [&](double cx, double cy, double sx, double syx, double sy) {
    for (int attempt = 0; attempt < 100000; ++attempt) {
      double z1 = rng.normal();
      double z2 = rng.normal();
      double x = cx + sx * z1;
      double y = cy + syx * z1 + sy * z2;
      if (x >= 0 && x <= 1 && y >= 0 && y <= 1) return std::pair<double, double>{x, y};
    }
    throw InputError("spatial distribution almost never lands in the unit square; "
                     "check its mean and covariance");
  };
  // Hotspot units first, grouped into pods: pod centers from the broad
  // cloud, members around their center at hotspot_scale. With a core share
  // the first pod absorbs that fraction of the hotspots and the rest spread
  // round-robin over the remaining pods; otherwise all pods fill round-robin
  // and their sizes differ by at most one. The hotspots then serve as
  // anchors: a cluster_share fraction of the remaining units huddles around
  // a uniformly chosen hotspot at cluster_scale, the rest follow the broad
  // cloud.
  std::size_t pods =
      cfg.hotspot_pods == 0 ? cfg.n_hotspots : std::min(cfg.hotspot_pods, cfg.n_hotspots);
  std::size_t core = 0;
  if (cfg.hotspot_core_share > 0 && pods > 1) {
    core = static_cast<std::size_t>(std::llround(cfg.hotspot_core_share * cfg.n_hotspots));
    core = std::min(core, cfg.n_hotspots - (pods - 1));  // leave one hotspot per satellite pod
  }
  std::vector<std::pair<double, double>> pod_center(pods);
  for (std::size_t p = 0; p < pods; ++p) pod_center[p] = place(cfg.mean_x, cfg.mean_y, lxx, lyx, lyy);
  for (std::size_t i = 0; i < cfg.n_hotspots; ++i) {
    std::size_t p = core == 0 ? i % pods : (i < core ? 0 : 1 + (i - core) % (pods - 1));
    const auto& c = pod_center[p];
    std::tie(xs[i], ys[i]) = place(c.first, c.second, cfg.hotspot_scale, 0.0, cfg.hotspot_scale);
  }
  for (std::size_t i = cfg.n_hotspots; i < cfg.n; ++i) {
    if (rng.u01() < cfg.cluster_share) {
      std::size_t a = rng.below(cfg.n_hotspots);
      std::tie(xs[i], ys[i]) = place(xs[a], ys[a], cfg.cluster_scale, 0.0, cfg.cluster_scale);
    } else {
      std::tie(xs[i], ys[i]) = place(cfg.mean_x, cfg.mean_y, lxx, lyx, lyy);
    }
  }
  SyntheticNetwork net{ProximityStructure::coordinates(xs, ys), std::move(xs), std::move(ys),
                       UnitSet(cfg.n)};
  for (std::size_t i = 0; i < cfg.n_hotspots; ++i) net.hotspots.add(i);
  return net;
}

Schedule gen_schedule(const SimConfig& cfg, const UnitSet& hotspots, double tau,
                      std::uint64_t seed) {
  Rng rng = Rng::stream(seed, salt::schedule);
  Schedule s;
  s.base.resize(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    bool hot = hotspots.contains(i);
    s.base[i] = hot ? rng.gamma(cfg.hot_shape, cfg.hot_scale)
                    : rng.gamma(cfg.base_shape, cfg.base_scale);
  }
  s.thresholds = cfg.thresholds;
  s.tau = tau;
  s.direct_effect = cfg.direct_effect;
  return s;
}

std::vector<double> Schedule::outcomes_for(const AssignmentVector& d,
                                           const ProximityStructure& G) const {
  auto e = G.exposure_profile(d);
  std::size_t K = thresholds.size() - 1;
  std::vector<double> y(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (d.treated(i)) {
      y[i] = std::max(base[i] + direct_effect, 0.0);
      continue;
    }
    double lift = 0.0;
    if (e[i] <= thresholds[K]) {
      // Band b covers (thresholds[b-1], thresholds[b]]; each band receives
      // half the previous band's lift. An untreated unit inside the innermost
      // class (possible only when the grid starts above zero) gets the full
      // lift.
      double band_lift = tau;
      for (std::size_t b = 1; b <= K; ++b) {
        if (e[i] <= thresholds[b]) break;
        band_lift *= 0.5;
      }
      lift = band_lift;
    }
    y[i] = base[i] + lift;
  }
  return y;
}

OracleSchedule oracle_schedule(const ProximityStructure& G, double eps_s, std::uint64_t seed) {
  Rng rng = Rng::stream(seed, salt::schedule);
  OracleSchedule s;
  s.base.resize(G.size());
  for (auto& b : s.base) b = rng.normal();
  s.eps_s = eps_s;
  s.seed = seed;
  return s;
}

std::vector<double> OracleSchedule::outcomes_for(const AssignmentVector& d,
                                                 const ProximityStructure& G) const {
  auto e = G.exposure_profile(d);
  std::uint64_t dkey = d.hash();
  std::vector<double> y(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (e[i] > eps_s) {
      y[i] = base[i];
    } else {
      // Assignment-specific value: the null at eps_s says nothing about these
      // cells, so they are free to vary arbitrarily.
      std::uint64_t h = mix64(seed ^ mix64(dkey ^ mix64(static_cast<std::uint64_t>(i) + 1)));
      double u = static_cast<double>(h >> 11) * 0x1.0p-53;
      y[i] = base[i] + amplitude * (2.0 * u - 1.0);
    }
  }
  return y;
}

namespace {

struct EngineRow {
  EngineKind engine;
  bool unadjusted;
  double level;
};

std::vector<EngineRow> expand_engines(const SimConfig& cfg) {
  std::vector<EngineRow> rows;
  for (auto e : cfg.engines) {
    if (e == EngineKind::pnrt_pair) {
      rows.push_back({e, false, cfg.alpha / 2});
      rows.push_back({e, true, cfg.alpha});
    } else {
      rows.push_back({e, false, cfg.alpha});
    }
  }
  return rows;
}

}  // namespace

PowerStudy run_power_study(const SimConfig& cfg) {
  cfg.validate();
  SyntheticNetwork net = gen_network(cfg, cfg.seed);
  AssignmentMechanism mech = net.design(cfg.n_treated);

  std::vector<AssignmentVector> pool;
  pool.reserve(cfg.pool_size);
  for (std::size_t i = 0; i < cfg.pool_size; ++i) {
    Rng rng = Rng::stream(cfg.seed, salt::pool, i);
    pool.push_back(mech.sample(rng));
  }

  std::vector<EngineRow> rows = expand_engines(cfg);
  bool want_pair = false, want_frt = false;
  for (const auto& r : rows) {
    if (r.engine == EngineKind::frt)
      want_frt = true;
    else
      want_pair = true;
  }

  // decisions[cell] 2 = reject, 1 = no decision, 0 = accept; cell index is
  // (((tau, sim), hypothesis), row).
  std::size_t n_tau = cfg.taus.size(), n_hyp = cfg.hypotheses.size(), n_rows = rows.size();
  std::vector<std::uint8_t> decisions(n_tau * cfg.sims * n_hyp * n_rows, 0);

  parallel_for(n_tau * cfg.sims, cfg.workers, [&](std::size_t cell) {
    std::size_t t = cell / cfg.sims;
    std::size_t s = cell % cfg.sims;
    std::uint64_t sim_seed = derive_key(cfg.seed, salt::sim_cell, t, s);
    Schedule sched = cfg.redraw_schedule
                         ? gen_schedule(cfg, net.hotspots, cfg.taus[t], sim_seed)
                         : gen_schedule(cfg, net.hotspots, cfg.taus[t],
                                        derive_key(cfg.seed, salt::schedule, t));
    Rng obs_rng = Rng::stream(sim_seed, salt::observed);
    const AssignmentVector& d_obs = pool[obs_rng.below(pool.size())];

    OutcomeData data;
    data.y = sched.outcomes_for(d_obs, net.G);

    for (std::size_t h = 0; h < n_hyp; ++h) {
      std::size_t k = cfg.hypotheses[h];
      StatisticSpec spec;
      spec.kind = cfg.stat;
      spec.side = cfg.side;
      // Spillover band k against the pure-control tail beyond the last
      // threshold; intermediate bands sit in neither comparison group.
      spec.eps_s = cfg.thresholds[k];
      spec.eps_c = cfg.thresholds[k + 1];
      if (cfg.thresholds.back() > spec.eps_c) spec.ctrl_from = cfg.thresholds.back();

      EngineConfig ecfg;
      ecfg.mode = Mode::monte_carlo;
      ecfg.resamples = cfg.resamples;
      ecfg.alpha = cfg.alpha;
      ecfg.tie_rule = cfg.tie_rule;
      ecfg.seed = derive_key(sim_seed, salt::instance, k);
      ecfg.workers = 1;
      ecfg.store_draws = false;

      bool imputable_empty = want_pair && net.G.imputable_set(d_obs, spec.eps_s).empty();
      ColumnRequest req{want_pair && !imputable_empty, want_frt};
      DrawColumns cols;
      if (req.pair || req.frt)
        cols = collect_monte_carlo(spec, data, d_obs, mech, net.G, cfg.resamples, ecfg.seed, req,
                                   1);
      for (std::size_t rix = 0; rix < n_rows; ++rix) {
        const EngineRow& row = rows[rix];
        std::uint8_t mark = 0;
        if (row.engine != EngineKind::frt && imputable_empty) {
          mark = 1;
        } else {
          EngineConfig rcfg = ecfg;
          rcfg.engine = row.engine;
          rcfg.unadjusted = row.unadjusted;
          TestResult res;
          switch (row.engine) {
            case EngineKind::frt: res = assemble_frt(rcfg, cols); break;
            case EngineKind::naive_rt: res = assemble_naive(rcfg, cols); break;
            case EngineKind::pnrt_pair: res = assemble_pair(rcfg, cols); break;
            case EngineKind::pnrt_min: res = assemble_min(rcfg, cols); break;
            case EngineKind::crt: break;
          }
          mark = res.decision == Decision::reject ? 2 : 0;
        }
        decisions[((t * cfg.sims + s) * n_hyp + h) * n_rows + rix] = mark;
      }
    }
  });

  PowerStudy out;
  for (std::size_t rix = 0; rix < n_rows; ++rix) {
    for (std::size_t t = 0; t < n_tau; ++t) {
      for (std::size_t h = 0; h < n_hyp; ++h) {
        PowerCell c;
        c.engine = rows[rix].engine;
        c.unadjusted = rows[rix].unadjusted;
        c.level = rows[rix].level;
        c.tau = cfg.taus[t];
        c.hypothesis = cfg.hypotheses[h];
        c.sims = cfg.sims;
        for (std::size_t s = 0; s < cfg.sims; ++s) {
          std::uint8_t mark = decisions[((t * cfg.sims + s) * n_hyp + h) * n_rows + rix];
          if (mark == 2) ++c.rejections;
          if (mark == 1) ++c.no_decisions;
        }
        c.rate = static_cast<double>(c.rejections) / static_cast<double>(c.sims);
        c.se = std::sqrt(std::max(c.rate * (1 - c.rate), 0.0) / static_cast<double>(c.sims));
        out.cells.push_back(c);
      }
    }
  }
  return out;
}

namespace {

// Shared scaffolding of the exact audits: a small uniform geography, a
// complete design sized to keep the support enumerable.
struct AuditInstance {
  ProximityStructure G;
  AssignmentMechanism mech;
  std::vector<WeightedAssignment> support;
  std::vector<double> grid;
};

AuditInstance make_audit_instance(std::size_t n, Rng& rng) {
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = rng.u01();
    ys[i] = rng.u01();
  }
  ProximityStructure G = ProximityStructure::coordinates(xs, ys);
  auto dists = pairwise_distances(G);
  std::vector<double> grid = {0.0, quantile(dists, 0.25), quantile(dists, 0.5)};
  std::size_t m = n <= 7 ? 2 : 3;
  AssignmentMechanism mech{CompleteDesign{n, m}};
  auto support = mech.enumerate();
  return AuditInstance{std::move(G), std::move(mech), std::move(support), std::move(grid)};
}

}  // namespace

std::vector<SizeRow> run_size_study(const SizeStudyConfig& cfg) {
  if (cfg.instances == 0) throw InputError("size audit needs at least one instance");
  if (cfg.n_min < 4 || cfg.n_max < cfg.n_min)
    throw InputError("size audit unit counts must satisfy 4 <= n_min <= n_max");
  std::vector<std::vector<SizeRow>> per_instance(cfg.instances);
  parallel_for(cfg.instances, cfg.workers, [&](std::size_t inst) {
    Rng rng = Rng::stream(cfg.seed, salt::instance, inst);
    std::size_t n = cfg.n_min + rng.below(cfg.n_max - cfg.n_min + 1);
    AuditInstance a = make_audit_instance(n, rng);

    StatisticSpec spec;
    spec.kind = inst % 3 == 2 ? StatKind::rank_diff : StatKind::diff_in_means;
    spec.side = inst % 2 == 0 ? Sidedness::two_sided : Sidedness::one_sided_upper;
    spec.eps_s = a.grid[inst % 2 == 0 ? 0 : 1];
    spec.eps_c = a.grid[2];
    OracleSchedule sched = oracle_schedule(a.G, spec.eps_s, derive_key(cfg.seed, salt::schedule, inst));

    EngineConfig ecfg;
    ecfg.mode = Mode::exhaustive;
    ecfg.alpha = 0.05;  // levels applied from cfg.alphas below
    ecfg.seed = derive_key(cfg.seed, salt::instance, inst);
    ecfg.workers = 1;
    ecfg.store_draws = false;

    // Exact p-value of each possible observed assignment under the null.
    std::vector<double> pair_pvals(a.support.size()), min_pvals(a.support.size());
    for (std::size_t s = 0; s < a.support.size(); ++s) {
      const auto& d_obs = a.support[s].d;
      OutcomeData data;
      data.y = sched.outcomes_for(d_obs, a.G);
      DrawColumns cols = collect_exhaustive(spec, data, d_obs, a.mech, a.G,
                                            kDefaultEnumerationCap, ColumnRequest{true, false}, 1);
      pair_pvals[s] = assemble_pair(ecfg, cols).pval;
      min_pvals[s] = assemble_min(ecfg, cols).pval;
    }
    for (double alpha : cfg.alphas) {
      SizeRow row;
      row.instance = inst;
      row.n = n;
      row.support = static_cast<double>(a.support.size());
      row.eps_s = spec.eps_s;
      row.alpha = alpha;
      for (std::size_t s = 0; s < a.support.size(); ++s) {
        if (pair_pvals[s] <= alpha / 2) row.reject_pair += a.support[s].prob;
        if (min_pvals[s] <= alpha) row.reject_min += a.support[s].prob;
      }
      per_instance[inst].push_back(row);
    }
  });
  std::vector<SizeRow> out;
  for (auto& rows : per_instance)
    for (auto& r : rows) out.push_back(r);
  return out;
}

std::vector<FwerRow> run_fwer_study(const FwerStudyConfig& cfg) {
  if (cfg.instances == 0) throw InputError("familywise audit needs at least one instance");
  if (cfg.n_min < 4 || cfg.n_max < cfg.n_min)
    throw InputError("familywise audit unit counts must satisfy 4 <= n_min <= n_max");
  std::vector<FwerRow> rows(cfg.instances);
  parallel_for(cfg.instances, cfg.workers, [&](std::size_t inst) {
    Rng rng = Rng::stream(cfg.seed, salt::instance, inst);
    std::size_t n = cfg.n_min + rng.below(cfg.n_max - cfg.n_min + 1);
    AuditInstance a = make_audit_instance(n, rng);
    std::size_t K = a.grid.size() - 1;
    std::size_t k_bar = inst % K;  // truth starts here
    OracleSchedule sched =
        oracle_schedule(a.G, a.grid[k_bar], derive_key(cfg.seed, salt::schedule, inst));

    FwerRow row;
    row.instance = inst;
    row.n = n;
    row.k_bar = k_bar;

    for (int engine_pick = 0; engine_pick < 2; ++engine_pick) {
      SequentialConfig scfg;
      scfg.engine.engine = engine_pick == 0 ? EngineKind::pnrt_pair : EngineKind::pnrt_min;
      scfg.engine.mode = Mode::exhaustive;
      scfg.engine.alpha = cfg.alpha;
      scfg.engine.seed = derive_key(cfg.seed, salt::instance, inst, engine_pick);
      scfg.engine.workers = 1;
      scfg.engine.store_draws = false;
      scfg.statistic.kind = StatKind::diff_in_means;
      scfg.statistic.side = Sidedness::two_sided;
      scfg.thresholds = a.grid;

      double fwer = 0, step2 = 0;
      for (const auto& wd : a.support) {
        OutcomeData data;
        data.y = sched.outcomes_for(wd.d, a.G);
        SequentialResult seq = sequential_test(scfg, data, wd.d, a.mech, a.G);
        if (seq.k_hat > k_bar) fwer += wd.prob;
        if (k_bar + 1 < a.grid.size()) {
          TwoStepResult two = two_step_pretest(scfg, k_bar, data, wd.d, a.mech, a.G);
          if (two.final.decision == Decision::reject) step2 += wd.prob;
        }
      }
      if (engine_pick == 0) {
        row.fwer_pair = fwer;
        row.step2_pair = step2;
      } else {
        row.fwer_min = fwer;
        row.step2_min = step2;
      }
    }
    rows[inst] = row;
  });
  return rows;
}

ImputabilityGrid imputability_grid(const OutcomeData& data, const AssignmentMechanism& mech,
                                   const ProximityStructure& G, double eps_s, std::size_t cap) {
  data.validate();
  if (data.n() != G.size()) throw InputError("outcome data does not match network size");
  auto support = mech.enumerate(cap);
  ImputabilityGrid grid;
  grid.unit_ids = G.unit_ids();
  for (const auto& wd : support) {
    UnitSet imp = G.imputable_set(wd.d, eps_s);
    std::vector<std::string> row(G.size());
    for (std::size_t i = 0; i < G.size(); ++i)
      row[i] = imp.contains(i) ? format_value(data.y[i]) : "?";
    grid.assignment_labels.push_back(wd.d.to_bitstring());
    grid.cells.push_back(std::move(row));
  }
  return grid;
}

}  // namespace pnrt
