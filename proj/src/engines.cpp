#include "pnrt/engines.hpp"

#include <algorithm>
#include <cmath>

#include "pnrt/parallel.hpp"
#include "pnrt/rng.hpp"

namespace pnrt {

namespace {

void validate_run(const StatisticSpec& spec, const OutcomeData& data,
                  const AssignmentVector& d_obs, const ProximityStructure& G) {
  data.validate();
  if (data.n() != G.size()) throw InputError("outcome data does not match network size");
  if (d_obs.size() != G.size()) throw InputError("observed assignment does not match network size");
  if (!(spec.eps_s < spec.eps_c))
    throw InputError("spillover threshold must be below the control threshold");
}

// Comparison weight of t against ref under a tie rule: 1 if strictly above,
// 0 if strictly below, rule-dependent on a tie. +inf ties +inf.
double tie_value(TieRule rule, std::uint64_t seed, std::size_t row) {
  switch (rule) {
    case TieRule::count_as_ge:
      return 1.0;
    case TieRule::half_discount:
      return 0.5;
    case TieRule::uniform_break: {
      Rng rng = Rng::stream(seed, salt::tiebreak, row);
      return rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
  }
  return 1.0;
}

struct Tally {
  double n_ge = 0;
  double n_tie = 0;
  double h_sum = 0;
};

// Accumulates comparison mass of t[i] vs ref(i) over all rows.
template <class RefFn>
Tally tally_rows(const std::vector<double>& t, RefFn ref, const std::vector<double>& weight,
                 TieRule rule, std::uint64_t seed) {
  Tally out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double w = weight.empty() ? 1.0 : weight[i];
    double r = ref(i);
    if (t[i] > r) {
      out.n_ge += w;
      out.h_sum += w;
    } else if (t[i] == r) {
      out.n_ge += w;
      out.n_tie += w;
      out.h_sum += w * tie_value(rule, seed, i);
    }
  }
  return out;
}

double total_weight(const DrawColumns& cols, std::size_t rows) {
  if (cols.weight.empty()) return static_cast<double>(rows);
  double s = 0;
  for (double w : cols.weight) s += w;
  return s;
}

TestResult assemble_common(const EngineConfig& cfg, EngineKind engine, const DrawColumns& cols,
                           const std::vector<double>& t, double level, Tally tally) {
  TestResult res;
  res.engine = engine;
  res.mode = cfg.mode;
  res.resamples = t.size();
  res.alpha = cfg.alpha;
  res.level_used = level;
  res.seed = cfg.seed;
  res.diagnostics = cols.diagnostics;
  res.n_ge = tally.n_ge;
  res.n_tie = tally.n_tie;
  if (cfg.mode == Mode::monte_carlo) {
    // The observed assignment contributes the customary +1 on both sides.
    res.pval = (1.0 + tally.h_sum) / (1.0 + static_cast<double>(t.size()));
  } else {
    res.pval = tally.h_sum / total_weight(cols, t.size());
  }
  res.decision = res.pval <= level ? Decision::reject : Decision::no_reject;
  return res;
}

void attach_draws(const EngineConfig& cfg, const DrawColumns& cols, const std::vector<double>& t,
                  const std::vector<double>* ref_col, double ref_const, TestResult& res) {
  if (!cfg.store_draws) return;
  std::size_t keep = std::min(t.size(), cfg.store_draws_cap);
  res.draws.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) {
    ReplicateDraw d;
    d.t = t[i];
    d.t_ref = ref_col ? (*ref_col)[i] : ref_const;
    d.weight = cols.weight.empty() ? 1.0 : cols.weight[i];
    res.draws.push_back(d);
  }
  if (keep < t.size())
    res.warnings.push_back("draw log truncated to " + std::to_string(keep) + " rows");
}

}  // namespace

const char* engine_name(EngineKind k) {
  switch (k) {
    case EngineKind::frt: return "frt";
    case EngineKind::naive_rt: return "naive_rt";
    case EngineKind::pnrt_pair: return "pnrt_pair";
    case EngineKind::pnrt_min: return "pnrt_min";
    case EngineKind::crt: return "crt";
  }
  return "?";
}

const char* tie_rule_name(TieRule r) {
  switch (r) {
    case TieRule::count_as_ge: return "count_as_ge";
    case TieRule::half_discount: return "half_discount";
    case TieRule::uniform_break: return "uniform_break";
  }
  return "?";
}

void EngineConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie strictly between 0 and 1");
  if (mode == Mode::monte_carlo && resamples == 0)
    throw InputError("monte carlo mode needs at least one resample");
  if (unadjusted && engine != EngineKind::pnrt_pair)
    throw InputError("the unadjusted level option applies only to the paired engine");
}

void ConditioningEvent::validate(const ProximityStructure& G, double eps_s) const {
  if (assignments.empty()) throw ContractViolation("conditioning event lists no assignments");
  // Malformed probability lists are input mistakes; the subset and coverage
  // checks further down are what the test's validity actually rests on.
  if (!probs.empty()) {
    if (probs.size() != assignments.size())
      throw InputError("conditioning event probabilities do not match its assignments");
    double total = 0;
    for (double p : probs) {
      if (!(p >= 0.0) || !std::isfinite(p))
        throw InputError("conditioning event probabilities must be nonnegative");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9)
      throw InputError("conditioning event probabilities must sum to 1");
  }
  for (std::size_t k = 0; k < assignments.size(); ++k) {
    if (assignments[k].size() != G.size())
      throw ContractViolation("conditioning event assignment length does not match the network");
    UnitSet imp = G.imputable_set(assignments[k], eps_s);
    if (!focal_units.is_subset_of(imp))
      throw ContractViolation(
          "conditioning event is invalid: focal units are not imputable under assignment " +
          std::to_string(k + 1));
  }
}

DrawColumns collect_monte_carlo(const StatisticSpec& spec, const OutcomeData& data,
                                const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                                const ProximityStructure& G, std::size_t resamples,
                                std::uint64_t seed, ColumnRequest req, unsigned workers) {
  DrawColumns cols;
  auto obs_sets = spec_exposure_sets(spec, G, d_obs);
  StatDiagnostics self_diag;
  if (req.pair) {
    cols.t_pair.resize(resamples);
    cols.t_pair_ref.resize(resamples);
    cols.self_pair = evaluate_sets(spec, data, obs_sets, obs_sets, &self_diag);
  }
  if (req.frt) {
    cols.t_frt.resize(resamples);
    cols.self_frt = evaluate_unfiltered(spec, data, obs_sets, &self_diag);
  }
  std::vector<StatDiagnostics> diag(resamples);
  parallel_for(resamples, workers, [&](std::size_t r) {
    Rng rng = Rng::stream(seed, salt::replicate, r);
    AssignmentVector d = mech.sample(rng);
    auto draw_sets = spec_exposure_sets(spec, G, d);
    if (req.pair) {
      cols.t_pair[r] = evaluate_sets(spec, data, obs_sets, draw_sets, &diag[r]);
      cols.t_pair_ref[r] = evaluate_sets(spec, data, draw_sets, obs_sets, &diag[r]);
    }
    if (req.frt) cols.t_frt[r] = evaluate_unfiltered(spec, data, draw_sets, &diag[r]);
  });
  cols.diagnostics = self_diag;
  for (const auto& d : diag) cols.diagnostics.merge(d);
  return cols;
}

DrawColumns collect_exhaustive(const StatisticSpec& spec, const OutcomeData& data,
                               const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                               const ProximityStructure& G, std::size_t cap, ColumnRequest req,
                               unsigned workers) {
  DrawColumns cols;
  auto obs_sets = spec_exposure_sets(spec, G, d_obs);
  auto support = mech.enumerate(cap);
  std::size_t S = support.size();
  StatDiagnostics self_diag;
  if (req.pair) {
    cols.t_pair.resize(S);
    cols.t_pair_ref.resize(S);
    cols.self_pair = evaluate_sets(spec, data, obs_sets, obs_sets, &self_diag);
  }
  if (req.frt) {
    cols.t_frt.resize(S);
    cols.self_frt = evaluate_unfiltered(spec, data, obs_sets, &self_diag);
  }
  cols.weight.resize(S);
  std::vector<StatDiagnostics> diag(S);
  parallel_for(S, workers, [&](std::size_t s) {
    const auto& d = support[s].d;
    cols.weight[s] = support[s].prob;
    auto draw_sets = spec_exposure_sets(spec, G, d);
    if (req.pair) {
      cols.t_pair[s] = evaluate_sets(spec, data, obs_sets, draw_sets, &diag[s]);
      cols.t_pair_ref[s] = evaluate_sets(spec, data, draw_sets, obs_sets, &diag[s]);
    }
    if (req.frt) cols.t_frt[s] = evaluate_unfiltered(spec, data, draw_sets, &diag[s]);
  });
  cols.diagnostics = self_diag;
  for (const auto& d : diag) cols.diagnostics.merge(d);
  return cols;
}

TestResult assemble_frt(const EngineConfig& cfg, const DrawColumns& cols) {
  Tally tally = tally_rows(
      cols.t_frt, [&](std::size_t) { return cols.self_frt; }, cols.weight, cfg.tie_rule, cfg.seed);
  TestResult res = assemble_common(cfg, EngineKind::frt, cols, cols.t_frt, cfg.alpha, tally);
  attach_draws(cfg, cols, cols.t_frt, nullptr, cols.self_frt, res);
  return res;
}

TestResult assemble_naive(const EngineConfig& cfg, const DrawColumns& cols) {
  Tally tally = tally_rows(
      cols.t_pair, [&](std::size_t) { return cols.self_pair; }, cols.weight, cfg.tie_rule,
      cfg.seed);
  TestResult res = assemble_common(cfg, EngineKind::naive_rt, cols, cols.t_pair, cfg.alpha, tally);
  res.warnings.push_back(
      "naive filtered randomization is NOT a valid test under interference; "
      "it is included for demonstration only");
  attach_draws(cfg, cols, cols.t_pair, nullptr, cols.self_pair, res);
  return res;
}

TestResult assemble_pair(const EngineConfig& cfg, const DrawColumns& cols) {
  Tally tally = tally_rows(
      cols.t_pair, [&](std::size_t i) { return cols.t_pair_ref[i]; }, cols.weight, cfg.tie_rule,
      cfg.seed);
  double level = cfg.unadjusted ? cfg.alpha : cfg.alpha / 2.0;
  TestResult res = assemble_common(cfg, EngineKind::pnrt_pair, cols, cols.t_pair, level, tally);
  if (cfg.unadjusted)
    res.warnings.push_back(
        "rejection taken at the unadjusted level alpha; the finite-sample size "
        "guarantee holds for level alpha/2");
  attach_draws(cfg, cols, cols.t_pair, &cols.t_pair_ref, 0, res);
  return res;
}

TestResult assemble_min(const EngineConfig& cfg, const DrawColumns& cols) {
  // Reference value: smallest reverse-orientation statistic across the drawn
  // assignments and the observed one itself.
  double tmin = cfg.mode == Mode::monte_carlo ? cols.self_pair : kInf;
  for (double v : cols.t_pair_ref) tmin = std::min(tmin, v);
  Tally tally = tally_rows(
      cols.t_pair, [&](std::size_t) { return tmin; }, cols.weight, cfg.tie_rule, cfg.seed);
  TestResult res = assemble_common(cfg, EngineKind::pnrt_min, cols, cols.t_pair, cfg.alpha, tally);
  res.stat_threshold = tmin;
  attach_draws(cfg, cols, cols.t_pair, nullptr, tmin, res);
  return res;
}

TestResult run_test(const EngineConfig& cfg, const StatisticSpec& spec, const OutcomeData& data,
                    const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                    const ProximityStructure& G) {
  cfg.validate();
  validate_run(spec, data, d_obs, G);
  if (cfg.engine == EngineKind::crt)
    throw InputError("the conditional engine needs a conditioning event");
  if (mech.n() != G.size()) throw InputError("design does not match network size");
  if (!mech.contains(d_obs))
    throw ContractViolation("observed assignment has zero probability under the design");

  bool filtered = cfg.engine != EngineKind::frt;
  if (filtered && G.imputable_set(d_obs, spec.eps_s).empty()) {
    TestResult res;
    res.engine = cfg.engine;
    res.mode = cfg.mode;
    res.pval = 1.0;
    res.alpha = cfg.alpha;
    res.level_used = cfg.engine == EngineKind::pnrt_pair && !cfg.unadjusted ? cfg.alpha / 2.0
                                                                            : cfg.alpha;
    res.seed = cfg.seed;
    res.decision = Decision::no_decision;
    res.warnings.push_back(
        "no unit is imputable under the observed assignment at this spillover "
        "threshold; it is advisable not to reject");
    return res;
  }

  ColumnRequest req;
  req.pair = filtered;
  req.frt = !filtered;
  DrawColumns cols =
      cfg.mode == Mode::exhaustive
          ? collect_exhaustive(spec, data, d_obs, mech, G, cfg.enumeration_cap, req, cfg.workers)
          : collect_monte_carlo(spec, data, d_obs, mech, G, cfg.resamples, cfg.seed, req,
                                cfg.workers);
  switch (cfg.engine) {
    case EngineKind::frt: return assemble_frt(cfg, cols);
    case EngineKind::naive_rt: return assemble_naive(cfg, cols);
    case EngineKind::pnrt_pair: return assemble_pair(cfg, cols);
    case EngineKind::pnrt_min: return assemble_min(cfg, cols);
    case EngineKind::crt: break;
  }
  throw InputError("unreachable engine dispatch");
}

TestResult run_crt(const EngineConfig& cfg, const StatisticSpec& spec, const OutcomeData& data,
                   const AssignmentVector& d_obs, const ConditioningEvent& event,
                   const ProximityStructure& G) {
  cfg.validate();
  validate_run(spec, data, d_obs, G);
  event.validate(G, spec.eps_s);
  std::size_t obs_at = event.assignments.size();
  for (std::size_t k = 0; k < event.assignments.size(); ++k) {
    if (event.assignments[k] == d_obs) {
      obs_at = k;
      break;
    }
  }
  if (obs_at == event.assignments.size())
    throw ContractViolation("observed assignment is not part of the conditioning event");

  std::vector<double> probs = event.probs;
  if (probs.empty())
    probs.assign(event.assignments.size(), 1.0 / static_cast<double>(event.assignments.size()));

  // Statistic restricted to the focal units; imputability of those units is
  // exactly what the event validation established.
  auto stat_for = [&](const AssignmentVector& d, StatDiagnostics* diag) {
    auto sets = spec_exposure_sets(spec, G, d);
    return evaluate_restricted(spec, data, event.focal_units, sets, diag);
  };
  StatDiagnostics self_diag;
  double t_obs = stat_for(d_obs, &self_diag);

  DrawColumns cols;
  cols.diagnostics = self_diag;
  std::size_t rows;
  if (cfg.mode == Mode::exhaustive) {
    rows = event.assignments.size();
    cols.t_pair.resize(rows);
    cols.weight = probs;
    std::vector<StatDiagnostics> diag(rows);
    parallel_for(rows, cfg.workers, [&](std::size_t s) {
      cols.t_pair[s] = stat_for(event.assignments[s], &diag[s]);
    });
    for (const auto& d : diag) cols.diagnostics.merge(d);
  } else {
    rows = cfg.resamples;
    cols.t_pair.resize(rows);
    std::vector<StatDiagnostics> diag(rows);
    std::vector<double> cdf(probs.size());
    double acc = 0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      acc += probs[k];
      cdf[k] = acc;
    }
    parallel_for(rows, cfg.workers, [&](std::size_t r) {
      Rng rng = Rng::stream(cfg.seed, salt::replicate, r);
      double u = rng.u01();
      std::size_t k = static_cast<std::size_t>(
          std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
      if (k >= event.assignments.size()) k = event.assignments.size() - 1;
      cols.t_pair[r] = stat_for(event.assignments[k], &diag[r]);
    });
    for (const auto& d : diag) cols.diagnostics.merge(d);
  }
  Tally tally = tally_rows(
      cols.t_pair, [&](std::size_t) { return t_obs; }, cols.weight, cfg.tie_rule, cfg.seed);
  TestResult res = assemble_common(cfg, EngineKind::crt, cols, cols.t_pair, cfg.alpha, tally);
  attach_draws(cfg, cols, cols.t_pair, nullptr, t_obs, res);
  return res;
}

}  // namespace pnrt
