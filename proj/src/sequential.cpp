#include "pnrt/sequential.hpp"

#include <sstream>

#include "pnrt/rng.hpp"

namespace pnrt {

namespace {

void validate_sequential(const SequentialConfig& cfg) {
  cfg.engine.validate();
  if (cfg.engine.engine != EngineKind::pnrt_pair && cfg.engine.engine != EngineKind::pnrt_min)
    throw InputError("threshold scans run on the paired or minimization engine");
  DistanceThresholds check(cfg.thresholds);  // validates the grid
}

// The observed exposure classes a scan will contrast; small ones starve the
// comparisons downstream.
std::vector<std::string> thin_group_warnings(const std::vector<double>& grid,
                                             const AssignmentVector& d_obs,
                                             const ProximityStructure& G) {
  std::vector<std::string> out;
  auto warn = [&](double a, double b, std::size_t count) {
    if (count >= kThinGroupWarnSize) return;
    std::ostringstream os;
    os << "observed exposure interval (" << a << ", ";
    if (b == kInf)
      os << "inf";
    else
      os << b;
    os << "] holds fewer than " << kThinGroupWarnSize << " units (" << count
       << "); comparisons there will have little power";
    out.push_back(os.str());
  };
  for (std::size_t k = 0; k + 1 < grid.size(); ++k)
    warn(grid[k], grid[k + 1], G.interval_members(d_obs, grid[k], grid[k + 1]).count());
  warn(grid.back(), kInf, G.interval_members(d_obs, grid.back(), kInf).count());
  return out;
}

StepOutcome run_step(const SequentialConfig& cfg, std::size_t k, double eps_s, double eps_c,
                     const OutcomeData& data, const AssignmentVector& d_obs,
                     const AssignmentMechanism& mech, const ProximityStructure& G,
                     const StepObserver& observer) {
  StepOutcome step;
  step.k = k;
  step.eps_s = eps_s;
  step.eps_c = eps_c;
  EngineConfig engine = cfg.engine;
  engine.seed = derive_key(cfg.engine.seed, salt::sequential_step, k);
  StatisticSpec spec = cfg.statistic;
  spec.eps_s = eps_s;
  spec.eps_c = eps_c;
  step.result = run_test(engine, spec, data, d_obs, mech, G);
  if (observer) observer(step);
  return step;
}

}  // namespace

SequentialResult sequential_test(const SequentialConfig& cfg, const OutcomeData& data,
                                 const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                                 const ProximityStructure& G, const StepObserver& observer) {
  validate_sequential(cfg);
  const auto& grid = cfg.thresholds;
  std::size_t K = grid.size() - 1;
  SequentialResult out;
  out.warnings = thin_group_warnings(grid, d_obs, G);
  out.k_hat = 0;
  for (std::size_t k = 0; k < K; ++k) {
    StepOutcome step = run_step(cfg, k, grid[k], grid[k + 1], data, d_obs, mech, G, observer);
    Decision decision = step.result.decision;
    out.steps.push_back(std::move(step));
    if (decision == Decision::no_decision) {
      out.stopped_no_decision = true;
      out.warnings.push_back("scan stopped at grid index " + std::to_string(k) +
                             ": the step produced no decision");
      break;
    }
    if (decision != Decision::reject) break;
    out.k_hat = k + 1;
  }
  out.boundary = grid[out.k_hat];
  return out;
}

TwoStepResult two_step_pretest(const SequentialConfig& cfg, std::size_t k_target,
                               const OutcomeData& data, const AssignmentVector& d_obs,
                               const AssignmentMechanism& mech, const ProximityStructure& G,
                               const StepObserver& observer) {
  validate_sequential(cfg);
  const auto& grid = cfg.thresholds;
  if (k_target + 1 >= grid.size())
    throw InputError("pretest target index must leave room for a control interval above it");
  TwoStepResult out;
  out.k_target = k_target;
  out.pretest = sequential_test(cfg, data, d_obs, mech, G, observer);
  if (out.pretest.stopped_no_decision || out.pretest.k_hat <= k_target) {
    out.suppressed = true;
    TestResult res;
    res.engine = cfg.engine.engine;
    res.mode = cfg.engine.mode;
    res.pval = 1.0;
    res.alpha = cfg.engine.alpha;
    res.level_used = cfg.engine.engine == EngineKind::pnrt_pair && !cfg.engine.unadjusted
                         ? cfg.engine.alpha / 2.0
                         : cfg.engine.alpha;
    res.seed = cfg.engine.seed;
    res.decision = Decision::no_reject;
    res.warnings.push_back(
        "pretest boundary did not clear the target threshold; non-rejection holds by "
        "construction and no second-stage test was run");
    out.final = std::move(res);
    return out;
  }
  StepOutcome step;
  step.k = k_target;
  step.eps_s = grid[k_target];
  step.eps_c = grid[out.pretest.k_hat];
  EngineConfig engine = cfg.engine;
  engine.seed = derive_key(cfg.engine.seed, salt::pretest_second_stage, k_target);
  StatisticSpec spec = cfg.statistic;
  spec.eps_s = step.eps_s;
  spec.eps_c = step.eps_c;
  step.result = run_test(engine, spec, data, d_obs, mech, G);
  if (observer) observer(step);
  out.final = std::move(step.result);
  return out;
}

DescentResult pure_control_descent(const SequentialConfig& cfg, const OutcomeData& data,
                                   const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                                   const ProximityStructure& G, const StepObserver& observer) {
  validate_sequential(cfg);
  const auto& grid = cfg.thresholds;
  std::size_t K = grid.size() - 1;
  DescentResult out;
  out.k_hat = K;
  out.warnings = thin_group_warnings(grid, d_obs, G);
  out.warnings.push_back(
      "descending scan selects a boundary without familywise error adjustment; "
      "treat the selection as exploratory");
  for (std::size_t k = K; k-- > 0;) {
    StepOutcome step = run_step(cfg, k, grid[k], grid[k + 1], data, d_obs, mech, G, observer);
    Decision decision = step.result.decision;
    out.steps.push_back(std::move(step));
    if (decision == Decision::no_decision) {
      out.stopped_no_decision = true;
      out.warnings.push_back("scan stopped at grid index " + std::to_string(k) +
                             ": the step produced no decision");
      break;
    }
    if (decision == Decision::reject) break;
    out.k_hat = k;
  }
  out.boundary = grid[out.k_hat];
  return out;
}

}  // namespace pnrt
