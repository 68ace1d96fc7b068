#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "pnrt/engines.hpp"

namespace pnrt {

// Units below this in any observed exposure class trigger a power warning.
inline constexpr std::size_t kThinGroupWarnSize = 20;

struct SequentialConfig {
  EngineConfig engine;      // pnrt_pair or pnrt_min
  StatisticSpec statistic;  // eps_s / eps_c are overwritten per step
  std::vector<double> thresholds;
};

struct StepOutcome {
  std::size_t k = 0;
  double eps_s = 0;
  double eps_c = 0;
  TestResult result;
};

using StepObserver = std::function<void(const StepOutcome&)>;

// Ascending scan: test each threshold against the next, stop at the first
// non-rejection. k_hat counts the consecutive initial rejections; the last
// grid point itself is never tested.
struct SequentialResult {
  std::size_t k_hat = 0;
  double boundary = 0;  // thresholds[k_hat]
  std::vector<StepOutcome> steps;
  std::vector<std::string> warnings;
  bool stopped_no_decision = false;
};

SequentialResult sequential_test(const SequentialConfig& cfg, const OutcomeData& data,
                                 const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                                 const ProximityStructure& G, const StepObserver& observer = {});

// Data-driven pure-control selection followed by one confirmatory test of the
// target threshold. When the scan stops at or below the target there is
// nothing to confirm: the result is a deterministic non-rejection.
struct TwoStepResult {
  SequentialResult pretest;
  std::size_t k_target = 0;
  bool suppressed = false;
  TestResult final;
};

TwoStepResult two_step_pretest(const SequentialConfig& cfg, std::size_t k_target,
                               const OutcomeData& data, const AssignmentVector& d_obs,
                               const AssignmentMechanism& mech, const ProximityStructure& G,
                               const StepObserver& observer = {});

// Descending scan: walk the grid downward, keep shrinking the pure-control
// boundary while nothing rejects, stop at the first rejection. No familywise
// adjustment; the result carries that warning.
struct DescentResult {
  std::size_t k_hat = 0;  // grid index of the selected pure-control boundary
  double boundary = 0;
  std::vector<StepOutcome> steps;  // in execution order, highest k first
  std::vector<std::string> warnings;
  bool stopped_no_decision = false;
};

DescentResult pure_control_descent(const SequentialConfig& cfg, const OutcomeData& data,
                                   const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                                   const ProximityStructure& G, const StepObserver& observer = {});

}  // namespace pnrt
