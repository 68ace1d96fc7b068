#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pnrt/assignment.hpp"
#include "pnrt/design.hpp"
#include "pnrt/network.hpp"
#include "pnrt/stats.hpp"

namespace pnrt {

enum class EngineKind { frt, naive_rt, pnrt_pair, pnrt_min, crt };
enum class Mode { monte_carlo, exhaustive };
enum class TieRule { count_as_ge, half_discount, uniform_break };
enum class Decision { reject, no_reject, no_decision };

const char* engine_name(EngineKind k);
const char* tie_rule_name(TieRule r);

struct EngineConfig {
  EngineKind engine = EngineKind::pnrt_pair;
  Mode mode = Mode::monte_carlo;
  std::size_t resamples = 1000;
  double alpha = 0.05;
  TieRule tie_rule = TieRule::count_as_ge;
  // pnrt_pair only: reject at alpha instead of alpha/2. The alpha/2 rule is
  // the one with a finite-sample size guarantee.
  bool unadjusted = false;
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0 = all hardware threads
  std::size_t enumeration_cap = kDefaultEnumerationCap;
  bool store_draws = true;
  std::size_t store_draws_cap = 10000;

  void validate() const;
};

struct ReplicateDraw {
  double t = 0;       // statistic for this draw
  double t_ref = 0;   // what it was compared against
  double weight = 1;  // exhaustive mode: probability of the draw
};

struct TestResult {
  EngineKind engine = EngineKind::pnrt_pair;
  Mode mode = Mode::monte_carlo;
  double pval = 1.0;
  std::size_t resamples = 0;  // exhaustive mode: support size
  double n_ge = 0;            // exhaustive mode: probability mass instead of count
  double n_tie = 0;
  Decision decision = Decision::no_reject;
  double alpha = 0.05;
  double level_used = 0.05;
  double stat_threshold = 0;  // pnrt_min: the minimized reference value
  std::uint64_t seed = 0;
  std::vector<ReplicateDraw> draws;
  std::vector<std::string> warnings;
  StatDiagnostics diagnostics;
};

// Conditioning event for the generic conditional test: a set of focal units
// together with the assignments (and conditional law) the test resamples
// over. Valid when every focal unit stays imputable under every listed
// assignment at the declared spillover threshold.
struct ConditioningEvent {
  UnitSet focal_units;
  std::vector<AssignmentVector> assignments;
  std::vector<double> probs;  // empty = uniform

  void validate(const ProximityStructure& G, double eps_s) const;
};

// One realized draw's two statistic columns, shared by the resampling
// engines: t_pair reads the observed-assignment filter against the drawn
// grouping, t_pair_ref the reverse orientation, t_frt the unfiltered value.
struct DrawColumns {
  std::vector<double> t_pair;
  std::vector<double> t_pair_ref;
  std::vector<double> t_frt;
  std::vector<double> weight;  // exhaustive only
  double self_pair = 0;
  double self_frt = 0;
  StatDiagnostics diagnostics;
};

struct ColumnRequest {
  bool pair = false;
  bool frt = false;
};

DrawColumns collect_monte_carlo(const StatisticSpec& spec, const OutcomeData& data,
                                const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                                const ProximityStructure& G, std::size_t resamples,
                                std::uint64_t seed, ColumnRequest req, unsigned workers);

DrawColumns collect_exhaustive(const StatisticSpec& spec, const OutcomeData& data,
                               const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                               const ProximityStructure& G, std::size_t cap, ColumnRequest req,
                               unsigned workers);

// P-value assembly from precollected columns; lets several engines share one
// set of draws.
TestResult assemble_frt(const EngineConfig& cfg, const DrawColumns& cols);
TestResult assemble_naive(const EngineConfig& cfg, const DrawColumns& cols);
TestResult assemble_pair(const EngineConfig& cfg, const DrawColumns& cols);
TestResult assemble_min(const EngineConfig& cfg, const DrawColumns& cols);

// Full runs: validate, collect, assemble.
TestResult run_test(const EngineConfig& cfg, const StatisticSpec& spec, const OutcomeData& data,
                    const AssignmentVector& d_obs, const AssignmentMechanism& mech,
                    const ProximityStructure& G);

TestResult run_crt(const EngineConfig& cfg, const StatisticSpec& spec, const OutcomeData& data,
                   const AssignmentVector& d_obs, const ConditioningEvent& event,
                   const ProximityStructure& G);

}  // namespace pnrt
