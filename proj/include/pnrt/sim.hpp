#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pnrt/design.hpp"
#include "pnrt/engines.hpp"
#include "pnrt/network.hpp"
#include "pnrt/stats.hpp"

namespace pnrt {

// Synthetic geography: clustered points in the unit square, a hotspot subset,
// treatment drawn uniformly among hotspots.
struct SimConfig {
  std::size_t n = 1000;
  std::size_t n_hotspots = 20;
  std::size_t n_treated = 7;
  double mean_x = 0.5, mean_y = 0.5;
  double cov_xx = 0.14, cov_xy = 0.07, cov_yy = 0.14;
  // Hotspot units sit in hotspot_pods tight pods: pod centers follow the
  // broad cloud above, members spread around their center at hotspot_scale.
  // Pods keep hotspots mutually close (a treated draw's near band almost
  // always absorbs the other hotspots of a touched pod) while distinct pods
  // stay far enough apart that changing one treated hotspot moves the band.
  // hotspot_pods = 0 means one pod per hotspot, recovering independent
  // broad-cloud placement. A cluster_share fraction of the remaining units
  // is scattered around a random hotspot at cluster_scale, the rest follow
  // the broad cloud. The defaults put roughly 420 / 250 / 320 of 1000 units
  // in the exposure bands (0,0.1], (0.1,0.2], (0.2,inf) when 7 of 20
  // hotspots are treated.
  std::size_t hotspot_pods = 5;
  double hotspot_scale = 0.02;
  // With hotspot_core_share > 0 the first pod takes that fraction of the
  // hotspots and the remaining pods split the rest; at zero the pods are
  // filled round-robin and end up near-equal.
  double hotspot_core_share = 0;
  double cluster_share = 0.55;
  double cluster_scale = 0.08;
  std::vector<double> thresholds = {0.0, 0.1, 0.2};

  // Outcome law: gamma base levels, hotspots drawn hotter; treatment shifts
  // the treated unit down by one (floored at zero); spillover lifts the
  // nearest interval by tau and each farther interval by half the previous.
  double base_shape = 0.086, base_scale = 3.081;
  double hot_shape = 0.737, hot_scale = 1.778;
  double direct_effect = -1.0;

  std::vector<double> taus = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t sims = 200;
  std::size_t resamples = 500;
  std::size_t pool_size = 1000;
  std::vector<std::size_t> hypotheses = {0};
  std::vector<EngineKind> engines = {EngineKind::frt, EngineKind::pnrt_pair, EngineKind::pnrt_min};
  double alpha = 0.05;
  TieRule tie_rule = TieRule::count_as_ge;
  Sidedness side = Sidedness::one_sided_upper;
  StatKind stat = StatKind::diff_in_means;
  bool redraw_schedule = true;  // fresh base outcomes every simulation
  std::uint64_t seed = 0;
  unsigned workers = 0;

  void validate() const;
};

struct SyntheticNetwork {
  ProximityStructure G;
  std::vector<double> xs, ys;
  UnitSet hotspots;

  // Uniform draw of the treated set among hotspot units.
  AssignmentMechanism design(std::size_t n_treated) const;
};

SyntheticNetwork gen_network(const SimConfig& cfg, std::uint64_t seed);

// Potential-outcome rule: fully determined by the base levels and the
// exposure bands, so any assignment's outcome vector can be generated.
struct Schedule {
  std::vector<double> base;
  std::vector<double> thresholds;
  double tau = 0;
  double direct_effect = -1.0;

  std::vector<double> outcomes_for(const AssignmentVector& d, const ProximityStructure& G) const;
};

Schedule gen_schedule(const SimConfig& cfg, const UnitSet& hotspots, double tau,
                      std::uint64_t seed);

// Adversarial null schedule: constant where exposure exceeds eps_s, an
// arbitrary assignment-dependent value everywhere else. This is the hardest
// case a test claiming validity at eps_s must survive.
struct OracleSchedule {
  std::vector<double> base;
  double eps_s = 0;
  double amplitude = 3.0;
  std::uint64_t seed = 0;

  std::vector<double> outcomes_for(const AssignmentVector& d, const ProximityStructure& G) const;
};

OracleSchedule oracle_schedule(const ProximityStructure& G, double eps_s, std::uint64_t seed);

// Rejection rates per engine / level / tau / tested grid index.
struct PowerCell {
  EngineKind engine = EngineKind::frt;
  bool unadjusted = false;
  double level = 0.05;
  double tau = 0;
  std::size_t hypothesis = 0;
  std::size_t rejections = 0;
  std::size_t no_decisions = 0;
  std::size_t sims = 0;
  double rate = 0;
  double se = 0;
};

struct PowerStudy {
  std::vector<PowerCell> cells;
  std::vector<std::string> notes;
};

PowerStudy run_power_study(const SimConfig& cfg);

// Exact size audit: small random geographies, enumerable designs, adversarial
// null schedules; rejection probability computed by full enumeration.
struct SizeStudyConfig {
  std::size_t instances = 20;
  std::size_t n_min = 6;
  std::size_t n_max = 10;
  std::vector<double> alphas = {0.05, 0.1, 0.2, 0.5};
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct SizeRow {
  std::size_t instance = 0;
  std::size_t n = 0;
  double support = 0;
  double eps_s = 0;
  double alpha = 0.05;
  double reject_pair = 0;  // mass of pval <= alpha/2
  double reject_min = 0;   // mass of pval <= alpha
};

std::vector<SizeRow> run_size_study(const SizeStudyConfig& cfg);

// Exact familywise audit of the threshold scans: schedules false on a prefix
// of the grid and true from k_bar on.
struct FwerStudyConfig {
  std::size_t instances = 10;
  std::size_t n_min = 6;
  std::size_t n_max = 8;
  double alpha = 0.05;
  std::uint64_t seed = 0;
  unsigned workers = 0;
};

struct FwerRow {
  std::size_t instance = 0;
  std::size_t n = 0;
  std::size_t k_bar = 0;
  double fwer_pair = 0;   // mass of scans rejecting some true hypothesis
  double fwer_min = 0;
  double step2_pair = 0;  // mass of confirmatory false rejections at k_bar
  double step2_min = 0;
};

std::vector<FwerRow> run_fwer_study(const FwerStudyConfig& cfg);

// Demonstration grid: per pooled assignment the outcome vector with "?" at
// units whose outcome that assignment cannot be imputed for.
struct ImputabilityGrid {
  std::vector<std::string> assignment_labels;
  std::vector<std::string> unit_ids;
  std::vector<std::vector<std::string>> cells;
};

ImputabilityGrid imputability_grid(const OutcomeData& data, const AssignmentMechanism& mech,
                                   const ProximityStructure& G, double eps_s,
                                   std::size_t cap = kDefaultEnumerationCap);

}  // namespace pnrt
