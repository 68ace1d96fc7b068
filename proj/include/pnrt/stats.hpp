#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pnrt/assignment.hpp"
#include "pnrt/errors.hpp"
#include "pnrt/network.hpp"
#include "pnrt/unit_set.hpp"

namespace pnrt {

class AssignmentMechanism;
class Rng;

// Outcomes plus an optional covariate block, row per unit.
struct OutcomeData {
  std::vector<double> y;
  std::size_t n_covariates = 0;
  std::vector<double> x;  // row-major, n * n_covariates
  std::vector<std::string> unit_ids;

  std::size_t n() const { return y.size(); }
  double cov(std::size_t i, std::size_t j) const { return x[i * n_covariates + j]; }
  void validate() const;
};

enum class StatKind { diff_in_means, rank_diff, regression_coefficient };
enum class Sidedness { two_sided, one_sided_upper };
enum class Weighting { none, inverse_propensity };

// Monte Carlo estimates of each unit's chance of landing in the spillover
// interval and in the pure-control tail under the design.
struct PropensityTable {
  std::vector<double> p_spill;
  std::vector<double> p_ctrl;
  std::size_t draws = 0;
};

struct StatisticSpec {
  StatKind kind = StatKind::diff_in_means;
  Sidedness side = Sidedness::two_sided;
  double eps_s = 0.0;
  double eps_c = kInf;
  // Start of the pure-control tail; eps_c when absent. A value beyond eps_c
  // leaves the units in (eps_c, ctrl_from] out of both comparison groups.
  std::optional<double> ctrl_from;
  std::vector<std::size_t> covariates;  // column indices into OutcomeData.x
  Weighting weighting = Weighting::none;
  std::shared_ptr<const PropensityTable> propensity;
  // Refit the covariate adjustment on every filtered subsample: y is
  // residualized on intercept + covariates within the eligible rows, then the
  // mean or rank contrast runs on those residuals. Not combinable with the
  // regression kind, which already adjusts in one step.
  bool pairwise_residuals = false;
};

// Degeneracies hit while evaluating; sentinels are returned, never thrown.
struct StatDiagnostics {
  std::size_t empty_group = 0;
  std::size_t ill_conditioned = 0;
  std::size_t zero_propensity = 0;

  void merge(const StatDiagnostics& o) {
    empty_group += o.empty_group;
    ill_conditioned += o.ill_conditioned;
    zero_propensity += o.zero_propensity;
  }
};

// Contrast between the spillover interval and the pure-control tail of
// `group`, computed on data restricted to imputable(filter) & imputable(group).
// Returns +inf when a comparison group is empty or the regression is
// numerically unusable; never NaN.
double evaluate(const StatisticSpec& spec, const OutcomeData& data, const AssignmentVector& filter,
                const AssignmentVector& group, const ProximityStructure& G,
                StatDiagnostics* diag = nullptr);

// Exposure classes of `d` under `spec`: imputable and spill as the
// thresholds dictate, with the control class starting at ctrl_from when that
// is set beyond eps_c.
ExposureSets spec_exposure_sets(const StatisticSpec& spec, const ProximityStructure& G,
                                const AssignmentVector& d);

// Same contrast with the unit filter supplied directly. `restrict_to` is
// intersected with nothing further; group classes are clipped to it.
double evaluate_restricted(const StatisticSpec& spec, const OutcomeData& data,
                           const UnitSet& restrict_to, const ExposureSets& group_sets,
                           StatDiagnostics* diag = nullptr);

// Filtered evaluation from precomputed per-assignment class sets.
double evaluate_sets(const StatisticSpec& spec, const OutcomeData& data,
                     const ExposureSets& filter_sets, const ExposureSets& group_sets,
                     StatDiagnostics* diag = nullptr);

// Unfiltered evaluation: all units eligible (classical sharp-null usage).
double evaluate_unfiltered(const StatisticSpec& spec, const OutcomeData& data,
                           const ExposureSets& group_sets, StatDiagnostics* diag = nullptr);

// Replaces y with residuals from a whole-sample least-squares fit on an
// intercept plus the chosen covariate columns. Rank deficiency is an error
// naming the offending columns.
OutcomeData residualize(const OutcomeData& data, const std::vector<std::size_t>& covariates);

// Covariate adjustment refit per evaluation: residualizes y on the filtered
// subsample only, then contrasts the residuals across the two groups.
double pairwise_residual_evaluate(const StatisticSpec& spec, const OutcomeData& data,
                                  const AssignmentVector& filter, const AssignmentVector& group,
                                  const ProximityStructure& G, StatDiagnostics* diag = nullptr);

// Monte Carlo interval-membership probabilities under the design.
PropensityTable exposure_propensity(const AssignmentMechanism& mech, const ProximityStructure& G,
                                    double eps_s, double eps_c, std::size_t draws,
                                    std::uint64_t seed);

}  // namespace pnrt
