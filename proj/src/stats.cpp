#include "pnrt/stats.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "pnrt/design.hpp"
#include "pnrt/rng.hpp"

namespace pnrt {

namespace {

constexpr double kMaxCondition = 1e12;

double apply_side(double value, Sidedness side) {
  return side == Sidedness::two_sided ? std::abs(value) : value;
}

struct GroupRows {
  std::vector<std::size_t> units;  // spill rows first, then ctrl rows
  std::size_t n_spill = 0;
};

GroupRows collect_rows(const UnitSet& F, const ExposureSets& gs) {
  GroupRows rows;
  UnitSet spill = gs.spill & F;
  UnitSet ctrl = gs.ctrl & F;
  spill.for_each([&](std::size_t i) { rows.units.push_back(i); });
  rows.n_spill = rows.units.size();
  ctrl.for_each([&](std::size_t i) { rows.units.push_back(i); });
  return rows;
}

double unit_weight(const StatisticSpec& spec, std::size_t unit, bool in_spill,
                   StatDiagnostics* diag) {
  if (spec.weighting == Weighting::none) return 1.0;
  const auto& tab = *spec.propensity;
  double p = in_spill ? tab.p_spill[unit] : tab.p_ctrl[unit];
  if (p <= 0.0) {
    if (diag) ++diag->zero_propensity;
    return 0.0;
  }
  return 1.0 / p;
}

double mean_diff(const StatisticSpec& spec, const GroupRows& rows,
                 const std::vector<double>& values, StatDiagnostics* diag) {
  std::size_t n_ctrl = rows.units.size() - rows.n_spill;
  if (rows.n_spill == 0 || n_ctrl == 0) {
    if (diag) ++diag->empty_group;
    return kInf;
  }
  double ws = 0, sum_s = 0, wc = 0, sum_c = 0;
  for (std::size_t r = 0; r < rows.units.size(); ++r) {
    bool in_spill = r < rows.n_spill;
    double w = unit_weight(spec, rows.units[r], in_spill, diag);
    if (in_spill) {
      ws += w;
      sum_s += w * values[r];
    } else {
      wc += w;
      sum_c += w * values[r];
    }
  }
  if (ws <= 0.0 || wc <= 0.0) {
    if (diag) ++diag->empty_group;
    return kInf;
  }
  return apply_side(sum_s / ws - sum_c / wc, spec.side);
}

// Centered mid-ranks of `values`: #{v_j < v_i} + (1 + #{v_j == v_i}) / 2,
// shifted by (1 + n) / 2 so they sum to zero.
std::vector<double> centered_midranks(const std::vector<double>& values) {
  std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    // Tied block occupies positions i..j-1 (0-based); mid-rank is the average
    // of 1-based positions i+1 .. j.
    double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = mid;
    i = j;
  }
  double center = (1.0 + static_cast<double>(n)) / 2.0;
  for (auto& r : ranks) r -= center;
  return ranks;
}

// Weighted least squares of y on the given design columns. Returns the
// coefficient of column `target`, or +inf when the system is rank deficient
// or its condition estimate exceeds kMaxCondition.
double wls_coefficient(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, Eigen::Index target, StatDiagnostics* diag) {
  Eigen::Index n = X.rows(), p = X.cols();
  if (n < p) {
    if (diag) ++diag->ill_conditioned;
    return kInf;
  }
  Eigen::VectorXd sw = w.array().sqrt();
  Eigen::MatrixXd Xw = sw.asDiagonal() * X;
  Eigen::VectorXd yw = sw.asDiagonal() * y;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  if (qr.rank() < p) {
    if (diag) ++diag->ill_conditioned;
    return kInf;
  }
  Eigen::VectorXd diagR = qr.matrixR().topLeftCorner(p, p).diagonal().cwiseAbs();
  double cond = diagR.maxCoeff() / diagR.minCoeff();
  if (!(cond <= kMaxCondition)) {
    if (diag) ++diag->ill_conditioned;
    return kInf;
  }
  Eigen::VectorXd beta = qr.solve(yw);
  return beta[target];
}

double regression_stat(const StatisticSpec& spec, const OutcomeData& data, const GroupRows& rows,
                       StatDiagnostics* diag) {
  std::size_t n_ctrl = rows.units.size() - rows.n_spill;
  if (rows.n_spill == 0 || n_ctrl == 0) {
    if (diag) ++diag->empty_group;
    return kInf;
  }
  Eigen::Index n = static_cast<Eigen::Index>(rows.units.size());
  Eigen::Index p = 2 + static_cast<Eigen::Index>(spec.covariates.size());
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n), w(n);
  double total_w = 0.0;
  for (Eigen::Index r = 0; r < n; ++r) {
    std::size_t i = rows.units[static_cast<std::size_t>(r)];
    bool in_spill = static_cast<std::size_t>(r) < rows.n_spill;
    X(r, 0) = 1.0;
    X(r, 1) = in_spill ? 1.0 : 0.0;
    for (std::size_t c = 0; c < spec.covariates.size(); ++c)
      X(r, 2 + static_cast<Eigen::Index>(c)) = data.cov(i, spec.covariates[c]);
    y[r] = data.y[i];
    w[r] = unit_weight(spec, i, in_spill, diag);
    total_w += w[r];
  }
  if (!(total_w > 0.0)) {
    if (diag) ++diag->empty_group;
    return kInf;
  }
  double beta = wls_coefficient(X, y, w, 1, diag);
  if (std::isinf(beta)) return kInf;
  return apply_side(beta, spec.side);
}

void check_spec(const StatisticSpec& spec, const OutcomeData& data) {
  if (!(spec.eps_s < spec.eps_c))
    throw InputError("spillover threshold must be below the control threshold");
  if (spec.ctrl_from && !(*spec.ctrl_from >= spec.eps_c))
    throw InputError("control tail must start at or beyond the spillover interval");
  for (auto c : spec.covariates)
    if (c >= data.n_covariates)
      throw InputError("covariate column " + std::to_string(c) + " out of range");
  if (spec.weighting == Weighting::inverse_propensity) {
    if (!spec.propensity)
      throw InputError("inverse-propensity weighting needs a propensity table");
    if (spec.propensity->p_spill.size() != data.n() || spec.propensity->p_ctrl.size() != data.n())
      throw InputError("propensity table does not match unit count");
  }
  if (spec.pairwise_residuals && spec.kind == StatKind::regression_coefficient)
    throw InputError("per-subsample residuals combine with the mean or rank contrasts, "
                     "not the regression kind");
}

// Residuals of y on intercept + covariates fit over just these rows. Empty
// return marks a rank-deficient or ill-conditioned fit.
std::vector<double> subsample_residuals(const StatisticSpec& spec, const OutcomeData& data,
                                        const GroupRows& rows, StatDiagnostics* diag) {
  Eigen::Index n = static_cast<Eigen::Index>(rows.units.size());
  Eigen::Index p = 1 + static_cast<Eigen::Index>(spec.covariates.size());
  if (n < p) {
    if (diag) ++diag->ill_conditioned;
    return {};
  }
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    std::size_t i = rows.units[static_cast<std::size_t>(r)];
    X(r, 0) = 1.0;
    for (std::size_t c = 0; c < spec.covariates.size(); ++c)
      X(r, 1 + static_cast<Eigen::Index>(c)) = data.cov(i, spec.covariates[c]);
    y[r] = data.y[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) {
    if (diag) ++diag->ill_conditioned;
    return {};
  }
  Eigen::VectorXd diagR = qr.matrixR().topLeftCorner(p, p).diagonal().cwiseAbs();
  if (!(diagR.maxCoeff() / diagR.minCoeff() <= kMaxCondition)) {
    if (diag) ++diag->ill_conditioned;
    return {};
  }
  Eigen::VectorXd resid = y - X * qr.solve(y);
  std::vector<double> out(rows.units.size());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = resid[static_cast<Eigen::Index>(r)];
  return out;
}

double evaluate_core(const StatisticSpec& spec, const OutcomeData& data, const UnitSet& F,
                     const ExposureSets& gs, StatDiagnostics* diag) {
  GroupRows rows = collect_rows(F, gs);
  std::size_t n_ctrl = rows.units.size() - rows.n_spill;
  if (rows.n_spill == 0 || n_ctrl == 0) {
    if (diag) ++diag->empty_group;
    return kInf;
  }
  std::vector<double> vals(rows.units.size());
  for (std::size_t r = 0; r < rows.units.size(); ++r) vals[r] = data.y[rows.units[r]];
  if (spec.pairwise_residuals) {
    vals = subsample_residuals(spec, data, rows, diag);
    if (vals.empty()) return kInf;
  }
  switch (spec.kind) {
    case StatKind::diff_in_means:
      return mean_diff(spec, rows, vals, diag);
    case StatKind::rank_diff:
      return mean_diff(spec, rows, centered_midranks(vals), diag);
    case StatKind::regression_coefficient:
      return regression_stat(spec, data, rows, diag);
  }
  return kInf;
}

}  // namespace

void OutcomeData::validate() const {
  if (y.empty()) throw InputError("outcome data has no units");
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!std::isfinite(y[i]))
      throw InputError("outcome for unit " + std::to_string(i + 1) + " is not finite");
  if (x.size() != y.size() * n_covariates)
    throw InputError("covariate block size does not match unit count");
  for (double v : x)
    if (!std::isfinite(v)) throw InputError("covariates must be finite");
  if (!unit_ids.empty() && unit_ids.size() != y.size())
    throw InputError("unit id list does not match outcome count");
}

double evaluate_sets(const StatisticSpec& spec, const OutcomeData& data,
                     const ExposureSets& filter_sets, const ExposureSets& group_sets,
                     StatDiagnostics* diag) {
  UnitSet F = filter_sets.imputable & group_sets.imputable;
  return evaluate_core(spec, data, F, group_sets, diag);
}

double evaluate_restricted(const StatisticSpec& spec, const OutcomeData& data,
                           const UnitSet& restrict_to, const ExposureSets& group_sets,
                           StatDiagnostics* diag) {
  return evaluate_core(spec, data, restrict_to, group_sets, diag);
}

double evaluate_unfiltered(const StatisticSpec& spec, const OutcomeData& data,
                           const ExposureSets& group_sets, StatDiagnostics* diag) {
  return evaluate_core(spec, data, UnitSet::all(data.n()), group_sets, diag);
}

ExposureSets spec_exposure_sets(const StatisticSpec& spec, const ProximityStructure& G,
                                const AssignmentVector& d) {
  auto sets = G.exposure_sets(d, spec.eps_s, spec.eps_c);
  if (spec.ctrl_from && *spec.ctrl_from > spec.eps_c)
    sets.ctrl = G.imputable_set(d, *spec.ctrl_from);
  return sets;
}

double evaluate(const StatisticSpec& spec, const OutcomeData& data, const AssignmentVector& filter,
                const AssignmentVector& group, const ProximityStructure& G,
                StatDiagnostics* diag) {
  check_spec(spec, data);
  data.validate();
  if (data.n() != G.size()) throw InputError("outcome data does not match network size");
  auto fs = G.exposure_sets(filter, spec.eps_s, spec.eps_c);
  auto gs = spec_exposure_sets(spec, G, group);
  return evaluate_sets(spec, data, fs, gs, diag);
}

OutcomeData residualize(const OutcomeData& data, const std::vector<std::size_t>& covariates) {
  data.validate();
  for (auto c : covariates)
    if (c >= data.n_covariates)
      throw InputError("covariate column " + std::to_string(c) + " out of range");
  Eigen::Index n = static_cast<Eigen::Index>(data.n());
  Eigen::Index p = 1 + static_cast<Eigen::Index>(covariates.size());
  Eigen::MatrixXd X(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (std::size_t c = 0; c < covariates.size(); ++c)
      X(i, 1 + static_cast<Eigen::Index>(c)) = data.cov(static_cast<std::size_t>(i), covariates[c]);
    y[i] = data.y[static_cast<std::size_t>(i)];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < p) {
    auto perm = qr.colsPermutation().indices();
    std::string cols;
    for (Eigen::Index k = qr.rank(); k < p; ++k) {
      Eigen::Index col = perm[k];
      if (!cols.empty()) cols += ", ";
      cols += col == 0 ? std::string("intercept")
                       : "covariate " + std::to_string(covariates[static_cast<std::size_t>(col - 1)]);
    }
    throw InputError("residualization design is rank deficient (redundant: " + cols + ")");
  }
  Eigen::VectorXd beta = qr.solve(y);
  Eigen::VectorXd resid = y - X * beta;
  OutcomeData out = data;
  for (Eigen::Index i = 0; i < n; ++i) out.y[static_cast<std::size_t>(i)] = resid[i];
  return out;
}

double pairwise_residual_evaluate(const StatisticSpec& spec, const OutcomeData& data,
                                  const AssignmentVector& filter, const AssignmentVector& group,
                                  const ProximityStructure& G, StatDiagnostics* diag) {
  StatisticSpec adjusted = spec;
  adjusted.pairwise_residuals = true;
  if (adjusted.kind == StatKind::regression_coefficient) adjusted.kind = StatKind::diff_in_means;
  return evaluate(adjusted, data, filter, group, G, diag);
}

PropensityTable exposure_propensity(const AssignmentMechanism& mech, const ProximityStructure& G,
                                    double eps_s, double eps_c, std::size_t draws,
                                    std::uint64_t seed) {
  if (draws == 0) throw InputError("propensity estimation needs at least one draw");
  if (!(eps_s < eps_c)) throw InputError("spillover threshold must be below the control threshold");
  if (mech.n() != G.size()) throw InputError("design does not match network size");
  std::size_t n = G.size();
  std::vector<std::size_t> hit_spill(n, 0), hit_ctrl(n, 0);
  for (std::size_t r = 0; r < draws; ++r) {
    Rng rng = Rng::stream(seed, salt::propensity, r);
    auto d = mech.sample(rng);
    auto sets = G.exposure_sets(d, eps_s, eps_c);
    sets.spill.for_each([&](std::size_t i) { ++hit_spill[i]; });
    sets.ctrl.for_each([&](std::size_t i) { ++hit_ctrl[i]; });
  }
  PropensityTable out;
  out.draws = draws;
  out.p_spill.resize(n);
  out.p_ctrl.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.p_spill[i] = static_cast<double>(hit_spill[i]) / static_cast<double>(draws);
    out.p_ctrl[i] = static_cast<double>(hit_ctrl[i]) / static_cast<double>(draws);
  }
  return out;
}

}  // namespace pnrt
