// Straight-line reference implementations used to check the library. These
// are written directly from the defining formulas, with no shared code paths:
// plain loops over plain vectors, quadratic where that is simplest.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace ref {

inline double inf() { return std::numeric_limits<double>::infinity(); }

// Minimum distance from unit i to any treated unit; 0 when treated, inf when
// nothing is treated.
inline std::vector<double> exposure(const std::vector<double>& dist, std::size_t n,
                                    const std::vector<std::uint8_t>& d) {
  std::vector<double> e(n, inf());
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i]) {
      e[i] = 0.0;
      continue;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (d[j]) e[i] = std::min(e[i], dist[i * n + j]);
  }
  return e;
}

struct StatRequest {
  double eps_s = 0.0;
  double eps_c = inf();
  bool two_sided = true;
  bool rank = false;
};

// Spill-vs-ctrl contrast classified by `group`, restricted to units imputable
// under `filter`. Empty side yields inf.
inline double grouped_stat(const std::vector<double>& y, const std::vector<double>& dist,
                           std::size_t n, const std::vector<std::uint8_t>& filter_d,
                           const std::vector<std::uint8_t>& group_d, const StatRequest& req) {
  std::vector<double> ef = exposure(dist, n, filter_d);
  std::vector<double> eg = exposure(dist, n, group_d);
  std::vector<std::size_t> rows;
  std::vector<int> side;  // 0 spill, 1 ctrl
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ef[i] > req.eps_s)) continue;  // not imputable under the filter
    if (eg[i] > req.eps_s && eg[i] <= req.eps_c) {
      rows.push_back(i);
      side.push_back(0);
    } else if (eg[i] > req.eps_c) {
      rows.push_back(i);
      side.push_back(1);
    }
  }
  std::vector<double> v(rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) v[k] = y[rows[k]];
  if (req.rank) {
    std::vector<double> r(v.size());
    for (std::size_t a = 0; a < v.size(); ++a) {
      double lt = 0, eq = 0;
      for (std::size_t b = 0; b < v.size(); ++b) {
        if (v[b] < v[a]) ++lt;
        if (v[b] == v[a]) ++eq;
      }
      r[a] = lt + 0.5 * (1.0 + eq) - 0.5 * (1.0 + static_cast<double>(v.size()));
    }
    v = r;
  }
  double s0 = 0, s1 = 0;
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (side[k] == 0) {
      s0 += v[k];
      ++n0;
    } else {
      s1 += v[k];
      ++n1;
    }
  }
  if (n0 == 0 || n1 == 0) return inf();
  double t = s0 / static_cast<double>(n0) - s1 / static_cast<double>(n1);
  return req.two_sided ? std::fabs(t) : t;
}

// Classified by `group` with no imputability filter at all.
inline double unfiltered_stat(const std::vector<double>& y, const std::vector<double>& dist,
                              std::size_t n, const std::vector<std::uint8_t>& group_d,
                              const StatRequest& req) {
  std::vector<std::uint8_t> nobody(n, 0);
  // A filter under which everything is imputable: exposure is inf everywhere.
  return grouped_stat(y, dist, n, nobody, group_d, req);
}

struct SupportPoint {
  std::vector<std::uint8_t> d;
  double w = 1.0;
};

// h(t, tref): 1 strictly greater, tie value on equality, 0 otherwise. inf vs
// inf counts as a tie.
inline double h_of(double t, double tref, double tie_value) {
  if (t > tref) return 1.0;
  if (t == tref) return tie_value;
  return 0.0;
}

inline double pair_pval(const std::vector<double>& y, const std::vector<double>& dist,
                        std::size_t n, const std::vector<std::uint8_t>& d_obs,
                        const std::vector<SupportPoint>& support, const StatRequest& req,
                        double tie_value = 1.0) {
  double mass = 0, hits = 0;
  for (const auto& p : support) {
    double t = grouped_stat(y, dist, n, d_obs, p.d, req);
    double tref = grouped_stat(y, dist, n, p.d, d_obs, req);
    hits += p.w * h_of(t, tref, tie_value);
    mass += p.w;
  }
  return hits / mass;
}

inline double min_pval(const std::vector<double>& y, const std::vector<double>& dist,
                       std::size_t n, const std::vector<std::uint8_t>& d_obs,
                       const std::vector<SupportPoint>& support, const StatRequest& req) {
  double tmin = inf();
  for (const auto& p : support)
    tmin = std::min(tmin, grouped_stat(y, dist, n, p.d, d_obs, req));
  double mass = 0, hits = 0;
  for (const auto& p : support) {
    double t = grouped_stat(y, dist, n, d_obs, p.d, req);
    hits += p.w * (t >= tmin ? 1.0 : 0.0);
    mass += p.w;
  }
  return hits / mass;
}

inline double naive_pval(const std::vector<double>& y, const std::vector<double>& dist,
                         std::size_t n, const std::vector<std::uint8_t>& d_obs,
                         const std::vector<SupportPoint>& support, const StatRequest& req) {
  double tobs = grouped_stat(y, dist, n, d_obs, d_obs, req);
  double mass = 0, hits = 0;
  for (const auto& p : support) {
    double t = grouped_stat(y, dist, n, d_obs, p.d, req);
    hits += p.w * (t >= tobs ? 1.0 : 0.0);
    mass += p.w;
  }
  return hits / mass;
}

inline double frt_pval(const std::vector<double>& y, const std::vector<double>& dist,
                       std::size_t n, const std::vector<std::uint8_t>& d_obs,
                       const std::vector<SupportPoint>& support, const StatRequest& req) {
  double tobs = unfiltered_stat(y, dist, n, d_obs, req);
  double mass = 0, hits = 0;
  for (const auto& p : support) {
    double t = unfiltered_stat(y, dist, n, p.d, req);
    hits += p.w * (t >= tobs ? 1.0 : 0.0);
    mass += p.w;
  }
  return hits / mass;
}

// Ordinary least squares by unweighted normal equations with Gaussian
// elimination and partial pivoting; returns the coefficient at `target`.
inline double ols_coefficient(const std::vector<std::vector<double>>& X,
                              const std::vector<double>& y, std::size_t target) {
  std::size_t p = X[0].size(), n = X.size();
  std::vector<std::vector<double>> a(p, std::vector<double>(p + 1, 0.0));
  for (std::size_t r = 0; r < p; ++r) {
    for (std::size_t c = 0; c < p; ++c)
      for (std::size_t i = 0; i < n; ++i) a[r][c] += X[i][r] * X[i][c];
    for (std::size_t i = 0; i < n; ++i) a[r][p] += X[i][r] * y[i];
  }
  for (std::size_t col = 0; col < p; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < p; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == col || a[col][col] == 0.0) continue;
      double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= p; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return a[target][p] / a[target][target];
}

// Toy fixture: six units on a cycle, distance = shorter arc length.
inline std::vector<double> hex_distances() {
  std::vector<double> dist(36);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      double diff = std::fabs(static_cast<double>(i) - static_cast<double>(j));
      dist[i * 6 + j] = std::min(diff, 6.0 - diff);
    }
  return dist;
}

inline std::vector<double> hex_outcomes() { return {2, 5, 3, 1, 4, 6}; }

inline std::vector<SupportPoint> hex_support() {
  std::vector<SupportPoint> s;
  for (std::size_t k = 0; k < 6; ++k) {
    SupportPoint p;
    p.d.assign(6, 0);
    p.d[k] = 1;
    p.w = 1.0 / 6.0;
    s.push_back(p);
  }
  return s;
}

}  // namespace ref
