#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "relspec/errors.hpp"
#include "relspec/grid.hpp"

namespace relspec {

struct SobolevDistanceReport {
  int p = 1;
  int r = 0;
  double norm = 0.0;
  double c1 = 1.0;  ///< min g′/g
  double c2 = 1.0;  ///< max g′/g
  bool in_component = true;
};

/// Thresholds of the component-membership predicate. A finite grid cannot witness a
/// divergent norm, so membership tests the quasi-isometry ratios and overflow only.
struct ComponentCriteria {
  double min_ratio = 0.0;
  double norm_limit = 1e300;
};

namespace detail {

/// Arclength coordinate of the nodes for metric g (trapezoid in √g).
inline std::vector<double> arclength(const MetricData& g) {
  const auto& grid = g.grid;
  const std::size_t n = grid.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t j = 0; j + 1 < n; ++j)
    s[j + 1] = s[j] + grid.gap(j) * 0.5 * (std::sqrt(g.density[j]) + std::sqrt(g.density[j + 1]));
  return s;
}

/// First derivative with respect to arclength: central inside, one-sided at interval ends,
/// wrapped on the circle.
inline std::vector<double> arclength_derivative(const MetricData& g, const std::vector<double>& s,
                                                const std::vector<double>& f) {
  const std::size_t n = f.size();
  std::vector<double> df(n);
  if (g.grid.periodic()) {
    const double total = s[n - 1] + g.grid.gap(n - 1) * 0.5 *
                                        (std::sqrt(g.density[n - 1]) + std::sqrt(g.density[0]));
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t jp = (j + 1) % n, jm = (j + n - 1) % n;
      double ds = s[jp] - s[jm];
      if (ds <= 0.0) ds += total;
      df[j] = (f[jp] - f[jm]) / ds;
    }
    return df;
  }
  df[0] = (f[1] - f[0]) / (s[1] - s[0]);
  df[n - 1] = (f[n - 1] - f[n - 2]) / (s[n - 1] - s[n - 2]);
  for (std::size_t j = 1; j + 1 < n; ++j) df[j] = (f[j + 1] - f[j - 1]) / (s[j + 1] - s[j - 1]);
  return df;
}

}  // namespace detail

/// Discrete |g − g′|_{g,p,r}: the pointwise tensor norm |g − g′|_g = |g′−g|/g and its
/// arclength difference quotients up to order r, integrated against dvol(g).
inline SobolevDistanceReport discrete_sobolev_distance(const MetricData& g, const MetricData& g2, int p,
                                                       int r, const ComponentCriteria& criteria = {}) {
  if (!(g.grid == g2.grid)) throw ShapeError("metrics live on different grids");
  if (p != 1 && p != 2) throw DomainError("p must be 1 or 2");
  if (r < 0 || r > 4) throw DomainError("derivative order r must lie in [0, 4]");

  const std::size_t n = g.grid.size();
  SobolevDistanceReport rep;
  rep.p = p;
  rep.r = r;
  rep.c1 = std::numeric_limits<double>::infinity();
  rep.c2 = 0.0;
  std::vector<double> q(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double ratio = g2.density[j] / g.density[j];
    rep.c1 = std::min(rep.c1, ratio);
    rep.c2 = std::max(rep.c2, ratio);
    q[j] = ratio - 1.0;
  }

  const auto s = detail::arclength(g);
  double acc = 0.0;
  std::vector<double> deriv = q;
  for (int order = 0; order <= r; ++order) {
    if (order > 0) deriv = detail::arclength_derivative(g, s, deriv);
    for (std::size_t j = 0; j < n; ++j) acc += std::pow(std::abs(deriv[j]), p) * g.volume_weight(j);
  }
  rep.norm = std::pow(acc, 1.0 / p);
  rep.in_component = std::isfinite(rep.norm) && rep.norm < criteria.norm_limit &&
                     rep.c1 > criteria.min_ratio &&
                     (criteria.min_ratio <= 0.0 || rep.c2 < 1.0 / criteria.min_ratio);
  return rep;
}

/// max(|g−g′|_{g}/|g−g′|_{g′}, inverse): how far the norm is from being symmetric.
inline double symmetry_defect(const MetricData& g, const MetricData& g2, int p, int r,
                              const ComponentCriteria& criteria = {}) {
  const auto forward = discrete_sobolev_distance(g, g2, p, r, criteria);
  const auto backward = discrete_sobolev_distance(g2, g, p, r, criteria);
  if (!forward.in_component || !backward.in_component)
    throw ComponentViolation("metrics are not in one component");
  if (forward.norm == 0.0 && backward.norm == 0.0)
    throw DomainError("symmetry defect undefined: both norms vanish");
  if (forward.norm == 0.0 || backward.norm == 0.0)
    throw NumericalError("only one of the two Sobolev norms vanishes");
  return std::max(forward.norm / backward.norm, backward.norm / forward.norm);
}

}  // namespace relspec
