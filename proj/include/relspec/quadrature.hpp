#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include "relspec/errors.hpp"

namespace relspec {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss–Legendre rule on [-1, 1] (Newton iteration on P_n).
inline QuadratureRule gauss_legendre(std::size_t n) {
  if (n == 0) throw DomainError("quadrature needs at least one node");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (double(i) + 0.75) / (double(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * double(k) - 1.0) * x * p1 - (double(k) - 1.0) * p0) / double(k);
        p0 = p1;
        p1 = pk;
      }
      dp = double(n) * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

/// ∫_a^b f(x) dx with a single Gauss–Legendre rule.
template <class F>
double integrate_gl(const F& f, double a, double b, const QuadratureRule& rule) {
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return acc * half;
}

/// ∫_a^b f(t) dt for 0 < a < b using Gauss–Legendre panels in u = log t.
template <class F>
double integrate_log(const F& f, double a, double b, double panel_width = 0.25, std::size_t order = 16) {
  if (!(a > 0.0) || !(b >= a)) throw DomainError("log-panel integration needs 0 < a <= b");
  if (a == b) return 0.0;
  static const QuadratureRule rule = gauss_legendre(16);
  const QuadratureRule local = order == 16 ? rule : gauss_legendre(order);
  const double ua = std::log(a), ub = std::log(b);
  const auto panels = std::max<std::size_t>(1, std::size_t(std::ceil((ub - ua) / panel_width)));
  double acc = 0.0;
  for (std::size_t k = 0; k < panels; ++k) {
    const double u0 = ua + (ub - ua) * double(k) / double(panels);
    const double u1 = ua + (ub - ua) * double(k + 1) / double(panels);
    acc += integrate_gl([&](double u) { const double t = std::exp(u); return f(t) * t; }, u0, u1, local);
  }
  return acc;
}

/// ∫_a^∞ f(t) dt for an integrand with eventual exponential decay. Panels in log t are
/// added until two consecutive panels contribute less than `tol` and the integrand at
/// the panel end is below `tol`, or until `t_cap`.
template <class F>
double integrate_log_to_infinity(const F& f, double a, double tol = 1e-15, double t_cap = 1e7,
                                 double panel_width = 0.25) {
  static const QuadratureRule rule = gauss_legendre(16);
  double u = std::log(a);
  const double ucap = std::log(t_cap);
  double acc = 0.0;
  int quiet = 0;
  while (u < ucap) {
    const double u1 = u + panel_width;
    const double part =
        integrate_gl([&](double v) { const double t = std::exp(v); return f(t) * t; }, u, u1, rule);
    acc += part;
    const double tail = std::abs(f(std::exp(u1))) * std::exp(u1);
    quiet = (std::abs(part) < tol && tail < tol) ? quiet + 1 : 0;
    if (quiet >= 2) return acc;
    u = u1;
  }
  throw NumericalError("integrand does not decay before t = " + std::to_string(t_cap));
}

}  // namespace relspec
