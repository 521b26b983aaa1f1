#pragma once

// Symmetric tridiagonal eigensolver: QL iteration with implicit Wilkinson shifts
// (the tql1/tql2 scheme of Bowdler, Martin, Reinsch and Wilkinson).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "relspec/errors.hpp"

namespace relspec {

struct TridiagonalEigen {
  std::vector<double> values;            ///< ascending
  std::optional<Eigen::MatrixXd> vectors;  ///< columns ordered like `values`
  int sweeps = 0;
};

/// Eigen-decomposition of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (off[i] couples i and i+1). Deterministic for fixed input.
inline TridiagonalEigen tridiagonal_eigen(std::vector<double> diag, std::vector<double> off,
                                          bool want_vectors, int max_sweeps_per_value = 60) {
  const int n = static_cast<int>(diag.size());
  if (n == 0) return {};
  if (off.size() + 1 != diag.size()) throw ShapeError("tridiagonal off-diagonal must have n-1 entries");

  std::vector<double>& d = diag;
  std::vector<double> e(n, 0.0);
  for (int i = 0; i + 1 < n; ++i) e[i] = off[i];

  Eigen::MatrixXd z;
  if (want_vectors) z = Eigen::MatrixXd::Identity(n, n);

  const double eps = std::numeric_limits<double>::epsilon();
  TridiagonalEigen out;
  for (int l = 0; l < n; ++l) {
    int iter = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
        if (std::abs(e[m]) <= eps * dd) break;
      }
      if (m == l) break;
      if (iter++ == max_sweeps_per_value) {
        double residual = 0.0;
        for (int k = l; k < m; ++k) residual = std::max(residual, std::abs(e[k]));
        throw NumericalError("tridiagonal QL did not converge for eigenvalue " + std::to_string(l) +
                             " (largest off-diagonal residual " + std::to_string(residual) + ")");
      }
      ++out.sweeps;
      // Wilkinson-type shift from the leading 2x2 block.
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      int i = m - 1;
      bool deflated = false;
      for (; i >= l; --i) {
        const double f = s * e[i];
        const double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[m] = 0.0;
          deflated = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        if (want_vectors) {
          for (int k = 0; k < n; ++k) {
            const double zf = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * zf;
            z(k, i) = c * z(k, i) - s * zf;
          }
        }
      }
      if (deflated) continue;
      d[l] -= p;
      e[l] = g;
      e[m] = 0.0;
    } while (m != l);
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
  out.values.resize(n);
  for (int i = 0; i < n; ++i) out.values[i] = d[order[i]];
  if (want_vectors) {
    Eigen::MatrixXd sorted(n, n);
    for (int i = 0; i < n; ++i) sorted.col(i) = z.col(order[i]);
    out.vectors = std::move(sorted);
  }
  return out;
}

}  // namespace relspec
