#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "relspec/errors.hpp"

namespace relspec {

enum class GridKind { interval, line_truncated, circle };
enum class Boundary { dirichlet, periodic };

inline const char* to_string(GridKind k) {
  switch (k) {
    case GridKind::interval: return "interval";
    case GridKind::line_truncated: return "line-truncated";
    case GridKind::circle: return "circle";
  }
  return "?";
}

inline const char* to_string(Boundary b) { return b == Boundary::periodic ? "periodic" : "dirichlet"; }

/// Node set of a 1D model geometry. Interval-type grids include both endpoints;
/// circle grids place n nodes at x_j = lower + j·L/n.
class Grid1D {
 public:
  static Grid1D interval(double a, double b, std::size_t n) {
    return Grid1D(GridKind::interval, a, b, n, Boundary::dirichlet);
  }
  static Grid1D line_truncated(double radius, std::size_t n) {
    return Grid1D(GridKind::line_truncated, -radius, radius, n, Boundary::dirichlet);
  }
  static Grid1D circle(double circumference, std::size_t n) {
    return Grid1D(GridKind::circle, 0.0, circumference, n, Boundary::periodic);
  }
  /// Nonuniform interval grid through the given strictly increasing nodes.
  static Grid1D from_nodes(std::vector<double> nodes) {
    if (nodes.size() < 3) throw DomainError("grid needs at least 3 nodes");
    for (std::size_t i = 1; i < nodes.size(); ++i)
      if (!(nodes[i] > nodes[i - 1])) throw DomainError("grid nodes must be strictly increasing");
    Grid1D g(GridKind::interval, nodes.front(), nodes.back(), nodes.size(), Boundary::dirichlet);
    g.nodes_ = std::move(nodes);
    g.uniform_ = false;
    return g;
  }

  GridKind kind() const { return kind_; }
  Boundary boundary() const { return boundary_; }
  std::size_t size() const { return n_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double length() const { return upper_ - lower_; }
  bool uniform() const { return uniform_; }
  bool periodic() const { return kind_ == GridKind::circle; }

  /// Uniform spacing; for nonuniform grids the smallest spacing.
  double spacing() const {
    if (uniform_) return periodic() ? length() / double(n_) : length() / double(n_ - 1);
    double h = length();
    for (std::size_t i = 1; i < n_; ++i) h = std::min(h, nodes_[i] - nodes_[i - 1]);
    return h;
  }
  double node(std::size_t i) const { return nodes_[i]; }
  const std::vector<double>& nodes() const { return nodes_; }

  /// Spacing between node i and node i+1 (wrapping on the circle).
  double gap(std::size_t i) const {
    if (periodic()) return length() / double(n_);
    return nodes_[i + 1] - nodes_[i];
  }
  std::size_t edge_count() const { return periodic() ? n_ : n_ - 1; }

  /// Geodesic distance in coordinate units (periodic distance on the circle).
  double distance(std::size_t i, std::size_t j) const {
    double d = std::abs(nodes_[i] - nodes_[j]);
    if (periodic()) d = std::min(d, length() - d);
    return d;
  }

  /// Trapezoidal (interval) or uniform (circle) quadrature weight of node i.
  double cell(std::size_t i) const {
    if (periodic()) return length() / double(n_);
    const double left = i == 0 ? 0.0 : nodes_[i] - nodes_[i - 1];
    const double right = i + 1 == n_ ? 0.0 : nodes_[i + 1] - nodes_[i];
    return 0.5 * (left + right);
  }

  bool operator==(const Grid1D& o) const {
    return kind_ == o.kind_ && boundary_ == o.boundary_ && n_ == o.n_ && nodes_ == o.nodes_;
  }

 private:
  Grid1D(GridKind kind, double a, double b, std::size_t n, Boundary bc)
      : kind_(kind), boundary_(bc), n_(n), lower_(a), upper_(b) {
    if (n < 3) throw DomainError("grid needs at least 3 nodes");
    if (!(b > a) || !std::isfinite(a) || !std::isfinite(b))
      throw DomainError("grid endpoints must be finite and ordered");
    nodes_.resize(n);
    const double h = periodic() ? (b - a) / double(n) : (b - a) / double(n - 1);
    for (std::size_t i = 0; i < n; ++i) nodes_[i] = a + h * double(i);
    if (!periodic()) nodes_.back() = b;
  }

  GridKind kind_;
  Boundary boundary_;
  std::size_t n_;
  double lower_;
  double upper_;
  bool uniform_ = true;
  std::vector<double> nodes_;
};

/// Real samples of a potential, superpotential, density or connection on a grid.
struct ScalarField {
  std::vector<double> values;
  std::string label;

  ScalarField() = default;
  ScalarField(const Grid1D& grid, std::vector<double> v, std::string name = {})
      : values(std::move(v)), label(std::move(name)) {
    if (values.size() != grid.size()) throw ShapeError("scalar field length differs from grid size");
    for (double x : values)
      if (!std::isfinite(x)) throw DomainError("scalar field '" + label + "' has a non-finite value");
  }

  static ScalarField constant(const Grid1D& grid, double c, std::string name = {}) {
    return ScalarField(grid, std::vector<double>(grid.size(), c), std::move(name));
  }
  static ScalarField sample(const Grid1D& grid, const std::function<double(double)>& f,
                            std::string name = {}) {
    std::vector<double> v(grid.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(grid.node(i));
    return ScalarField(grid, std::move(v), std::move(name));
  }

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double max_abs() const {
    double m = 0.0;
    for (double x : values) m = std::max(m, std::abs(x));
    return m;
  }
};

/// A 1D metric g = density(x)·dx² on a grid.
struct MetricData {
  Grid1D grid;
  ScalarField density;

  MetricData(Grid1D g, ScalarField d) : grid(std::move(g)), density(std::move(d)) {
    if (density.size() != grid.size()) throw ShapeError("metric density length differs from grid size");
    for (double x : density.values)
      if (!(x > 0.0)) throw DomainError("metric density must be strictly positive");
  }

  /// Riemannian volume weight √g·cell at node i.
  double volume_weight(std::size_t i) const { return std::sqrt(density[i]) * grid.cell(i); }

  /// Total Riemannian length (circumference on the circle).
  double total_length() const {
    double s = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) s += volume_weight(i);
    return s;
  }
};

}  // namespace relspec
