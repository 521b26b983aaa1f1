#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relspec/errors.hpp"
#include "relspec/grid.hpp"
#include "relspec/operator.hpp"

namespace relspec {

/// −d²/dx² + V with the three-point stencil. Interval grids carry Dirichlet values at both
/// endpoints (unknowns are the interior nodes); circle grids are periodic.
inline SelfAdjointOperator build_schrodinger(const Grid1D& grid, const ScalarField& v, std::string label = {}) {
  if (v.size() != grid.size()) throw ShapeError("potential length differs from grid size");
  const std::size_t n = grid.size();
  std::vector<Eigen::Triplet<double>> trip;
  if (grid.periodic()) {
    const double h = grid.spacing();
    const double c = 1.0 / (h * h);
    for (std::size_t i = 0; i < n; ++i) {
      trip.emplace_back(int(i), int(i), 2.0 * c + v[i]);
      trip.emplace_back(int(i), int((i + 1) % n), -c);
      trip.emplace_back(int(i), int((i + n - 1) % n), -c);
    }
    SparseMatrix m(static_cast<int>(n), static_cast<int>(n));
    m.setFromTriplets(trip.begin(), trip.end());
    return SelfAdjointOperator(WeightedSpace(grid, std::vector<double>(n, h), grid.nodes()), std::move(m),
                               std::move(label));
  }
  const std::size_t m = n - 2;
  std::vector<double> w(m), pos(m);
  for (std::size_t k = 0; k < m; ++k) {
    const std::size_t i = k + 1;
    const double hl = grid.node(i) - grid.node(i - 1);
    const double hr = grid.node(i + 1) - grid.node(i);
    w[k] = 0.5 * (hl + hr);
    pos[k] = grid.node(i);
    trip.emplace_back(int(k), int(k), (1.0 / hl + 1.0 / hr) / w[k] + v[i]);
    if (k > 0) trip.emplace_back(int(k), int(k - 1), -1.0 / (hl * w[k]));
    if (k + 1 < m) trip.emplace_back(int(k), int(k + 1), -1.0 / (hr * w[k]));
  }
  SparseMatrix mat(static_cast<int>(m), static_cast<int>(m));
  mat.setFromTriplets(trip.begin(), trip.end());
  return SelfAdjointOperator(WeightedSpace(grid, std::move(w), std::move(pos)), std::move(mat), std::move(label));
}

struct SusyOptions {
  double decay_tolerance = 1e-6;
  double tail_fraction = 0.1;
};

namespace detail {

struct Supercharge {
  SparseMatrix q_plus;  // edges × nodes
  bool left_edge = false;
  bool right_edge = false;
};

// Staggered supercharge Q⁺ = ∂ + W from nodes to edges. A Dirichlet half-edge is added at
// an end where e^{−∫W} grows, so the would-be zero mode there is excluded.
inline Supercharge staggered_supercharge(const Grid1D& grid, const ScalarField& w) {
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  Supercharge s;
  s.left_edge = w[0] >= 0.0;
  s.right_edge = w[n - 1] <= 0.0;
  const std::size_t edges = (n - 1) + (s.left_edge ? 1 : 0) + (s.right_edge ? 1 : 0);
  std::vector<Eigen::Triplet<double>> trip;
  int e = 0;
  if (s.left_edge) {
    trip.emplace_back(e, 0, 1.0 / h + 0.5 * w[0]);
    ++e;
  }
  for (std::size_t j = 0; j + 1 < n; ++j, ++e) {
    const double we = 0.5 * (w[j] + w[j + 1]);
    trip.emplace_back(e, int(j), -1.0 / h + 0.5 * we);
    trip.emplace_back(e, int(j + 1), 1.0 / h + 0.5 * we);
  }
  if (s.right_edge) trip.emplace_back(e, int(n - 1), -1.0 / h + 0.5 * w[n - 1]);
  s.q_plus.resize(int(edges), int(n));
  s.q_plus.setFromTriplets(trip.begin(), trip.end());
  return s;
}

inline SelfAdjointOperator assemble_dirac(const WeightedSpace& space, const SparseMatrix& qp, const SparseMatrix& qm,
                                          std::vector<int> tau, std::string label) {
  const int np = int(qp.cols()), nm = int(qp.rows());
  std::vector<Eigen::Triplet<double>> trip;
  for (int i = 0; i < qp.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(qp, i); it; ++it) trip.emplace_back(np + it.row(), it.col(), it.value());
  for (int i = 0; i < qm.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(qm, i); it; ++it) trip.emplace_back(it.row(), np + it.col(), it.value());
  SparseMatrix d(np + nm, np + nm);
  d.setFromTriplets(trip.begin(), trip.end());
  return SelfAdjointOperator(space, std::move(d), std::move(label), std::move(tau), true);
}

}  // namespace detail

/// Graded Dirac pair D = [[0, Q⁻],[Q⁺, 0]] for superpotentials W and W₂ on a truncated line.
/// The even part lives on the grid nodes, the odd part on the edges between them.
inline GradedPair build_susy_pair(const Grid1D& grid, const ScalarField& w, const ScalarField& w2,
                                  const SusyOptions& opt = {}) {
  if (grid.periodic()) throw DomainError("supersymmetric model needs an interval grid");
  if (!grid.uniform()) throw DomainError("supersymmetric model needs a uniform grid");
  if (w.size() != grid.size() || w2.size() != grid.size()) throw ShapeError("superpotential length differs from grid");
  const std::size_t n = grid.size();
  const auto tail = std::max<std::size_t>(1, std::size_t(std::ceil(opt.tail_fraction * double(n))));
  for (std::size_t k = 0; k < tail; ++k) {
    for (std::size_t i : {k, n - 1 - k}) {
      if (std::abs(w[i] - w2[i]) >= opt.decay_tolerance)
        throw ComponentViolation("superpotential difference does not decay at the truncation ends (|W - W2| = " +
                                 std::to_string(std::abs(w[i] - w2[i])) + " at x = " +
                                 std::to_string(grid.node(i)) + ")");
    }
  }
  auto s1 = detail::staggered_supercharge(grid, w);
  auto s2 = detail::staggered_supercharge(grid, w2);
  if (s1.left_edge != s2.left_edge || s1.right_edge != s2.right_edge)
    throw ComponentViolation("superpotentials have different signs at the truncation ends");

  const double h = grid.spacing();
  const std::size_t m = std::size_t(s1.q_plus.rows());
  std::vector<double> weight(n + m, h), pos(n + m);
  for (std::size_t i = 0; i < n; ++i) pos[i] = grid.node(i);
  const double first_edge = s1.left_edge ? grid.node(0) - 0.5 * h : grid.node(0) + 0.5 * h;
  for (std::size_t e = 0; e < m; ++e) pos[n + e] = first_edge + h * double(e);
  WeightedSpace space(grid, std::move(weight), std::move(pos), 2);
  std::vector<int> tau(n + m, 1);
  for (std::size_t e = 0; e < m; ++e) tau[n + e] = -1;

  // Node and edge weights coincide, so the weighted adjoint is the transpose.
  SparseMatrix qm1 = s1.q_plus.transpose();
  SparseMatrix qm2 = s2.q_plus.transpose();
  auto d1 = detail::assemble_dirac(space, s1.q_plus, qm1, tau, "D[" + w.label + "]");
  auto d2 = detail::assemble_dirac(space, s2.q_plus, qm2, tau, "D[" + w2.label + "]");
  return GradedPair{std::move(d1), std::move(d2), std::move(s1.q_plus), std::move(qm1),
                    std::move(s2.q_plus), std::move(qm2), n, m};
}

/// Hodge Laplacians (Δ₀ on functions, Δ₁ on 1-forms) of the periodic cochain complex for a
/// circle metric. Node volumes are √g·Δx, edge lengths ℓ_e the trapezoid of √g.
inline std::pair<SelfAdjointOperator, SelfAdjointOperator> build_derham_circle(const MetricData& metric) {
  const Grid1D& grid = metric.grid;
  if (!grid.periodic()) throw DomainError("de Rham complex needs a circle grid");
  const std::size_t n = grid.size();
  const double dx = grid.spacing();
  std::vector<double> m0(n), m1(n), len(n), mid(n);
  for (std::size_t j = 0; j < n; ++j) {
    m0[j] = metric.volume_weight(j);
    len[j] = dx * 0.5 * (std::sqrt(metric.density[j]) + std::sqrt(metric.density[(j + 1) % n]));
    m1[j] = 1.0 / len[j];
    mid[j] = grid.node(j) + 0.5 * dx;
  }
  // d: (df)_e = f_{e+1} − f_e.
  std::vector<Eigen::Triplet<double>> t0, t1;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jp = (j + 1) % n, jm = (j + n - 1) % n;
    // Δ₀ f_j = (1/m0_j)[m1_j (f_j − f_{j+1}) + m1_{j−1}(f_j − f_{j−1})]
    t0.emplace_back(int(j), int(j), (m1[j] + m1[jm]) / m0[j]);
    t0.emplace_back(int(j), int(jp), -m1[j] / m0[j]);
    t0.emplace_back(int(j), int(jm), -m1[jm] / m0[j]);
    // Δ₁ ω_e = (1/m0_{e+1})m1_{e}ω_e − (1/m0_{e+1}) m1_{e+1}ω_{e+1} − (1/m0_e)(m1_{e−1}ω_{e−1} − m1_e ω_e)
    t1.emplace_back(int(j), int(j), m1[j] * (1.0 / m0[jp] + 1.0 / m0[j]));
    t1.emplace_back(int(j), int(jp), -m1[jp] / m0[jp]);
    t1.emplace_back(int(j), int(jm), -m1[jm] / m0[j]);
  }
  SparseMatrix l0(static_cast<int>(n), static_cast<int>(n)), l1(static_cast<int>(n), static_cast<int>(n));
  l0.setFromTriplets(t0.begin(), t0.end());
  l1.setFromTriplets(t1.begin(), t1.end());
  SelfAdjointOperator d0(WeightedSpace(grid, m0, grid.nodes()), std::move(l0), "Delta0");
  SelfAdjointOperator d1(WeightedSpace(grid, m1, mid), std::move(l1), "Delta1");
  return {std::move(d0), std::move(d1)};
}

/// −i d/dθ + a(θ) on the circle, in the real form [[a+N, ∂],[−∂, a+N]] acting on (Re ψ, Im ψ).
/// ∂ is Fourier (trigonometric-interpolation) differentiation; for even n the Nyquist mode is
/// assigned wavenumber −n/2 by N. Eigenvalues come in pairs (multiplicity 2).
inline SelfAdjointOperator build_eta_model(const Grid1D& grid, const ScalarField& a, std::string label = {}) {
  if (!grid.periodic()) throw DomainError("eta model needs a circle grid");
  if (a.size() != grid.size()) throw ShapeError("connection length differs from grid size");
  const auto n = Eigen::Index(grid.size());
  const double L = grid.length();
  const double scale = 2.0 * std::numbers::pi / L;
  const double hh = std::numbers::pi / double(n);  // half the angular step
  Eigen::MatrixXd dmat = Eigen::MatrixXd::Zero(n, n), nyq = Eigen::MatrixXd::Zero(n, n);
  const bool even = n % 2 == 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index l = 0; l < n; ++l) {
      const Eigen::Index k = j - l;
      const double sign = ((k % 2) + 2) % 2 == 0 ? 1.0 : -1.0;
      if (k != 0)
        dmat(j, l) = even ? 0.5 * scale * sign / std::tan(double(k) * hh) : 0.5 * scale * sign / std::sin(double(k) * hh);
      if (even) nyq(j, l) = -0.5 * scale * sign;
    }
  }
  Eigen::MatrixXd m(2 * n, 2 * n);
  Eigen::MatrixXd diag = nyq;
  for (Eigen::Index j = 0; j < n; ++j) diag(j, j) += a[std::size_t(j)];
  m.topLeftCorner(n, n) = diag;
  m.bottomRightCorner(n, n) = diag;
  m.topRightCorner(n, n) = dmat;
  m.bottomLeftCorner(n, n) = -dmat;
  std::vector<double> w(std::size_t(2 * n), grid.spacing()), pos(std::size_t(2 * n));
  for (Eigen::Index j = 0; j < n; ++j) pos[std::size_t(j)] = pos[std::size_t(j + n)] = grid.node(std::size_t(j));
  return SelfAdjointOperator(WeightedSpace(grid, std::move(w), std::move(pos), 2), std::move(m), std::move(label),
                             std::nullopt, false, 2);
}

/// Moves an operator onto a space with another weight. The optional fibre map f (diagonal,
/// positive) first compares fibre metrics: M₁ = diag(f)·M is self-adjoint for G/f. The result
/// is then conjugated unitarily by ρ^{1/2}, ρ = G_target / (G/f).
inline SelfAdjointOperator transport_operator(const SelfAdjointOperator& op, const WeightedSpace& target,
                                              const std::optional<std::vector<double>>& fibre = std::nullopt) {
  const std::size_t n = op.dimension();
  if (target.dimension() != n || target.blocks != op.space().blocks)
    throw ShapeError("transport target has a different dimension or block count");
  Eigen::VectorXd f = Eigen::VectorXd::Ones(Eigen::Index(n));
  if (fibre) {
    if (fibre->size() != n) throw ShapeError("fibre map length differs from dimension");
    for (std::size_t i = 0; i < n; ++i) {
      if (!((*fibre)[i] > 0.0)) throw DomainError("fibre map must be positive");
      f[Eigen::Index(i)] = (*fibre)[i];
    }
  }
  Eigen::VectorXd left(static_cast<Eigen::Index>(n)), right(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const double g1 = op.space().weight[i] / f[Eigen::Index(i)];
    const double rho = target.weight[i] / g1;
    left[Eigen::Index(i)] = f[Eigen::Index(i)] / std::sqrt(rho);
    right[Eigen::Index(i)] = std::sqrt(rho);
  }
  return op.conjugated(target, left, right, op.label());
}

/// Puts two operators that agree outside their cores on the common ambient space
/// K ⊕ K′ ⊕ exterior ⊕ padding.
inline PaddedPair build_padded_pair(const SelfAdjointOperator& a, const SelfAdjointOperator& b, IndexRange core_a,
                                    IndexRange core_b, std::size_t padding = 0, double tolerance = 1e-12) {
  if (core_a.end > a.dimension() || core_b.end > b.dimension() || core_a.begin > core_a.end ||
      core_b.begin > core_b.end)
    throw ShapeError("core range outside operator dimension");
  std::vector<std::size_t> ext_a, ext_b;
  for (std::size_t i = 0; i < a.dimension(); ++i)
    if (!core_a.contains(i)) ext_a.push_back(i);
  for (std::size_t i = 0; i < b.dimension(); ++i)
    if (!core_b.contains(i)) ext_b.push_back(i);
  if (ext_a.size() != ext_b.size()) throw ComponentViolation("exteriors of the padded pair differ in size");
  if (a.graded() != b.graded()) throw GradingError("padded pair mixes graded and ungraded operators");

  const std::size_t ka = core_a.size(), kb = core_b.size(), ne = ext_a.size();
  const std::size_t total = ka + kb + ne + padding;
  std::vector<long> slot_a(a.dimension(), -1), slot_b(b.dimension(), -1);
  for (std::size_t i = 0; i < ka; ++i) slot_a[core_a.begin + i] = long(i);
  for (std::size_t i = 0; i < kb; ++i) slot_b[core_b.begin + i] = long(ka + i);
  for (std::size_t i = 0; i < ne; ++i) {
    slot_a[ext_a[i]] = long(ka + kb + i);
    slot_b[ext_b[i]] = long(ka + kb + i);
  }

  std::vector<double> weight(total, 1.0), pos(total, 0.0);
  std::vector<int> tau(total, 1);
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    weight[slot_a[i]] = a.space().weight[i];
    pos[slot_a[i]] = a.space().position[i];
    if (a.graded()) tau[slot_a[i]] = (*a.grading())[i];
  }
  for (std::size_t i = 0; i < b.dimension(); ++i) {
    const auto s = std::size_t(slot_b[i]);
    if (s >= ka + kb) {
      const double wa = weight[s];
      if (std::abs(wa - b.space().weight[i]) > tolerance * std::max(1.0, std::abs(wa)))
        throw ComponentViolation("padded pair weights disagree outside the cores");
      if (b.graded() && tau[s] != (*b.grading())[i]) throw GradingError("padded pair gradings disagree");
      continue;
    }
    weight[s] = b.space().weight[i];
    pos[s] = b.space().position[i];
    if (b.graded()) tau[s] = (*b.grading())[i];
  }

  const SparseMatrix sa = a.sparse(), sb = b.sparse();
  const double scale = std::max({1.0, a.max_abs_entry(), b.max_abs_entry()});
  auto is_ext_a = [&](long i) { return !core_a.contains(std::size_t(i)); };
  auto is_ext_b = [&](long i) { return !core_b.contains(std::size_t(i)); };
  // Exterior–exterior blocks must coincide entry by entry.
  std::vector<long> inv_b(total, -1);
  for (std::size_t i = 0; i < b.dimension(); ++i) inv_b[slot_b[i]] = long(i);
  std::vector<long> inv_a(total, -1);
  for (std::size_t i = 0; i < a.dimension(); ++i) inv_a[slot_a[i]] = long(i);
  auto check = [&](const SparseMatrix& s, auto is_ext, const std::vector<long>& slot, const SparseMatrix& other,
                   const std::vector<long>& inv_other) {
    for (int i = 0; i < s.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(s, i); it; ++it) {
        if (!is_ext(it.row()) || !is_ext(it.col())) continue;
        const long r = inv_other[slot[it.row()]], c = inv_other[slot[it.col()]];
        if (std::abs(it.value() - other.coeff(r, c)) > tolerance * scale)
          throw ComponentViolation("padded pair operators disagree outside the cores");
      }
  };
  check(sa, is_ext_a, slot_a, sb, inv_b);
  check(sb, is_ext_b, slot_b, sa, inv_a);

  auto embed = [&](const SparseMatrix& s, const std::vector<long>& slot) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(std::size_t(s.nonZeros()));
    for (int i = 0; i < s.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(s, i); it; ++it)
        trip.emplace_back(int(slot[it.row()]), int(slot[it.col()]), it.value());
    SparseMatrix m(static_cast<int>(total), static_cast<int>(total));
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  };

  WeightedSpace ambient(a.space().grid, weight, pos, a.space().blocks);
  std::optional<std::vector<int>> grading;
  if (a.graded()) grading = tau;
  SelfAdjointOperator pa(ambient, embed(sa, slot_a), a.label(), grading, a.odd());
  SelfAdjointOperator pb(ambient, embed(sb, slot_b), b.label(), grading, b.odd());
  std::vector<int> p(total, 0), p2(total, 0);
  for (std::size_t i = 0; i < ka; ++i) p[i] = 1;
  for (std::size_t i = 0; i < kb; ++i) p2[ka + i] = 1;
  for (std::size_t i = 0; i < ne; ++i) p[ka + kb + i] = p2[ka + kb + i] = 1;
  return PaddedPair{std::move(ambient), std::move(pa), std::move(pb), std::move(p), std::move(p2), ka, kb, ne,
                    padding};
}

}  // namespace relspec
