#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relspec/builders.hpp"
#include "relspec/errors.hpp"
#include "relspec/operator.hpp"
#include "relspec/quadrature.hpp"
#include "relspec/spectrum.hpp"

namespace relspec {

struct HeatTraceSamples {
  std::vector<double> t;
  std::vector<double> values;
  std::optional<std::vector<double>> supertrace;
  std::string label_a;
  std::string label_b;
  bool graded = false;

  void validate() const {
    if (t.size() != values.size()) throw ShapeError("heat trace samples: t and values differ in length");
    if (supertrace && supertrace->size() != t.size()) throw ShapeError("heat trace samples: supertrace length");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(t[i] > 0.0)) throw DomainError("heat trace samples need positive t");
      if (i > 0 && !(t[i] > t[i - 1])) throw DomainError("heat trace t-grid must be strictly increasing");
      if (!std::isfinite(values[i])) throw NumericalError("heat trace value is not finite");
    }
  }
};

/// `points` log-spaced values on [tmin, tmax].
inline std::vector<double> log_grid(double tmin, double tmax, std::size_t points) {
  if (!(tmin > 0.0) || !(tmax > tmin)) throw DomainError("log grid needs 0 < tmin < tmax");
  if (points < 2) throw DomainError("log grid needs at least two points");
  std::vector<double> t(points);
  const double la = std::log(tmin), lb = std::log(tmax);
  for (std::size_t i = 0; i < points; ++i) t[i] = std::exp(la + (lb - la) * double(i) / double(points - 1));
  t.front() = tmin;
  t.back() = tmax;
  return t;
}

inline std::vector<double> default_t_grid() { return log_grid(1e-3, 20.0, 64); }

/// tr(e^{−tA} − e^{−tB}) on the grid.
template <class SA, class SB>
HeatTraceSamples relative_heat_trace(const SA& a, const SB& b, const std::vector<double>& tgrid,
                                     std::string label_a = "A", std::string label_b = "B") {
  HeatTraceSamples out;
  out.t = tgrid;
  out.values.reserve(tgrid.size());
  for (double t : tgrid) out.values.push_back(heat_sum(a, t) - heat_sum(b, t));
  out.label_a = std::move(label_a);
  out.label_b = std::move(label_b);
  out.validate();
  return out;
}

/// Dense exponential of a self-adjoint operator through its weighted eigenvectors:
/// e^{−tM} = V diag(e^{−tλ}) Vᵀ G.
inline Eigen::MatrixXd heat_kernel_matrix(const SelfAdjointOperator& op, const Spectrum& spec, double t) {
  require_positive_time(t);
  if (!spec.eigenvectors) throw PreconditionError("heat kernel matrix needs eigenvectors");
  if (op.multiplicity() != 1) throw PreconditionError("heat kernel matrix needs a real (multiplicity 1) operator");
  const Eigen::MatrixXd& v = *spec.eigenvectors;
  if (v.rows() != Eigen::Index(op.dimension()) || v.cols() != v.rows())
    throw ShapeError("eigenvectors do not match the operator");
  Eigen::VectorXd e(v.cols());
  for (Eigen::Index k = 0; k < v.cols(); ++k) e[k] = std::exp(-t * spec.eigenvalues[std::size_t(k)]);
  return v * e.asDiagonal() * v.transpose() * op.weights().asDiagonal();
}

inline Eigen::MatrixXd heat_kernel_matrix(const SelfAdjointOperator& op, double t) {
  return heat_kernel_matrix(op, eigensolve(op, {.vectors = true}), t);
}

/// Schwartz kernel W(t, x_i, x_j) = (e^{−tM})_{ij} / G_j of the heat operator.
inline Eigen::MatrixXd heat_kernel_density(const SelfAdjointOperator& op, const Spectrum& spec, double t) {
  return heat_kernel_matrix(op, spec, t) * op.weights().cwiseInverse().asDiagonal();
}

// ---------------------------------------------------------------------------
// Duhamel

struct DuhamelReport {
  double t = 0.0;
  double residual = 0.0;
  std::size_t quadrature_nodes = 0;
};

namespace detail {

struct Semigroup {
  Eigen::MatrixXd v;   // weighted-orthonormal eigenvectors
  Eigen::MatrixXd vg;  // Vᵀ G
  Eigen::VectorXd lambda;

  explicit Semigroup(const SelfAdjointOperator& op) {
    auto s = eigensolve(op, {.vectors = true});
    v = *s.eigenvectors;
    vg = v.transpose() * op.weights().asDiagonal();
    lambda = Eigen::Map<const Eigen::VectorXd>(s.eigenvalues.data(), Eigen::Index(s.eigenvalues.size()));
  }
  Eigen::MatrixXd at(double s) const {
    return v * (-s * lambda.array()).exp().matrix().asDiagonal() * vg;
  }
};

// −∫₀ᵗ e^{−sA} X e^{−(t−s)B} ds with Gauss–Legendre on [0, t/2] applied to F(s) + F(t−s).
inline Eigen::MatrixXd duhamel_integral(const Semigroup& a, const Semigroup& b, const Eigen::MatrixXd& x, double t,
                                        std::size_t nodes) {
  const auto rule = gauss_legendre(nodes);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  const double half = 0.25 * t;
  for (std::size_t k = 0; k < nodes; ++k) {
    const double s = half + half * rule.nodes[k];
    acc += rule.weights[k] * (a.at(s) * x * b.at(t - s) + a.at(t - s) * x * b.at(s));
  }
  return -half * acc;
}

inline void require_same_dimension(const SelfAdjointOperator& a, const SelfAdjointOperator& b) {
  if (a.dimension() != b.dimension()) throw ShapeError("operators act on spaces of different dimension");
}

}  // namespace detail

/// max-norm of (e^{−tA} − e^{−tB}) + ∫₀ᵗ e^{−sA}(A − B)e^{−(t−s)B} ds (quadrature).
inline DuhamelReport duhamel_residual(const SelfAdjointOperator& a, const SelfAdjointOperator& b, double t,
                                      std::size_t nodes) {
  require_positive_time(t);
  detail::require_same_dimension(a, b);
  if (!(a.space() == b.space())) throw ShapeError("Duhamel residual needs both operators on one space");
  if (nodes < 8) throw DomainError("Duhamel quadrature needs at least 8 nodes");
  const detail::Semigroup sa(a), sb(b);
  const Eigen::MatrixXd lhs = sa.at(t) - sb.at(t);
  const Eigen::MatrixXd rhs = detail::duhamel_integral(sa, sb, a.dense() - b.dense(), t, nodes);
  return {t, (lhs - rhs).cwiseAbs().maxCoeff(), nodes};
}

/// Variant for operators on spaces with different weights G_A, G_B and α = G_A/G_B:
/// e^{−tA} − e^{−tB}α = −e^{−tA}(α − 1) − ∫₀ᵗ e^{−sA}(A − B)e^{−(t−s)B}α ds.
inline DuhamelReport weighted_duhamel_residual(const SelfAdjointOperator& a, const SelfAdjointOperator& b, double t,
                                               std::size_t nodes) {
  require_positive_time(t);
  detail::require_same_dimension(a, b);
  if (nodes < 8) throw DomainError("Duhamel quadrature needs at least 8 nodes");
  const Eigen::VectorXd alpha = a.weights().cwiseQuotient(b.weights());
  const detail::Semigroup sa(a), sb(b);
  const Eigen::MatrixXd ea = sa.at(t);
  const Eigen::MatrixXd lhs = ea - sb.at(t) * alpha.asDiagonal();
  const Eigen::VectorXd am1 = alpha.array() - 1.0;
  const Eigen::MatrixXd rhs = -ea * am1.asDiagonal() +
                              detail::duhamel_integral(sa, sb, a.dense() - b.dense(), t, nodes) * alpha.asDiagonal();
  return {t, (lhs - rhs).cwiseAbs().maxCoeff(), nodes};
}

// ---------------------------------------------------------------------------
// Decay diagnostics

struct DecayReport {
  double t = 0.0;
  double r = 0.0;
  double slope_ratio = 1.0;  ///< fitted d log|W| / d(−dist²/4t)
  double delta = 0.0;        ///< Gaussian widening: |W| ≲ C t^{−1/2} e^{−dist²/((4+δ)t)}
  double c_offdiag = 0.0;
  double c_diag = 0.0;       ///< max |W(t,x,x)|·√t
  std::size_t pairs = 0;
  bool certified = true;
};

inline DecayReport decay_diagnostics(const SelfAdjointOperator& op, double t, double r) {
  require_positive_time(t);
  if (!(r > 0.0)) throw DomainError("decay radius must be positive");
  const auto spec = eigensolve(op, {.vectors = true});
  const Eigen::MatrixXd w = heat_kernel_density(op, spec, t);
  const auto n = Eigen::Index(op.dimension());
  const Eigen::Index stride = std::max<Eigen::Index>(1, n / 400);
  DecayReport rep;
  rep.t = t;
  rep.r = r;
  const double sq = std::sqrt(t);
  for (Eigen::Index i = 0; i < n; ++i) rep.c_diag = std::max(rep.c_diag, std::abs(w(i, i)) * sq);

  // Entries from the eigendecomposition carry absolute roundoff near ε·max|W|.
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * w.cwiseAbs().maxCoeff();
  std::vector<double> xs, ys;
  std::vector<std::pair<double, double>> samples;  // (dist², |W|)
  for (Eigen::Index i = 0; i < n; i += stride)
    for (Eigen::Index j = 0; j < n; j += stride) {
      if (i == j) continue;
      const double d = op.space().distance(std::size_t(i), std::size_t(j));
      if (d < r) continue;
      const double k = std::abs(w(i, j));
      if (!(k > floor)) continue;
      samples.emplace_back(d * d, k);
      xs.push_back(-d * d / (4.0 * t));
      ys.push_back(std::log(k));
    }
  rep.pairs = samples.size();
  if (samples.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / double(ys.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
      sxy += (xs[k] - mx) * (ys[k] - my);
      sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    rep.slope_ratio = sxx > 0.0 ? sxy / sxx : 1.0;
    rep.delta = rep.slope_ratio > 0.0 ? std::max(0.0, 4.0 / rep.slope_ratio - 4.0)
                                      : std::numeric_limits<double>::infinity();
  }
  if (std::isfinite(rep.delta)) {
    for (const auto& [d2, k] : samples)
      rep.c_offdiag = std::max(rep.c_offdiag, k * sq * std::exp(d2 / ((4.0 + rep.delta) * t)));
  }
  rep.certified = std::isfinite(rep.delta) && rep.delta <= 1.0 && std::isfinite(rep.c_offdiag);
  return rep;
}

// ---------------------------------------------------------------------------
// Trace norms

enum class TraceNormKind { heat, odd };

/// Trace norms ‖e^{−tH_A} − e^{−tH_B}‖₁ (H = D² for odd operators) or, for `odd`,
/// ‖D_A e^{−tD_A²} − D_B e^{−tD_B²}‖₁, at each t. Both operators must share the weight.
inline std::vector<double> trace_norm_curve(const SelfAdjointOperator& a, const SelfAdjointOperator& b,
                                            const std::vector<double>& ts, TraceNormKind kind = TraceNormKind::heat) {
  detail::require_same_dimension(a, b);
  if (a.space().weight != b.space().weight) throw ShapeError("trace norm curve needs a common weight");
  for (double t : ts)
    if (!(t > 0.0)) throw DomainError("trace norm interval must stay away from t = 0");
  if (kind == TraceNormKind::odd && (!a.odd() || !b.odd())) throw GradingError("odd trace norm needs odd operators");
  auto decompose = [&](const SelfAdjointOperator& op) {
    Eigen::MatrixXd s = op.symmetrized();
    if (kind == TraceNormKind::heat && op.odd()) s = s * s;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (s + s.transpose()));
    return std::make_pair(Eigen::MatrixXd(es.eigenvectors()), Eigen::VectorXd(es.eigenvalues()));
  };
  const auto [ua, la] = decompose(a);
  const auto [ub, lb] = decompose(b);
  auto f = [&](const Eigen::VectorXd& l, double t) -> Eigen::VectorXd {
    if (kind == TraceNormKind::heat) return (-t * l.array()).exp();
    return l.array() * (-t * l.array().square()).exp();
  };
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) {
    const Eigen::MatrixXd x = ua * f(la, t).asDiagonal() * ua.transpose() - ub * f(lb, t).asDiagonal() * ub.transpose();
    // x is symmetric, so its singular values are the moduli of its eigenvalues.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x, Eigen::EigenvaluesOnly);
    out.push_back(es.eigenvalues().cwiseAbs().sum());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Padded pairs

/// Evaluates tr(e^{−tA}P) − tr(e^{−tB}P′) (and the graded version) on a padded pair.
/// Each operator is split into connected components of its coupling graph restricted to the
/// range of its projection, so blocks outside the projections never enter the sums.
class ProjectedTrace {
 public:
  explicit ProjectedTrace(const PaddedPair& pair) : graded_(pair.op_a.graded()) {
    side_a_ = decompose(pair.op_a, pair.proj_p);
    side_b_ = decompose(pair.op_b, pair.proj_p2);
  }

  double trace(double t) const { return side_sum(side_a_, t, false) - side_sum(side_b_, t, false); }
  double supertrace(double t) const {
    if (!graded_) throw GradingError("supertrace needs a graded padded pair");
    return side_sum(side_a_, t, true) - side_sum(side_b_, t, true);
  }
  bool graded() const { return graded_; }

 private:
  struct Block {
    Eigen::VectorXd lambda;
    Eigen::VectorXd parity;  // Σ_i τ_i u_ik²
  };

  static std::vector<Block> decompose(const SelfAdjointOperator& op0, const std::vector<int>& proj) {
    const SelfAdjointOperator op = op0.odd() ? op0.squared() : op0;
    const std::size_t n = op.dimension();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    const SparseMatrix s = op.sparse();
    for (Eigen::Index i = 0; i < s.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(s, i); it; ++it) {
        if (it.value() == 0.0) continue;
        const auto r = std::size_t(it.row()), c = std::size_t(it.col());
        if (!proj[r] || !proj[c]) {
          if (proj[r] != proj[c]) throw DomainError("operator couples the range of its projection to its kernel");
          continue;
        }
        const auto pr = find(r), pc = find(c);
        if (pr != pc) parent[std::max(pr, pc)] = std::min(pr, pc);
      }
    std::vector<std::vector<Eigen::Index>> comps;
    std::vector<long> comp_of(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (!proj[i]) continue;
      const auto root = find(i);
      if (comp_of[root] < 0) {
        comp_of[root] = long(comps.size());
        comps.emplace_back();
      }
      comps[std::size_t(comp_of[root])].push_back(Eigen::Index(i));
    }
    const Eigen::VectorXd sw = op.weights().cwiseSqrt();
    std::vector<Block> blocks;
    for (const auto& idx : comps) {
      const auto m = Eigen::Index(idx.size());
      Eigen::MatrixXd sub(m, m);
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < m; ++c)
          sub(r, c) = sw[idx[std::size_t(r)]] * s.coeff(idx[std::size_t(r)], idx[std::size_t(c)]) / sw[idx[std::size_t(c)]];
      sub = 0.5 * (sub + sub.transpose()).eval();
      Block b;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub);
      b.lambda = es.eigenvalues();
      b.parity = Eigen::VectorXd::Ones(m);
      if (op.graded()) {
        Eigen::VectorXd tau(m);
        for (Eigen::Index r = 0; r < m; ++r) tau[r] = (*op.grading())[std::size_t(idx[std::size_t(r)])];
        b.parity = es.eigenvectors().array().square().matrix().transpose() * tau;
      }
      blocks.push_back(std::move(b));
    }
    return blocks;
  }

  static double side_sum(const std::vector<Block>& blocks, double t, bool graded) {
    require_positive_time(t);
    CompensatedSum acc;
    for (const auto& b : blocks)
      for (Eigen::Index k = 0; k < b.lambda.size(); ++k) {
        const double e = std::exp(-t * b.lambda[k]);
        acc.add(graded ? e * b.parity[k] : e);
      }
    return acc.value();
  }

  bool graded_;
  std::vector<Block> side_a_;
  std::vector<Block> side_b_;
};

inline HeatTraceSamples projected_relative_trace(const PaddedPair& pair, const std::vector<double>& tgrid) {
  ProjectedTrace pt(pair);
  HeatTraceSamples out;
  out.t = tgrid;
  out.label_a = pair.op_a.label();
  out.label_b = pair.op_b.label();
  out.graded = pt.graded();
  for (double t : tgrid) out.values.push_back(pt.trace(t));
  if (pt.graded()) {
    out.supertrace.emplace();
    for (double t : tgrid) out.supertrace->push_back(pt.supertrace(t));
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Truncation certificate for line models

struct TruncationReport {
  double radius = 0.0;
  double spacing = 0.0;
  double max_change = 0.0;  ///< max_t |T_R(t) − T_{2R}(t)|
  bool certified = false;
};

/// Relative heat trace of the Schrödinger pair (V, V′) on [−R, R] against [−2R, 2R] at the
/// same spacing.
inline TruncationReport certify_truncation(const std::function<double(double)>& v,
                                           const std::function<double(double)>& v2, double radius,
                                           std::size_t n, const std::vector<double>& tgrid, double tolerance = 1e-8) {
  auto trace_at = [&](double R, std::size_t nodes) {
    const auto grid = Grid1D::line_truncated(R, nodes);
    const auto a = eigensolve(build_schrodinger(grid, ScalarField::sample(grid, v)));
    const auto b = eigensolve(build_schrodinger(grid, ScalarField::sample(grid, v2)));
    return relative_heat_trace(a, b, tgrid).values;
  };
  const auto small = trace_at(radius, n);
  const auto large = trace_at(2.0 * radius, 2 * n - 1);
  TruncationReport rep;
  rep.radius = radius;
  rep.spacing = 2.0 * radius / double(n - 1);
  for (std::size_t i = 0; i < small.size(); ++i) rep.max_change = std::max(rep.max_change, std::abs(small[i] - large[i]));
  rep.certified = rep.max_change < tolerance;
  return rep;
}

}  // namespace relspec
