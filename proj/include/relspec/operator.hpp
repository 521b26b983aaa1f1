#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "relspec/errors.hpp"
#include "relspec/grid.hpp"

namespace relspec {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

enum class Storage { tridiagonal, dense, block };

inline const char* to_string(Storage s) {
  switch (s) {
    case Storage::tridiagonal: return "tridiagonal";
    case Storage::dense: return "dense";
    case Storage::block: return "block";
  }
  return "?";
}

/// Finite-dimensional L² space: one positive weight (discrete dvol times fibre metric) and
/// one coordinate per degree of freedom. `blocks` counts internal components per node.
struct WeightedSpace {
  Grid1D grid;
  std::vector<double> weight;
  std::vector<double> position;
  std::size_t blocks = 1;

  WeightedSpace(Grid1D g, std::vector<double> w, std::vector<double> pos, std::size_t nblocks = 1)
      : grid(std::move(g)), weight(std::move(w)), position(std::move(pos)), blocks(nblocks) {
    if (position.size() != weight.size()) throw ShapeError("space positions and weights differ in length");
    if (blocks == 0) throw DomainError("space needs at least one block");
    for (double x : weight)
      if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("space weights must be finite and positive");
  }

  /// All grid nodes, weight = quadrature cell.
  static WeightedSpace on_nodes(const Grid1D& g) {
    std::vector<double> w(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) w[i] = g.cell(i);
    return WeightedSpace(g, std::move(w), g.nodes());
  }

  std::size_t dimension() const { return weight.size(); }

  double distance(std::size_t i, std::size_t j) const {
    double d = std::abs(position[i] - position[j]);
    if (grid.periodic()) d = std::min(d, grid.length() - d);
    return d;
  }

  bool operator==(const WeightedSpace& o) const {
    return grid == o.grid && weight == o.weight && position == o.position && blocks == o.blocks;
  }
};

/// A matrix self-adjoint with respect to the diagonal weight G of its space (G·M symmetric),
/// optionally carrying a grading τ = ±1 per degree of freedom. `odd` operators anticommute
/// with τ. `multiplicity` = 2 marks the real form of a complex operator: its eigenvalues
/// come in pairs and each pair counts once.
class SelfAdjointOperator {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  SelfAdjointOperator(WeightedSpace space, SparseMatrix m, std::string label = {},
                      std::optional<std::vector<int>> grading = std::nullopt, bool odd = false,
                      int multiplicity = 1)
      : space_(std::move(space)),
        matrix_(std::move(m)),
        grading_(std::move(grading)),
        odd_(odd),
        multiplicity_(multiplicity),
        label_(std::move(label)) {
    std::get<SparseMatrix>(matrix_).makeCompressed();
    validate();
  }

  SelfAdjointOperator(WeightedSpace space, Eigen::MatrixXd m, std::string label = {},
                      std::optional<std::vector<int>> grading = std::nullopt, bool odd = false,
                      int multiplicity = 1)
      : space_(std::move(space)),
        matrix_(std::move(m)),
        grading_(std::move(grading)),
        odd_(odd),
        multiplicity_(multiplicity),
        label_(std::move(label)) {
    validate();
  }

  const WeightedSpace& space() const { return space_; }
  std::size_t dimension() const { return space_.dimension(); }
  const std::string& label() const { return label_; }
  const std::optional<std::vector<int>>& grading() const { return grading_; }
  bool graded() const { return grading_.has_value(); }
  bool odd() const { return odd_; }
  int multiplicity() const { return multiplicity_; }
  bool is_dense() const { return std::holds_alternative<Eigen::MatrixXd>(matrix_); }

  Storage storage() const {
    if (is_dense()) return Storage::dense;
    return bandwidth() <= 1 ? Storage::tridiagonal : Storage::block;
  }

  /// Largest |i − j| over nonzero entries.
  std::size_t bandwidth() const {
    std::size_t bw = 0;
    if (is_dense()) {
      const auto& m = std::get<Eigen::MatrixXd>(matrix_);
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j)
          if (m(i, j) != 0.0) bw = std::max<std::size_t>(bw, std::size_t(std::abs(i - j)));
      return bw;
    }
    const auto& s = std::get<SparseMatrix>(matrix_);
    for (Eigen::Index i = 0; i < s.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(s, i); it; ++it)
        if (it.value() != 0.0) bw = std::max<std::size_t>(bw, std::size_t(std::abs(it.row() - it.col())));
    return bw;
  }

  Eigen::MatrixXd dense() const {
    if (is_dense()) return std::get<Eigen::MatrixXd>(matrix_);
    return Eigen::MatrixXd(std::get<SparseMatrix>(matrix_));
  }

  SparseMatrix sparse() const {
    if (!is_dense()) return std::get<SparseMatrix>(matrix_);
    return std::get<Eigen::MatrixXd>(matrix_).sparseView();
  }

  double coeff(Eigen::Index i, Eigen::Index j) const {
    if (is_dense()) return std::get<Eigen::MatrixXd>(matrix_)(i, j);
    return std::get<SparseMatrix>(matrix_).coeff(i, j);
  }

  Eigen::VectorXd weights() const {
    return Eigen::Map<const Eigen::VectorXd>(space_.weight.data(), Eigen::Index(space_.weight.size()));
  }

  /// G^{1/2} M G^{-1/2}, the symmetric matrix representing the operator in an orthonormal basis.
  Eigen::MatrixXd symmetrized() const {
    const Eigen::VectorXd s = weights().cwiseSqrt();
    Eigen::MatrixXd m = s.asDiagonal() * dense() * s.cwiseInverse().asDiagonal();
    return 0.5 * (m + m.transpose());
  }

  /// max |G·M − (G·M)ᵀ|.
  double self_adjointness_residual() const {
    double r = 0.0;
    const auto& w = space_.weight;
    if (is_dense()) {
      const auto& m = std::get<Eigen::MatrixXd>(matrix_);
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j)
          r = std::max(r, std::abs(w[i] * m(i, j) - w[j] * m(j, i)));
      return r;
    }
    const auto& s = std::get<SparseMatrix>(matrix_);
    for (Eigen::Index i = 0; i < s.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(s, i); it; ++it)
        r = std::max(r, std::abs(w[it.row()] * it.value() - w[it.col()] * s.coeff(it.col(), it.row())));
    return r;
  }

  /// max |τM + Mτ| (odd operators) or max |τM − Mτ| (even operators); 0 when ungraded.
  double grading_residual() const {
    if (!grading_) return 0.0;
    const auto& tau = *grading_;
    const double sign = odd_ ? 1.0 : -1.0;
    double r = 0.0;
    auto visit = [&](Eigen::Index i, Eigen::Index j, double v) {
      r = std::max(r, std::abs((tau[i] + sign * tau[j]) * v));
    };
    if (is_dense()) {
      const auto& m = std::get<Eigen::MatrixXd>(matrix_);
      for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) visit(i, j, m(i, j));
    } else {
      const auto& s = std::get<SparseMatrix>(matrix_);
      for (Eigen::Index i = 0; i < s.outerSize(); ++i)
        for (SparseMatrix::InnerIterator it(s, i); it; ++it) visit(it.row(), it.col(), it.value());
    }
    return r;
  }

  double max_abs_entry() const {
    if (is_dense()) return std::get<Eigen::MatrixXd>(matrix_).cwiseAbs().maxCoeff();
    const auto& s = std::get<SparseMatrix>(matrix_);
    double m = 0.0;
    for (Eigen::Index k = 0; k < s.nonZeros(); ++k) m = std::max(m, std::abs(s.valuePtr()[k]));
    return m;
  }

  /// M² as an even operator on the same space (D ↦ D²).
  SelfAdjointOperator squared() const {
    const std::string name = label_.empty() ? std::string() : label_ + "^2";
    if (is_dense()) {
      const auto& m = std::get<Eigen::MatrixXd>(matrix_);
      return SelfAdjointOperator(space_, Eigen::MatrixXd(m * m), name, grading_, false, multiplicity_);
    }
    const auto& s = std::get<SparseMatrix>(matrix_);
    SparseMatrix sq = (s * s).pruned();
    return SelfAdjointOperator(space_, std::move(sq), name, grading_, false, multiplicity_);
  }

  SelfAdjointOperator scaled(double c) const {
    if (is_dense())
      return SelfAdjointOperator(space_, Eigen::MatrixXd(c * std::get<Eigen::MatrixXd>(matrix_)), label_,
                                 grading_, odd_, multiplicity_);
    return SelfAdjointOperator(space_, SparseMatrix(c * std::get<SparseMatrix>(matrix_)), label_, grading_,
                               odd_, multiplicity_);
  }

  /// Same matrix conjugated by diagonal factors: diag(left)·M·diag(right), on a new space.
  SelfAdjointOperator conjugated(WeightedSpace target, const Eigen::VectorXd& left,
                                 const Eigen::VectorXd& right, std::string name) const {
    if (is_dense()) {
      Eigen::MatrixXd m = left.asDiagonal() * std::get<Eigen::MatrixXd>(matrix_) * right.asDiagonal();
      return SelfAdjointOperator(std::move(target), std::move(m), std::move(name), grading_, odd_, multiplicity_);
    }
    SparseMatrix m = std::get<SparseMatrix>(matrix_);
    for (Eigen::Index i = 0; i < m.outerSize(); ++i)
      for (SparseMatrix::InnerIterator it(m, i); it; ++it) it.valueRef() *= left[it.row()] * right[it.col()];
    return SelfAdjointOperator(std::move(target), std::move(m), std::move(name), grading_, odd_, multiplicity_);
  }

 private:
  void validate() const {
    const auto n = Eigen::Index(space_.dimension());
    const Eigen::Index rows = is_dense() ? std::get<Eigen::MatrixXd>(matrix_).rows()
                                         : std::get<SparseMatrix>(matrix_).rows();
    const Eigen::Index cols = is_dense() ? std::get<Eigen::MatrixXd>(matrix_).cols()
                                         : std::get<SparseMatrix>(matrix_).cols();
    if (rows != n || cols != n) throw ShapeError("operator matrix does not match its space dimension");
    if (multiplicity_ != 1 && multiplicity_ != 2) throw DomainError("multiplicity must be 1 or 2");
    double scale = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) scale = std::max(scale, space_.weight[i]);
    scale *= std::max(1.0, max_abs_entry());
    if (!std::isfinite(scale)) throw DomainError("operator '" + label_ + "' has non-finite entries");
    if (self_adjointness_residual() > kSymmetryTolerance * scale)
      throw DomainError("operator '" + label_ + "' is not self-adjoint for its weight");
    if (grading_) {
      if (grading_->size() != space_.dimension()) throw ShapeError("grading length differs from dimension");
      for (int s : *grading_)
        if (s != 1 && s != -1) throw GradingError("grading entries must be +1 or -1");
      if (grading_residual() > kSymmetryTolerance * scale)
        throw GradingError("operator '" + label_ + "' is not compatible with its grading");
    } else if (odd_) {
      throw GradingError("odd operator needs a grading");
    }
  }

  WeightedSpace space_;
  std::variant<SparseMatrix, Eigen::MatrixXd> matrix_;
  std::optional<std::vector<int>> grading_;
  bool odd_ = false;
  int multiplicity_ = 1;
  std::string label_;
};

/// Two odd graded operators D = [[0, Q⁻],[Q⁺, 0]] on one space, with the supercharges kept.
struct GradedPair {
  SelfAdjointOperator d;
  SelfAdjointOperator d_prime;
  SparseMatrix q_plus, q_minus;
  SparseMatrix q_plus_prime, q_minus_prime;
  std::size_t n_plus = 0;
  std::size_t n_minus = 0;
};

/// Half-open index range of the core of an operator.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
  bool contains(std::size_t i) const { return i >= begin && i < end; }
};

/// Both operators of a compact topological perturbation on the ambient space
/// K ⊕ K′ ⊕ (exterior) ⊕ (padding), each extended by zero off its own natural part.
struct PaddedPair {
  WeightedSpace ambient;
  SelfAdjointOperator op_a;
  SelfAdjointOperator op_b;
  std::vector<int> proj_p;   ///< 1 on K ⊕ exterior
  std::vector<int> proj_p2;  ///< 1 on K′ ⊕ exterior
  std::size_t core_a = 0;
  std::size_t core_b = 0;
  std::size_t exterior = 0;
  std::size_t padding = 0;
};

}  // namespace relspec
