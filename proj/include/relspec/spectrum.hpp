#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relspec/errors.hpp"
#include "relspec/operator.hpp"
#include "relspec/tridiagonal.hpp"

namespace relspec {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      c_ += (sum_ - t) + x;
    else
      c_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + c_; }

 private:
  double sum_ = 0.0;
  double c_ = 0.0;
};

struct Spectrum {
  std::vector<double> eigenvalues;            ///< ascending
  std::optional<Eigen::MatrixXd> eigenvectors;  ///< weighted-orthonormal columns
  std::size_t kernel_dim = 0;
  double kernel_threshold = 0.0;
  double gap_mu = std::numeric_limits<double>::infinity();  ///< smallest |λ| above the threshold

  std::size_t size() const { return eigenvalues.size(); }
  double max_abs() const {
    double m = 0.0;
    for (double x : eigenvalues) m = std::max(m, std::abs(x));
    return m;
  }
};

inline double default_kernel_threshold(const std::vector<double>& values) {
  double m = 0.0;
  for (double x : values) m = std::max(m, std::abs(x));
  return double(values.size()) * m * std::ldexp(1.0, -40);
}

/// Counts the kernel and snaps its eigenvalues to exact zeros, so roundoff in a zero mode
/// cannot leak into large-t traces.
inline void refresh_kernel(Spectrum& s, double threshold) {
  s.kernel_threshold = threshold;
  s.kernel_dim = 0;
  s.gap_mu = std::numeric_limits<double>::infinity();
  for (double& x : s.eigenvalues) {
    if (std::abs(x) <= threshold) {
      ++s.kernel_dim;
      x = 0.0;
    } else {
      s.gap_mu = std::min(s.gap_mu, std::abs(x));
    }
  }
}

/// Sorts values and fills kernel dimension and gap.
inline Spectrum make_spectrum(std::vector<double> values, std::optional<double> threshold = std::nullopt) {
  for (double x : values)
    if (!std::isfinite(x)) throw NumericalError("spectrum contains a non-finite eigenvalue");
  std::sort(values.begin(), values.end());
  Spectrum s;
  s.eigenvalues = std::move(values);
  refresh_kernel(s, threshold ? *threshold : default_kernel_threshold(s.eigenvalues));
  return s;
}


struct EigensolveOptions {
  bool vectors = false;
  std::optional<double> kernel_threshold;
};

/// Full eigendecomposition. Tridiagonal storage goes through implicit QL on the symmetrized
/// bands, everything else through a dense symmetric reduction of G^{1/2} M G^{-1/2}.
/// Eigenvectors are returned orthonormal in the weighted inner product.
inline Spectrum eigensolve(const SelfAdjointOperator& op, const EigensolveOptions& opt = {}) {
  const auto n = Eigen::Index(op.dimension());
  const Eigen::VectorXd w = op.weights();
  std::vector<double> values;
  std::optional<Eigen::MatrixXd> vecs;
  if (n == 0) return make_spectrum({}, opt.kernel_threshold);
  if (!op.is_dense() && op.storage() == Storage::tridiagonal) {
    std::vector<double> d(static_cast<std::size_t>(n)), e(static_cast<std::size_t>(n - 1));
    for (Eigen::Index i = 0; i < n; ++i) d[std::size_t(i)] = op.coeff(i, i);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double up = op.coeff(i, i + 1), low = op.coeff(i + 1, i);
      const double prod = up * low;
      if (prod < 0.0) throw NumericalError("tridiagonal operator has off-diagonal entries of opposite sign");
      e[std::size_t(i)] = std::copysign(std::sqrt(prod), up);
    }
    auto res = tridiagonal_eigen(std::move(d), std::move(e), opt.vectors);
    values = std::move(res.values);
    if (res.vectors) vecs = std::move(*res.vectors);
  } else {
    const Eigen::MatrixXd s = op.symmetrized();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(
        s, opt.vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolver did not converge");
    values.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + n);
    if (opt.vectors) vecs = solver.eigenvectors();
  }
  if (vecs) *vecs = w.cwiseSqrt().cwiseInverse().asDiagonal() * (*vecs);
  if (op.multiplicity() == 2) {
    // Realified complex operator: keep one member of each eigenvalue pair.
    std::vector<double> half;
    half.reserve(values.size() / 2);
    for (std::size_t i = 0; i < values.size(); i += 2) half.push_back(values[i]);
    if (vecs) {
      Eigen::MatrixXd hv(n, Eigen::Index(half.size()));
      for (Eigen::Index i = 0; i < hv.cols(); ++i) hv.col(i) = vecs->col(2 * i);
      vecs = std::move(hv);
    }
    values = std::move(half);
  }
  Spectrum s = make_spectrum(std::move(values), opt.kernel_threshold);
  s.eigenvectors = std::move(vecs);
  return s;
}

/// Spectra of D² restricted to the even and odd parts of a graded operator.
struct GradedSpectra {
  Spectrum plus;
  Spectrum minus;
  std::vector<Eigen::Index> plus_index;
  std::vector<Eigen::Index> minus_index;
};

inline SelfAdjointOperator restrict_to(const SelfAdjointOperator& op, const std::vector<Eigen::Index>& idx,
                                       const std::string& name) {
  const auto m = Eigen::Index(idx.size());
  std::vector<double> w(idx.size()), pos(idx.size());
  std::vector<Eigen::Index> slot(op.dimension(), -1);
  for (Eigen::Index k = 0; k < m; ++k) {
    w[std::size_t(k)] = op.space().weight[std::size_t(idx[std::size_t(k)])];
    pos[std::size_t(k)] = op.space().position[std::size_t(idx[std::size_t(k)])];
    slot[std::size_t(idx[std::size_t(k)])] = k;
  }
  WeightedSpace sub(op.space().grid, std::move(w), std::move(pos), 1);
  const SparseMatrix s = op.sparse();
  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index i = 0; i < s.outerSize(); ++i)
    for (SparseMatrix::InnerIterator it(s, i); it; ++it) {
      const auto r = slot[std::size_t(it.row())], c = slot[std::size_t(it.col())];
      if (r >= 0 && c >= 0) trip.emplace_back(int(r), int(c), it.value());
    }
  SparseMatrix sm(static_cast<int>(m), static_cast<int>(m));
  sm.setFromTriplets(trip.begin(), trip.end());
  if (op.is_dense()) return SelfAdjointOperator(std::move(sub), Eigen::MatrixXd(sm), name);
  return SelfAdjointOperator(std::move(sub), std::move(sm), name);
}

inline GradedSpectra graded_square_spectra(const SelfAdjointOperator& d, const EigensolveOptions& opt = {}) {
  if (!d.graded()) throw GradingError("graded spectra need a grading");
  const SelfAdjointOperator sq = d.odd() ? d.squared() : d;
  GradedSpectra g;
  const auto& tau = *d.grading();
  for (std::size_t i = 0; i < tau.size(); ++i) (tau[i] > 0 ? g.plus_index : g.minus_index).push_back(Eigen::Index(i));
  g.plus = eigensolve(restrict_to(sq, g.plus_index, sq.label() + "+"), opt);
  g.minus = eigensolve(restrict_to(sq, g.minus_index, sq.label() + "-"), opt);
  if (!opt.kernel_threshold) {
    std::vector<double> all = g.plus.eigenvalues;
    all.insert(all.end(), g.minus.eigenvalues.begin(), g.minus.eigenvalues.end());
    const double thr = default_kernel_threshold(all);
    refresh_kernel(g.plus, thr);
    refresh_kernel(g.minus, thr);
  }
  return g;
}

inline void require_positive_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("heat parameter t must be positive, got " + std::to_string(t));
}

/// Σ e^{−tλ}.
inline double heat_sum(const Spectrum& s, double t) {
  require_positive_time(t);
  CompensatedSum acc;
  for (double x : s.eigenvalues) acc.add(std::exp(-t * x));
  return acc.value();
}

/// Σ e^{−tλ²}.
inline double square_heat_sum(const Spectrum& s, double t) {
  require_positive_time(t);
  CompensatedSum acc;
  for (double x : s.eigenvalues) acc.add(std::exp(-t * x * x));
  return acc.value();
}

/// Σ λ e^{−tλ²}.
inline double eta_sum(const Spectrum& s, double t) {
  require_positive_time(t);
  CompensatedSum acc;
  for (double x : s.eigenvalues) acc.add(x * std::exp(-t * x * x));
  return acc.value();
}

/// #{λ ≤ lambda}.
inline std::size_t counting_function(const Spectrum& s, double lambda) {
  return std::size_t(std::upper_bound(s.eigenvalues.begin(), s.eigenvalues.end(), lambda) - s.eigenvalues.begin());
}

enum class SpectralLaw { dirichlet_interval, circle_laplace, shifted_integers, custom_sequence };

inline const char* to_string(SpectralLaw l) {
  switch (l) {
    case SpectralLaw::dirichlet_interval: return "dirichlet-interval";
    case SpectralLaw::circle_laplace: return "circle-laplace";
    case SpectralLaw::shifted_integers: return "shifted-integers";
    case SpectralLaw::custom_sequence: return "custom-sequence";
  }
  return "?";
}

/// Weyl law N(λ) ≈ coefficient · λ^exponent (N counts |eigenvalue| ≤ λ).
struct WeylTail {
  double exponent = 0.0;
  double coefficient = 0.0;
};

/// Closed-form eigenvalue laws with convergent trace sums.
///   dirichlet-interval(L): (πk/L)², k ≥ 1
///   circle-laplace(L):     0 once, (2πk/L)² twice for k ≥ 1
///   shifted-integers(α):   k + α, k ∈ ℤ
///   custom-sequence:       a finite list
class ExplicitSpectrum {
 public:
  static constexpr double kRemainderTarget = 1e-13;

  static ExplicitSpectrum dirichlet_interval(double L) {
    if (!(L > 0.0)) throw DomainError("interval length must be positive");
    ExplicitSpectrum s(SpectralLaw::dirichlet_interval, {L});
    s.c_ = std::pow(std::numbers::pi / L, 2);
    s.mult_ = 1;
    s.zero_ = 0;
    s.tail_ = {0.5, L / std::numbers::pi};
    return s;
  }
  static ExplicitSpectrum circle_laplace(double L) {
    if (!(L > 0.0)) throw DomainError("circumference must be positive");
    ExplicitSpectrum s(SpectralLaw::circle_laplace, {L});
    s.c_ = std::pow(2.0 * std::numbers::pi / L, 2);
    s.mult_ = 2;
    s.zero_ = 1;
    s.tail_ = {0.5, L / std::numbers::pi};
    return s;
  }
  static ExplicitSpectrum shifted_integers(double alpha) {
    if (!std::isfinite(alpha)) throw DomainError("shift must be finite");
    ExplicitSpectrum s(SpectralLaw::shifted_integers, {alpha});
    s.tail_ = {1.0, 2.0};
    return s;
  }
  static ExplicitSpectrum custom(std::vector<double> values) {
    for (double x : values)
      if (!std::isfinite(x)) throw DomainError("custom spectrum has a non-finite value");
    std::sort(values.begin(), values.end());
    ExplicitSpectrum s(SpectralLaw::custom_sequence, {});
    s.values_ = std::move(values);
    s.tail_ = {0.0, double(s.values_.size())};
    return s;
  }

  SpectralLaw law() const { return law_; }
  const std::vector<double>& parameters() const { return params_; }
  WeylTail tail() const { return tail_; }
  bool finite() const { return law_ == SpectralLaw::custom_sequence; }

  /// First `count` eigenvalues in enumeration order (ascending |λ| for shifted integers).
  std::vector<double> enumerate(std::size_t count) const {
    std::vector<double> out;
    out.reserve(finite() ? std::min(count, values_.size()) : count);
    switch (law_) {
      case SpectralLaw::dirichlet_interval:
        for (std::size_t k = 1; out.size() < count; ++k) out.push_back(c_ * double(k) * double(k));
        break;
      case SpectralLaw::circle_laplace:
        if (count > 0) out.push_back(0.0);
        for (std::size_t k = 1; out.size() < count; ++k) {
          out.push_back(c_ * double(k) * double(k));
          if (out.size() < count) out.push_back(c_ * double(k) * double(k));
        }
        break;
      case SpectralLaw::shifted_integers: {
        std::vector<double> tmp;
        const long half = long(count) / 2 + 2;
        for (long k = -half; k <= half; ++k) tmp.push_back(double(k) + params_[0]);
        std::stable_sort(tmp.begin(), tmp.end(), [](double a, double b) { return std::abs(a) < std::abs(b); });
        out.assign(tmp.begin(), tmp.begin() + long(count));
        break;
      }
      case SpectralLaw::custom_sequence:
        out.assign(values_.begin(), values_.begin() + long(std::min(count, values_.size())));
        break;
    }
    return out;
  }

  std::size_t kernel_dim() const {
    switch (law_) {
      case SpectralLaw::dirichlet_interval: return 0;
      case SpectralLaw::circle_laplace: return 1;
      case SpectralLaw::shifted_integers: return std::abs(params_[0] - std::round(params_[0])) == 0.0 ? 1 : 0;
      case SpectralLaw::custom_sequence:
        return std::size_t(std::count_if(values_.begin(), values_.end(), [](double x) { return x == 0.0; }));
    }
    return 0;
  }

  double gap_mu() const {
    switch (law_) {
      case SpectralLaw::dirichlet_interval:
      case SpectralLaw::circle_laplace: return c_;
      case SpectralLaw::shifted_integers: {
        const double f = params_[0] - std::floor(params_[0]);
        if (f == 0.0) return 1.0;
        return std::min(f, 1.0 - f);
      }
      case SpectralLaw::custom_sequence: {
        double g = std::numeric_limits<double>::infinity();
        for (double x : values_)
          if (x != 0.0) g = std::min(g, std::abs(x));
        return g;
      }
    }
    return 0.0;
  }

  bool bounded_below() const { return law_ != SpectralLaw::shifted_integers; }

  /// Σ e^{−tλ}.
  double heat_sum(double t) const {
    require_positive_time(t);
    switch (law_) {
      case SpectralLaw::dirichlet_interval:
      case SpectralLaw::circle_laplace: return double(zero_) + double(mult_) * gaussian_tail_sum(t * c_);
      case SpectralLaw::shifted_integers:
        throw DomainError("heat sum e^{-t lambda} diverges for a spectrum unbounded below");
      case SpectralLaw::custom_sequence: {
        CompensatedSum acc;
        for (double x : values_) acc.add(std::exp(-t * x));
        return acc.value();
      }
    }
    return 0.0;
  }

  /// Σ e^{−tλ²}.
  double square_heat_sum(double t) const {
    require_positive_time(t);
    switch (law_) {
      case SpectralLaw::dirichlet_interval:
      case SpectralLaw::circle_laplace: {
        const double b = t * c_ * c_;
        return double(zero_) + double(mult_) * direct_sum([b](double k) { return std::exp(-b * k * k * k * k); },
                                                          std::pow(45.0 / b, 0.25));
      }
      case SpectralLaw::shifted_integers: return shifted_sum(t, false);
      case SpectralLaw::custom_sequence: {
        CompensatedSum acc;
        for (double x : values_) acc.add(std::exp(-t * x * x));
        return acc.value();
      }
    }
    return 0.0;
  }

  /// Σ λ e^{−tλ²}.
  double eta_sum(double t) const {
    require_positive_time(t);
    switch (law_) {
      case SpectralLaw::dirichlet_interval:
      case SpectralLaw::circle_laplace: {
        const double b = t * c_ * c_;
        return double(mult_) * c_ *
               direct_sum([b](double k) { return k * k * std::exp(-b * k * k * k * k); }, std::pow(50.0 / b, 0.25));
      }
      case SpectralLaw::shifted_integers: return shifted_sum(t, true);
      case SpectralLaw::custom_sequence: {
        CompensatedSum acc;
        for (double x : values_) acc.add(x * std::exp(-t * x * x));
        return acc.value();
      }
    }
    return 0.0;
  }

  /// Bound on the neglected remainder of the last heat_sum evaluation at t.
  double heat_remainder_bound(double t) const {
    if (law_ != SpectralLaw::dirichlet_interval && law_ != SpectralLaw::circle_laplace) return 0.0;
    const double a = t * c_;
    const std::size_t K = cutoff(a);
    return double(mult_) * third_derivative_bound(a, double(K)) / 720.0;
  }

  /// Largest relative discrepancy between the Weyl tail and exact counting over the
  /// enumerated terms with index ≥ count/2.
  double tail_discrepancy(std::size_t count = 10000) const {
    if (finite()) return 0.0;
    auto ev = enumerate(count);
    std::vector<double> mags(ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) mags[i] = std::abs(ev[i]);
    std::sort(mags.begin(), mags.end());
    double worst = 0.0;
    for (std::size_t i = count / 2; i < mags.size(); ++i) {
      if (i + 1 < mags.size() && mags[i + 1] == mags[i]) continue;
      const double predicted = tail_.coefficient * std::pow(mags[i], tail_.exponent);
      worst = std::max(worst, std::abs(double(i + 1) - predicted) / double(i + 1));
    }
    return worst;
  }

 private:
  ExplicitSpectrum(SpectralLaw law, std::vector<double> params) : law_(law), params_(std::move(params)) {}

  // Σ_{k≥1} e^{−a k²}: exact terms up to K, then the Euler–Maclaurin tail
  // ∫_K^∞ f + f(K)/2 − f′(K)/12 (f(K) itself is excluded from the explicit sum).
  static std::size_t cutoff(double a) {
    // choose K with |f‴(K)|/720 below the target; the derivative bound decays like e^{−aK²}
    std::size_t K = std::max<std::size_t>(4, std::size_t(std::ceil(std::sqrt(2.0 / a))));
    while (third_derivative_bound(a, double(K)) / 720.0 > kRemainderTarget && K < 100000000) K = K + K / 4 + 1;
    return K;
  }
  static double third_derivative_bound(double a, double x) {
    // f(x) = e^{−a x²}, f‴(x) = (12 a² x − 8 a³ x³) e^{−a x²}
    return std::abs(12.0 * a * a * x - 8.0 * a * a * a * x * x * x) * std::exp(-a * x * x);
  }
  static double gaussian_tail_sum(double a) {
    const std::size_t K = cutoff(a);
    CompensatedSum acc;
    for (std::size_t k = 1; k < K; ++k) acc.add(std::exp(-a * double(k) * double(k)));
    const double x = double(K);
    const double fK = std::exp(-a * x * x);
    const double integral = 0.5 * std::sqrt(std::numbers::pi / a) * std::erfc(std::sqrt(a) * x);
    const double fprime = -2.0 * a * x * fK;
    acc.add(integral + 0.5 * fK - fprime / 12.0);
    return acc.value();
  }
  template <class F>
  static double direct_sum(const F& f, double kmax) {
    const auto K = std::size_t(std::ceil(std::max(4.0, kmax))) + 2;
    CompensatedSum acc;
    for (std::size_t k = 1; k <= K; ++k) acc.add(f(double(k)));
    return acc.value();
  }
  double shifted_sum(double t, bool odd) const {
    const double alpha = params_[0];
    const double reach = std::sqrt(46.0 / t) + std::abs(alpha) + 2.0;
    const long K = long(std::ceil(reach));
    CompensatedSum acc;
    for (long k = -K; k <= K; ++k) {
      const double x = double(k) + alpha;
      const double e = std::exp(-t * x * x);
      acc.add(odd ? x * e : e);
    }
    return acc.value();
  }

  SpectralLaw law_;
  std::vector<double> params_;
  std::vector<double> values_;
  WeylTail tail_;
  double c_ = 0.0;
  int mult_ = 1;
  int zero_ = 0;
};

inline double heat_sum(const ExplicitSpectrum& s, double t) { return s.heat_sum(t); }
inline double square_heat_sum(const ExplicitSpectrum& s, double t) { return s.square_heat_sum(t); }
inline double eta_sum(const ExplicitSpectrum& s, double t) { return s.eta_sum(t); }
inline std::size_t kernel_dim(const Spectrum& s) { return s.kernel_dim; }
inline std::size_t kernel_dim(const ExplicitSpectrum& s) { return s.kernel_dim(); }
inline double gap_mu(const Spectrum& s) { return s.gap_mu; }
inline double gap_mu(const ExplicitSpectrum& s) { return s.gap_mu(); }

}  // namespace relspec
