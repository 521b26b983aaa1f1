#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <tuple>
#include <type_traits>
#include <utility>
#include <vector>

#include "relspec/builders.hpp"
#include "relspec/errors.hpp"
#include "relspec/heat.hpp"
#include "relspec/quadrature.hpp"
#include "relspec/spectrum.hpp"

namespace relspec {

inline constexpr double kEulerGamma = 0.57721566490153286061;

/// 1/Γ(s), entire; exactly zero at s = 0, −1, −2, …
inline double rgamma(double s) {
  if (s <= 0.0 && s == std::floor(s)) return 0.0;
  return 1.0 / std::tgamma(s);
}

/// A relative trace t ↦ T(t) with its large-t constant and spectral data.
struct RelativeTrace {
  std::function<double(double)> value;
  double h = 0.0;            ///< large-t limit (kernel-dimension difference)
  double gap = 0.0;          ///< min of the two gaps
  double lambda_max = 0.0;   ///< largest |eigenvalue| of a lattice operator; 0 for closed-form spectra
  std::string label_a = "A";
  std::string label_b = "B";
};

struct PlateauOptions {
  double tolerance = 1e-6;
  std::size_t points = 16;
};

/// Median of T over the plateau window. The window is [10, 20] unless the gap is known,
/// in which case it starts at 40/gap so the exponential corrections are below 1e−17.
inline double plateau_median(const std::function<double(double)>& trace, double gap,
                             const PlateauOptions& opt = {}) {
  double lo = 10.0, hi = 20.0;
  if (std::isfinite(gap) && gap > 0.0) {
    lo = std::max(10.0, 40.0 / gap);
    hi = 2.0 * lo;
  }
  std::vector<double> v;
  for (double t : log_grid(lo, hi, opt.points)) v.push_back(trace(t));
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

/// Relative heat trace of two spectra (Spectrum or ExplicitSpectrum). h is cross-checked
/// against the plateau and then taken as the exact kernel-dimension difference.
template <class SA, class SB>
RelativeTrace make_relative_trace(const SA& a, const SB& b, const PlateauOptions& opt = {}) {
  RelativeTrace rt;
  rt.value = [a, b](double t) { return heat_sum(a, t) - heat_sum(b, t); };
  rt.gap = std::min(gap_mu(a), gap_mu(b));
  rt.h = double(kernel_dim(a)) - double(kernel_dim(b));
  if constexpr (std::is_same_v<SA, Spectrum>) rt.lambda_max = std::max(rt.lambda_max, a.max_abs());
  if constexpr (std::is_same_v<SB, Spectrum>) rt.lambda_max = std::max(rt.lambda_max, b.max_abs());
  if (std::isfinite(rt.gap) && rt.gap > 0.0) {
    const double plateau = plateau_median(rt.value, rt.gap, opt);
    if (std::abs(plateau - rt.h) > opt.tolerance)
      throw NumericalError("large-t plateau " + std::to_string(plateau) + " disagrees with kernel dimension difference " +
                           std::to_string(rt.h) + "; truncation not certified");
  }
  return rt;
}

/// Odd relative trace Σλe^{−tλ²} − Σλ′e^{−tλ′²} (large-t constant 0).
template <class SA, class SB>
RelativeTrace make_eta_trace(const SA& a, const SB& b) {
  RelativeTrace rt;
  rt.value = [a, b](double t) { return eta_sum(a, t) - eta_sum(b, t); };
  rt.gap = std::min(gap_mu(a), gap_mu(b));
  rt.h = 0.0;
  if constexpr (std::is_same_v<SA, Spectrum>) rt.lambda_max = std::max(rt.lambda_max, a.max_abs());
  if constexpr (std::is_same_v<SB, Spectrum>) rt.lambda_max = std::max(rt.lambda_max, b.max_abs());
  return rt;
}

// ---------------------------------------------------------------------------
// Small-t expansion

struct FitOptions {
  std::optional<double> t_lo;   ///< scanned by default, see fit_expansion
  std::optional<double> t_hi;   ///< scanned by default, see fit_expansion
  std::optional<std::vector<double>> exponents;
  std::size_t points = 64;
  double max_condition = 1e10;
  double prune_below = 1e-12;
  double residual_tolerance = 1e-6;  ///< relative to max(1, max|T|) on the window
  bool lattice_terms = true;          ///< add t^{−5/2}, t^{−3/2} for lattice traces
};

struct AsymptoticFit {
  int dimension = 1;
  std::vector<double> exponents;
  std::vector<double> coefficients;
  double h = 0.0;
  double t_lo = 0.0;
  double t_hi = 0.0;
  double condition = 1.0;
  double residual = 0.0;

  double coefficient(double alpha) const {
    for (std::size_t i = 0; i < exponents.size(); ++i)
      if (std::abs(exponents[i] - alpha) < 1e-12) return coefficients[i];
    return 0.0;
  }
  double evaluate(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < exponents.size(); ++i) s += coefficients[i] * std::pow(t, exponents[i]);
    return s;
  }
};

inline std::vector<double> default_exponents(int n = 1) {
  std::vector<double> e;
  for (int l = 0; l <= n + 4; ++l) e.push_back(double(-n + l) / 2.0);
  return e;
}

namespace detail {

struct WindowChoice {
  double lo;
  double hi;
  std::vector<double> exponents;
};

inline WindowChoice choose_window(const FitOptions& opt, double lambda_max, double default_hi,
                                  double lattice_scale) {
  WindowChoice w;
  w.exponents = opt.exponents ? *opt.exponents : default_exponents(1);
  const bool lattice = lambda_max > 0.0 && opt.lattice_terms;
  w.lo = opt.t_lo ? *opt.t_lo : (lattice ? std::clamp(lattice_scale, 1e-3, 0.05) : 1e-3);
  w.hi = opt.t_hi ? *opt.t_hi : (lattice ? std::min(0.5, std::max(default_hi, 100.0 * w.lo)) : default_hi);
  if (lattice && !opt.exponents) {
    w.exponents.push_back(-2.5);
    w.exponents.push_back(-1.5);
  }
  std::sort(w.exponents.begin(), w.exponents.end());
  w.exponents.erase(std::unique(w.exponents.begin(), w.exponents.end()), w.exponents.end());
  if (!(w.lo > 0.0) || !(w.hi > w.lo) || w.hi > 0.5) throw FitError("fit window must satisfy 0 < t_lo < t_hi <= 0.5");
  return w;
}

inline std::pair<std::vector<double>, double> least_squares(const std::vector<double>& ts,
                                                            const std::vector<double>& ys,
                                                            const std::vector<double>& exps, double max_condition) {
  const auto m = Eigen::Index(ts.size()), k = Eigen::Index(exps.size());
  Eigen::MatrixXd a(m, k);
  Eigen::VectorXd y(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    y[i] = ys[std::size_t(i)];
    for (Eigen::Index j = 0; j < k; ++j) a(i, j) = std::pow(ts[std::size_t(i)], exps[std::size_t(j)]);
  }
  const Eigen::VectorXd scale = a.colwise().norm().transpose();
  const Eigen::MatrixXd as = a * scale.cwiseInverse().asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(as, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv[0] / sv[sv.size() - 1];
  if (!(cond <= max_condition))
    throw FitError("asymptotic fit is ill-conditioned (condition " + std::to_string(cond) +
                   "); narrow the exponent set or move the fit window");
  const Eigen::VectorXd c = svd.solve(y).cwiseQuotient(scale);
  return {std::vector<double>(c.data(), c.data() + k), cond};
}

}  // namespace detail

namespace detail {

inline AsymptoticFit fit_on_window(const RelativeTrace& trace, const FitOptions& opt);

}  // namespace detail

/// Least-squares fit T(t) ≈ Σ a_α t^α on a log-spaced window; h is carried separately.
/// Exponents whose coefficient falls below `prune_below` are dropped and the fit repeated.
///
/// Lattice traces without an explicit window scan a few candidate windows. Each fit is scored
/// by its highest-order term at t_hi relative to T(t_hi), an estimate of the truncation error
/// of the expansion; among fits within a factor 2 of the best score the widest window wins.
///
/// Closed-form traces carry exponentially small terms like e^{−L²/t}. Without an explicit window
/// t_hi is lowered from 0.05 until the coefficients of t^α, α ≤ 0, agree with the next smaller
/// window to 1e−11.
inline AsymptoticFit fit_expansion(const RelativeTrace& trace, const FitOptions& opt = {}) {
  const bool lattice = trace.lambda_max > 0.0 && opt.lattice_terms;
  if (trace.lambda_max <= 0.0 && !opt.t_lo && !opt.t_hi) {
    auto fit_at = [&](double hi) {
      FitOptions o = opt;
      o.t_lo = hi / 50.0;
      o.t_hi = hi;
      return detail::fit_on_window(trace, o);
    };
    auto agree = [](const AsymptoticFit& a, const AsymptoticFit& b) {
      for (const auto* f : {&a, &b})
        for (double e : f->exponents)
          if (e <= 0.0) {
            const double x = a.coefficient(e), y = b.coefficient(e);
            if (std::abs(x - y) > 1e-11 * std::max(1.0, std::abs(y))) return false;
          }
      return true;
    };
    const std::array<double, 6> his{0.05, 0.02, 0.01, 0.005, 0.002, 0.001};
    std::optional<AsymptoticFit> prev;
    std::optional<FitError> last_error;
    for (double hi : his) {
      try {
        auto fit = fit_at(hi);
        if (prev && agree(*prev, fit)) return *prev;
        prev = std::move(fit);
      } catch (const FitError& e) {
        last_error = e;
        prev.reset();
      }
    }
    if (prev) return *prev;
    throw *last_error;
  }
  if (!lattice || opt.t_lo || opt.t_hi) return detail::fit_on_window(trace, opt);
  struct Candidate {
    AsymptoticFit fit;
    double score;
  };
  std::vector<Candidate> found;
  std::optional<FitError> last_error;
  for (double c : {500.0, 200.0, 100.0, 60.0})
    for (double hi : {0.5, 0.2, 0.1, 0.05}) {
      const double lo = std::clamp(c / trace.lambda_max, 1e-3, 0.05);
      if (hi < 4.0 * lo) continue;
      FitOptions o = opt;
      o.t_lo = lo;
      o.t_hi = hi;
      try {
        auto fit = detail::fit_on_window(trace, o);
        const double top = fit.coefficients.empty()
                               ? 0.0
                               : std::abs(fit.coefficients.back() * std::pow(hi, fit.exponents.back()));
        const double ref = std::abs(trace.value(hi));
        found.push_back({std::move(fit), ref > 0.0 ? top / ref : top});
      } catch (const FitError& e) {
        last_error = e;
      }
    }
  if (found.empty()) {
    if (last_error) throw *last_error;
    return detail::fit_on_window(trace, opt);
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : found) best = std::min(best, c.score);
  const Candidate* pick = nullptr;
  for (const auto& c : found)
    if (c.score <= 2.0 * best && (!pick || c.fit.t_hi / c.fit.t_lo > pick->fit.t_hi / pick->fit.t_lo)) pick = &c;
  return pick->fit;
}

inline AsymptoticFit detail::fit_on_window(const RelativeTrace& trace, const FitOptions& opt) {
  const auto w = detail::choose_window(opt, trace.lambda_max, 0.05, 500.0 / std::max(trace.lambda_max, 1e-300));
  AsymptoticFit fit;
  fit.h = trace.h;
  fit.t_lo = w.lo;
  fit.t_hi = w.hi;
  const auto ts = log_grid(w.lo, w.hi, opt.points);
  std::vector<double> ys;
  double ymax = 0.0;
  for (double t : ts) {
    ys.push_back(trace.value(t));
    ymax = std::max(ymax, std::abs(ys.back()));
  }
  std::vector<double> exps = w.exponents;
  std::vector<double> coef;
  double cond = 1.0;
  if (ymax > 0.0) {
    for (int pass = 0; pass < 2 && !exps.empty(); ++pass) {
      std::tie(coef, cond) = detail::least_squares(ts, ys, exps, opt.max_condition);
      std::vector<double> keep;
      for (std::size_t i = 0; i < exps.size(); ++i)
        if (std::abs(coef[i]) >= opt.prune_below) keep.push_back(exps[i]);
      if (keep.size() == exps.size()) break;
      exps = keep;
      coef.clear();
    }
    if (coef.size() != exps.size() && !exps.empty())
      std::tie(coef, cond) = detail::least_squares(ts, ys, exps, opt.max_condition);
  } else {
    exps.clear();
  }
  fit.exponents = exps;
  fit.coefficients = coef;
  fit.condition = cond;
  for (std::size_t i = 0; i < ts.size(); ++i) fit.residual = std::max(fit.residual, std::abs(ys[i] - fit.evaluate(ts[i])));
  if (fit.residual > opt.residual_tolerance * std::max(1.0, ymax))
    throw FitError("asymptotic fit residual " + std::to_string(fit.residual) + " exceeds tolerance on [" +
                   std::to_string(w.lo) + ", " + std::to_string(w.hi) + "]");
  return fit;
}

/// Fit from stored samples: the plateau median over t ∈ [10, 20] gives h, the samples inside
/// the window give the coefficients.
inline AsymptoticFit fit_expansion(const HeatTraceSamples& samples, int n = 1, const FitOptions& opt = {}) {
  if (n != 1) throw DomainError("only one-dimensional models are supported");
  samples.validate();
  if (samples.t.empty() || samples.t.front() > 0.03 || samples.t.back() < 5.0)
    throw PreconditionError("samples must reach below t = 0.03 and beyond t = 5");
  std::vector<double> plateau;
  for (std::size_t i = 0; i < samples.t.size(); ++i)
    if (samples.t[i] >= 10.0 && samples.t[i] <= 20.0) plateau.push_back(samples.values[i]);
  if (plateau.empty()) plateau.push_back(samples.values.back());
  std::sort(plateau.begin(), plateau.end());
  const std::size_t m = plateau.size() / 2;
  const double h = plateau.size() % 2 ? plateau[m] : 0.5 * (plateau[m - 1] + plateau[m]);

  const double lo = opt.t_lo.value_or(samples.t.front());
  const double hi = opt.t_hi.value_or(0.3);
  std::vector<double> ts, ys;
  double ymax = 0.0;
  for (std::size_t i = 0; i < samples.t.size(); ++i)
    if (samples.t[i] >= lo && samples.t[i] <= hi) {
      ts.push_back(samples.t[i]);
      ys.push_back(samples.values[i]);
      ymax = std::max(ymax, std::abs(samples.values[i]));
    }
  std::vector<double> exps = opt.exponents.value_or(default_exponents(n));
  if (ts.size() < exps.size() + 2) throw FitError("too few samples inside the fit window");
  AsymptoticFit fit;
  fit.h = h;
  fit.t_lo = ts.front();
  fit.t_hi = ts.back();
  if (ymax > 0.0) {
    auto [coef, cond] = detail::least_squares(ts, ys, exps, opt.max_condition);
    std::vector<double> keep;
    for (std::size_t i = 0; i < exps.size(); ++i)
      if (std::abs(coef[i]) >= opt.prune_below) keep.push_back(exps[i]);
    if (keep.size() != exps.size() && !keep.empty()) std::tie(coef, cond) = detail::least_squares(ts, ys, keep, opt.max_condition);
    if (keep.empty()) coef.clear();
    fit.exponents = keep;
    fit.coefficients = coef;
    fit.condition = cond;
  }
  for (std::size_t i = 0; i < ts.size(); ++i) fit.residual = std::max(fit.residual, std::abs(ys[i] - fit.evaluate(ts[i])));
  return fit;
}

// ---------------------------------------------------------------------------
// Relative ζ

struct Pole {
  double position;
  double residue;
};

struct RelativeZeta {
  double value_at_zero = 0.0;
  double derivative_at_zero = 0.0;
  std::vector<Pole> poles;
  // ζ′(0) = expansion + remainder + large_t + constant_term
  double expansion_part = 0.0;  ///< Σ_{α≠0} a_α c^α/α
  double remainder_part = 0.0;  ///< ∫_{t_lo}^c (T − fit)/t
  double large_t_part = 0.0;    ///< ∫_c^∞ (T − h)/t
  double constant_part = 0.0;   ///< (a₀ − h)(log c + γ)
  double split = 1.0;
  AsymptoticFit fit;
};

struct ZetaOptions {
  double split = 1.0;
  double tail_tolerance = 1e-15;
};

namespace detail {

inline void require_gap(double gap) {
  if (!(gap > 0.0))
    throw HypothesisError("spectral gap hypothesis violated: gapMu = " + std::to_string(gap) +
                          " (relative zeta needs a positive gap above the kernel on both sides)");
}

}  // namespace detail

/// ζ(s) of the relative trace:
///   ζ(s) = [Σ_{α≠0} a_α c^{s+α}/(s+α) + ∫_{t_lo}^c t^{s−1}(T − fit) + ∫_c^∞ t^{s−1}(T − h)] / Γ(s)
///          + (a₀ − h) c^s / Γ(s+1).
inline double relative_zeta(const RelativeTrace& trace, const AsymptoticFit& fit, double s,
                            const ZetaOptions& opt = {}) {
  detail::require_gap(trace.gap);
  const double c = opt.split;
  const double rg = rgamma(s);
  double bracket = 0.0;
  double a0 = 0.0;
  for (std::size_t i = 0; i < fit.exponents.size(); ++i) {
    const double alpha = fit.exponents[i];
    if (alpha == 0.0) {
      a0 = fit.coefficients[i];
      continue;
    }
    if (std::abs(s + alpha) < 1e-14) {
      if (rg != 0.0) throw DomainError("relative zeta has a pole at s = " + std::to_string(s));
      continue;  // removable: 1/Γ vanishes there
    }
    bracket += fit.coefficients[i] * std::pow(c, s + alpha) / (s + alpha);
  }
  if (rg != 0.0) {
    bracket += integrate_log([&](double t) { return std::pow(t, s - 1.0) * (trace.value(t) - fit.evaluate(t)); },
                             fit.t_lo, c);
    bracket += integrate_log_to_infinity([&](double t) { return std::pow(t, s - 1.0) * (trace.value(t) - trace.h); },
                                         c, opt.tail_tolerance);
  }
  // Removable points where 1/Γ(s) = 0 but a term has a pole: the limit is a_α·(d/ds 1/Γ)/1.
  double removable = 0.0;
  if (rg == 0.0) {
    for (std::size_t i = 0; i < fit.exponents.size(); ++i) {
      const double alpha = fit.exponents[i];
      if (alpha != 0.0 && std::abs(s + alpha) < 1e-14) {
        // 1/Γ(s) ≈ (−1)^m m! (s + m) near s = −m
        const double m = -s;
        removable += fit.coefficients[i] * std::pow(-1.0, m) * std::tgamma(m + 1.0);
      }
    }
  }
  return rg * bracket + removable + (a0 - fit.h) * std::pow(c, s) * rgamma(s + 1.0);
}

/// ζ(0), ζ′(0) and the pole list.
inline RelativeZeta relative_zeta_at_zero(const RelativeTrace& trace, const AsymptoticFit& fit,
                                          const ZetaOptions& opt = {}) {
  detail::require_gap(trace.gap);
  const double c = opt.split;
  RelativeZeta z;
  z.fit = fit;
  z.split = c;
  const double a0 = fit.coefficient(0.0);
  for (std::size_t i = 0; i < fit.exponents.size(); ++i) {
    const double alpha = fit.exponents[i];
    if (alpha == 0.0) continue;
    z.expansion_part += fit.coefficients[i] * std::pow(c, alpha) / alpha;
    const double residue = fit.coefficients[i] * rgamma(-alpha);
    if (residue != 0.0) z.poles.push_back({-alpha, residue});
  }
  std::sort(z.poles.begin(), z.poles.end(), [](const Pole& a, const Pole& b) { return a.position > b.position; });
  z.remainder_part = integrate_log([&](double t) { return (trace.value(t) - fit.evaluate(t)) / t; }, fit.t_lo, c);
  z.large_t_part = integrate_log_to_infinity([&](double t) { return (trace.value(t) - trace.h) / t; }, c,
                                             opt.tail_tolerance);
  z.constant_part = (a0 - fit.h) * (std::log(c) + kEulerGamma);
  z.value_at_zero = a0 - fit.h;
  z.derivative_at_zero = z.expansion_part + z.remainder_part + z.large_t_part + z.constant_part;
  if (!std::isfinite(z.derivative_at_zero)) throw NumericalError("relative zeta derivative at 0 is not finite");
  return z;
}

/// det(H, H′) = exp(−ζ′(0)).
inline double relative_determinant(const RelativeZeta& z) { return std::exp(-z.derivative_at_zero); }

/// Fit plus evaluation at zero for two spectra.
template <class SA, class SB>
RelativeZeta zeta_of_pair(const SA& a, const SB& b, const FitOptions& fopt = {}, const ZetaOptions& zopt = {}) {
  const auto trace = make_relative_trace(a, b);
  detail::require_gap(trace.gap);
  return relative_zeta_at_zero(trace, fit_expansion(trace, fopt), zopt);
}

// ---------------------------------------------------------------------------
// Torsion

struct TorsionResult {
  double log_torsion = 0.0;
  double zeta_prime_0 = 0.0;  ///< ζ′₀(0, Δ₀, Δ′₀)
  double zeta_prime_1 = 0.0;  ///< ζ′₁(0, Δ₁, Δ′₁)
};

/// log τ = Σ_q (−1)^q q ζ′_q(0, Δ_q, Δ′_q) = −ζ′₁(0) on the circle.
inline TorsionResult relative_torsion(const MetricData& a, const MetricData& b, const FitOptions& fopt = {},
                                      const ZetaOptions& zopt = {}) {
  if (!a.grid.periodic() || !b.grid.periodic()) throw DomainError("relative torsion needs circle metrics");
  const auto [a0, a1] = build_derham_circle(a);
  const auto [b0, b1] = build_derham_circle(b);
  TorsionResult r;
  r.zeta_prime_0 = zeta_of_pair(eigensolve(a0), eigensolve(b0), fopt, zopt).derivative_at_zero;
  r.zeta_prime_1 = zeta_of_pair(eigensolve(a1), eigensolve(b1), fopt, zopt).derivative_at_zero;
  r.log_torsion = -r.zeta_prime_1;
  return r;
}

// ---------------------------------------------------------------------------
// Relative η

struct EtaOptions {
  FitOptions fit;
  double regular_tolerance = 1e-6;
  double split = 1.0;
  double tail_tolerance = 1e-15;
};

struct EtaResult {
  double eta_at_zero = std::numeric_limits<double>::quiet_NaN();
  double a_minus_half = 0.0;
  bool regular = false;
  AsymptoticFit fit;
  std::vector<std::pair<double, double>> samples;  ///< (s, η(s))
};

namespace detail {

inline AsymptoticFit fit_eta(const RelativeTrace& trace, const FitOptions& opt) {
  FitOptions o = opt;
  if (!o.t_lo && trace.lambda_max > 0.0) o.t_lo = std::clamp(60.0 / (trace.lambda_max * trace.lambda_max), 1e-4, 0.05);
  if (!o.t_hi && trace.lambda_max > 0.0) o.t_hi = std::min(0.5, std::max(0.05, 4.0 * o.t_lo.value_or(1e-3)));
  o.lattice_terms = false;
  return fit_expansion(trace, o);
}

}  // namespace detail

/// η(s) = [Σ_β a_β c^{u+β}/(u+β) + ∫_{t_lo}^c t^{u−1}(T − fit) + ∫_c^∞ t^{u−1} T] / Γ(u),
/// u = (s+1)/2, from the odd relative trace T(t) = tr(De^{−tD²} − D′e^{−tD′²}).
inline double relative_eta_at(const RelativeTrace& trace, const AsymptoticFit& fit, double s, double split = 1.0,
                              double tail_tol = 1e-15) {
  const double u = 0.5 * (s + 1.0);
  const double c = split;
  double bracket = 0.0;
  for (std::size_t i = 0; i < fit.exponents.size(); ++i) {
    const double beta = fit.exponents[i];
    if (std::abs(u + beta) < 1e-14) {
      if (fit.coefficients[i] != 0.0) throw DomainError("relative eta has a pole at s = " + std::to_string(s));
      continue;
    }
    bracket += fit.coefficients[i] * std::pow(c, u + beta) / (u + beta);
  }
  bracket += integrate_log([&](double t) { return std::pow(t, u - 1.0) * (trace.value(t) - fit.evaluate(t)); },
                           fit.t_lo, c);
  bracket += integrate_log_to_infinity([&](double t) { return std::pow(t, u - 1.0) * trace.value(t); }, c, tail_tol);
  return rgamma(u) * bracket;
}

template <class SA, class SB>
EtaResult relative_eta(const SA& a, const SB& b, const std::vector<double>& s_grid = {}, const EtaOptions& opt = {}) {
  const auto trace = make_eta_trace(a, b);
  if (!(trace.gap > 0.0)) {
    // Matched kernels are allowed: zero modes do not enter Σλe^{−tλ²}.
    if (kernel_dim(a) != kernel_dim(b))
      throw HypothesisError("spectral gap hypothesis violated: gapMu = 0 with unmatched kernels");
  }
  EtaResult r;
  r.fit = detail::fit_eta(trace, opt.fit);
  r.a_minus_half = r.fit.coefficient(-0.5);
  r.regular = std::abs(r.a_minus_half) < opt.regular_tolerance;
  if (r.regular) {
    AsymptoticFit f = r.fit;
    for (std::size_t i = 0; i < f.exponents.size(); ++i)
      if (std::abs(f.exponents[i] + 0.5) < 1e-12) f.coefficients[i] = 0.0;
    r.eta_at_zero = relative_eta_at(trace, f, 0.0, opt.split, opt.tail_tolerance);
    for (double s : s_grid) r.samples.emplace_back(s, relative_eta_at(trace, f, s, opt.split, opt.tail_tolerance));
  }
  return r;
}

}  // namespace relspec
