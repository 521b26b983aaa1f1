#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "relspec/errors.hpp"
#include "relspec/heat.hpp"
#include "relspec/operator.hpp"
#include "relspec/quadrature.hpp"
#include "relspec/spectrum.hpp"

namespace relspec {

// ---------------------------------------------------------------------------
// Supertraces and the Witten index

/// str(τ e^{−tD²}) = Σ_{σ(H⁺)} e^{−tλ} − Σ_{σ(H⁻)} e^{−tλ}.
inline double supertrace(const GradedSpectra& g, double t) { return heat_sum(g.plus, t) - heat_sum(g.minus, t); }

inline double drift(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

inline void require_compatible_gradings(const SelfAdjointOperator& a, const SelfAdjointOperator& b) {
  if (!a.graded() || !b.graded()) throw GradingError("supertrace needs graded operators");
  if (*a.grading() != *b.grading()) throw GradingError("operators carry different gradings");
  if (a.grading_residual() > 1e-12 * std::max(1.0, a.max_abs_entry()) ||
      b.grading_residual() > 1e-12 * std::max(1.0, b.max_abs_entry()))
    throw GradingError("grading compatibility residual above 1e-12");
}

/// Relative trace and supertrace of D² and D′² on the t-grid.
inline HeatTraceSamples relative_supertrace(const GradedPair& pair, const std::vector<double>& tgrid) {
  require_compatible_gradings(pair.d, pair.d_prime);
  const auto ga = graded_square_spectra(pair.d);
  const auto gb = graded_square_spectra(pair.d_prime);
  HeatTraceSamples out;
  out.t = tgrid;
  out.graded = true;
  out.label_a = pair.d.label();
  out.label_b = pair.d_prime.label();
  out.supertrace.emplace();
  for (double t : tgrid) {
    out.values.push_back(heat_sum(ga.plus, t) + heat_sum(ga.minus, t) - heat_sum(gb.plus, t) - heat_sum(gb.minus, t));
    out.supertrace->push_back(supertrace(ga, t) - supertrace(gb, t));
  }
  out.validate();
  return out;
}

inline HeatTraceSamples relative_supertrace(const PaddedPair& pair, const std::vector<double>& tgrid) {
  if (!pair.op_a.graded()) throw GradingError("supertrace needs a graded padded pair");
  return projected_relative_trace(pair, tgrid);
}

struct WittenIndex {
  double index = 0.0;         ///< str(τ e^{−tD²}) at t = 10/gapMu
  long kernel_index = 0;      ///< dim ker D⁺ − dim ker D⁻
  double gap = 0.0;
  double discrepancy = 0.0;
};

inline WittenIndex witten_index(const SelfAdjointOperator& d) {
  const auto g = graded_square_spectra(d);
  WittenIndex w;
  w.gap = std::min(g.plus.gap_mu, g.minus.gap_mu);
  if (!(w.gap > 0.0)) throw HypothesisError("spectral gap hypothesis violated: gapMu = " + std::to_string(w.gap));
  w.kernel_index = long(g.plus.kernel_dim) - long(g.minus.kernel_dim);
  const double t = std::isfinite(w.gap) ? 10.0 / w.gap : 1.0;
  w.index = supertrace(g, t);
  w.discrepancy = std::abs(w.index - double(w.kernel_index));
  if (w.discrepancy > 1e-8)
    throw NumericalError("Witten index: supertrace " + std::to_string(w.index) + " disagrees with kernel count " +
                         std::to_string(w.kernel_index));
  return w;
}

// ---------------------------------------------------------------------------
// Spectral shift

struct SpectralShift {
  std::vector<double> lambda;
  std::vector<double> xi;
  std::optional<std::pair<double, double>> gap_window;  ///< widest eigenvalue-free interval
  double heat_identity_residual = 0.0;
  double test_function_residual = 0.0;
};

namespace detail {

// ∫ g(λ) ξ(λ) dλ for the step function ξ = N_B − N_A, exact per constant piece (Gauss–Legendre
// between breakpoints). Beyond the largest eigenvalue ξ is the constant dim B − dim A and
// `tail` supplies ∫_{λmax}^∞ g.
template <class G>
double integrate_against_xi(const Spectrum& a, const Spectrum& b, const G& g, std::vector<double> extra,
                            const std::function<double(double)>& tail) {
  static const QuadratureRule rule = gauss_legendre(24);
  std::vector<double> bp = a.eigenvalues;
  bp.insert(bp.end(), b.eigenvalues.begin(), b.eigenvalues.end());
  if (bp.empty()) return 0.0;
  const double lo = *std::min_element(bp.begin(), bp.end());
  const double hi = *std::max_element(bp.begin(), bp.end());
  for (double x : extra)
    if (x > lo && x < hi) bp.push_back(x);
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  CompensatedSum acc;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double mid = 0.5 * (bp[i] + bp[i + 1]);
    const double xi = double(counting_function(b, mid)) - double(counting_function(a, mid));
    if (xi == 0.0) continue;
    acc.add(xi * integrate_gl(g, bp[i], bp[i + 1], rule));
  }
  const double xi_top = double(b.size()) - double(a.size());
  if (xi_top != 0.0) acc.add(xi_top * tail(hi));
  return acc.value();
}

}  // namespace detail

/// ξ(λ) = N_B(λ) − N_A(λ), certified by tr(e^{−tA} − e^{−tB}) = −t∫e^{−tλ}ξ and
/// tr(f(A) − f(B)) = ∫f′ξ for a compactly supported test function f.
inline SpectralShift spectral_shift(const Spectrum& a, const Spectrum& b, const std::vector<double>& lambda_grid,
                                    const std::vector<double>& t_checks = {0.1, 0.5, 1.0, 2.0}) {
  SpectralShift out;
  out.lambda = lambda_grid;
  for (double l : lambda_grid) out.xi.push_back(double(counting_function(b, l)) - double(counting_function(a, l)));

  std::vector<double> all = a.eigenvalues;
  all.insert(all.end(), b.eigenvalues.begin(), b.eigenvalues.end());
  std::sort(all.begin(), all.end());
  double widest = 0.0;
  for (std::size_t i = 0; i + 1 < all.size(); ++i)
    if (all[i + 1] - all[i] > widest) {
      widest = all[i + 1] - all[i];
      out.gap_window = std::make_pair(all[i], all[i + 1]);
    }
  if (all.empty()) return out;

  // A shift of the spectral variable keeps the exponentials of order one.
  const double base = all.front();
  for (double t : t_checks) {
    const double lhs = heat_sum(a, t) - heat_sum(b, t);
    const double integral = detail::integrate_against_xi(
        a, b, [&](double l) { return std::exp(-t * l); }, {}, [&](double top) { return std::exp(-t * top) / t; });
    const double scale = std::max(1.0, std::exp(-t * base));
    out.heat_identity_residual = std::max(out.heat_identity_residual, std::abs(lhs + t * integral) / scale);
  }

  // f(λ) = (1 − u²)⁴ on |u| < 1, u = (λ − centre)/width.
  const double centre = 0.5 * (all.front() + all.back());
  const double width = 0.5 * (all.back() - all.front()) + 1.0;
  auto f = [&](double l) {
    const double u = (l - centre) / width;
    return std::abs(u) < 1.0 ? std::pow(1.0 - u * u, 4) : 0.0;
  };
  auto fp = [&](double l) {
    const double u = (l - centre) / width;
    return std::abs(u) < 1.0 ? -8.0 * u * std::pow(1.0 - u * u, 3) / width : 0.0;
  };
  CompensatedSum lhs;
  for (double x : a.eigenvalues) lhs.add(f(x));
  for (double x : b.eigenvalues) lhs.add(-f(x));
  const double rhs = detail::integrate_against_xi(a, b, fp, {centre - width, centre + width},
                                                  [&](double top) { return -f(top); });
  out.test_function_residual = std::abs(lhs.value() - rhs);
  return out;
}

// ---------------------------------------------------------------------------
// Scattering index

struct IndexReport {
  double relative_index = 0.0;
  double t_constancy_drift = 0.0;
  std::optional<long> ind_a;
  std::optional<long> ind_b;
  double nc_scattering = 0.0;
  bool near_integer = false;
  bool gap_certified = false;
  std::optional<double> xi_plus_gap;  ///< ξ⁺ just above zero
  std::optional<double> xi_minus_gap;
};

namespace detail {

inline IndexReport finish_index(const std::vector<double>& str, const GradedSpectra& ga, const GradedSpectra& gb) {
  IndexReport r;
  double mean = 0.0;
  for (double x : str) mean += x;
  r.relative_index = str.empty() ? 0.0 : mean / double(str.size());
  r.t_constancy_drift = drift(str);
  r.near_integer = std::abs(r.relative_index - std::round(r.relative_index)) < 1e-6;
  r.ind_a = long(ga.plus.kernel_dim) - long(ga.minus.kernel_dim);
  r.ind_b = long(gb.plus.kernel_dim) - long(gb.minus.kernel_dim);
  const double gap = std::min({ga.plus.gap_mu, ga.minus.gap_mu, gb.plus.gap_mu, gb.minus.gap_mu});
  r.gap_certified = gap > 0.0;
  r.nc_scattering = r.relative_index - double(*r.ind_a - *r.ind_b);
  if (std::isfinite(gap) && gap > 0.0) {
    // Per-parity shift functions inside the gap (0, μ): ξ^± = N_{H′^±} − N_{H^±}.
    const double probe = 0.5 * gap;
    r.xi_plus_gap = double(counting_function(gb.plus, probe)) - double(counting_function(ga.plus, probe));
    r.xi_minus_gap = double(counting_function(gb.minus, probe)) - double(counting_function(ga.minus, probe));
  }
  if (r.gap_certified && std::abs(r.nc_scattering) > 1e-8)
    throw NumericalError("scattering index n^c = " + std::to_string(r.nc_scattering) +
                         " is nonzero although both operators have a spectral gap");
  return r;
}

inline std::vector<Eigen::Index> support(const std::vector<int>& proj) {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < proj.size(); ++i)
    if (proj[i]) idx.push_back(Eigen::Index(i));
  return idx;
}

}  // namespace detail

/// ind(D, D′) from the supertrace, ind_{a,d} from kernel dimensions and n^c = ind − ind_{a,d}.
inline IndexReport scattering_index(const GradedPair& pair, const std::vector<double>& tgrid) {
  const auto s = relative_supertrace(pair, tgrid);
  return detail::finish_index(*s.supertrace, graded_square_spectra(pair.d), graded_square_spectra(pair.d_prime));
}

inline IndexReport scattering_index(const PaddedPair& pair, const std::vector<double>& tgrid) {
  const auto s = relative_supertrace(pair, tgrid);
  auto natural = [](const SelfAdjointOperator& op, const std::vector<int>& proj) {
    const auto idx = detail::support(proj);
    const SelfAdjointOperator sub = restrict_to(op, idx, op.label());
    std::vector<int> tau;
    for (auto i : idx) tau.push_back((*op.grading())[std::size_t(i)]);
    const SelfAdjointOperator graded(sub.space(), sub.sparse(), op.label(), tau, op.odd());
    return graded_square_spectra(graded);
  };
  return detail::finish_index(*s.supertrace, natural(pair.op_a, pair.proj_p), natural(pair.op_b, pair.proj_p2));
}

// ---------------------------------------------------------------------------
// Supersymmetric scattering certificate

struct ScatteringCertificate {
  std::vector<double> t;
  std::vector<double> heat_curve;    ///< ‖e^{−tH} − e^{−tH′}‖₁
  std::vector<double> charge_curve;  ///< ‖De^{−tD²} − D′e^{−tD′²}‖₁
  double heat_sup = 0.0;
  double charge_sup = 0.0;
  bool granted = false;
};

inline ScatteringCertificate susy_scattering_certificate(const GradedPair& pair, const std::vector<double>& ts) {
  ScatteringCertificate c;
  c.t = ts;
  c.heat_curve = trace_norm_curve(pair.d, pair.d_prime, ts, TraceNormKind::heat);
  c.charge_curve = trace_norm_curve(pair.d, pair.d_prime, ts, TraceNormKind::odd);
  bool finite = true;
  for (double x : c.heat_curve) {
    finite = finite && std::isfinite(x);
    c.heat_sup = std::max(c.heat_sup, x);
  }
  for (double x : c.charge_curve) {
    finite = finite && std::isfinite(x);
    c.charge_sup = std::max(c.charge_sup, x);
  }
  c.granted = finite;
  return c;
}

}  // namespace relspec
