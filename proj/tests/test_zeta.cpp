#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "relspec/zeta.hpp"

using namespace relspec;

namespace {

// ζ(s) = Σ (πk/L)^{−2s} = (L/π)^{2s} ζ_R(2s)
double dirichlet_zeta(double L, double s) { return std::pow(L / std::numbers::pi, 2.0 * s) * oracle::riemann_zeta(2.0 * s); }

}  // namespace

TEST(Gamma, ReciprocalGammaAtPolesAndRegularPoints) {
  EXPECT_EQ(rgamma(0.0), 0.0);
  EXPECT_EQ(rgamma(-2.0), 0.0);
  EXPECT_NEAR(rgamma(0.5), 1.0 / std::sqrt(std::numbers::pi), 1e-15);
  EXPECT_NEAR(rgamma(-0.5), -0.5 / std::sqrt(std::numbers::pi), 1e-15);
}

TEST(RelativeZeta, DirichletPairMatchesRiemannZeta) {
  const double l1 = 1.0, l2 = 3.0;
  const auto trace = make_relative_trace(ExplicitSpectrum::dirichlet_interval(l1), ExplicitSpectrum::dirichlet_interval(l2));
  EXPECT_EQ(trace.h, 0.0);
  const auto fit = fit_expansion(trace);
  EXPECT_NEAR(fit.coefficient(-0.5), (l1 - l2) / (2.0 * std::sqrt(std::numbers::pi)), 1e-10);
  EXPECT_NEAR(fit.coefficient(0.0), 0.0, 1e-10);
  for (double s : {-1.3, -0.4, 0.3, 0.8, 1.7}) {
    const double ref = dirichlet_zeta(l1, s) - dirichlet_zeta(l2, s);
    EXPECT_NEAR(relative_zeta(trace, fit, s), ref, 1e-8 * std::max(1.0, std::abs(ref))) << "s=" << s;
  }
}

TEST(RelativeZeta, ValueDerivativeAndPolesAtZero) {
  const double l1 = 1.0, l2 = 2.0;
  const auto trace = make_relative_trace(ExplicitSpectrum::dirichlet_interval(l1), ExplicitSpectrum::dirichlet_interval(l2));
  const auto z = relative_zeta_at_zero(trace, fit_expansion(trace));
  EXPECT_NEAR(z.value_at_zero, 0.0, 1e-10);
  EXPECT_NEAR(z.derivative_at_zero, oracle::dirichlet_zeta_prime(l1) - oracle::dirichlet_zeta_prime(l2), 1e-8);
  EXPECT_NEAR(relative_determinant(z), 0.5, 1e-8);
  ASSERT_FALSE(z.poles.empty());
  EXPECT_DOUBLE_EQ(z.poles.front().position, 0.5);
  EXPECT_NEAR(z.poles.front().residue, (l1 - l2) / (2.0 * std::numbers::pi), 1e-10);
  EXPECT_NEAR(z.expansion_part + z.remainder_part + z.large_t_part + z.constant_part, z.derivative_at_zero, 1e-14);
}

TEST(RelativeZeta, CircleLaplacians) {
  const double l1 = 1.0, l2 = 2.5;
  const auto a = ExplicitSpectrum::circle_laplace(l1), b = ExplicitSpectrum::circle_laplace(l2);
  const auto z = zeta_of_pair(a, b);
  EXPECT_NEAR(z.derivative_at_zero, oracle::circle_zeta_prime(l1) - oracle::circle_zeta_prime(l2), 1e-8);
  EXPECT_NEAR(z.value_at_zero, 0.0, 1e-10);
}

TEST(RelativeZeta, SplitPointDoesNotMatter) {
  const auto trace = make_relative_trace(ExplicitSpectrum::dirichlet_interval(1.5), ExplicitSpectrum::dirichlet_interval(0.7));
  const auto fit = fit_expansion(trace);
  const double base = relative_zeta_at_zero(trace, fit).derivative_at_zero;
  for (double c : {0.3, 2.0}) EXPECT_NEAR(relative_zeta_at_zero(trace, fit, {.split = c}).derivative_at_zero, base, 1e-9);
}

TEST(RelativeZeta, GapHypothesis) {
  RelativeTrace t;
  t.value = [](double) { return 0.0; };
  t.gap = 0.0;
  EXPECT_THROW(relative_zeta_at_zero(t, AsymptoticFit{}), HypothesisError);
  EXPECT_THROW(relative_zeta(t, AsymptoticFit{}, 0.3), HypothesisError);
}

TEST(RelativeTrace, PlateauMustMatchKernelDifference) {
  // A negative eigenvalue makes the trace grow instead of settling on h.
  const auto a = make_spectrum({-0.5, 1.0, 2.0}), b = make_spectrum({3.0, 4.0});
  EXPECT_EQ(a.kernel_dim, 0u);
  EXPECT_THROW(make_relative_trace(a, b), NumericalError);
  const auto c = make_spectrum({0.0, 1.0, 2.0});
  const auto rt = make_relative_trace(c, b);
  EXPECT_EQ(rt.h, 1.0);
  EXPECT_DOUBLE_EQ(rt.gap, 1.0);
  EXPECT_DOUBLE_EQ(rt.lambda_max, 4.0);
}

TEST(Fit, RecoversAnExactExpansion) {
  RelativeTrace t;
  t.value = [](double x) { return 0.7 / std::sqrt(x) + 0.2 - 0.3 * x + 0.05 * x * x; };
  t.gap = 1.0;
  const auto fit = fit_expansion(t);
  EXPECT_NEAR(fit.coefficient(-0.5), 0.7, 1e-9);
  EXPECT_NEAR(fit.coefficient(0.0), 0.2, 1e-9);
  EXPECT_NEAR(fit.coefficient(1.0), -0.3, 1e-7);
  EXPECT_NEAR(fit.coefficient(0.5), 0.0, 1e-7);
  EXPECT_LT(fit.residual, 1e-10);
  EXPECT_NEAR(fit.evaluate(0.01), t.value(0.01), 1e-9);
  const auto custom = fit_expansion(t, {.exponents = std::vector<double>{-0.5, 0.0, 1.0, 2.0}});
  EXPECT_NEAR(custom.coefficient(2.0), 0.05, 1e-6);
}

TEST(Fit, FromStoredSamples) {
  const double l1 = 2.0, l2 = 1.0;
  const auto a = ExplicitSpectrum::dirichlet_interval(l1), b = ExplicitSpectrum::dirichlet_interval(l2);
  const auto samples = relative_heat_trace(a, b, log_grid(1e-3, 20.0, 96));
  // Below t = 0.04 the e^{−L²/t} corrections are under 1e−10.
  const auto fit = fit_expansion(samples, 1, {.t_hi = 0.04});
  EXPECT_NEAR(fit.h, 0.0, 1e-12);
  EXPECT_NEAR(fit.coefficient(-0.5), (l1 - l2) / (2.0 * std::sqrt(std::numbers::pi)), 1e-7);
  EXPECT_THROW(fit_expansion(samples, 2), DomainError);
  EXPECT_THROW(fit_expansion(relative_heat_trace(a, b, log_grid(0.1, 20.0, 32))), PreconditionError);
  EXPECT_THROW(fit_expansion(relative_heat_trace(a, b, log_grid(1e-3, 20.0, 12)), 1, {.t_hi = 2e-3}), FitError);
}

TEST(Torsion, CircleMetricsAgainstClosedForm) {
  const double l1 = 2.0 * std::numbers::pi, l2 = 3.0 * std::numbers::pi;
  const auto grid = Grid1D::circle(l1, 512);
  const MetricData ga(grid, ScalarField::constant(grid, 1.0));
  const MetricData gb(grid, ScalarField::constant(grid, (l2 / l1) * (l2 / l1)));
  const auto forward = relative_torsion(ga, gb);
  const auto backward = relative_torsion(gb, ga);
  const double closed = -(oracle::circle_zeta_prime(l1) - oracle::circle_zeta_prime(l2));
  EXPECT_NEAR(forward.log_torsion, closed, 2e-3);
  EXPECT_NEAR(forward.log_torsion, -backward.log_torsion, 1e-8);
  EXPECT_NEAR(forward.zeta_prime_0, forward.zeta_prime_1, 1e-6);  // Δ₀ and Δ₁ are isospectral on the circle
  const auto interval = Grid1D::interval(0.0, 1.0, 16);
  const MetricData gi(interval, ScalarField::constant(interval, 1.0));
  EXPECT_THROW(relative_torsion(gi, gi), DomainError);
}

TEST(Eta, ShiftedIntegersMatchHurwitz) {
  for (double a : {0.1, 0.25, 0.6}) {
    const auto r = relative_eta(ExplicitSpectrum::shifted_integers(a), ExplicitSpectrum::shifted_integers(0.0),
                                {-0.5, 0.5});
    ASSERT_TRUE(r.regular) << a;
    EXPECT_NEAR(r.eta_at_zero, oracle::circle_eta_at_zero(a), 1e-8) << a;
    EXPECT_NEAR(r.eta_at_zero, 1.0 - 2.0 * a, 1e-8) << a;
    ASSERT_EQ(r.samples.size(), 2u);
    for (const auto& [s, v] : r.samples)
      EXPECT_NEAR(v, oracle::hurwitz_zeta(s, a) - oracle::hurwitz_zeta(s, 1.0 - a), 1e-7) << "a=" << a << " s=" << s;
  }
}

TEST(Eta, SwappingNegates) {
  const auto p = ExplicitSpectrum::shifted_integers(0.3), q = ExplicitSpectrum::shifted_integers(0.0);
  EXPECT_NEAR(relative_eta(p, q).eta_at_zero, -relative_eta(q, p).eta_at_zero, 1e-10);
}

TEST(Eta, SymmetricSpectraCancel) {
  const auto r = relative_eta(make_spectrum({-3.0, -1.0, 1.0, 3.0}), make_spectrum({-2.0, 2.0}));
  EXPECT_TRUE(r.regular);
  EXPECT_EQ(r.a_minus_half, 0.0);
  EXPECT_NEAR(r.eta_at_zero, 0.0, 1e-12);
}
