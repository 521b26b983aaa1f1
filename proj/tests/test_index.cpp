#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "relspec/builders.hpp"
#include "relspec/expression.hpp"
#include "relspec/index.hpp"

using namespace relspec;

namespace {

ScalarField field(const Grid1D& g, const char* text) { return Expression::parse(text).sample(g); }

GradedPair susy(const Grid1D& g, const char* w, const char* w2) { return build_susy_pair(g, field(g, w), field(g, w2)); }

}  // namespace

TEST(Supertrace, HarmonicOscillatorIsOne) {
  const auto grid = Grid1D::line_truncated(8.0, 400);
  const auto pair = susy(grid, "x", "x");
  const auto g = graded_square_spectra(pair.d);
  EXPECT_EQ(g.plus.kernel_dim, 1u);
  EXPECT_EQ(g.minus.kernel_dim, 0u);
  for (double t : {0.05, 0.5, 2.0, 10.0}) EXPECT_NEAR(supertrace(g, t), oracle::oscillator_supertrace(t), 1e-8) << t;
}

TEST(Supertrace, RelativeSupertraceIsConstantInT) {
  const auto grid = Grid1D::line_truncated(10.0, 600);
  const auto s = relative_supertrace(susy(grid, "x", "x + exp(-x^2)"), log_grid(0.2, 5.0, 10));
  ASSERT_TRUE(s.supertrace.has_value());
  EXPECT_TRUE(s.graded);
  EXPECT_LT(drift(*s.supertrace), 1e-8);
  EXPECT_NEAR(s.supertrace->front(), 0.0, 1e-8);
}

TEST(Supertrace, GradingRequirements) {
  const auto grid = Grid1D::interval(0.0, 1.0, 8);
  const auto plain = build_schrodinger(grid, ScalarField::constant(grid, 0.0));
  EXPECT_THROW(require_compatible_gradings(plain, plain), GradingError);
  EXPECT_THROW(witten_index(plain), GradingError);
  EXPECT_THROW(graded_square_spectra(plain), GradingError);
}

TEST(ScatteringIndex, VanishesForGappedPairs) {
  const auto grid = Grid1D::line_truncated(10.0, 600);
  for (const auto& [w, w2] : std::vector<std::pair<const char*, const char*>>{
           {"x", "x + 2*x*exp(-x^2)"}, {"-x", "-x + gauss(1, 0.7)"}, {"x^2 + 1", "x^2 + 1 + gauss(0, 1)"}}) {
    const auto rep = scattering_index(susy(grid, w, w2), log_grid(0.2, 5.0, 6));
    EXPECT_TRUE(rep.gap_certified) << w;
    EXPECT_NEAR(rep.nc_scattering, 0.0, 1e-8) << w;
    EXPECT_EQ(*rep.ind_a, *rep.ind_b) << w;
    EXPECT_TRUE(rep.near_integer) << w;
    EXPECT_LT(rep.t_constancy_drift, 1e-8) << w;
    ASSERT_TRUE(rep.xi_plus_gap.has_value());
    EXPECT_EQ(*rep.xi_plus_gap, 0.0);
    EXPECT_EQ(*rep.xi_minus_gap, 0.0);
  }
}

TEST(ScatteringIndex, PaddedPairAgreesWithTheDirectPair) {
  const auto grid = Grid1D::line_truncated(6.0, 121);
  const auto pair = susy(grid, "x", "x + exp(-x^2)");
  const std::size_t dim = pair.d.dimension();
  const auto padded = build_padded_pair(pair.d, pair.d_prime, {0, dim}, {0, dim}, 5);
  const auto ts = log_grid(0.3, 3.0, 5);
  const auto direct = relative_supertrace(pair, ts);
  const auto via_padding = relative_supertrace(padded, ts);
  for (std::size_t i = 0; i < ts.size(); ++i) {
    EXPECT_NEAR(via_padding.values[i], direct.values[i], 1e-9);
    EXPECT_NEAR((*via_padding.supertrace)[i], (*direct.supertrace)[i], 1e-9);
  }
  const auto rep = scattering_index(padded, ts);
  EXPECT_EQ(*rep.ind_a, 1);
  EXPECT_EQ(*rep.ind_b, 1);
  EXPECT_NEAR(rep.nc_scattering, 0.0, 1e-8);
}

TEST(ScatteringCertificate, TraceNormsStayFinite) {
  const auto grid = Grid1D::line_truncated(6.0, 121);
  const auto cert = susy_scattering_certificate(susy(grid, "x", "x + exp(-x^2)"), {0.5, 1.0, 2.0});
  EXPECT_TRUE(cert.granted);
  EXPECT_EQ(cert.heat_curve.size(), 3u);
  EXPECT_GT(cert.heat_sup, 0.0);
  EXPECT_GT(cert.charge_sup, 0.0);
  EXPECT_EQ(cert.heat_sup, *std::max_element(cert.heat_curve.begin(), cert.heat_curve.end()));
}

TEST(SpectralShift, StepFunctionOfTwoSpectra) {
  const auto a = make_spectrum({1.0, 2.0}), b = make_spectrum({1.0, 3.0});
  const auto s = spectral_shift(a, b, {0.5, 1.5, 2.5, 3.5});
  EXPECT_EQ(s.xi, (std::vector<double>{0.0, 0.0, -1.0, 0.0}));
  EXPECT_LT(s.heat_identity_residual, 1e-14);
  EXPECT_LT(s.test_function_residual, 1e-14);
  ASSERT_TRUE(s.gap_window.has_value());
  EXPECT_DOUBLE_EQ(s.gap_window->second - s.gap_window->first, 1.0);
}

TEST(SpectralShift, KreinIdentitiesForRandomSpectra) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2.0, 30.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> va(40 + 13 * std::size_t(trial)), vb(55);
    for (auto& x : va) x = u(rng);
    for (auto& x : vb) x = u(rng);
    const auto a = make_spectrum(va), b = make_spectrum(vb);
    const auto s = spectral_shift(a, b, {-3.0, 0.0, 10.0, 31.0});
    EXPECT_LT(s.heat_identity_residual, 1e-10) << trial;
    EXPECT_LT(s.test_function_residual, 1e-10) << trial;
    EXPECT_EQ(s.xi.front(), 0.0);
    EXPECT_EQ(s.xi.back(), double(vb.size()) - double(va.size()));
  }
}

TEST(SpectralShift, IntegralAgainstAnIndependentStepSum) {
  // −t∫e^{−tλ}ξ(λ)dλ summed piecewise in closed form equals the heat-trace difference.
  const auto a = make_spectrum({0.3, 1.1, 4.0}), b = make_spectrum({0.5, 2.0, 2.5, 7.0});
  std::vector<double> bp{0.3, 0.5, 1.1, 2.0, 2.5, 4.0, 7.0};
  const double t = 0.8;
  double integral = 0.0;
  for (std::size_t i = 0; i + 1 < bp.size(); ++i) {
    const double mid = 0.5 * (bp[i] + bp[i + 1]);
    const double xi = double(counting_function(b, mid)) - double(counting_function(a, mid));
    integral += xi * (std::exp(-t * bp[i]) - std::exp(-t * bp[i + 1])) / t;
  }
  integral += 1.0 * std::exp(-t * 7.0) / t;  // ξ = 1 above the last eigenvalue
  EXPECT_NEAR(heat_sum(a, t) - heat_sum(b, t), -t * integral, 1e-14);
  EXPECT_LT(spectral_shift(a, b, {1.0}, {t}).heat_identity_residual, 1e-14);
}
