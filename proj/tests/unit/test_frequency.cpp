#include <doctest.h>

#include <cmath>
#include <memory>

#include "fracfreq/frequency.hpp"
#include "oracles.hpp"

using namespace fracfreq;

namespace {

const ExtendedCoefficient kId = ExtendedCoefficient::identity(2);

/// int_0^{2 pi} |sin t|^a cos^2 t dt and int |sin t|^a dt by a graded midpoint
/// rule in t^{1/(a+1)}-like substitution: sin t = u, both reduce to Beta
/// functions B((a+1)/2, 3/2) and B((a+1)/2, 1/2).
double beta_fn(double p, double q) { return std::tgamma(p) * std::tgamma(q) / std::tgamma(p + q); }

double sphere_height_x(double a) { return 2.0 * beta_fn((a + 1) / 2, 1.5); }
double sphere_mass_one(double a) { return 2.0 * beta_fn((a + 1) / 2, 0.5); }

}  // namespace

TEST_CASE("closed forms at order one half") {
  const FractionalOrder s(0.5);
  const auto x = AnalyticField::linear(2, 0);
  const auto one = AnalyticField::constant(2, 1.0);
  for (double r : {0.1, 0.37, 0.8}) {
    CHECK(height(one, kId, s, r).value == doctest::Approx(2 * kPi * r).epsilon(1e-8));
    CHECK(height(x, kId, s, r).value == doctest::Approx(kPi * r * r * r).epsilon(1e-6));
    CHECK(dirichlet(x, kId, s, r).value == doctest::Approx(kPi * r * r).epsilon(1e-6));
    CHECK(std::abs(dirichlet(one, kId, s, r).value) < 1e-12);
  }
}

TEST_CASE("weighted heights scale with the weight exponent") {
  for (double sv : {0.25, 0.75}) {
    const FractionalOrder s(sv);
    const double a = s.weight_exponent();
    const auto one = AnalyticField::constant(2, 1.0);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const std::vector<double> radii{0.1, 0.2, 0.3, 0.5, 0.8};
    for (double r : radii) {
      const double h = height(one, kId, s, r).value;
      CHECK(h == doctest::Approx(sphere_mass_one(a) * std::pow(r, 1 + a)).epsilon(1e-8));
      sx += std::log(r);
      sy += std::log(h);
      sxx += std::log(r) * std::log(r);
      sxy += std::log(r) * std::log(h);
    }
    const double m = radii.size();
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(std::abs(slope - (2.0 - 2.0 * sv)) < 1e-4);
    const auto x = AnalyticField::linear(2, 0);
    CHECK(height(x, kId, s, 0.4).value ==
          doctest::Approx(sphere_height_x(a) * std::pow(0.4, 3 + a)).epsilon(1e-8));
    const double d1 = dirichlet(x, kId, s, 0.2).value, d2 = dirichlet(x, kId, s, 0.4).value;
    CHECK(d2 / d1 == doctest::Approx(std::pow(2.0, 3.0 - 2.0 * sv)).epsilon(1e-4));
  }
}

TEST_CASE("linear field has unit frequency") {
  std::vector<double> radii;
  for (int k = 0; k < 10; ++k) radii.push_back(0.1 + 0.07 * k);
  for (double sv : {0.25, 0.5, 0.75}) {
    const FractionalOrder s(sv);
    const auto prof = frequency_profile(AnalyticField::linear(2, 0), kId, s, radii);
    for (const auto& p : prof.samples) {
      CHECK(std::abs(p.N - 1.0) < 1e-4);
      CHECK(p.rhoH * p.r < 1e-7);
      CHECK(p.rhoD * p.r < 1e-7);
      CHECK(p.B * p.H - p.S * p.S >= -1e-6 * p.B * p.H);
      CHECK(p.tangentiality < 1e-12);
    }
    const auto mono = monotonicity_report(prof);
    CHECK(mono.C_min <= 1e-3);
    const auto g = gamma_limit(prof);
    CHECK(std::abs(g.gamma - 1.0) < 1e-3);
    CHECK_FALSE(g.low_confidence);
    const auto hb = height_lower_bound_check(prof, g.gamma, 0.01);
    CHECK(hb.passed);
    CHECK(hb.slope_deviation < 1e-3);
  }
}

TEST_CASE("constant field has zero frequency") {
  std::vector<double> radii;
  for (int k = 0; k < 10; ++k) radii.push_back(0.1 + 0.05 * k);
  const FractionalOrder s(0.5);
  const auto prof = frequency_profile(AnalyticField::constant(2, 2.0), kId, s, radii);
  for (const auto& p : prof.samples) CHECK(p.N == 0.0);
  CHECK(monotonicity_report(prof).C_min == 0.0);
  const auto g = gamma_limit(prof);
  CHECK(g.gamma == 0.0);
  const auto hb = height_lower_bound_check(prof, 0.0, 0.01);
  CHECK(hb.passed);
  CHECK(hb.slope == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("doubling ratios") {
  const FractionalOrder s(0.5);
  // Ball mass of x^2 is pi r^4 / 4, of 1 is pi r^2; the sphere height of x is pi r^3.
  const auto x = doubling_report(AnalyticField::linear(2, 0), kId, s, {0.1, 0.2, 0.4});
  for (double q : x.ratios) CHECK(q == doctest::Approx(16.0).epsilon(1e-3));
  const auto lin = AnalyticField::linear(2, 0);
  CHECK(height(lin, kId, s, 0.6).value / height(lin, kId, s, 0.3).value ==
        doctest::Approx(8.0).epsilon(1e-8));
  const auto one = doubling_report(AnalyticField::constant(2, 1.0), kId, s, {0.1, 0.2, 0.4});
  for (double q : one.ratios) CHECK(q == doctest::Approx(4.0).epsilon(1e-3));
  CHECK(one.variation < 1e-6);
}

TEST_CASE("zero field is reported as trivial") {
  std::vector<double> radii{0.1, 0.2};
  CHECK_THROWS_AS(frequency_profile(AnalyticField::constant(2, 0.0), kId, FractionalOrder(0.5), radii),
                  TrivialFieldError);
}

TEST_CASE("geometric weight bounds") {
  const SpatialGrid grid = SpatialGrid::line(-2.0, 2.0, 99);
  for (double eps : {0.0, 0.1}) {
    const auto a = ExtendedCoefficient::from_spatial(catalog_coefficient("id_plus_eps_sin", grid, eps));
    const auto rep = sample_weight_bounds(a, 1.0, 500, 3);
    CHECK(rep.mu_min >= a.ellipticity() - 1e-14);
    CHECK(rep.mu_max <= 1.0 / a.ellipticity() + 1e-14);
    CHECK(rep.beta_ratio_max <= 1.0 / a.ellipticity() + 1e-12);
    CHECK(rep.beta_radial_error < 1e-12);
    CHECK(rep.dmu_dr_max <= a.lipschitz() + 1e-6);
    CHECK(std::isfinite(rep.jacobian_constant));
    if (eps == 0.0) CHECK(rep.jacobian_constant < 1e-6);
  }
}

TEST_CASE("tangentiality with a variable coefficient") {
  const SpatialGrid grid = SpatialGrid::line(-2.0, 2.0, 99);
  const auto a = ExtendedCoefficient::from_spatial(catalog_coefficient("id_plus_eps_sin", grid, 0.1));
  const auto m = surface_moments(AnalyticField::linear(2, 0), a, FractionalOrder(0.3), 0.5);
  CHECK(m.tangentiality < 1e-12);
  CHECK(m.B * m.H >= m.S * m.S);
}

TEST_CASE("scale equivariance") {
  const FractionalOrder s(0.4);
  auto base = std::make_shared<AnalyticField>(
      2, [](const Vec& z) { return z[0] * z[0] - 0.3 * z[1] * z[1] + z[0] + 0.2; },
      [](const Vec& z) { Vec g(2); g << 2 * z[0] + 1.0, -0.6 * z[1]; return g; }, "quad");
  const double c = 0.5;
  const RescaledField scaled(base, c, 1.0);
  const std::vector<double> radii{0.2, 0.4};
  const auto p1 = frequency_profile(scaled, kId, s, radii);
  const auto p2 = frequency_profile(*base, kId, s, {0.1, 0.2});
  for (int k = 0; k < 2; ++k) CHECK(p1.samples[k].N == doctest::Approx(p2.samples[k].N).epsilon(1e-7));
}

TEST_CASE("sampler reproduces fields that its interpolant contains") {
  // U = x + 3 y^2 sign(y)|y|^0 ... use U = x * (1 + eta), eta = |y|^{2s}: bicubic in (x, eta).
  const double sv = 0.3;
  const SpatialGrid grid = SpatialGrid::line(-1.0, 1.0, 39);
  ExtensionField f;
  f.grid = grid;
  f.s = sv;
  f.y = mirrored_nodes(YGrid(1.0, 20, 2.0));
  f.values.resize(f.levels(), grid.size());
  auto exact = [&](double x, double y) {
    return (1.0 - x * x) * (1.0 + std::pow(std::abs(y), 2 * sv));
  };
  for (int j = 0; j < f.levels(); ++j)
    for (int i = 0; i < grid.size(); ++i) f.values(j, i) = exact(grid.point(i)[0], f.y[j]);
  const GridFieldSampler sampler(f);
  CHECK(sampler.admissible_radius() == 1.0);
  for (double x : {-0.93, -0.2, 0.0, 0.41}) {
    for (double y : {-0.7, -0.01, 1e-6, 0.3}) {
      Vec z(2);
      z << x, y;
      CHECK(sampler.value(z) == doctest::Approx(exact(x, y)).epsilon(2e-3));
    }
  }
  const auto breaks = sampler.circle_breaks(0.5);
  CHECK(!breaks.empty());
}
