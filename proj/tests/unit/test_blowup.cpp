#include <doctest.h>

#include <chrono>
#include <cmath>
#include <memory>

#include "fracfreq/blowup.hpp"
#include "fracfreq/extension.hpp"

using namespace fracfreq;

namespace {

GridFunction sample(const SpatialGrid& g, double (*f)(const Vec&)) {
  Eigen::VectorXd v(g.size());
  for (int i = 0; i < g.size(); ++i) v[i] = f(g.point(i));
  return GridFunction(g, v);
}

}  // namespace

TEST_CASE("ball averages of monomials") {
  const auto g = SpatialGrid::line(-1, 1, 199);
  const auto x = sample(g, [](const Vec& p) { return p[0]; });
  const auto x2 = sample(g, [](const Vec& p) { return p[0] * p[0]; });
  const Vec c = g.point(g.origin_index());
  for (double r : {0.25, 0.1, 0.0625}) {
    CHECK(ball_average(x, c, r) == doctest::Approx(r / std::sqrt(3.0)).epsilon(1e-12));
    // Interpolation error of x^2 is at most h^2 / 4.
    CHECK(std::abs(ball_average(x2, c, r) - r * r / std::sqrt(5.0)) < 0.01 * 0.01);
  }
  CHECK_THROWS_AS(ball_average(x, c, 1.5), std::invalid_argument);

  const SpatialGrid g2({Axis{-1, 1, 79}, Axis{-1, 1, 79}});
  const auto x1 = sample(g2, [](const Vec& p) { return p[0]; });
  // Mean of x1^2 over a disk is r^2 / 4.
  CHECK(ball_average(x1, g2.point(g2.origin_index()), 0.5) == doctest::Approx(0.25).epsilon(1e-2));
}

TEST_CASE("vanishing order of monomials") {
  const auto g = SpatialGrid::line(-1, 1, 199);
  const int o = g.origin_index();
  const auto radii = dyadic_radii(0.25);
  const auto x = vanishing_order(sample(g, [](const Vec& p) { return p[0]; }), o, radii);
  CHECK(x.verdict == OrderVerdict::Finite);
  CHECK(std::abs(x.d - 1.0) < 0.05);
  for (double slope : x.pairwise_slopes) CHECK(slope == doctest::Approx(1.0).epsilon(1e-10));
  const auto x2 = vanishing_order(sample(g, [](const Vec& p) { return p[0] * p[0]; }), o, radii);
  CHECK(std::abs(x2.d - 2.0) < 0.05);
  CHECK(x2.q_values.size() == 4);
  CHECK(x2.radii.front() > x2.radii.back());

  const auto x3 = vanishing_order(sample(g, [](const Vec& p) { return p[0] * p[0] * p[0]; }), o, radii);
  CHECK(std::abs(x3.d - 3.0) < 0.1);

  const auto shifted = vanishing_order(sample(g, [](const Vec& p) { return 1.0 + p[0]; }), o, radii);
  CHECK(shifted.verdict == OrderVerdict::OrderZero);
  const auto zero = vanishing_order(GridFunction::zeros(g), o, radii);
  CHECK(zero.verdict == OrderVerdict::LocallyTrivial);
  CHECK_THROWS_AS(vanishing_order(sample(g, [](const Vec& p) { return p[0]; }), o, dyadic_radii(0.01)),
                  std::invalid_argument);
}

TEST_CASE("vanishing order in two dimensions") {
  const SpatialGrid g({Axis{-1, 1, 79}, Axis{-1, 1, 79}});
  const auto est = vanishing_order(sample(g, [](const Vec& p) { return p[0] * p[1]; }),
                                   g.origin_index(), dyadic_radii(0.5));
  CHECK(std::abs(est.d - 2.0) < 0.1);
}

TEST_CASE("blow-up of the linear field") {
  const FractionalOrder s(0.5);
  const auto a = ExtendedCoefficient::identity(2);
  auto x = std::make_shared<AnalyticField>(AnalyticField::linear(2, 0));
  const double H1 = height(*x, a, s, 1.0).value;
  for (double tau : {0.25, 0.5, 0.75}) {
    const auto rec = rescale(x, a, s, tau);
    CHECK(rec.H1.value == doctest::Approx(1.0).epsilon(1e-8));
    // Homogeneity: U_tau = x / sqrt(H(1)).
    Vec z(2);
    z << 0.3, -0.2;
    CHECK(rec.field->value(z) == doctest::Approx(0.3 / std::sqrt(H1)).epsilon(1e-10));
    for (const auto& t : rec.transport) {
      CHECK(t.N_rescaled == doctest::Approx(1.0).epsilon(1e-6));
      CHECK(t.N_direct == doctest::Approx(1.0).epsilon(1e-6));
    }
    CHECK(rec.D1.value == doctest::Approx(1.0).epsilon(1e-6));
  }
  CHECK_THROWS_AS(rescale(x, a, s, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rescale(x, a, s, 0.0), std::invalid_argument);
}

TEST_CASE("blow-up of a sampled eigenmode") {
  const auto grid = SpatialGrid::line(-1, 1, 99);
  const auto op = assemble_operator(grid, CoefficientField::identity(1));
  const auto spec = eigendecompose(op);
  const FractionalOrder s(0.5);
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(spec.size());
  coef[0] = 1.0;
  const auto ext = extend_semigroup(spec, s, synthesize(spec, coef), YGrid(default_height(spec), 100, 2.0));
  auto field = std::make_shared<GridFieldSampler>(reflect_even(ext));
  const auto a = ExtendedCoefficient::identity(2);
  const auto rec = rescale(field, a, s, 0.5);
  CHECK(rec.H1.value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rec.max_transport_error() < 1e-6);
  CHECK_THROWS_AS(rescale(field, a, s, 0.05), std::invalid_argument);
}
