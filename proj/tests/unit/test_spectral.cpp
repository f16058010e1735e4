#include <doctest.h>

#include <cmath>
#include <random>

#include "fracfreq/spectral.hpp"

using namespace fracfreq;

namespace {

struct Setup {
  SpatialGrid grid = SpatialGrid::line(-1.0, 1.0, 199);
  DiscreteOperator op = assemble_operator(grid, CoefficientField::identity(1));
  SpectralDecomposition spec = eigendecompose(op);
};

const Setup& setup() {
  static const Setup s;
  return s;
}

GridFunction random_function(const SpatialGrid& grid, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(grid.size());
  for (int i = 0; i < grid.size(); ++i) v[i] = normal(rng);
  return GridFunction(grid, v);
}

GridFunction mode(const SpectralDecomposition& spec, int j) {
  return GridFunction(spec.grid, spec.eigenvectors.col(j));
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("order must lie strictly inside (0,1)") {
  CHECK_THROWS_AS(FractionalOrder(0.0), std::invalid_argument);
  CHECK_THROWS_AS(FractionalOrder(1.0), std::invalid_argument);
  CHECK(FractionalOrder(0.25).weight_exponent() == 0.5);
}

TEST_CASE("grid function rejects bad sizes and non-finite values") {
  const auto& g = setup().grid;
  CHECK_THROWS(GridFunction(g, Eigen::VectorXd::Zero(3)));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(g.size());
  v[4] = NAN;
  CHECK_THROWS(GridFunction(g, v));
}

TEST_CASE("heat semigroup") {
  const auto& spec = setup().spec;
  const GridFunction u = random_function(spec.grid, 1);
  CHECK(heat_semigroup(spec, 0.0, u).values == u.values);
  const GridFunction e = mode(spec, 4);
  const double t = 0.013;
  CHECK(rel(heat_semigroup(spec, t, e).values, std::exp(-t * spec.eigenvalues[4]) * e.values) <
        1e-12);
  const auto composed = heat_semigroup(spec, 0.01, heat_semigroup(spec, 0.02, u));
  CHECK(rel(composed.values, heat_semigroup(spec, 0.03, u).values) < 1e-12);
  CHECK_THROWS(heat_semigroup(spec, -1.0, u));
}

TEST_CASE("fractional powers") {
  const auto& spec = setup().spec;
  const FractionalOrder s(0.3);
  for (int j : {0, 5, 100}) {
    const GridFunction e = mode(spec, j);
    CHECK(rel(fractional_apply(spec, s, e).values,
              std::pow(spec.eigenvalues[j], 0.3) * e.values) < 1e-12);
  }
  const GridFunction u = random_function(spec.grid, 2);
  const auto twice = fractional_apply(spec, FractionalOrder(0.2), fractional_apply(spec, s, u));
  CHECK(rel(twice.values, fractional_apply(spec, FractionalOrder(0.5), u).values) < 1e-12);
  const auto a = heat_semigroup(spec, 0.01, fractional_apply(spec, s, u));
  const auto b = fractional_apply(spec, s, heat_semigroup(spec, 0.01, u));
  CHECK(rel(a.values, b.values) < 1e-12);
}

TEST_CASE("order close to one approaches the local operator") {
  const auto& [grid, op, spec] = setup();
  Eigen::VectorXd v(grid.size());
  for (int i = 0; i < grid.size(); ++i) {
    const double x = grid.point(i)[0];
    v[i] = std::cos(kPi * x / 2.0) * (1.0 + 0.3 * x);
  }
  const GridFunction u(grid, v);
  const Eigen::VectorXd direct = op.matrix * v;
  CHECK(rel(fractional_apply(spec, FractionalOrder(0.999), u).values, direct) < 0.02);
}

TEST_CASE("symmetry and positivity of the fractional form") {
  const auto& spec = setup().spec;
  const FractionalOrder s(0.6);
  const GridFunction u = random_function(spec.grid, 3), v = random_function(spec.grid, 4);
  const double a = inner(fractional_apply(spec, s, u), v);
  const double b = inner(u, fractional_apply(spec, s, v));
  CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
  const double form = inner(fractional_apply(spec, s, u), u);
  CHECK(form >= std::pow(spec.eigenvalues[0], 0.6) * inner(u, u) * (1.0 - 1e-10));
}

TEST_CASE("fractional Sobolev norm") {
  const auto& spec = setup().spec;
  CHECK(hs_norm(spec, FractionalOrder(0.5), GridFunction::zeros(spec.grid)) == 0.0);
  const GridFunction e = mode(spec, 2);
  CHECK(hs_norm(spec, FractionalOrder(0.5), e) ==
        doctest::Approx(std::sqrt(1.0 + std::sqrt(spec.eigenvalues[2]))).epsilon(1e-12));
  const GridFunction top = mode(spec, spec.size() - 1);
  REQUIRE(spec.eigenvalues[spec.size() - 1] > 1.0);
  const double n1 = hs_norm(spec, FractionalOrder(0.25), top);
  const double n2 = hs_norm(spec, FractionalOrder(0.5), top);
  const double n3 = hs_norm(spec, FractionalOrder(0.75), top);
  CHECK(n1 < n2);
  CHECK(n2 < n3);
}

TEST_CASE("harmonic replacement") {
  const auto& spec = setup().spec;
  const auto mask = centered_mask(spec.grid, 0.5);
  CHECK(solve_s_harmonic(spec, FractionalOrder(0.5), mask, GridFunction::zeros(spec.grid))
            .u.values.norm() == 0.0);

  const int mid = spec.grid.origin_index();
  const GridFunction g = random_function(spec.grid, 5);
  const auto local = solve_s_harmonic(spec, 1.0, {mid}, g);
  CHECK(local.u.values[mid] ==
        doctest::Approx(0.5 * (g.values[mid - 1] + g.values[mid + 1])).epsilon(1e-10));

  const auto sol = solve_s_harmonic(spec, FractionalOrder(0.5), mask, g);
  CHECK(sol.residual < 1e-9);
  const Eigen::VectorXd fu = spectral_power_matrix(spec, 0.5) * sol.u.values;
  double interior = 0.0;
  for (int i : mask) interior = std::max(interior, std::abs(fu[i]));
  CHECK(interior < 1e-8 * fu.cwiseAbs().maxCoeff());
  for (int i = 0; i < spec.size(); ++i) {
    if (std::find(mask.begin(), mask.end(), i) == mask.end()) CHECK(sol.u.values[i] == g.values[i]);
  }
  CHECK(sol.exterior_min <= 0.0);
  CHECK(sol.exterior_max >= 0.0);
}
