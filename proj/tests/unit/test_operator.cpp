#include <doctest.h>

#include <cmath>
#include <random>

#include "fracfreq/operator.hpp"
#include "oracles.hpp"

using namespace fracfreq;

TEST_CASE("identity stencil is (2,-1)/h^2") {
  const SpatialGrid grid = SpatialGrid::line(-1.0, 1.0, 9);
  const auto op = assemble_operator(grid, CoefficientField::identity(1));
  const double h = grid.spacing(0);
  const Eigen::MatrixXd a = op.dense();
  for (int i = 0; i < 9; ++i) {
    CHECK(a(i, i) == doctest::Approx(2.0 / (h * h)).epsilon(1e-14));
    if (i + 1 < 9) CHECK(a(i, i + 1) == doctest::Approx(-1.0 / (h * h)).epsilon(1e-14));
  }
  CHECK((a - a.transpose()).norm() == 0.0);
}

TEST_CASE("operator is linear in the coefficient") {
  const SpatialGrid grid = SpatialGrid::line(-1.0, 1.0, 21);
  const auto one = assemble_operator(grid, CoefficientField::identity(1));
  const auto two = assemble_operator(
      grid, CoefficientField::scalar(1, [](const Vec&) { return 2.0; }, 0.5, 0.0, "2"));
  CHECK((two.dense() - 2.0 * one.dense()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("non-elliptic coefficient is rejected") {
  const SpatialGrid grid = SpatialGrid::line(-1.0, 1.0, 9);
  auto bad = CoefficientField::scalar(1, [](const Vec& x) { return x[0]; }, 0.5, 1.0, "x");
  CHECK_THROWS_AS(assemble_operator(grid, bad), std::domain_error);
}

TEST_CASE("closed-form finite difference eigenpairs on (0, pi)") {
  // Origin must be a node, so shift: (-pi/2, pi/2) has the same spectrum.
  const int m = 63;
  const SpatialGrid grid = SpatialGrid::line(-kPi / 2, kPi / 2, m);
  const auto spec = eigendecompose(assemble_operator(grid, CoefficientField::identity(1)));
  const double h = grid.spacing(0);
  for (int j = 1; j <= m; ++j) {
    const double exact = 4.0 / (h * h) * std::pow(std::sin(j * h / 2.0), 2);
    CHECK(spec.eigenvalues[j - 1] == doctest::Approx(exact).epsilon(1e-11));
  }
  for (int j : {1, 2, 7}) {
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) v[i] = std::sin(j * (i + 1) * h);
    v *= 1.0 / std::sqrt(h * v.squaredNorm());
    const Eigen::VectorXd e = spec.eigenvectors.col(j - 1);
    CHECK(std::min((e - v).norm(), (e + v).norm()) < 1e-8);
  }
}

TEST_CASE("eigendecomposition contract") {
  const SpatialGrid grid = SpatialGrid::line(-1.0, 1.0, 99);
  const auto coeff = catalog_coefficient("one_plus_quarter_x_sq", grid);
  const auto spec = eigendecompose(assemble_operator(grid, coeff));
  const Eigen::MatrixXd gram =
      spec.weight() * spec.eigenvectors.transpose() * spec.eigenvectors;
  CHECK((gram - Eigen::MatrixXd::Identity(99, 99)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(spec.eigenvalues.minCoeff() > 0.0);
  for (int j = 0; j + 1 < 99; ++j) CHECK(spec.eigenvalues[j] <= spec.eigenvalues[j + 1]);
  for (int j = 0; j < 99; ++j) {
    const auto& v = spec.eigenvectors.col(j);
    int first = 0;
    while (std::abs(v[first]) <= 1e-8 * v.cwiseAbs().maxCoeff()) ++first;
    CHECK(v[first] > 0.0);
  }
}

TEST_CASE("scaled operator scales the spectrum") {
  const SpatialGrid grid = SpatialGrid::line(-1.0, 1.0, 31);
  const auto base = eigendecompose(assemble_operator(grid, CoefficientField::identity(1)));
  const auto scaled = eigendecompose(assemble_operator(
      grid, CoefficientField::scalar(1, [](const Vec&) { return 3.0; }, 1.0 / 3.0, 0.0, "3")));
  CHECK((scaled.eigenvalues - 3.0 * base.eigenvalues).cwiseAbs().maxCoeff() <
        1e-10 * scaled.eigenvalues.maxCoeff());
  CHECK((scaled.eigenvectors - base.eigenvectors).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("smallest eigenvalue agrees with a fine-grid Sturm oracle") {
  const SpatialGrid coarse = SpatialGrid::line(-1.0, 1.0, 199);
  const auto coeff = catalog_coefficient("one_plus_quarter_x_sq", coarse);
  const auto spec = eigendecompose(assemble_operator(coarse, coeff));
  const double oracle =
      oracle::smallest_eigenvalue_sturm(3199, -1.0, 1.0, [](double x) { return 1.0 + x * x / 4.0; });
  CHECK(std::abs(spec.eigenvalues[0] - oracle) < 1e-3);
}

TEST_CASE("discrete Green identity") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  for (int n : {1, 2}) {
    const SpatialGrid grid = n == 1 ? SpatialGrid::line(-1.0, 1.0, 41)
                                    : SpatialGrid({Axis{-1, 1, 15}, Axis{-1, 1, 11}});
    const auto coeff = catalog_coefficient("id_plus_eps_sin", grid, 0.1);
    const auto op = assemble_operator(grid, coeff);
    Eigen::VectorXd u(grid.size()), v(grid.size());
    for (int i = 0; i < grid.size(); ++i) {
      u[i] = normal(rng);
      v[i] = normal(rng);
    }
    const double lhs = op.weight() * (op.matrix * u).dot(v);
    const double rhs = dirichlet_form(grid, coeff, u, v);
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
  }
}

TEST_CASE("eigenvalues converge at second order") {
  std::vector<double> errors;
  for (int m : {15, 31, 63}) {
    const SpatialGrid grid = SpatialGrid::line(-kPi / 2, kPi / 2, m);
    const auto spec = eigendecompose(assemble_operator(grid, CoefficientField::identity(1)));
    errors.push_back(std::abs(spec.eigenvalues[2] - 9.0));
  }
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    CHECK(std::log2(errors[k] / errors[k + 1]) == doctest::Approx(2.0).epsilon(0.05));
  }
}

TEST_CASE("two-dimensional grid requires a diagonal coefficient") {
  const SpatialGrid grid({Axis{-1, 1, 5}, Axis{-1, 1, 5}});
  CoefficientField full(
      2, [](const Vec&) { Mat a(2, 2); a << 1.0, 0.1, 0.1, 1.0; return a; }, 0.9, 0.0, false,
      "full");
  CHECK_THROWS_AS(assemble_operator(grid, full), std::invalid_argument);
}
