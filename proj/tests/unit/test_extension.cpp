#include <doctest.h>

#include <cmath>

#include "fracfreq/extension.hpp"
#include "oracles.hpp"

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

GridFunction mode(const SpectralDecomposition& spec, int j) {
  return GridFunction(spec.grid, spec.eigenvectors.col(j));
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace

TEST_CASE("profile matches the Bessel oracle") {
  for (double s : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    CHECK(extension_profile(s, 0.0) == 1.0);
    for (double rho : {1e-3, 0.05, 0.3, 1.0, 2.5, 7.0, 20.0}) {
      const double expected = oracle::bessel_profile(s, rho);
      CHECK(std::abs(extension_profile(s, rho) - expected) <= 1e-9 * std::max(expected, 1e-300));
    }
  }
}

TEST_CASE("half order profile is exp(-rho)") {
  for (double rho : {0.0, 0.01, 0.5, 1.0, 3.0, 10.0}) {
    CHECK(std::abs(extension_profile(0.5, rho) - std::exp(-rho)) < 1e-8 * std::exp(-rho) + 1e-300);
  }
}

TEST_CASE("profile is decreasing and positive") {
  double prev = 1.0;
  for (double rho = 0.1; rho < 30.0; rho *= 1.5) {
    const double v = extension_profile(0.3, rho);
    CHECK(v > 0.0);
    CHECK(v < prev);
    prev = v;
  }
  CHECK(extension_profile(0.3, 2000.0) == 0.0);
  CHECK_THROWS(extension_profile(1.0, 1.0));
  CHECK_THROWS(extension_profile(0.5, -1.0));
}

TEST_CASE("gamma reflection identity") {
  for (int k = 1; k <= 9; ++k) CHECK(gamma_reflection_error(0.1 * k) < 1e-12);
  for (double s : {0.25, 0.5, 0.75}) {
    CHECK(trace_constant(FractionalOrder(s)) ==
          doctest::Approx(oracle::trace_constant(s)).epsilon(1e-12));
  }
  CHECK(trace_constant(FractionalOrder(0.5)) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("y grid") {
  const YGrid g(2.0, 10, 2.0);
  const auto y = g.nodes();
  CHECK(y.front() == 0.0);
  CHECK(y.back() == 2.0);
  CHECK(y[5] == doctest::Approx(0.5));
  CHECK_THROWS(YGrid(1.0, 10, 0.5));
  const auto m = mirrored_nodes(g);
  CHECK(m.size() == 21);
  CHECK(m[0] == -2.0);
  CHECK(m[10] == 0.0);
}

TEST_CASE("semigroup extension of a mode") {
  const auto& spec = setup().spec;
  const FractionalOrder s(0.25);
  const YGrid yg(default_height(spec), 50, 2.0);
  const auto ext = extend_semigroup(spec, s, mode(spec, 2), yg);
  CHECK(ext.provenance == Provenance::Semigroup);
  CHECK((ext.level(0) - spec.eigenvectors.col(2)).cwiseAbs().maxCoeff() < 1e-10);
  const int peak = 40;
  for (int j : {1, 10, 30, 50}) {
    const double expected =
        oracle::bessel_profile(0.25, std::sqrt(spec.eigenvalues[2]) * ext.y[j]) *
        spec.eigenvectors(peak, 2);
    CHECK(ext.values(j, peak) == doctest::Approx(expected).epsilon(1e-8));
  }
}

TEST_CASE("trace identity on modes") {
  const auto& spec = setup().spec;
  for (double sv : {0.25, 0.5, 0.75}) {
    const FractionalOrder s(sv);
    for (int j : {0, 2}) {
      const GridFunction u = mode(spec, j);
      const Eigen::VectorXd target =
          oracle::trace_constant(sv) * std::pow(spec.eigenvalues[j], sv) * u.values;
      double previous = 1.0;
      for (int intervals : {200, 400}) {
        const auto ext = extend_semigroup(spec, s, u, YGrid(default_height(spec), intervals, 2.0));
        const auto tr = neumann_trace(ext, s);
        const double err = rel(tr.trace.values, target);
        CAPTURE(sv);
        CAPTURE(j);
        CAPTURE(intervals);
        CHECK(err < 0.01);
        CHECK(err <= previous);
        previous = err;
      }
    }
  }
}

TEST_CASE("trace of a y-independent field is zero") {
  const auto& spec = setup().spec;
  ExtensionField f;
  f.grid = spec.grid;
  f.y = YGrid(2.0, 100, 2.0).nodes();
  f.s = 0.4;
  f.values = Eigen::MatrixXd::Ones(f.levels(), spec.size());
  const auto tr = neumann_trace(f, FractionalOrder(0.4));
  CHECK(tr.trace.values.cwiseAbs().maxCoeff() == 0.0);
  f.y = YGrid(2.0, 10, 1.0).nodes();
  f.values = Eigen::MatrixXd::Ones(f.levels(), spec.size());
  CHECK_THROWS(neumann_trace(f, FractionalOrder(0.4)));
}

TEST_CASE("pde route matches the semigroup route") {
  const auto& [grid, op, spec] = setup();
  for (double sv : {0.25, 0.5, 0.75}) {
    const FractionalOrder s(sv);
    const YGrid yg(default_height(spec, 8.0), 200, 2.0);
    const GridFunction u = mode(spec, 0);
    const auto a = extend_semigroup(spec, s, u, yg);
    const auto b = extend_pde(op, s, u, yg);
    CAPTURE(sv);
    CHECK(weighted_l2_discrepancy(b, a) < 0.01);
    CHECK(b.level(0) == u.values);
    CHECK(b.values.row(b.levels() - 1).norm() == 0.0);
  }
  const auto zero = extend_pde(op, FractionalOrder(0.5), GridFunction::zeros(grid),
                               YGrid(2.0, 40, 2.0));
  CHECK(zero.values.norm() == 0.0);
}

TEST_CASE("weighted energy is bounded by the fractional norm") {
  const auto& [grid, op, spec] = setup();
  const FractionalOrder s(0.5);
  Eigen::VectorXd v(grid.size());
  for (int i = 0; i < grid.size(); ++i) v[i] = std::pow(1.0 - grid.point(i)[0] * grid.point(i)[0], 2);
  const GridFunction u(grid, v);
  std::vector<double> ratios;
  for (int j : {100, 200}) {
    const auto ext = extend_semigroup(spec, s, u, YGrid(default_height(spec, 8.0), j, 2.0));
    const double e = weighted_h1_energy(ext);
    CHECK(std::isfinite(e));
    ratios.push_back(e / std::pow(hs_norm(spec, s, u), 2));
  }
  CHECK(std::abs(ratios[1] - ratios[0]) < 0.05 * ratios[0]);
}

TEST_CASE("reflection") {
  const auto& spec = setup().spec;
  const auto ext = extend_semigroup(spec, FractionalOrder(0.5), mode(spec, 0), YGrid(3.0, 30, 2.0));
  const auto r = reflect_even(ext);
  CHECK(r.provenance == Provenance::Reflected);
  CHECK(r.levels() == 61);
  const int z = r.zero_level();
  CHECK(z == 30);
  for (int j = 1; j <= 30; ++j) {
    CHECK(r.y[z - j] == -r.y[z + j]);
    CHECK(r.values.row(z - j) == r.values.row(z + j));
  }
  CHECK_THROWS(reflect_even(r));
}

TEST_CASE("full-strip solution is even and has small residual") {
  const auto& [grid, op, spec] = setup();
  const FractionalOrder s(0.3);
  const YGrid yg(2.0, 60, 2.0);
  Eigen::VectorXd top(grid.size());
  for (int i = 0; i < grid.size(); ++i) top[i] = std::cos(kPi * grid.point(i)[0] / 2.0);
  const GridFunction data(grid, top);
  const auto f = solve_weighted_pde(op, s, mirrored_nodes(yg), data, data);
  const int z = f.zero_level();
  for (int j = 1; j <= 60; ++j) {
    CHECK((f.values.row(z - j) - f.values.row(z + j)).cwiseAbs().maxCoeff() < 1e-10);
  }
  const auto res = weighted_residual(op, f);
  CHECK(res.cwiseAbs().maxCoeff() < 1e-8 * op.matrix.coeff(0, 0));
}

TEST_CASE("closed-form profile agrees with the quadrature profile") {
  for (double sv : {0.1, 0.25, 0.5, 0.75, 0.9}) {
    for (double rho : {0.0, 1e-9, 1e-4, 0.03, 0.5, 1.0, 7.0, 60.0, 400.0}) {
      const double q = extension_profile(sv, rho);
      CAPTURE(sv);
      CAPTURE(rho);
      CHECK(std::abs(extension_profile_bessel(sv, rho) - q) <= 1e-13 * q + 1e-300);
    }
    CHECK(extension_profile_bessel(sv, 2000.0) == 0.0);
  }
  CHECK_THROWS_AS(extension_profile_bessel(1.0, 0.5), std::invalid_argument);
}
