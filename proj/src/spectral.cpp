#include "fracfreq/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fracfreq {

GridFunction::GridFunction(SpatialGrid g, Eigen::VectorXd v)
    : grid(std::move(g)), values(std::move(v)) {
  if (values.size() != grid.size()) {
    throw std::invalid_argument("GridFunction: value count " + std::to_string(values.size()) +
                                " does not match grid size " + std::to_string(grid.size()));
  }
  if (!values.allFinite()) throw std::invalid_argument("GridFunction: non-finite entries");
}

FractionalOrder::FractionalOrder(double s) : s_(s) {
  if (!(s > 0.0 && s < 1.0)) {
    throw std::invalid_argument("fractional order s must lie strictly inside (0, 1), got " +
                                std::to_string(s));
  }
}

namespace {

void require_same_grid(const SpatialGrid& a, const SpatialGrid& b, const char* where) {
  if (!(a == b)) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

GridFunction diagonal_map(const SpectralDecomposition& spec, const GridFunction& u,
                          const Eigen::VectorXd& multiplier) {
  Eigen::VectorXd c = spectral_coefficients(spec, u);
  c.array() *= multiplier.array();
  return synthesize(spec, c);
}

}  // namespace

double inner(const GridFunction& u, const GridFunction& v) {
  require_same_grid(u.grid, v.grid, "inner");
  return u.grid.cell_volume() * u.values.dot(v.values);
}

double l2_norm(const GridFunction& u) { return std::sqrt(inner(u, u)); }

Eigen::VectorXd spectral_coefficients(const SpectralDecomposition& spec, const GridFunction& u) {
  require_same_grid(spec.grid, u.grid, "spectral_coefficients");
  return spec.weight() * (spec.eigenvectors.transpose() * u.values);
}

GridFunction synthesize(const SpectralDecomposition& spec, const Eigen::VectorXd& coefficients) {
  return GridFunction(spec.grid, spec.eigenvectors * coefficients);
}

GridFunction heat_semigroup(const SpectralDecomposition& spec, double t, const GridFunction& u) {
  if (!(t >= 0.0)) throw std::invalid_argument("heat_semigroup: t must be >= 0");
  if (t == 0.0) {
    require_same_grid(spec.grid, u.grid, "heat_semigroup");
    return u;
  }
  return diagonal_map(spec, u, (-t * spec.eigenvalues.array()).exp().matrix());
}

GridFunction spectral_power(const SpectralDecomposition& spec, double exponent,
                            const GridFunction& u) {
  return diagonal_map(spec, u, spec.eigenvalues.array().pow(exponent).matrix());
}

GridFunction fractional_apply(const SpectralDecomposition& spec, const FractionalOrder& s,
                              const GridFunction& u) {
  return spectral_power(spec, s.value(), u);
}

double hs_norm(const SpectralDecomposition& spec, const FractionalOrder& s,
               const GridFunction& u) {
  const Eigen::VectorXd c = spectral_coefficients(spec, u);
  const Eigen::ArrayXd mult = 1.0 + spec.eigenvalues.array().pow(s.value());
  return std::sqrt((mult * c.array().square()).sum());
}

Eigen::MatrixXd spectral_power_matrix(const SpectralDecomposition& spec, double exponent) {
  const Eigen::VectorXd powers = spec.eigenvalues.array().pow(exponent).matrix();
  return spec.weight() *
         (spec.eigenvectors * powers.asDiagonal() * spec.eigenvectors.transpose());
}

std::vector<int> centered_mask(const SpatialGrid& grid, double radius) {
  std::vector<int> nodes;
  const double tol = 1e-12 * std::max(1.0, radius);
  for (int i = 0; i < grid.size(); ++i) {
    if (grid.point(i).norm() <= radius + tol) nodes.push_back(i);
  }
  return nodes;
}

SHarmonicSolution solve_s_harmonic(const SpectralDecomposition& spec, double exponent,
                                   const std::vector<int>& interior,
                                   const GridFunction& exterior_data) {
  require_same_grid(spec.grid, exterior_data.grid, "solve_s_harmonic");
  if (!(exponent > 0.0 && exponent <= 1.0)) {
    throw std::invalid_argument("solve_s_harmonic: exponent must lie in (0, 1]");
  }
  const int m = spec.size();
  if (interior.empty()) throw std::invalid_argument("solve_s_harmonic: empty interior set");
  std::vector<char> in_set(m, 0);
  for (int i : interior) {
    if (i < 0 || i >= m) throw std::invalid_argument("solve_s_harmonic: node out of range");
    in_set[i] = 1;
  }
  std::vector<int> inner_nodes, outer_nodes;
  for (int i = 0; i < m; ++i) (in_set[i] ? inner_nodes : outer_nodes).push_back(i);

  const Eigen::MatrixXd full = spectral_power_matrix(spec, exponent);
  const int ni = static_cast<int>(inner_nodes.size());
  const int no = static_cast<int>(outer_nodes.size());
  Eigen::MatrixXd f_ii(ni, ni), f_io(ni, no);
  Eigen::VectorXd g(no);
  for (int a = 0; a < ni; ++a) {
    for (int b = 0; b < ni; ++b) f_ii(a, b) = full(inner_nodes[a], inner_nodes[b]);
    for (int b = 0; b < no; ++b) f_io(a, b) = full(inner_nodes[a], outer_nodes[b]);
  }
  for (int b = 0; b < no; ++b) g[b] = exterior_data.values[outer_nodes[b]];

  const Eigen::VectorXd rhs = -(f_io * g);
  Eigen::LLT<Eigen::MatrixXd> llt(f_ii);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("solve_s_harmonic: interior block is not positive definite");
  }
  Eigen::VectorXd ui = llt.solve(rhs);
  // One step of iterative refinement keeps the interior residual at rounding level.
  ui += llt.solve(rhs - f_ii * ui);

  SHarmonicSolution out;
  Eigen::VectorXd u = exterior_data.values;
  for (int a = 0; a < ni; ++a) u[inner_nodes[a]] = ui[a];
  out.u = GridFunction(spec.grid, u);

  const double scale = rhs.norm();
  const double res = (f_ii * ui - rhs).norm();
  out.residual = scale > 0.0 ? res / scale : res;

  // Values outside the domain are zero, so 0 belongs to the exterior range.
  double lo = 0.0, hi = 0.0;
  for (int b = 0; b < no; ++b) {
    lo = std::min(lo, g[b]);
    hi = std::max(hi, g[b]);
  }
  out.exterior_min = lo;
  out.exterior_max = hi;
  const double slack = 1e-10 * std::max(1.0, hi - lo);
  out.maximum_principle = ni == 0 || (ui.minCoeff() >= lo - slack && ui.maxCoeff() <= hi + slack);
  return out;
}

}  // namespace fracfreq
