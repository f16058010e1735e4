#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fracfreq/grid.hpp"
#include "fracfreq/operator.hpp"

namespace fracfreq {

/// Nodal values on the interior nodes of a spatial grid.
struct GridFunction {
  SpatialGrid grid;
  Eigen::VectorXd values;

  GridFunction() = default;
  GridFunction(SpatialGrid g, Eigen::VectorXd v);

  static GridFunction zeros(const SpatialGrid& g) {
    return GridFunction(g, Eigen::VectorXd::Zero(g.size()));
  }
};

/// Order s in (0, 1) of the fractional power, with weight exponent a = 1 - 2s.
class FractionalOrder {
 public:
  explicit FractionalOrder(double s);
  double value() const { return s_; }
  double weight_exponent() const { return 1.0 - 2.0 * s_; }

 private:
  double s_;
};

/// Weighted inner product <u, v>_h.
double inner(const GridFunction& u, const GridFunction& v);
double l2_norm(const GridFunction& u);

/// Expansion coefficients u_j = <u, e_j>_h.
Eigen::VectorXd spectral_coefficients(const SpectralDecomposition& spec, const GridFunction& u);
GridFunction synthesize(const SpectralDecomposition& spec, const Eigen::VectorXd& coefficients);

/// sum_j exp(-t lambda_j) u_j e_j.
GridFunction heat_semigroup(const SpectralDecomposition& spec, double t, const GridFunction& u);

/// sum_j lambda_j^s u_j e_j.
GridFunction fractional_apply(const SpectralDecomposition& spec, const FractionalOrder& s,
                              const GridFunction& u);

/// Same, for any real exponent (s = 1 reproduces L).
GridFunction spectral_power(const SpectralDecomposition& spec, double exponent,
                            const GridFunction& u);

/// (sum_j (1 + lambda_j^s) u_j^2)^{1/2}.
double hs_norm(const SpectralDecomposition& spec, const FractionalOrder& s, const GridFunction& u);

/// Dense matrix of L^p acting on nodal vectors.
Eigen::MatrixXd spectral_power_matrix(const SpectralDecomposition& spec, double exponent);

/// Interior nodes in the closed Euclidean ball of `radius` about the origin.
std::vector<int> centered_mask(const SpatialGrid& grid, double radius);

struct SHarmonicSolution {
  GridFunction u;
  double residual = 0.0;  ///< ||(F u)|_I|| / ||F_IO g_O||
  bool maximum_principle = true;  ///< soft diagnostic
  double exterior_min = 0.0;
  double exterior_max = 0.0;
};

/// Solves (L^p u)|_I = 0 with u prescribed off the interior set I, where F is
/// the dense matrix of L^p. `exterior_data` supplies values on every node; its
/// entries on I are ignored. Exponent p in (0, 1]; p = 1 is allowed for
/// testing against the local Laplacian.
SHarmonicSolution solve_s_harmonic(const SpectralDecomposition& spec, double exponent,
                                   const std::vector<int>& interior,
                                   const GridFunction& exterior_data);

inline SHarmonicSolution solve_s_harmonic(const SpectralDecomposition& spec,
                                          const FractionalOrder& s,
                                          const std::vector<int>& interior,
                                          const GridFunction& exterior_data) {
  return solve_s_harmonic(spec, s.value(), interior, exterior_data);
}

}  // namespace fracfreq
