#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fracfreq/operator.hpp"
#include "fracfreq/spectral.hpp"

namespace fracfreq {

/// Graded nodes y_j = Y (j/J)^kappa, j = 0..J, in the extension variable.
struct YGrid {
  double height = 1.0;  ///< truncation height Y
  int intervals = 100;  ///< J
  double grading = 2.0;  ///< kappa >= 1

  YGrid() = default;
  YGrid(double height, int intervals, double grading);
  std::vector<double> nodes() const;
};

/// Y = decay_lengths / sqrt(lambda_1), the height at which the slowest mode
/// has decayed by roughly exp(-decay_lengths).
double default_height(const SpectralDecomposition& spec, double decay_lengths = 4.0);

enum class Provenance { Semigroup, Pde, Reflected };
std::string to_string(Provenance p);
Provenance provenance_from_string(const std::string& name);

/// U(x_i, y_j) on SpatialGrid x (y nodes). `values(j, i)`: row j is the y level.
/// For reflected fields and full-strip solutions the y nodes cover [-Y, Y].
struct ExtensionField {
  SpatialGrid grid;
  std::vector<double> y;
  double s = 0.5;
  double grading = 2.0;
  Provenance provenance = Provenance::Semigroup;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> values;

  int levels() const { return static_cast<int>(y.size()); }
  double weight_exponent() const { return 1.0 - 2.0 * s; }
  /// Index of the y = 0 level.
  int zero_level() const;
  Eigen::VectorXd level(int j) const { return values.row(j).transpose(); }
};

/// Normalized y-profile of a single mode,
///   phi_s(rho) = 1/Gamma(s) * int_0^inf sigma^{s-1} exp(-sigma - rho^2/(4 sigma)) d sigma,
/// which is the heat-semigroup extension integral after t = y^2/(4 sigma).
/// phi_s(0) = 1. Evaluated with composite Gauss-Legendre in log(sigma),
/// doubling panels until successive estimates agree to 1e-14.
double extension_profile(double s, double rho);

/// Same, also returning the last doubling difference.
double extension_profile(double s, double rho, double& error_estimate);

/// Closed form 2^{1-s} / Gamma(s) rho^s K_s(rho) of the same profile, with
/// K_s from std::cyl_bessel_k. Agrees with extension_profile to about 1e-13.
double extension_profile_bessel(double s, double rho);

/// sum_j u_j phi_s(sqrt(lambda_j) y) e_j on every y level, profiles from
/// extension_profile_bessel.
ExtensionField extend_semigroup(const SpectralDecomposition& spec, const FractionalOrder& s,
                                const GridFunction& u, const YGrid& ygrid);

/// Finite-volume solution of div(y^{1-2s} A grad U) = 0 on the grid x (0, Y)
/// with U = u at y = 0 and U = 0 at y = Y and on the lateral boundary.
ExtensionField extend_pde(const DiscreteOperator& op, const FractionalOrder& s,
                          const GridFunction& u, const YGrid& ygrid);

/// Direct solution of div(|y|^{1-2s} A grad U) = 0 on the full strip with
/// y nodes `y` (ascending, containing 0). Dirichlet data `bottom` at y.front(),
/// `top` at y.back(), zero on the lateral boundary.
ExtensionField solve_weighted_pde(const DiscreteOperator& op, const FractionalOrder& s,
                                  std::vector<double> y, const GridFunction& bottom,
                                  const GridFunction& top);

/// Symmetric y nodes on [-Y, Y]: the YGrid nodes mirrored through 0.
std::vector<double> mirrored_nodes(const YGrid& ygrid);

struct NeumannTrace {
  GridFunction trace;  ///< lim y^{1-2s} dU/dy = 2s c(x)
  int flagged = 0;     ///< nodes whose level-wise estimates diverge
  int levels_used = 4;
};

/// 2s Gamma(-s) / (4^s Gamma(s)): the factor relating the weighted Neumann
/// trace of the extension to L^s u. Negative for s in (0,1).
double trace_constant(const FractionalOrder& s);

/// |Gamma(-s) + pi / (sin(pi s) Gamma(1+s))| / |Gamma(-s)| for the Gamma
/// implementation in use.
double gamma_reflection_error(double s);

/// Fits U(x,y) - u(x) = c(x) y^{2s} + d(x) y^2 on the first four positive
/// levels and returns 2s c. Requires at least four levels below 0.05 Y.
NeumannTrace neumann_trace(const ExtensionField& ext, const FractionalOrder& s);

/// U~(x, -y) = U(x, y).
ExtensionField reflect_even(const ExtensionField& ext);

/// int_a^b |y|^p dy for p > -1.
double abs_power_integral(double a, double b, double p);

/// Dual-cell weights int |y|^{1-2s} dy around each y node.
std::vector<double> cell_weights(std::span<const double> y, double weight_exponent);

/// Weighted L2 norm (sum_j W_j h^n sum_i U_ij^2)^{1/2}.
double weighted_l2_norm(const ExtensionField& f);

/// ||a - b|| / ||b|| in the weighted L2 norm; grids must match.
double weighted_l2_discrepancy(const ExtensionField& a, const ExtensionField& b);

/// Weighted H1 norm squared: int |y|^{1-2s} (U^2 + |grad U|^2), with exact
/// weighted y-fluxes between levels and zero lateral boundary values.
double weighted_h1_energy(const ExtensionField& f);

/// Finite-volume residual of div(|y|^{1-2s} A grad U) at every node of rows
/// 1..levels-2 (rows 0 and last are zero), scaled by 1/(h^n W_j).
Eigen::MatrixXd weighted_residual(const DiscreteOperator& op, const ExtensionField& f);

/// max_x |U(x, Y)| / max_x |u(x)| predicted by the semigroup field.
double truncation_ratio(const ExtensionField& semigroup_field);

}  // namespace fracfreq
