#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracfreq/field.hpp"
#include "fracfreq/spectral.hpp"

namespace fracfreq {

/// Raised when H vanishes, which only happens for U = 0.
class TrivialFieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuadratureOptions {
  int order = 6;                      ///< Gauss-Legendre points per panel
  double tolerance = 1e-8;            ///< relative change between doublings
  int max_points = 1 << 14;           ///< cap on points of one surface rule
  double grading_tolerance = 1e-10;   ///< mass allowed in the innermost graded panel
  int max_radial_subdivisions = 8;
};

/// Weighted surface integrals over the sphere of radius r, weight |y|^{1-2s}:
///   H = int mu U^2, mass = int U^2, energy = int <A grad U, grad U>,
///   B = int <A nu, grad U>^2 / mu, S = int U <A nu, grad U>.
struct SurfaceMoments {
  double r = 0.0;
  double H = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double B = 0.0;
  double S = 0.0;
  double error = 0.0;          ///< relative change over the last doubling
  int points = 0;
  double tangentiality = 0.0;  ///< max |<A nu - mu nu, nu>| over the nodes
};

SurfaceMoments surface_moments(const Field& u, const ExtendedCoefficient& a,
                               const FractionalOrder& s, double r,
                               const QuadratureOptions& opts = {});

/// Ball integrals D(r) = int_{B_r} |y|^{1-2s} <A grad U, grad U> and
/// M(r) = int_{B_r} |y|^{1-2s} U^2, by a radial Gauss-Legendre sweep over the
/// surface moments, broken at the field's tangency radii.
struct BallIntegrals {
  std::vector<double> radii;  ///< as requested
  std::vector<double> D;
  std::vector<double> mass;
  std::vector<double> error;  ///< relative, max of the D and mass estimates
};

BallIntegrals ball_integrals(const Field& u, const ExtendedCoefficient& a,
                             const FractionalOrder& s, const std::vector<double>& radii,
                             const QuadratureOptions& opts = {});

struct Measured {
  double value = 0.0;
  double error = 0.0;  ///< relative
};

Measured height(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s, double r,
                const QuadratureOptions& opts = {});
Measured dirichlet(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s,
                   double r, const QuadratureOptions& opts = {});
Measured ball_mass(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s,
                   double r, const QuadratureOptions& opts = {});

struct FrequencySample {
  double r = 0.0;
  double H = 0.0;
  double D = 0.0;
  double N = 0.0;
  double Nbar = 0.0;
  double dH = 0.0;  ///< centered difference
  double dD = 0.0;  ///< centered difference
  double B = 0.0;
  double S = 0.0;
  double mass = 0.0;
  double rhoH = 0.0;
  double rhoD = 0.0;
  double quadErrH = 0.0;
  double quadErrD = 0.0;
  double tangentiality = 0.0;
};

struct FrequencyProfile {
  int n = 1;
  double s = 0.5;
  double C = 0.0;  ///< constant used for Nbar
  double derivative_step = 1e-3;
  std::vector<FrequencySample> samples;

  std::vector<double> radii() const;
};

struct ProfileOptions {
  QuadratureOptions quadrature;
  double derivative_step = 1e-3;  ///< relative to r
  double C = 0.0;
};

FrequencyProfile frequency_profile(const Field& u, const ExtendedCoefficient& a,
                                   const FractionalOrder& s, const std::vector<double>& radii,
                                   const ProfileOptions& opts = {});

/// Recomputes Nbar = exp(C r) N.
void set_nbar_constant(FrequencyProfile& profile, double C);

struct ResidualReport {
  double max_rhoH = 0.0;
  double max_rhoD = 0.0;
  double worst_radius_H = 0.0;
  double worst_radius_D = 0.0;
  double bound_H = 0.0;  ///< K Lip_A + budget_H
  double bound_D = 0.0;
  bool passed = false;
};

/// rho_H <= K Lip_A + budget_H and rho_D <= K Lip_A + budget_D at every radius.
ResidualReport identity_residuals(const FrequencyProfile& profile, double lipschitz, double K,
                                  double budget_H, double budget_D);

struct MonotonicityViolation {
  double r1 = 0.0;
  double r2 = 0.0;
  double C_pair = 0.0;
};

struct MonotonicityReport {
  double C_min = 0.0;
  std::vector<double> pair_constants;
  std::vector<MonotonicityViolation> violations;  ///< pairs with C_pair above the cap
};

/// Smallest C >= 0 for which exp(C r) N(r) is nondecreasing over the samples.
/// Requires at least 10 radii. Throws TrivialFieldError if N vanishes at some
/// radius but not at all of them.
MonotonicityReport monotonicity_report(const FrequencyProfile& profile,
                                       double cap = std::numeric_limits<double>::infinity());

struct DoublingReport {
  std::vector<double> radii;   ///< t; each ratio is M(2t) / M(t)
  std::vector<double> ratios;
  double C_doubling = 0.0;
  double variation = 0.0;      ///< (max - min) / min over the ratios
};

DoublingReport doubling_report(const Field& u, const ExtendedCoefficient& a,
                               const FractionalOrder& s, const std::vector<double>& radii,
                               const QuadratureOptions& opts = {});

struct GammaEstimate {
  double gamma = 0.0;         ///< N at the smallest reliable radius
  double extrapolated = 0.0;  ///< linear extrapolation of N to r = 0
  double radius = 0.0;
  bool low_confidence = false;
};

/// Only samples with r >= min_radius are used.
GammaEstimate gamma_limit(const FrequencyProfile& profile, double min_radius = 0.0,
                          double confidence_tolerance = 0.05);

struct HeightBoundReport {
  double exponent = 0.0;       ///< n + 1 - 2s + 2 gamma + delta
  double constant = 0.0;       ///< min H(r) / r^exponent
  double slope = 0.0;          ///< log-log slope of H over the smallest radii
  double target = 0.0;         ///< n + 1 - 2s + 2 gamma
  double slope_deviation = 0.0;
  std::vector<double> failing_radii;
  bool passed = false;         ///< constant > 0 and slope <= exponent
};

HeightBoundReport height_lower_bound_check(const FrequencyProfile& profile, double gamma,
                                           double delta, int fit_points = 3,
                                           double min_radius = 0.0);

}  // namespace fracfreq
