#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fracfreq/field.hpp"
#include "fracfreq/frequency.hpp"
#include "fracfreq/spectral.hpp"

namespace fracfreq {

struct TransportSample {
  double r = 0.0;
  double N_rescaled = 0.0;  ///< N of U_tau at r
  double N_direct = 0.0;    ///< N of U at tau r
};

/// U_tau(z) = U(tau z) / sqrt(H(tau) / tau^{n+1-2s}) on the unit ball.
struct BlowupRecord {
  double tau = 0.0;
  double normalization = 0.0;
  std::shared_ptr<const RescaledField> field;
  Measured H1;  ///< H of U_tau at r = 1, coefficient A(tau .)
  Measured D1;
  std::vector<TransportSample> transport;

  double max_transport_error() const;
};

/// Requires tau in (0, 1), tau within the admissible radius of `u`, and at
/// least 8 cells of `u` across the rescaled ball (2 tau / h >= 8).
BlowupRecord rescale(std::shared_ptr<const Field> u, const ExtendedCoefficient& a,
                     const FractionalOrder& s, double tau,
                     const std::vector<double>& transport_radii = {0.25, 0.5, 1.0},
                     const QuadratureOptions& opts = {});

/// One record per tau; the unscaled field is swept once for every tau r.
std::vector<BlowupRecord> rescale_all(std::shared_ptr<const Field> u, const ExtendedCoefficient& a,
                                      const FractionalOrder& s, const std::vector<double>& taus,
                                      const std::vector<double>& transport_radii = {0.25, 0.5, 1.0},
                                      const QuadratureOptions& opts = {});

/// N(r) = r D(r) / H(r) at each radius, without derivatives.
std::vector<double> frequency_values(const Field& u, const ExtendedCoefficient& a,
                                     const FractionalOrder& s, const std::vector<double>& radii,
                                     const QuadratureOptions& opts = {});

enum class OrderVerdict { Finite, OrderZero, LocallyTrivial };
std::string to_string(OrderVerdict v);

struct OrderEstimate {
  int x0 = 0;                          ///< flat node index
  Vec point;
  std::vector<double> radii;           ///< descending
  std::vector<double> q_values;
  std::vector<double> pairwise_slopes; ///< between consecutive radii
  std::vector<bool> reliable;          ///< r >= 2 h
  double d = 0.0;                      ///< slope over the three smallest reliable radii
  double full_slope = 0.0;             ///< least squares over every radius
  OrderVerdict verdict = OrderVerdict::Finite;
};

/// r0, r0/2, ..., r0/2^{count-1}.
std::vector<double> dyadic_radii(double r0, int count = 4);

/// q(r) = (|B'_r|^{-1} int_{B'_r} u^2)^{1/2} for the piecewise (multi)linear
/// interpolant with zero boundary values. n = 1 is integrated exactly; n = 2
/// uses an 8 x 8 midpoint rule per cell, the measure computed with the same rule.
double ball_average(const GridFunction& u, const Vec& center, double r);

/// Returns verdict OrderZero without fitting when |u(x0)| > zero_tolerance
/// max|u|. Throws std::invalid_argument when a ball leaves the box or fewer
/// than two radii are resolved.
OrderEstimate vanishing_order(const GridFunction& u, int x0, const std::vector<double>& radii,
                              double zero_tolerance = 1e-8);

}  // namespace fracfreq
