#pragma once

#include <array>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fracfreq/coefficient.hpp"
#include "fracfreq/extension.hpp"
#include "fracfreq/types.hpp"

namespace fracfreq {

/// Coefficient z = (x, y) -> A(z) on R^{n+1}, symmetric and uniformly elliptic.
class ExtendedCoefficient {
 public:
  using Rule = std::function<Mat(const Vec&)>;

  ExtendedCoefficient(int dimension, Rule rule, double ellipticity, double lipschitz,
                      std::string description);

  static ExtendedCoefficient identity(int dimension);

  /// blockdiag(A(x), 1).
  static ExtendedCoefficient from_spatial(const CoefficientField& a);

  /// z -> A(tau z); the Lipschitz constant scales by tau.
  ExtendedCoefficient rescaled(double tau) const;

  Mat operator()(const Vec& z) const;

  int dimension() const { return dimension_; }
  double ellipticity() const { return ellipticity_; }
  double lipschitz() const { return lipschitz_; }
  bool is_identity() const { return identity_; }
  const std::string& description() const { return description_; }

 private:
  int dimension_;
  Rule rule_;
  double ellipticity_;
  double lipschitz_;
  bool identity_ = false;
  std::string description_;
};

/// mu(z) = <A z, z> / |z|^2 and beta(z) = A z / mu(z), for z != 0.
struct GeometricWeights {
  double mu = 1.0;
  Vec beta;
};
GeometricWeights geometric_weights(const ExtendedCoefficient& a, const Vec& z);

/// Sampled checks of the pointwise bounds on mu and beta in a ball.
struct WeightBoundsReport {
  double mu_min = 0.0;
  double mu_max = 0.0;
  double beta_ratio_max = 0.0;     ///< max |beta(z)| / |z|
  double beta_radial_error = 0.0;  ///< max |beta . z/|z| - |z|| / |z|
  double dmu_dr_max = 0.0;         ///< max |d/dr mu(r z)|, difference quotients
  double jacobian_constant = 0.0;  ///< max ||D beta(z) - id|| / |z|
  int samples = 0;
};
WeightBoundsReport sample_weight_bounds(const ExtendedCoefficient& a, double radius, int samples,
                                        unsigned seed);

/// A function U on (a region of) R^{n+1} with its gradient.
class Field {
 public:
  virtual ~Field() = default;

  /// n + 1.
  virtual int dimension() const = 0;
  virtual void evaluate(const Vec& z, double& value, Vec& gradient) const = 0;
  /// Largest r for which the closed ball B_r about the origin is covered.
  virtual double admissible_radius() const = 0;
  /// Angles in [0, 2 pi) where the circle of radius r crosses a cell line
  /// (two-dimensional fields only).
  virtual std::vector<double> circle_breaks(double /*r*/) const { return {}; }
  /// Radii in (0, r_max) at which spheres become tangent to cell faces.
  virtual std::vector<double> radial_breaks(double /*r_max*/) const { return {}; }
  /// Spatial cell size; 0 for fields given by formulas.
  virtual double resolution() const { return 0.0; }

  double value(const Vec& z) const;
  Vec gradient(const Vec& z) const;
};

class AnalyticField : public Field {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradientFn = std::function<Vec(const Vec&)>;

  AnalyticField(int dimension, ValueFn value, GradientFn gradient, std::string name);

  /// U = c.
  static AnalyticField constant(int dimension, double c);
  /// U = z_axis.
  static AnalyticField linear(int dimension, int axis = 0);

  int dimension() const override { return dimension_; }
  void evaluate(const Vec& z, double& value, Vec& gradient) const override;
  double admissible_radius() const override { return std::numeric_limits<double>::infinity(); }
  const std::string& name() const { return name_; }

 private:
  int dimension_;
  ValueFn value_;
  GradientFn gradient_;
  std::string name_;
};

/// Interpolant of an ExtensionField whose y nodes cover both signs, with
/// zero values on the lateral boundary.
///
/// n = 1: C1 bicubic Hermite in (x, eta), eta = sign(y) |y|^{2s}, with
/// finite-difference slopes; slopes at the y = 0 level are one-sided from
/// the side of the cell being evaluated.
/// n = 2: trilinear values, gradient from nodal centered differences
/// interpolated trilinearly.
class GridFieldSampler : public Field {
 public:
  explicit GridFieldSampler(ExtensionField field);

  int dimension() const override { return field_.grid.dimension() + 1; }
  void evaluate(const Vec& z, double& value, Vec& gradient) const override;
  double admissible_radius() const override { return admissible_; }
  std::vector<double> circle_breaks(double r) const override;
  std::vector<double> radial_breaks(double r_max) const override;
  double resolution() const override { return resolution_; }

  const ExtensionField& field() const { return field_; }

 private:
  void evaluate_hermite(const Vec& z, double& value, Vec& gradient) const;
  void evaluate_trilinear(const Vec& z, double& value, Vec& gradient) const;
  int locate_y(double y) const;

  ExtensionField field_;
  double two_s_;
  std::vector<std::vector<double>> x_;  // per axis, boundary nodes included
  std::vector<double> eta_;
  double admissible_ = 0.0;
  double resolution_ = 0.0;
  // n = 1: node arrays indexed [level][x], x including boundaries.
  std::vector<std::vector<double>> f_, fx_, fe_below_, fe_above_, fxe_below_, fxe_above_;
  // n = 2: padded nodal values and gradients, index (k * ny + j) * nx + i.
  std::vector<double> v3_;
  std::vector<std::array<double, 3>> g3_;
};

/// z -> U(tau z) / scale, with gradient tau grad U(tau z) / scale.
class RescaledField : public Field {
 public:
  RescaledField(std::shared_ptr<const Field> base, double tau, double scale);

  int dimension() const override { return base_->dimension(); }
  void evaluate(const Vec& z, double& value, Vec& gradient) const override;
  double admissible_radius() const override { return base_->admissible_radius() / tau_; }
  std::vector<double> circle_breaks(double r) const override { return base_->circle_breaks(tau_ * r); }
  std::vector<double> radial_breaks(double r_max) const override;
  double resolution() const override { return base_->resolution() / tau_; }

  double tau() const { return tau_; }
  double scale() const { return scale_; }

 private:
  std::shared_ptr<const Field> base_;
  double tau_;
  double scale_;
};

}  // namespace fracfreq
