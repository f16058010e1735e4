#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

#include "fracfreq/grid.hpp"
#include "fracfreq/types.hpp"

namespace fracfreq {

/// Symmetric, uniformly elliptic coefficient matrix x -> A(x) on the spatial
/// domain, together with its ellipticity constant lambda (so that
/// lambda <= <A xi, xi> <= 1/lambda for unit xi) and Lipschitz constant.
class CoefficientField {
 public:
  using Rule = std::function<Mat(const Vec&)>;

  CoefficientField(int dimension, Rule rule, double ellipticity, double lipschitz,
                   bool normalized_at_origin, std::string description);

  static CoefficientField identity(int dimension);

  /// A(x) = a(x) * id.
  static CoefficientField scalar(int dimension, std::function<double(const Vec&)> a,
                                 double ellipticity, double lipschitz, std::string description);

  Mat operator()(const Vec& x) const { return rule_(x); }

  int dimension() const { return dimension_; }
  double ellipticity() const { return ellipticity_; }
  double lipschitz() const { return lipschitz_; }
  bool normalized_at_origin() const { return normalized_; }
  bool is_identity() const { return identity_; }
  const std::string& description() const { return description_; }

 private:
  int dimension_;
  Rule rule_;
  double ellipticity_;
  double lipschitz_;
  bool normalized_;
  bool identity_ = false;
  std::string description_;
};

/// Catalog coefficients, scalar multiples of the identity:
///   "id"                     a = 1
///   "one_plus_quarter_x_sq"  a = 1 + |x|^2 / 4
///   "id_plus_eps_sin"        a = 1 + epsilon * sin(x_1)
/// Ellipticity and Lipschitz constants are computed on the grid's box.
CoefficientField catalog_coefficient(std::string_view name, const SpatialGrid& grid,
                                     double epsilon = 0.0);

/// Tabulated coefficient: CSV rows `node, a_11, a_12, ...` (row-major entries)
/// over all grid nodes including boundary nodes, axis 0 fastest. Values off
/// the nodes are multilinear interpolants. Constants are estimated from the
/// table.
CoefficientField load_coefficient_csv(const std::filesystem::path& path, const SpatialGrid& grid);

}  // namespace fracfreq
