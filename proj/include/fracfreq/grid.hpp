#pragma once

#include <array>
#include <vector>

#include "fracfreq/types.hpp"

namespace fracfreq {

/// One Cartesian axis of a spatial grid: the closed interval [lower, upper]
/// split into `interior_nodes + 1` equal cells. The boundary nodes carry the
/// Dirichlet data and are not stored.
struct Axis {
  double lower = -1.0;
  double upper = 1.0;
  int interior_nodes = 0;

  double spacing() const { return (upper - lower) / (interior_nodes + 1); }
  bool operator==(const Axis&) const = default;
};

/// Tensor grid on a box in R^n (n = 1 or 2) whose origin is an interior node.
///
/// Node coordinates are computed as integer offsets from the origin node, so
/// the origin is represented exactly.
class SpatialGrid {
 public:
  SpatialGrid() = default;
  explicit SpatialGrid(std::vector<Axis> axes);

  /// Convenience for the common 1D case.
  static SpatialGrid line(double lower, double upper, int interior_nodes);

  int dimension() const { return static_cast<int>(axes_.size()); }
  const Axis& axis(int k) const { return axes_[k]; }
  double spacing(int k) const { return axes_[k].spacing(); }
  int nodes(int k) const { return axes_[k].interior_nodes; }

  /// Total number of interior nodes.
  int size() const;

  /// Product of spacings, the weight of the discrete L2 inner product.
  double cell_volume() const;

  /// Coordinate of interior node `i` along axis `k`.
  double coordinate(int k, int i) const;

  /// Interior index of the origin along axis `k`.
  int origin_node(int k) const { return origin_[k]; }
  int origin_index() const;

  /// Flat index, axis 0 fastest.
  int flat_index(std::array<int, 2> multi) const;
  std::array<int, 2> multi_index(int flat) const;

  Vec point(int flat) const;

  bool operator==(const SpatialGrid& other) const { return axes_ == other.axes_; }

 private:
  std::vector<Axis> axes_;
  std::array<int, 2> origin_{0, 0};
};

}  // namespace fracfreq
