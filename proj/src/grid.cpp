#include "fracfreq/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fracfreq {

SpatialGrid::SpatialGrid(std::vector<Axis> axes) : axes_(std::move(axes)) {
  if (axes_.empty() || axes_.size() > 2) {
    throw std::invalid_argument("SpatialGrid: dimension must be 1 or 2, got " +
                                std::to_string(axes_.size()));
  }
  for (std::size_t k = 0; k < axes_.size(); ++k) {
    const Axis& ax = axes_[k];
    if (ax.interior_nodes < 1 || !(ax.upper > ax.lower)) {
      throw std::invalid_argument("SpatialGrid: axis " + std::to_string(k) +
                                  " needs upper > lower and at least one interior node");
    }
    if (!(ax.lower < 0.0 && ax.upper > 0.0)) {
      throw std::invalid_argument("SpatialGrid: origin must lie strictly inside axis " +
                                  std::to_string(k));
    }
    const double h = ax.spacing();
    const double steps = -ax.lower / h;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(1.0, steps)) {
      throw std::invalid_argument("SpatialGrid: origin is not a grid node on axis " +
                                  std::to_string(k));
    }
    const int origin = static_cast<int>(rounded) - 1;
    if (origin < 0 || origin >= ax.interior_nodes) {
      throw std::invalid_argument("SpatialGrid: origin is not an interior node on axis " +
                                  std::to_string(k));
    }
    origin_[k] = origin;
  }
}

SpatialGrid SpatialGrid::line(double lower, double upper, int interior_nodes) {
  return SpatialGrid({Axis{lower, upper, interior_nodes}});
}

int SpatialGrid::size() const {
  int total = 1;
  for (const Axis& ax : axes_) total *= ax.interior_nodes;
  return total;
}

double SpatialGrid::cell_volume() const {
  double v = 1.0;
  for (const Axis& ax : axes_) v *= ax.spacing();
  return v;
}

double SpatialGrid::coordinate(int k, int i) const {
  return static_cast<double>(i - origin_[k]) * axes_[k].spacing();
}

int SpatialGrid::origin_index() const {
  if (dimension() == 1) return origin_[0];
  return flat_index({origin_[0], origin_[1]});
}

int SpatialGrid::flat_index(std::array<int, 2> multi) const {
  if (dimension() == 1) return multi[0];
  return multi[0] + axes_[0].interior_nodes * multi[1];
}

std::array<int, 2> SpatialGrid::multi_index(int flat) const {
  if (dimension() == 1) return {flat, 0};
  const int m0 = axes_[0].interior_nodes;
  return {flat % m0, flat / m0};
}

Vec SpatialGrid::point(int flat) const {
  const auto multi = multi_index(flat);
  Vec x(dimension());
  for (int k = 0; k < dimension(); ++k) x[k] = coordinate(k, multi[k]);
  return x;
}

}  // namespace fracfreq
