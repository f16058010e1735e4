#pragma once

#include <Eigen/Dense>

namespace fracfreq {

/// Small point/vector in R^n or R^{n+1}; capacity 3, no heap allocation.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

/// Small square matrix, at most 3x3.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace fracfreq
