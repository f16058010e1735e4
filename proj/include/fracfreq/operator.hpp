#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fracfreq/coefficient.hpp"
#include "fracfreq/grid.hpp"

namespace fracfreq {

enum class BoundaryCondition { Dirichlet };

/// Matrix of L = -div(A grad .) on the interior nodes of a grid with
/// homogeneous Dirichlet data. Symmetric positive definite in the plain
/// Euclidean sense; the discrete L2 inner product carries the weight
/// `grid.cell_volume()`.
struct DiscreteOperator {
  SpatialGrid grid;
  Eigen::SparseMatrix<double> matrix;

  double weight() const { return grid.cell_volume(); }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

/// Eigenpairs of a DiscreteOperator. Eigenvectors are stored as columns and
/// are orthonormal in the weighted inner product <u, v>_h = h^n sum u_i v_i.
struct SpectralDecomposition {
  SpatialGrid grid;
  Eigen::VectorXd eigenvalues;   // ascending, all positive
  Eigen::MatrixXd eigenvectors;  // size() x size()

  int size() const { return static_cast<int>(eigenvalues.size()); }
  double weight() const { return grid.cell_volume(); }
};

/// Conservative second-order flux-difference discretization with the
/// coefficient sampled at cell midpoints. In 2D the five-point stencil uses
/// a_11 on x-faces and a_22 on y-faces, so the coefficient must be diagonal.
/// Throws std::domain_error naming the offending point when a sampled
/// coefficient is not positive definite.
DiscreteOperator assemble_operator(const SpatialGrid& grid, const CoefficientField& coeff,
                                   BoundaryCondition bc = BoundaryCondition::Dirichlet);

/// Full symmetric eigendecomposition with the sign convention that the first
/// component of magnitude above 1e-8 * max|e_j| is positive. Throws
/// std::runtime_error (with residual norms) if the solver fails or the result
/// violates the orthonormality / residual / positivity contract.
SpectralDecomposition eigendecompose(const DiscreteOperator& op);

/// Discrete Dirichlet form sum over faces of a_face * (D_h u)(D_h v) * h^n,
/// with zero boundary values; equals <L u, v>_h.
double dirichlet_form(const SpatialGrid& grid, const CoefficientField& coeff,
                      const Eigen::VectorXd& u, const Eigen::VectorXd& v);

}  // namespace fracfreq
