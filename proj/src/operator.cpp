#include "fracfreq/operator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fracfreq {

namespace {

/// One symmetric (Loewdin) correction Q <- Q (I - E / 2), E = Q^T Q - I,
/// with E accumulated in long double.
void reorthonormalize(Eigen::MatrixXd& q) {
  const int m = static_cast<int>(q.cols()), rows = static_cast<int>(q.rows());
  Eigen::MatrixXd e(m, m);
  for (int j = 0; j < m; ++j) {
    for (int k = j; k < m; ++k) {
      long double sum = 0.0L;
      const double* a = q.col(j).data();
      const double* b = q.col(k).data();
      for (int i = 0; i < rows; ++i) sum += static_cast<long double>(a[i]) * b[i];
      if (j == k) sum -= 1.0L;
      e(j, k) = e(k, j) = static_cast<double>(sum);
    }
  }
  q -= 0.5 * q * e;
}

/// Calls visit(left_flat_or_-1, right_flat_or_-1, face_coefficient / h_k^2)
/// for every face of the grid, boundary faces included.
template <typename Visitor>
void for_each_face(const SpatialGrid& grid, const CoefficientField& coeff, Visitor&& visit) {
  const int n = grid.dimension();
  const int m0 = grid.nodes(0);
  const int m1 = n == 2 ? grid.nodes(1) : 1;
  for (int k = 0; k < n; ++k) {
    const double h = grid.spacing(k);
    const int mk = grid.nodes(k);
    const int other = k == 0 ? m1 : m0;
    for (int o = 0; o < other; ++o) {
      for (int i = -1; i < mk; ++i) {
        std::array<int, 2> left{0, 0}, right{0, 0};
        if (k == 0) {
          left = {i, o};
          right = {i + 1, o};
        } else {
          left = {o, i};
          right = {o, i + 1};
        }
        Vec mid(n);
        for (int d = 0; d < n; ++d) mid[d] = grid.coordinate(d, left[d]);
        mid[k] += 0.5 * h;
        const Mat a = coeff(mid);
        if (n == 2 && std::abs(a(0, 1)) > 0.0) {
          throw std::invalid_argument(
              "assemble_operator: the 2D five-point stencil requires a diagonal coefficient");
        }
        const double akk = a(k, k);
        bool elliptic = akk > 0.0;
        if (n == 2) elliptic = elliptic && a(0, 0) > 0.0 && a(1, 1) > 0.0;
        if (!elliptic || !std::isfinite(akk)) {
          std::ostringstream msg;
          msg << "assemble_operator: coefficient not elliptic at (";
          for (int d = 0; d < n; ++d) msg << (d ? ", " : "") << mid[d];
          msg << ")";
          throw std::domain_error(msg.str());
        }
        const int lf = i >= 0 ? grid.flat_index(left) : -1;
        const int rf = i + 1 < mk ? grid.flat_index(right) : -1;
        visit(lf, rf, akk / (h * h), akk, k);
      }
    }
  }
}

}  // namespace

DiscreteOperator assemble_operator(const SpatialGrid& grid, const CoefficientField& coeff,
                                   BoundaryCondition bc) {
  if (bc != BoundaryCondition::Dirichlet) {
    throw std::invalid_argument("assemble_operator: only Dirichlet conditions are supported");
  }
  if (coeff.dimension() != grid.dimension()) {
    throw std::invalid_argument("assemble_operator: coefficient/grid dimension mismatch");
  }
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(grid.size()) * (2 * grid.dimension() + 1));
  for_each_face(grid, coeff, [&](int lf, int rf, double w, double, int) {
    if (lf >= 0) triplets.emplace_back(lf, lf, w);
    if (rf >= 0) triplets.emplace_back(rf, rf, w);
    if (lf >= 0 && rf >= 0) {
      triplets.emplace_back(lf, rf, -w);
      triplets.emplace_back(rf, lf, -w);
    }
  });
  DiscreteOperator op{grid, Eigen::SparseMatrix<double>(grid.size(), grid.size())};
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  return op;
}

SpectralDecomposition eigendecompose(const DiscreteOperator& op) {
  const Eigen::MatrixXd dense = op.dense();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("eigendecompose: symmetric eigensolver did not converge");
  }
  SpectralDecomposition spec{op.grid, solver.eigenvalues(), solver.eigenvectors()};
  const int m = spec.size();
  if (m <= 2048) reorthonormalize(spec.eigenvectors);
  const double scale = 1.0 / std::sqrt(op.weight());
  for (int j = 0; j < m; ++j) {
    auto col = spec.eigenvectors.col(j);
    const double peak = col.cwiseAbs().maxCoeff();
    for (int i = 0; i < m; ++i) {
      if (std::abs(col[i]) > 1e-8 * peak) {
        if (col[i] < 0.0) col = -col;
        break;
      }
    }
    col *= scale;
  }

  // Contract checks.
  std::ostringstream problems;
  if (spec.eigenvalues.minCoeff() <= 0.0) {
    problems << " non-positive eigenvalue " << spec.eigenvalues.minCoeff() << ";";
  }
  const Eigen::MatrixXd gram =
      op.weight() * spec.eigenvectors.transpose() * spec.eigenvectors;
  const double ortho = (gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
  if (ortho > 1e-10) problems << " orthonormality defect " << ortho << ";";
  double worst = 0.0;
  int worst_j = -1;
  for (int j = 0; j < m; ++j) {
    const Eigen::VectorXd e = spec.eigenvectors.col(j);
    const double res = (op.matrix * e - spec.eigenvalues[j] * e).norm() /
                       (std::abs(spec.eigenvalues[j]) * e.norm());
    if (res > worst) {
      worst = res;
      worst_j = j;
    }
  }
  if (worst > 1e-8) problems << " residual " << worst << " at pair " << worst_j << ";";
  if (!problems.str().empty()) {
    throw std::runtime_error("eigendecompose: contract violated:" + problems.str());
  }
  return spec;
}

double dirichlet_form(const SpatialGrid& grid, const CoefficientField& coeff,
                      const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  double sum = 0.0;
  for_each_face(grid, coeff, [&](int lf, int rf, double w, double, int) {
    const double du = (rf >= 0 ? u[rf] : 0.0) - (lf >= 0 ? u[lf] : 0.0);
    const double dv = (rf >= 0 ? v[rf] : 0.0) - (lf >= 0 ? v[lf] : 0.0);
    sum += w * du * dv;
  });
  return sum * grid.cell_volume();
}

}  // namespace fracfreq
