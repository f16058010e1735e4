#include "fracfreq/extension.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/SparseCholesky>

#include "fracfreq/quadrature.hpp"
#include "fracfreq/types.hpp"

namespace fracfreq {

YGrid::YGrid(double h, int j, double k) : height(h), intervals(j), grading(k) {
  if (!(height > 0.0)) throw std::invalid_argument("YGrid: height must be positive");
  if (intervals < 2) throw std::invalid_argument("YGrid: need at least two intervals");
  if (!(grading >= 1.0)) throw std::invalid_argument("YGrid: grading exponent must be >= 1");
}

std::vector<double> YGrid::nodes() const {
  std::vector<double> y(intervals + 1);
  for (int j = 0; j <= intervals; ++j) {
    y[j] = height * std::pow(static_cast<double>(j) / intervals, grading);
  }
  y.front() = 0.0;
  y.back() = height;
  return y;
}

double default_height(const SpectralDecomposition& spec, double decay_lengths) {
  return decay_lengths / std::sqrt(spec.eigenvalues[0]);
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::Semigroup: return "semigroup";
    case Provenance::Pde: return "pde";
    case Provenance::Reflected: return "reflected";
  }
  return "unknown";
}

Provenance provenance_from_string(const std::string& name) {
  if (name == "semigroup") return Provenance::Semigroup;
  if (name == "pde") return Provenance::Pde;
  if (name == "reflected") return Provenance::Reflected;
  throw std::invalid_argument("unknown provenance '" + name + "'");
}

int ExtensionField::zero_level() const {
  for (int j = 0; j < levels(); ++j)
    if (y[j] == 0.0) return j;
  throw std::invalid_argument("ExtensionField: y grid does not contain 0");
}

// ---------------------------------------------------------------------------
// Single-mode profile

double extension_profile(double s, double rho, double& error_estimate) {
  error_estimate = 0.0;
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("extension_profile: s outside (0,1)");
  if (rho < 0.0) throw std::invalid_argument("extension_profile: rho must be >= 0");
  if (rho == 0.0) return 1.0;
  if (rho > 1400.0) return 0.0;  // below the smallest double

  // sigma = e^v: integrand exp(s v - e^v - q e^{-v}).
  const double q = 0.25 * rho * rho;
  auto log_integrand = [s, q](double v) { return s * v - std::exp(v) - q * std::exp(-v); };
  const double v_peak = std::log(0.5 * (s + std::sqrt(s * s + 4.0 * q)));
  const double g_peak = log_integrand(v_peak);
  constexpr double kDrop = 46.0;  // exp(-46) ~ 1e-20
  double lo = v_peak, hi = v_peak;
  while (log_integrand(lo) > g_peak - kDrop) lo -= 0.5;
  while (log_integrand(hi) > g_peak - kDrop) hi += 0.5;

  auto integrate = [&](int panels) {
    const GaussRule& g = gauss_legendre(8);
    const double width = (hi - lo) / panels;
    double sum = 0.0;
    for (int p = 0; p < panels; ++p) {
      const double mid = lo + (p + 0.5) * width;
      for (int i = 0; i < 8; ++i) {
        const double v = mid + 0.5 * width * g.nodes[i];
        sum += g.weights[i] * std::exp(log_integrand(v) - g_peak);
      }
    }
    return 0.5 * width * sum;
  };

  int panels = std::max(4, static_cast<int>(std::ceil((hi - lo) / 0.5)));
  double previous = integrate(panels);
  double current = previous;
  for (int round = 0; round < 12; ++round) {
    panels *= 2;
    current = integrate(panels);
    error_estimate = std::abs(current - previous);
    if (error_estimate <= 1e-14 * std::abs(current)) break;
    previous = current;
  }
  if (error_estimate > 1e-10 * std::abs(current)) {
    std::ostringstream msg;
    msg << "extension_profile: quadrature did not converge for s=" << s << " rho=" << rho
        << " (relative error " << error_estimate / std::abs(current) << ")";
    throw std::runtime_error(msg.str());
  }
  const double scale = std::exp(g_peak) / std::tgamma(s);
  error_estimate *= scale;
  return current * scale;
}

double extension_profile(double s, double rho) {
  double err = 0.0;
  return extension_profile(s, rho, err);
}

// ---------------------------------------------------------------------------
// Semigroup route

double extension_profile_bessel(double s, double rho) {
  if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("extension_profile_bessel: s must lie in (0, 1)");
  if (!(rho >= 0.0)) throw std::invalid_argument("extension_profile_bessel: rho must be >= 0");
  if (rho == 0.0) return 1.0;
  if (rho > 1400.0) return 0.0;
  return std::pow(2.0, 1.0 - s) / std::tgamma(s) * std::pow(rho, s) * std::cyl_bessel_k(s, rho);
}

ExtensionField extend_semigroup(const SpectralDecomposition& spec, const FractionalOrder& s,
                                const GridFunction& u, const YGrid& ygrid) {
  const Eigen::VectorXd coeffs = spectral_coefficients(spec, u);
  ExtensionField ext;
  ext.grid = spec.grid;
  ext.y = ygrid.nodes();
  ext.s = s.value();
  ext.grading = ygrid.grading;
  ext.provenance = Provenance::Semigroup;
  const int levels = ext.levels();
  const int m = spec.size();
  ext.values.resize(levels, m);

  const double cmax = coeffs.cwiseAbs().maxCoeff();
  std::vector<int> active;
  for (int k = 0; k < m; ++k)
    if (std::abs(coeffs[k]) > 1e-15 * cmax) active.push_back(k);

  ext.values.row(0) = u.values.transpose();
  for (int j = 1; j < levels; ++j) {
    Eigen::VectorXd level_coeffs = Eigen::VectorXd::Zero(m);
    for (int k : active) {
      const double rho = std::sqrt(spec.eigenvalues[k]) * ext.y[j];
      level_coeffs[k] = coeffs[k] * extension_profile_bessel(s.value(), rho);
    }
    ext.values.row(j) = (spec.eigenvectors * level_coeffs).transpose();
  }
  return ext;
}

// ---------------------------------------------------------------------------
// Finite-volume strip operator

double abs_power_integral(double a, double b, double p) {
  auto antiderivative = [p](double y) {
    const double m = std::pow(std::abs(y), p + 1.0) / (p + 1.0);
    return y < 0.0 ? -m : m;
  };
  return antiderivative(b) - antiderivative(a);
}

std::vector<double> cell_weights(std::span<const double> y, double a) {
  const std::size_t n = y.size();
  std::vector<double> w(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double lo = j == 0 ? y[0] : 0.5 * (y[j - 1] + y[j]);
    const double hi = j + 1 == n ? y[n - 1] : 0.5 * (y[j] + y[j + 1]);
    w[j] = abs_power_integral(lo, hi, a);
  }
  return w;
}

namespace {

/// Harmonic flux coefficient between consecutive levels: exact for the
/// one-dimensional weighted problem (|y|^a U')' = 0 on each interval.
std::vector<double> flux_coefficients(std::span<const double> y, double a) {
  std::vector<double> c(y.size() - 1);
  for (std::size_t j = 0; j + 1 < y.size(); ++j) {
    c[j] = 1.0 / abs_power_integral(y[j], y[j + 1], -a);
  }
  return c;
}

void require_ascending(std::span<const double> y) {
  for (std::size_t j = 0; j + 1 < y.size(); ++j)
    if (!(y[j + 1] > y[j])) throw std::invalid_argument("y nodes must be strictly increasing");
}

/// Matrix acting on all nodes (levels x spatial), row index j*m + i:
///   W_j (L U_j)_i + c_{j+1/2} (U_j - U_{j+1}) + c_{j-1/2} (U_j - U_{j-1}).
Eigen::SparseMatrix<double> strip_matrix(const DiscreteOperator& op, std::span<const double> y,
                                         double a) {
  const int m = op.grid.size();
  const int levels = static_cast<int>(y.size());
  const std::vector<double> w = cell_weights(y, a);
  const std::vector<double> c = flux_coefficients(y, a);
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(static_cast<std::size_t>(levels) * (op.matrix.nonZeros() + 3 * m));
  for (int j = 0; j < levels; ++j) {
    for (int col = 0; col < op.matrix.outerSize(); ++col) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, col); it; ++it) {
        t.emplace_back(j * m + it.row(), j * m + it.col(), w[j] * it.value());
      }
    }
    for (int i = 0; i < m; ++i) {
      const int row = j * m + i;
      double diag = 0.0;
      if (j + 1 < levels) {
        diag += c[j];
        t.emplace_back(row, row + m, -c[j]);
      }
      if (j > 0) {
        diag += c[j - 1];
        t.emplace_back(row, row - m, -c[j - 1]);
      }
      t.emplace_back(row, row, diag);
    }
  }
  Eigen::SparseMatrix<double> g(levels * m, levels * m);
  g.setFromTriplets(t.begin(), t.end());
  return g;
}

/// Solves the strip problem with Dirichlet rows at the first and last level.
Eigen::VectorXd solve_strip(const DiscreteOperator& op, std::span<const double> y, double a,
                            const Eigen::VectorXd& bottom, const Eigen::VectorXd& top) {
  const int m = op.grid.size();
  const int levels = static_cast<int>(y.size());
  const Eigen::SparseMatrix<double> g = strip_matrix(op, y, a);
  const int unknowns = (levels - 2) * m;

  Eigen::VectorXd full = Eigen::VectorXd::Zero(levels * m);
  full.head(m) = bottom;
  full.tail(m) = top;
  Eigen::VectorXd rhs = -(g * full).segment(m, unknowns);

  Eigen::SparseMatrix<double> k = g.block(m, m, unknowns, unknowns);
  k.makeCompressed();
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(k);
  if (solver.info() != Eigen::Success) {
    throw std::runtime_error("weighted strip solve: factorization failed");
  }
  Eigen::VectorXd x = solver.solve(rhs);
  const double scale = std::max(rhs.norm(), std::numeric_limits<double>::min());
  double residual = (k * x - rhs).norm() / scale;
  for (int it = 0; it < 3 && residual > 1e-12; ++it) {
    x += solver.solve(rhs - k * x);
    residual = (k * x - rhs).norm() / scale;
  }
  if (!(residual <= 1e-10) && rhs.norm() > 0.0) {
    std::ostringstream msg;
    msg << "weighted strip solve: relative residual " << residual << " above 1e-10";
    throw std::runtime_error(msg.str());
  }
  full.segment(m, unknowns) = x;
  return full;
}

}  // namespace

ExtensionField extend_pde(const DiscreteOperator& op, const FractionalOrder& s,
                          const GridFunction& u, const YGrid& ygrid) {
  if (!(u.grid == op.grid)) throw std::invalid_argument("extend_pde: grid mismatch");
  ExtensionField ext;
  ext.grid = op.grid;
  ext.y = ygrid.nodes();
  ext.s = s.value();
  ext.grading = ygrid.grading;
  ext.provenance = Provenance::Pde;
  const int m = op.grid.size();
  const Eigen::VectorXd full = solve_strip(op, ext.y, s.weight_exponent(), u.values,
                                           Eigen::VectorXd::Zero(m));
  ext.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(full.data(), ext.levels(), m);
  return ext;
}

ExtensionField solve_weighted_pde(const DiscreteOperator& op, const FractionalOrder& s,
                                  std::vector<double> y, const GridFunction& bottom,
                                  const GridFunction& top) {
  require_ascending(y);
  if (!(bottom.grid == op.grid) || !(top.grid == op.grid)) {
    throw std::invalid_argument("solve_weighted_pde: grid mismatch");
  }
  ExtensionField ext;
  ext.grid = op.grid;
  ext.y = std::move(y);
  ext.s = s.value();
  ext.grading = 0.0;
  ext.provenance = Provenance::Pde;
  ext.zero_level();
  const int m = op.grid.size();
  const Eigen::VectorXd full =
      solve_strip(op, ext.y, s.weight_exponent(), bottom.values, top.values);
  ext.values = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                             Eigen::RowMajor>>(full.data(), ext.levels(), m);
  return ext;
}

std::vector<double> mirrored_nodes(const YGrid& ygrid) {
  const std::vector<double> up = ygrid.nodes();
  std::vector<double> y;
  y.reserve(2 * up.size() - 1);
  for (auto it = up.rbegin(); it != up.rend() - 1; ++it) y.push_back(-*it);
  y.insert(y.end(), up.begin(), up.end());
  return y;
}

Eigen::MatrixXd weighted_residual(const DiscreteOperator& op, const ExtensionField& f) {
  if (!(f.grid == op.grid)) throw std::invalid_argument("weighted_residual: grid mismatch");
  const int m = op.grid.size();
  const int levels = f.levels();
  const Eigen::SparseMatrix<double> g = strip_matrix(op, f.y, f.weight_exponent());
  const Eigen::VectorXd flat =
      Eigen::Map<const Eigen::VectorXd>(f.values.data(), static_cast<Eigen::Index>(levels) * m);
  const Eigen::VectorXd r = g * flat;
  const std::vector<double> w = cell_weights(f.y, f.weight_exponent());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(levels, m);
  for (int j = 1; j + 1 < levels; ++j)
    for (int i = 0; i < m; ++i) out(j, i) = r[j * m + i] / w[j];
  return out;
}

// ---------------------------------------------------------------------------
// Trace, reflection, norms

double trace_constant(const FractionalOrder& s) {
  const double v = s.value();
  return 2.0 * v * std::tgamma(-v) / (std::pow(4.0, v) * std::tgamma(v));
}

double gamma_reflection_error(double s) {
  const double direct = std::tgamma(-s);
  const double reflected = -kPi / (std::sin(kPi * s) * std::tgamma(1.0 + s));
  return std::abs(direct - reflected) / std::abs(direct);
}

NeumannTrace neumann_trace(const ExtensionField& ext, const FractionalOrder& s) {
  const int z = ext.zero_level();
  constexpr int kLevels = 4;
  if (z + kLevels >= ext.levels()) {
    throw std::invalid_argument("neumann_trace: not enough positive y levels");
  }
  const double top = ext.y.back();
  if (!(ext.y[z + kLevels] < 0.05 * top)) {
    throw std::invalid_argument(
        "neumann_trace: need at least four y levels below 0.05 * Y (refine or grade the y grid)");
  }
  const double two_s = 2.0 * s.value();
  const double y_ref = ext.y[z + kLevels];
  // Scaled columns p_k = (y_k/y_ref)^{2s}, q_k = (y_k/y_ref)^2.
  double spp = 0, spq = 0, sqq = 0;
  std::array<double, kLevels> p{}, q{};
  for (int k = 0; k < kLevels; ++k) {
    const double t = ext.y[z + 1 + k] / y_ref;
    p[k] = std::pow(t, two_s);
    q[k] = t * t;
    spp += p[k] * p[k];
    spq += p[k] * q[k];
    sqq += q[k] * q[k];
  }
  const double det = spp * sqq - spq * spq;
  const double ref_pow = std::pow(y_ref, two_s);
  const int m = ext.grid.size();
  Eigen::VectorXd c(m);
  std::vector<std::array<double, kLevels>> estimates(m);
  double scale = 0.0;
  for (int i = 0; i < m; ++i) {
    const double u0 = ext.values(z, i);
    double bp = 0, bq = 0;
    for (int k = 0; k < kLevels; ++k) {
      const double diff = ext.values(z + 1 + k, i) - u0;
      bp += p[k] * diff;
      bq += q[k] * diff;
      estimates[i][k] = diff / std::pow(ext.y[z + 1 + k], two_s);
    }
    c[i] = (sqq * bp - spq * bq) / det / ref_pow;
    scale = std::max(scale, std::abs(c[i]));
  }
  NeumannTrace out;
  out.levels_used = kLevels;
  for (int i = 0; i < m; ++i) {
    const auto& e = estimates[i];
    bool increasing = true, decreasing = true;
    for (int k = 0; k + 1 < kLevels; ++k) {
      increasing = increasing && e[k + 1] >= e[k];
      decreasing = decreasing && e[k + 1] <= e[k];
    }
    const auto [mn, mx] = std::minmax_element(e.begin(), e.end());
    if (!increasing && !decreasing && (*mx - *mn) > 1e-6 * std::max(scale, 1e-300)) ++out.flagged;
  }
  out.trace = GridFunction(ext.grid, two_s * c);
  return out;
}

ExtensionField reflect_even(const ExtensionField& ext) {
  if (ext.y.empty() || ext.y.front() != 0.0) {
    throw std::invalid_argument("reflect_even: field must be defined on y >= 0 starting at 0");
  }
  ExtensionField out;
  out.grid = ext.grid;
  out.s = ext.s;
  out.grading = ext.grading;
  out.provenance = Provenance::Reflected;
  const int levels = ext.levels();
  const int m = ext.grid.size();
  out.y.reserve(2 * levels - 1);
  out.values.resize(2 * levels - 1, m);
  for (int j = levels - 1; j >= 1; --j) {
    out.y.push_back(-ext.y[j]);
    out.values.row(levels - 1 - j) = ext.values.row(j);
  }
  for (int j = 0; j < levels; ++j) {
    out.y.push_back(ext.y[j]);
    out.values.row(levels - 1 + j) = ext.values.row(j);
  }
  return out;
}

double weighted_l2_norm(const ExtensionField& f) {
  const std::vector<double> w = cell_weights(f.y, f.weight_exponent());
  double sum = 0.0;
  for (int j = 0; j < f.levels(); ++j) sum += w[j] * f.values.row(j).squaredNorm();
  return std::sqrt(sum * f.grid.cell_volume());
}

double weighted_l2_discrepancy(const ExtensionField& a, const ExtensionField& b) {
  if (!(a.grid == b.grid) || a.y != b.y || a.s != b.s) {
    throw std::invalid_argument("weighted_l2_discrepancy: fields live on different grids");
  }
  ExtensionField diff = a;
  diff.values = a.values - b.values;
  const double denom = weighted_l2_norm(b);
  return denom > 0.0 ? weighted_l2_norm(diff) / denom : weighted_l2_norm(diff);
}

double weighted_h1_energy(const ExtensionField& f) {
  const double a = f.weight_exponent();
  const std::vector<double> w = cell_weights(f.y, a);
  const std::vector<double> c = flux_coefficients(f.y, a);
  const SpatialGrid& grid = f.grid;
  const int n = grid.dimension();
  double mass = 0.0, grad_x = 0.0, grad_y = 0.0;
  for (int j = 0; j < f.levels(); ++j) {
    mass += w[j] * f.values.row(j).squaredNorm();
    for (int k = 0; k < n; ++k) {
      const double h = grid.spacing(k);
      const int mk = grid.nodes(k);
      const int other = n == 2 ? grid.nodes(1 - k) : 1;
      for (int o = 0; o < other; ++o) {
        for (int i = -1; i < mk; ++i) {
          auto node = [&](int idx) -> double {
            if (idx < 0 || idx >= mk) return 0.0;
            std::array<int, 2> multi = k == 0 ? std::array<int, 2>{idx, o}
                                              : std::array<int, 2>{o, idx};
            return f.values(j, grid.flat_index(multi));
          };
          const double d = (node(i + 1) - node(i)) / h;
          grad_x += w[j] * d * d;
        }
      }
    }
  }
  for (int j = 0; j + 1 < f.levels(); ++j) {
    grad_y += c[j] * (f.values.row(j + 1) - f.values.row(j)).squaredNorm();
  }
  return grid.cell_volume() * (mass + grad_x + grad_y);
}

double truncation_ratio(const ExtensionField& f) {
  const double base = f.values.row(f.zero_level()).cwiseAbs().maxCoeff();
  const double edge = f.values.row(f.levels() - 1).cwiseAbs().maxCoeff();
  return base > 0.0 ? edge / base : edge;
}

}  // namespace fracfreq
