#include "fracfreq/coefficient.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace fracfreq {

CoefficientField::CoefficientField(int dimension, Rule rule, double ellipticity, double lipschitz,
                                   bool normalized_at_origin, std::string description)
    : dimension_(dimension),
      rule_(std::move(rule)),
      ellipticity_(ellipticity),
      lipschitz_(lipschitz),
      normalized_(normalized_at_origin),
      description_(std::move(description)) {
  if (dimension_ < 1 || dimension_ > 2) {
    throw std::invalid_argument("CoefficientField: dimension must be 1 or 2");
  }
  if (!(ellipticity_ > 0.0 && ellipticity_ <= 1.0)) {
    throw std::invalid_argument("CoefficientField: ellipticity must lie in (0, 1]");
  }
  if (!(lipschitz_ >= 0.0)) {
    throw std::invalid_argument("CoefficientField: Lipschitz constant must be >= 0");
  }
}

CoefficientField CoefficientField::identity(int dimension) {
  CoefficientField field(
      dimension, [dimension](const Vec&) -> Mat { return Mat::Identity(dimension, dimension); },
      1.0, 0.0, true, "id");
  field.identity_ = true;
  return field;
}

CoefficientField CoefficientField::scalar(int dimension, std::function<double(const Vec&)> a,
                                          double ellipticity, double lipschitz,
                                          std::string description) {
  const bool normalized = std::abs(a(Vec::Zero(dimension)) - 1.0) == 0.0;
  return CoefficientField(
      dimension,
      [dimension, a = std::move(a)](const Vec& x) -> Mat {
        return a(x) * Mat::Identity(dimension, dimension);
      },
      ellipticity, lipschitz, normalized, std::move(description));
}

namespace {

double box_radius(const SpatialGrid& grid) {
  double r2 = 0.0;
  for (int k = 0; k < grid.dimension(); ++k) {
    const double e = std::max(std::abs(grid.axis(k).lower), std::abs(grid.axis(k).upper));
    r2 += e * e;
  }
  return std::sqrt(r2);
}

}  // namespace

CoefficientField catalog_coefficient(std::string_view name, const SpatialGrid& grid,
                                     double epsilon) {
  const int n = grid.dimension();
  if (name == "id") return CoefficientField::identity(n);
  if (name == "one_plus_quarter_x_sq") {
    const double radius = box_radius(grid);
    const double top = 1.0 + radius * radius / 4.0;
    return CoefficientField::scalar(
        n, [](const Vec& x) { return 1.0 + x.squaredNorm() / 4.0; }, 1.0 / top, radius / 2.0,
        "one_plus_quarter_x_sq");
  }
  if (name == "id_plus_eps_sin") {
    if (!(epsilon >= 0.0 && epsilon < 1.0)) {
      throw std::invalid_argument("id_plus_eps_sin: epsilon must lie in [0, 1)");
    }
    std::ostringstream desc;
    desc << "id_plus_eps_sin(eps=" << epsilon << ")";
    return CoefficientField::scalar(
        n, [epsilon](const Vec& x) { return 1.0 + epsilon * std::sin(x[0]); }, 1.0 - epsilon,
        epsilon, desc.str());
  }
  throw std::invalid_argument("unknown coefficient catalog entry '" + std::string(name) + "'");
}

namespace {

/// Nodal table on the full grid (boundary included) with multilinear lookup.
struct NodalTable {
  int n = 1;
  std::array<int, 2> count{1, 1};
  std::array<double, 2> lower{0, 0};
  std::array<double, 2> h{1, 1};
  std::vector<Mat> entries;

  const Mat& at(int i, int j) const { return entries[i + count[0] * j]; }

  Mat operator()(const Vec& x) const {
    std::array<int, 2> base{0, 0};
    std::array<double, 2> frac{0.0, 0.0};
    for (int k = 0; k < n; ++k) {
      const double t = (x[k] - lower[k]) / h[k];
      int i = static_cast<int>(std::floor(t));
      i = std::clamp(i, 0, count[k] - 2);
      base[k] = i;
      frac[k] = std::clamp(t - i, 0.0, 1.0);
    }
    if (n == 1) {
      return (1.0 - frac[0]) * at(base[0], 0) + frac[0] * at(base[0] + 1, 0);
    }
    const int i = base[0], j = base[1];
    const double fx = frac[0], fy = frac[1];
    return (1 - fx) * (1 - fy) * at(i, j) + fx * (1 - fy) * at(i + 1, j) +
           (1 - fx) * fy * at(i, j + 1) + fx * fy * at(i + 1, j + 1);
  }
};

}  // namespace

CoefficientField load_coefficient_csv(const std::filesystem::path& path, const SpatialGrid& grid) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open coefficient table " + path.string());
  auto table = std::make_shared<NodalTable>();
  const int n = grid.dimension();
  table->n = n;
  int total = 1;
  for (int k = 0; k < n; ++k) {
    table->count[k] = grid.nodes(k) + 2;
    table->lower[k] = grid.coordinate(k, -1);
    table->h[k] = grid.spacing(k);
    total *= table->count[k];
  }
  table->entries.assign(total, Mat::Constant(n, n, std::nan("")));
  std::vector<bool> seen(total, false);

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    double first = 0.0;
    if (!(fields >> first)) continue;  // header row
    const int node = static_cast<int>(first);
    if (node < 0 || node >= total || node != first) {
      throw std::runtime_error("coefficient table line " + std::to_string(line_no) +
                               ": bad node index");
    }
    Mat a(n, n);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c)
        if (!(fields >> a(r, c))) {
          throw std::runtime_error("coefficient table line " + std::to_string(line_no) +
                                   ": expected " + std::to_string(n * n) + " entries");
        }
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * a.cwiseAbs().maxCoeff()) {
      throw std::runtime_error("coefficient table line " + std::to_string(line_no) +
                               ": matrix is not symmetric");
    }
    table->entries[node] = a;
    seen[node] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end()) {
    throw std::runtime_error("coefficient table " + path.string() + " does not cover every node");
  }

  double lo = 1e300, hi = 0.0, lip = 0.0;
  for (const Mat& a : table->entries) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(a);
    lo = std::min(lo, eig.eigenvalues().minCoeff());
    hi = std::max(hi, eig.eigenvalues().maxCoeff());
  }
  if (!(lo > 0.0)) throw std::runtime_error("coefficient table is not uniformly elliptic");
  for (int j = 0; j < table->count[1]; ++j) {
    for (int i = 0; i < table->count[0]; ++i) {
      if (i + 1 < table->count[0]) {
        lip = std::max(lip, (table->at(i + 1, j) - table->at(i, j)).norm() / table->h[0]);
      }
      if (n == 2 && j + 1 < table->count[1]) {
        lip = std::max(lip, (table->at(i, j + 1) - table->at(i, j)).norm() / table->h[1]);
      }
    }
  }
  const double ellipticity = std::min({1.0, lo, 1.0 / hi});
  const Mat at_origin = (*table)(Vec::Zero(n));
  const bool normalized = (at_origin - Mat::Identity(n, n)).cwiseAbs().maxCoeff() == 0.0;
  return CoefficientField(
      n, [table](const Vec& x) -> Mat { return (*table)(x); }, ellipticity, lip, normalized,
      "csv:" + path.filename().string());
}

}  // namespace fracfreq
