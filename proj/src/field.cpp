#include "fracfreq/field.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fracfreq {

// ---------------------------------------------------------------------------
// Extended coefficient and weights

ExtendedCoefficient::ExtendedCoefficient(int dimension, Rule rule, double ellipticity,
                                         double lipschitz, std::string description)
    : dimension_(dimension),
      rule_(std::move(rule)),
      ellipticity_(ellipticity),
      lipschitz_(lipschitz),
      description_(std::move(description)) {
  if (dimension_ < 2 || dimension_ > 3) {
    throw std::invalid_argument("ExtendedCoefficient: dimension must be 2 or 3");
  }
  if (!(ellipticity_ > 0.0 && ellipticity_ <= 1.0)) {
    throw std::invalid_argument("ExtendedCoefficient: ellipticity must lie in (0, 1]");
  }
  if (!(lipschitz_ >= 0.0)) {
    throw std::invalid_argument("ExtendedCoefficient: Lipschitz constant must be >= 0");
  }
}

ExtendedCoefficient ExtendedCoefficient::identity(int dimension) {
  ExtendedCoefficient a(
      dimension, [dimension](const Vec&) -> Mat { return Mat::Identity(dimension, dimension); },
      1.0, 0.0, "id");
  a.identity_ = true;
  return a;
}

ExtendedCoefficient ExtendedCoefficient::from_spatial(const CoefficientField& a) {
  const int n = a.dimension();
  if (a.is_identity()) return identity(n + 1);
  return ExtendedCoefficient(
      n + 1,
      [a, n](const Vec& z) -> Mat {
        Mat m = Mat::Zero(n + 1, n + 1);
        m.topLeftCorner(n, n) = a(z.head(n));
        m(n, n) = 1.0;
        return m;
      },
      a.ellipticity(), a.lipschitz(), a.description());
}

ExtendedCoefficient ExtendedCoefficient::rescaled(double tau) const {
  if (!(tau > 0.0)) throw std::invalid_argument("ExtendedCoefficient::rescaled: tau must be > 0");
  if (identity_) return *this;
  Rule base = rule_;
  return ExtendedCoefficient(
      dimension_, [base, tau](const Vec& z) -> Mat { return base(tau * z); }, ellipticity_,
      tau * lipschitz_, description_);
}

Mat ExtendedCoefficient::operator()(const Vec& z) const {
  if (identity_) return Mat::Identity(dimension_, dimension_);
  return rule_(z);
}

GeometricWeights geometric_weights(const ExtendedCoefficient& a, const Vec& z) {
  const double r2 = z.squaredNorm();
  if (!(r2 > 0.0)) throw std::invalid_argument("geometric_weights: z must be nonzero");
  const Vec az = a(z) * z;
  GeometricWeights w;
  w.mu = z.dot(az) / r2;
  w.beta = az / w.mu;
  return w;
}

WeightBoundsReport sample_weight_bounds(const ExtendedCoefficient& a, double radius, int samples,
                                        unsigned seed) {
  const int d = a.dimension();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  WeightBoundsReport rep;
  rep.samples = samples;
  rep.mu_min = std::numeric_limits<double>::infinity();
  rep.mu_max = 0.0;
  constexpr double eps = 1e-6;
  for (int k = 0; k < samples; ++k) {
    Vec dir(d);
    for (int i = 0; i < d; ++i) dir[i] = normal(rng);
    dir.normalize();
    const double r = radius * std::pow(uniform(rng), 1.0 / d);
    if (r < 1e-3 * radius) continue;
    const Vec z = r * dir;
    const GeometricWeights w = geometric_weights(a, z);
    rep.mu_min = std::min(rep.mu_min, w.mu);
    rep.mu_max = std::max(rep.mu_max, w.mu);
    rep.beta_ratio_max = std::max(rep.beta_ratio_max, w.beta.norm() / r);
    rep.beta_radial_error =
        std::max(rep.beta_radial_error, std::abs(w.beta.dot(dir) - r) / r);
    const double dmu = (geometric_weights(a, (r + eps) * dir).mu -
                        geometric_weights(a, (r - eps) * dir).mu) / (2.0 * eps);
    rep.dmu_dr_max = std::max(rep.dmu_dr_max, std::abs(dmu));
    Mat jac(d, d);
    for (int j = 0; j < d; ++j) {
      Vec step = Vec::Zero(d);
      step[j] = eps;
      jac.col(j) = (geometric_weights(a, z + step).beta - geometric_weights(a, z - step).beta) /
                   (2.0 * eps);
    }
    const double dev = (jac - Mat::Identity(d, d)).norm();
    rep.jacobian_constant = std::max(rep.jacobian_constant, dev / r);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Fields

double Field::value(const Vec& z) const {
  double v;
  Vec g;
  evaluate(z, v, g);
  return v;
}

Vec Field::gradient(const Vec& z) const {
  double v;
  Vec g;
  evaluate(z, v, g);
  return g;
}

AnalyticField::AnalyticField(int dimension, ValueFn value, GradientFn gradient, std::string name)
    : dimension_(dimension),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      name_(std::move(name)) {}

AnalyticField AnalyticField::constant(int dimension, double c) {
  return AnalyticField(
      dimension, [c](const Vec&) { return c; },
      [dimension](const Vec&) -> Vec { return Vec::Zero(dimension); }, "const");
}

AnalyticField AnalyticField::linear(int dimension, int axis) {
  if (axis < 0 || axis >= dimension) throw std::invalid_argument("AnalyticField::linear: bad axis");
  return AnalyticField(
      dimension, [axis](const Vec& z) { return z[axis]; },
      [dimension, axis](const Vec&) -> Vec {
        Vec g = Vec::Zero(dimension);
        g[axis] = 1.0;
        return g;
      },
      "x" + std::to_string(axis + 1));
}

void AnalyticField::evaluate(const Vec& z, double& value, Vec& gradient) const {
  value = value_(z);
  gradient = gradient_(z);
}

namespace {

// Three-point derivative weights on nonuniform nodes.
struct Stencil {
  int offset[3];
  double w[3];
};

Stencil centered_stencil(const std::vector<double>& t, int j) {
  const double h1 = t[j] - t[j - 1], h2 = t[j + 1] - t[j];
  return {{j - 1, j, j + 1},
          {-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))}};
}

Stencil forward_stencil(const std::vector<double>& t, int j) {
  const double h1 = t[j + 1] - t[j], h2 = t[j + 2] - t[j + 1];
  return {{j, j + 1, j + 2},
          {-(2.0 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2))}};
}

Stencil backward_stencil(const std::vector<double>& t, int j) {
  const double h1 = t[j] - t[j - 1], h2 = t[j - 1] - t[j - 2];
  return {{j, j - 1, j - 2},
          {(2.0 * h1 + h2) / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), h1 / (h2 * (h1 + h2))}};
}

/// Slope at every node of a 1D array: centered inside, one-sided at the ends.
std::vector<double> slopes(const std::vector<double>& t, const std::vector<double>& f) {
  const int n = static_cast<int>(t.size());
  std::vector<double> d(n);
  for (int j = 0; j < n; ++j) {
    const Stencil s = j == 0 ? forward_stencil(t, j)
                             : (j == n - 1 ? backward_stencil(t, j) : centered_stencil(t, j));
    d[j] = s.w[0] * f[s.offset[0]] + s.w[1] * f[s.offset[1]] + s.w[2] * f[s.offset[2]];
  }
  return d;
}

inline void hermite_basis(double t, double h, double v[2], double s[2], double dv[2],
                          double ds[2]) {
  const double t2 = t * t, t3 = t2 * t;
  v[0] = 2 * t3 - 3 * t2 + 1;
  v[1] = -2 * t3 + 3 * t2;
  s[0] = h * (t3 - 2 * t2 + t);
  s[1] = h * (t3 - t2);
  dv[0] = (6 * t2 - 6 * t) / h;
  dv[1] = (-6 * t2 + 6 * t) / h;
  ds[0] = 3 * t2 - 4 * t + 1;
  ds[1] = 3 * t2 - 2 * t;
}

int locate_uniform(double x, double x0, double h, int cells) {
  const int i = static_cast<int>(std::floor((x - x0) / h));
  return std::clamp(i, 0, cells - 1);
}

}  // namespace

GridFieldSampler::GridFieldSampler(ExtensionField field) : field_(std::move(field)) {
  const int n = field_.grid.dimension();
  const int levels = field_.levels();
  if (field_.values.rows() != levels || field_.values.cols() != field_.grid.size()) {
    throw std::invalid_argument("GridFieldSampler: value array does not match the grids");
  }
  if (levels < 3 || !(field_.y.front() < 0.0 && field_.y.back() > 0.0)) {
    throw std::invalid_argument(
        "GridFieldSampler: y nodes must cover both signs (reflect the field first)");
  }
  const int z = field_.zero_level();
  two_s_ = 2.0 * field_.s;

  admissible_ = std::min(-field_.y.front(), field_.y.back());
  for (int k = 0; k < n; ++k) {
    const Axis& ax = field_.grid.axis(k);
    std::vector<double> xs;
    for (int i = -1; i <= ax.interior_nodes; ++i) xs.push_back(field_.grid.coordinate(k, i));
    xs.front() = ax.lower;
    xs.back() = ax.upper;
    x_.push_back(std::move(xs));
    admissible_ = std::min({admissible_, -ax.lower, ax.upper});
    resolution_ = std::max(resolution_, ax.spacing());
  }

  if (n == 1) {
    eta_.resize(levels);
    for (int j = 0; j < levels; ++j) {
      const double y = field_.y[j];
      eta_[j] = (y < 0 ? -1.0 : 1.0) * std::pow(std::abs(y), two_s_);
    }
    const int px = static_cast<int>(x_[0].size());
    f_.assign(levels, std::vector<double>(px, 0.0));
    for (int j = 0; j < levels; ++j)
      for (int i = 0; i < px - 2; ++i) f_[j][i + 1] = field_.values(j, i);
    fx_.resize(levels);
    for (int j = 0; j < levels; ++j) fx_[j] = slopes(x_[0], f_[j]);

    fe_below_.assign(levels, std::vector<double>(px, 0.0));
    fe_above_ = fe_below_;
    auto apply = [&](const Stencil& st, std::vector<double>& out) {
      for (int i = 0; i < px; ++i) {
        out[i] = st.w[0] * f_[st.offset[0]][i] + st.w[1] * f_[st.offset[1]][i] +
                 st.w[2] * f_[st.offset[2]][i];
      }
    };
    for (int j = 0; j < levels; ++j) {
      if (j == 0) {
        apply(forward_stencil(eta_, j), fe_above_[j]);
      } else if (j == levels - 1) {
        apply(backward_stencil(eta_, j), fe_below_[j]);
      } else if (j == z) {
        apply(backward_stencil(eta_, j), fe_below_[j]);
        apply(forward_stencil(eta_, j), fe_above_[j]);
      } else {
        apply(centered_stencil(eta_, j), fe_below_[j]);
        fe_above_[j] = fe_below_[j];
      }
    }
    fxe_below_.resize(levels);
    fxe_above_.resize(levels);
    for (int j = 0; j < levels; ++j) {
      fxe_below_[j] = slopes(x_[0], fe_below_[j]);
      fxe_above_[j] = slopes(x_[0], fe_above_[j]);
    }
  } else {
    const int nx = static_cast<int>(x_[0].size()), ny = static_cast<int>(x_[1].size());
    v3_.assign(static_cast<std::size_t>(nx) * ny * levels, 0.0);
    auto idx = [&](int i, int j, int k) { return (static_cast<std::size_t>(k) * ny + j) * nx + i; };
    for (int k = 0; k < levels; ++k)
      for (int j = 0; j < ny - 2; ++j)
        for (int i = 0; i < nx - 2; ++i)
          v3_[idx(i + 1, j + 1, k)] = field_.values(k, field_.grid.flat_index({i, j}));
    g3_.assign(v3_.size(), {0.0, 0.0, 0.0});
    std::vector<double> line;
    for (int k = 0; k < levels; ++k)
      for (int j = 0; j < ny; ++j) {
        line.resize(nx);
        for (int i = 0; i < nx; ++i) line[i] = v3_[idx(i, j, k)];
        const auto d = slopes(x_[0], line);
        for (int i = 0; i < nx; ++i) g3_[idx(i, j, k)][0] = d[i];
      }
    for (int k = 0; k < levels; ++k)
      for (int i = 0; i < nx; ++i) {
        line.resize(ny);
        for (int j = 0; j < ny; ++j) line[j] = v3_[idx(i, j, k)];
        const auto d = slopes(x_[1], line);
        for (int j = 0; j < ny; ++j) g3_[idx(i, j, k)][1] = d[j];
      }
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        line.resize(levels);
        for (int k = 0; k < levels; ++k) line[k] = v3_[idx(i, j, k)];
        const auto d = slopes(field_.y, line);
        for (int k = 0; k < levels; ++k) g3_[idx(i, j, k)][2] = d[k];
      }
  }
}

int GridFieldSampler::locate_y(double y) const {
  const auto& ys = field_.y;
  const int j = static_cast<int>(std::upper_bound(ys.begin(), ys.end(), y) - ys.begin()) - 1;
  return std::clamp(j, 0, field_.levels() - 2);
}

void GridFieldSampler::evaluate(const Vec& z, double& value, Vec& gradient) const {
  if (z.size() != dimension()) throw std::invalid_argument("GridFieldSampler: point dimension");
  if (field_.grid.dimension() == 1) {
    evaluate_hermite(z, value, gradient);
  } else {
    evaluate_trilinear(z, value, gradient);
  }
}

void GridFieldSampler::evaluate_hermite(const Vec& z, double& value, Vec& gradient) const {
  const auto& xs = x_[0];
  const double h = xs[1] - xs[0];
  const int p = locate_uniform(z[0], xs[0], h, static_cast<int>(xs.size()) - 1);
  const double t = (z[0] - xs[p]) / h;

  const double y = z[1];
  const double ay = std::abs(y);
  const double e = (y < 0 ? -1.0 : 1.0) * std::pow(ay, two_s_);
  const int j = locate_y(y);
  const double he = eta_[j + 1] - eta_[j];
  const double u = (e - eta_[j]) / he;

  double vx[2], sx[2], dvx[2], dsx[2], ve[2], se[2], dve[2], dse[2];
  hermite_basis(t, h, vx, sx, dvx, dsx);
  hermite_basis(u, he, ve, se, dve, dse);

  const std::vector<double>* fe[2] = {&fe_above_[j], &fe_below_[j + 1]};
  const std::vector<double>* fxe[2] = {&fxe_above_[j], &fxe_below_[j + 1]};
  double f = 0.0, fdx = 0.0, fde = 0.0;
  for (int b = 0; b < 2; ++b) {
    const auto& fv = f_[j + b];
    const auto& fxv = fx_[j + b];
    for (int a = 0; a < 2; ++a) {
      const int i = p + a;
      const double c0 = fv[i], c1 = fxv[i], c2 = (*fe[b])[i], c3 = (*fxe[b])[i];
      f += vx[a] * ve[b] * c0 + sx[a] * ve[b] * c1 + vx[a] * se[b] * c2 + sx[a] * se[b] * c3;
      fdx += dvx[a] * ve[b] * c0 + dsx[a] * ve[b] * c1 + dvx[a] * se[b] * c2 + dsx[a] * se[b] * c3;
      fde += vx[a] * dve[b] * c0 + sx[a] * dve[b] * c1 + vx[a] * dse[b] * c2 + sx[a] * dse[b] * c3;
    }
  }
  value = f;
  gradient.resize(2);
  gradient[0] = fdx;
  gradient[1] = ay > 0.0 ? fde * two_s_ * std::pow(ay, two_s_ - 1.0) : 0.0;
}

void GridFieldSampler::evaluate_trilinear(const Vec& z, double& value, Vec& gradient) const {
  const auto& xs = x_[0];
  const auto& ys = x_[1];
  const int nx = static_cast<int>(xs.size()), ny = static_cast<int>(ys.size());
  const double hx = xs[1] - xs[0], hy = ys[1] - ys[0];
  const int i = locate_uniform(z[0], xs[0], hx, nx - 1);
  const int j = locate_uniform(z[1], ys[0], hy, ny - 1);
  const int k = locate_y(z[2]);
  const double tx = (z[0] - xs[i]) / hx;
  const double ty = (z[1] - ys[j]) / hy;
  const double tz = (z[2] - field_.y[k]) / (field_.y[k + 1] - field_.y[k]);
  value = 0.0;
  gradient = Vec::Zero(3);
  for (int c = 0; c < 8; ++c) {
    const int a = c & 1, b = (c >> 1) & 1, d = (c >> 2) & 1;
    const double w = (a ? tx : 1 - tx) * (b ? ty : 1 - ty) * (d ? tz : 1 - tz);
    const std::size_t id = (static_cast<std::size_t>(k + d) * ny + (j + b)) * nx + (i + a);
    value += w * v3_[id];
    for (int q = 0; q < 3; ++q) gradient[q] += w * g3_[id][q];
  }
}

std::vector<double> GridFieldSampler::circle_breaks(double r) const {
  std::vector<double> out;
  if (field_.grid.dimension() != 1) return out;
  for (double x : x_[0]) {
    if (std::abs(x) < r) {
      const double th = std::acos(x / r);
      out.push_back(th);
      out.push_back(2.0 * kPi - th);
    }
  }
  for (double y : field_.y) {
    if (std::abs(y) < r) {
      double a = std::asin(y / r);
      out.push_back(a < 0 ? a + 2.0 * kPi : a);
      out.push_back(kPi - a);
    }
  }
  return out;
}

std::vector<double> GridFieldSampler::radial_breaks(double r_max) const {
  std::vector<double> out;
  auto add = [&](double v) {
    const double a = std::abs(v);
    if (a > 0.0 && a < r_max) out.push_back(a);
  };
  for (const auto& axis : x_)
    for (double x : axis) add(x);
  for (double y : field_.y) add(y);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RescaledField::RescaledField(std::shared_ptr<const Field> base, double tau, double scale)
    : base_(std::move(base)), tau_(tau), scale_(scale) {
  if (!base_) throw std::invalid_argument("RescaledField: null base field");
  if (!(tau_ > 0.0)) throw std::invalid_argument("RescaledField: tau must be > 0");
  if (!(scale_ > 0.0)) throw std::invalid_argument("RescaledField: scale must be > 0");
}

void RescaledField::evaluate(const Vec& z, double& value, Vec& gradient) const {
  base_->evaluate(tau_ * z, value, gradient);
  value /= scale_;
  gradient *= tau_ / scale_;
}

std::vector<double> RescaledField::radial_breaks(double r_max) const {
  std::vector<double> out = base_->radial_breaks(tau_ * r_max);
  for (double& r : out) r /= tau_;
  return out;
}

}  // namespace fracfreq
