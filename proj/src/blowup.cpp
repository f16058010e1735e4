#include "fracfreq/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fracfreq {

double BlowupRecord::max_transport_error() const {
  double worst = 0.0;
  for (const auto& t : transport) worst = std::max(worst, std::abs(t.N_rescaled - t.N_direct));
  return worst;
}

namespace {

struct SampledFrequency {
  std::vector<SurfaceMoments> surfaces;
  BallIntegrals ball;
};

SampledFrequency sample_frequency(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s,
                                  const std::vector<double>& radii, const QuadratureOptions& opts) {
  SampledFrequency out;
  out.ball = ball_integrals(u, a, s, radii, opts);
  for (double r : radii) {
    out.surfaces.push_back(surface_moments(u, a, s, r, opts));
    if (!(out.surfaces.back().H > 0.0)) throw TrivialFieldError("frequency: H vanishes");
  }
  return out;
}

double frequency_at(const SampledFrequency& f, std::size_t k) {
  return f.surfaces[k].r * f.ball.D[k] / f.surfaces[k].H;
}

}  // namespace

std::vector<double> frequency_values(const Field& u, const ExtendedCoefficient& a,
                                     const FractionalOrder& s, const std::vector<double>& radii,
                                     const QuadratureOptions& opts) {
  const SampledFrequency f = sample_frequency(u, a, s, radii, opts);
  std::vector<double> out;
  for (std::size_t k = 0; k < radii.size(); ++k) out.push_back(frequency_at(f, k));
  return out;
}

namespace {

void check_tau(const Field& u, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("rescale: tau must lie in (0, 1)");
  if (tau > u.admissible_radius()) {
    std::ostringstream msg;
    msg << "rescale: tau=" << tau << " exceeds the admissible radius " << u.admissible_radius();
    throw std::invalid_argument(msg.str());
  }
  const double h = u.resolution();
  if (h > 0.0 && 2.0 * tau / h < 8.0) {
    std::ostringstream msg;
    msg << "rescale: tau=" << tau << " leaves " << 2.0 * tau / h
        << " cells across the rescaled ball, need at least 8";
    throw std::invalid_argument(msg.str());
  }
}

std::size_t index_of(const std::vector<double>& sorted, double v) {
  return std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin();
}

}  // namespace

std::vector<BlowupRecord> rescale_all(std::shared_ptr<const Field> u, const ExtendedCoefficient& a,
                                      const FractionalOrder& s, const std::vector<double>& taus,
                                      const std::vector<double>& transport_radii,
                                      const QuadratureOptions& opts) {
  if (!u) throw std::invalid_argument("rescale: null field");
  for (double tau : taus) check_tau(*u, tau);
  std::vector<double> radii = transport_radii;
  for (double r : radii) {
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("rescale: transport radii must lie in (0, 1]");
  }
  radii.push_back(1.0);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  // Unscaled field at tau r for every tau; r = 1 gives H(tau).
  std::vector<double> direct;
  for (double tau : taus) {
    if (transport_radii.empty()) {
      direct.push_back(tau);
    } else {
      for (double r : radii) direct.push_back(tau * r);
    }
  }
  std::sort(direct.begin(), direct.end());
  direct.erase(std::unique(direct.begin(), direct.end()), direct.end());
  SampledFrequency fd;
  if (transport_radii.empty()) {
    for (double r : direct) fd.surfaces.push_back(surface_moments(*u, a, s, r, opts));
  } else {
    fd = sample_frequency(*u, a, s, direct, opts);
  }

  const int n = u->dimension() - 1;
  std::vector<BlowupRecord> out;
  for (double tau : taus) {
    const double Htau = fd.surfaces[index_of(direct, tau * 1.0)].H;
    if (!(Htau > 0.0)) throw TrivialFieldError("rescale: H(tau) vanishes");
    BlowupRecord rec;
    rec.tau = tau;
    rec.normalization = std::sqrt(Htau / std::pow(tau, n + 1 - 2 * s.value()));
    rec.field = std::make_shared<RescaledField>(u, tau, rec.normalization);
    const ExtendedCoefficient at = a.rescaled(tau);
    const SampledFrequency fr = sample_frequency(*rec.field, at, s, radii, opts);
    rec.H1 = {fr.surfaces.back().H, fr.surfaces.back().error};
    rec.D1 = {fr.ball.D.back(), fr.ball.error.back()};
    for (double r : transport_radii) {
      const std::size_t k = index_of(radii, r);
      const std::size_t j = index_of(direct, tau * r);
      rec.transport.push_back({r, frequency_at(fr, k), fd.surfaces[j].r * fd.ball.D[j] / fd.surfaces[j].H});
    }
    out.push_back(std::move(rec));
  }
  return out;
}

BlowupRecord rescale(std::shared_ptr<const Field> u, const ExtendedCoefficient& a,
                     const FractionalOrder& s, double tau,
                     const std::vector<double>& transport_radii, const QuadratureOptions& opts) {
  return rescale_all(std::move(u), a, s, {tau}, transport_radii, opts).front();
}

std::string to_string(OrderVerdict v) {
  switch (v) {
    case OrderVerdict::Finite: return "finite";
    case OrderVerdict::OrderZero: return "order_zero";
    case OrderVerdict::LocallyTrivial: return "locally_trivial";
  }
  return "unknown";
}

std::vector<double> dyadic_radii(double r0, int count) {
  if (!(r0 > 0.0) || count < 1) throw std::invalid_argument("dyadic_radii: need r0 > 0, count >= 1");
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(std::ldexp(r0, -k));
  return out;
}

namespace {

// Nodes of axis k with the two boundary nodes; values padded with zeros.
std::vector<double> padded_axis(const SpatialGrid& g, int k) {
  std::vector<double> x{g.axis(k).lower};
  for (int i = 0; i < g.nodes(k); ++i) x.push_back(g.coordinate(k, i));
  x.push_back(g.axis(k).upper);
  return x;
}

// int_p^q of (linear through (xa,fa), (xb,fb))^2, Simpson being exact.
double square_integral(double xa, double fa, double xb, double fb, double p, double q) {
  auto f = [&](double x) { return fa + (fb - fa) * (x - xa) / (xb - xa); };
  const double m = 0.5 * (p + q);
  return (q - p) / 6.0 * (f(p) * f(p) + 4.0 * f(m) * f(m) + f(q) * f(q));
}

double average_1d(const GridFunction& u, double c, double r) {
  const auto x = padded_axis(u.grid, 0);
  std::vector<double> v(x.size(), 0.0);
  for (int i = 0; i < u.grid.nodes(0); ++i) v[i + 1] = u.values[i];
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    const double p = std::max(x[i], c - r), q = std::min(x[i + 1], c + r);
    if (q > p) sum += square_integral(x[i], v[i], x[i + 1], v[i + 1], p, q);
  }
  return sum / (2.0 * r);
}

double average_2d(const GridFunction& u, const Vec& c, double r) {
  constexpr int kSub = 8;
  const auto x = padded_axis(u.grid, 0), y = padded_axis(u.grid, 1);
  const int nx = u.grid.nodes(0);
  auto at = [&](std::size_t i, std::size_t j) {
    if (i == 0 || j == 0 || i + 1 == x.size() || j + 1 == y.size()) return 0.0;
    return u.values[(j - 1) * nx + (i - 1)];
  };
  double sum = 0.0, measure = 0.0;
  for (std::size_t j = 0; j + 1 < y.size(); ++j) {
    if (y[j + 1] < c[1] - r || y[j] > c[1] + r) continue;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
      if (x[i + 1] < c[0] - r || x[i] > c[0] + r) continue;
      const double hx = x[i + 1] - x[i], hy = y[j + 1] - y[j];
      const double f00 = at(i, j), f10 = at(i + 1, j), f01 = at(i, j + 1), f11 = at(i + 1, j + 1);
      for (int b = 0; b < kSub; ++b) {
        const double ty = (b + 0.5) / kSub;
        for (int q = 0; q < kSub; ++q) {
          const double tx = (q + 0.5) / kSub;
          const double px = x[i] + tx * hx - c[0], py = y[j] + ty * hy - c[1];
          if (px * px + py * py > r * r) continue;
          const double f = (1 - tx) * (1 - ty) * f00 + tx * (1 - ty) * f10 + (1 - tx) * ty * f01 +
                           tx * ty * f11;
          const double w = hx * hy / (kSub * kSub);
          sum += w * f * f;
          measure += w;
        }
      }
    }
  }
  if (!(measure > 0.0)) throw std::invalid_argument("ball_average: ball contains no quadrature points");
  return sum / measure;
}

double least_squares_slope(const std::vector<double>& lx, const std::vector<double>& ly) {
  const double n = static_cast<double>(lx.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k] / n;
    my += ly[k] / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  return sxy / sxx;
}

}  // namespace

double ball_average(const GridFunction& u, const Vec& center, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("ball_average: radius must be > 0");
  const SpatialGrid& g = u.grid;
  for (int k = 0; k < g.dimension(); ++k) {
    if (center[k] - r < g.axis(k).lower - 1e-12 || center[k] + r > g.axis(k).upper + 1e-12) {
      std::ostringstream msg;
      msg << "ball_average: ball of radius " << r << " leaves the box along axis " << k;
      throw std::invalid_argument(msg.str());
    }
  }
  const double mean_sq = g.dimension() == 1 ? average_1d(u, center[0], r) : average_2d(u, center, r);
  return std::sqrt(std::max(0.0, mean_sq));
}

OrderEstimate vanishing_order(const GridFunction& u, int x0, const std::vector<double>& radii,
                              double zero_tolerance) {
  if (x0 < 0 || x0 >= u.grid.size()) throw std::invalid_argument("vanishing_order: x0 out of range");
  OrderEstimate est;
  est.x0 = x0;
  est.point = u.grid.point(x0);
  est.radii = radii;
  std::sort(est.radii.begin(), est.radii.end(), std::greater<>());

  const double scale = u.values.cwiseAbs().maxCoeff();
  if (std::abs(u.values[x0]) > zero_tolerance * scale) {
    est.verdict = OrderVerdict::OrderZero;
    return est;
  }

  double h = 0.0;
  for (int k = 0; k < u.grid.dimension(); ++k) h = std::max(h, u.grid.spacing(k));
  std::vector<double> lx, ly;
  bool all_zero = true;
  for (double r : est.radii) {
    const double q = ball_average(u, est.point, r);
    est.q_values.push_back(q);
    est.reliable.push_back(r >= 2.0 * h);
    if (q > 0.0) all_zero = false;
  }
  if (all_zero) {
    est.verdict = OrderVerdict::LocallyTrivial;
    return est;
  }
  for (std::size_t k = 0; k < est.radii.size(); ++k) {
    if (!(est.q_values[k] > 0.0)) throw std::runtime_error("vanishing_order: q(r) vanishes at some radii only");
    lx.push_back(std::log(est.radii[k]));
    ly.push_back(std::log(est.q_values[k]));
  }
  for (std::size_t k = 0; k + 1 < lx.size(); ++k) {
    est.pairwise_slopes.push_back((ly[k] - ly[k + 1]) / (lx[k] - lx[k + 1]));
  }
  if (lx.size() >= 2) est.full_slope = least_squares_slope(lx, ly);

  std::vector<double> fx, fy;
  for (std::size_t k = lx.size(); k-- > 0 && fx.size() < 3;) {
    if (est.reliable[k]) {
      fx.push_back(lx[k]);
      fy.push_back(ly[k]);
    }
  }
  if (fx.size() < 2) {
    std::ostringstream msg;
    msg << "vanishing_order: fewer than two radii resolved (need r >= " << 2.0 * h << ")";
    throw std::invalid_argument(msg.str());
  }
  est.d = least_squares_slope(fx, fy);
  est.verdict = OrderVerdict::Finite;
  return est;
}

}  // namespace fracfreq
