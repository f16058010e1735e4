#include "fracfreq/frequency.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

#include "fracfreq/quadrature.hpp"

namespace fracfreq {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

/// Composite rule on [lo, hi] with the given interior breakpoints. Panels
/// that touch or nearly touch a singular point are graded geometrically
/// toward it, in distance from that point.
Rule1D angular_rule(std::vector<double> breaks, double lo, double hi,
                    const std::vector<double>& singular, int order, int sub, int levels) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  for (double p : singular) breaks.push_back(p);
  std::sort(breaks.begin(), breaks.end());
  const double merge = 1e-14 * (hi - lo);
  std::vector<double> pts;
  for (double b : breaks) {
    if (b < lo || b > hi) continue;
    if (!pts.empty() && b - pts.back() <= merge) continue;
    pts.push_back(b);
  }
  pts.back() = hi;
  Rule1D rule;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k], b = pts[k + 1];
    // Nearest singular point outside the open panel.
    double p = 0.0, near = std::numeric_limits<double>::infinity();
    for (double q : singular) {
      const double d = q <= a ? a - q : (q >= b ? q - b : std::numeric_limits<double>::infinity());
      if (d < near) {
        near = d;
        p = q;
      }
    }
    const double far = near + (b - a);
    if (levels == 0 || !(near < 0.5 * far)) {
      const double step = (b - a) / sub;
      for (int q = 0; q < sub; ++q) {
        rule.append_panel(a + q * step, q + 1 == sub ? b : a + (q + 1) * step, order);
      }
      continue;
    }
    // Distances from p: far, far/2, ... down to near (or to the level cap).
    const int shift = std::max(0, static_cast<int>(std::floor(std::log2(0.5 * kPi / far))));
    const int lv = std::max(1, levels - shift);
    std::vector<double> dist{far};
    for (int q = 1; q <= lv && dist.back() * 0.5 > near * 1.5; ++q) dist.push_back(dist.back() * 0.5);
    dist.push_back(near);
    std::sort(dist.begin(), dist.end());
    const bool left = p <= a;
    for (std::size_t q = 0; q + 1 < dist.size(); ++q) {
      const double d0 = dist[q], d1 = dist[q + 1];
      const double x0 = left ? p + d0 : p - d1;
      const double x1 = left ? p + d1 : p - d0;
      const double step = (x1 - x0) / sub;
      for (int t = 0; t < sub; ++t) {
        rule.append_panel(x0 + t * step, t + 1 == sub ? x1 : x0 + (t + 1) * step, order);
      }
    }
  }
  return rule;
}

int singular_levels(const FractionalOrder& s, const QuadratureOptions& opts) {
  const double a = s.weight_exponent();
  if (a == 0.0) return 0;
  // The gradient terms carry |y|^{2s-1}, the height |y|^{1-2s}.
  return grading_levels(-std::abs(a), opts.grading_tolerance);
}

struct Accumulator {
  double H = 0, mass = 0, energy = 0, B = 0, S = 0, tangentiality = 0;
};

inline void accumulate(const Field& u, const ExtendedCoefficient& a, double weight_exponent,
                       const Vec& z, int y_axis, double element, Accumulator& acc) {
  const double wy = std::abs(z[y_axis]);
  const double w = element * (weight_exponent == 0.0 ? 1.0 : std::pow(wy, weight_exponent));
  double val;
  Vec g;
  u.evaluate(z, val, g);
  const Vec nu = z / z.norm();
  double mu, flux, energy, tang;
  if (a.is_identity()) {
    mu = nu.squaredNorm();
    flux = nu.dot(g);
    energy = g.squaredNorm();
    tang = std::abs(mu - mu * nu.squaredNorm());
  } else {
    const Mat m = a(z);
    const Vec anu = m * nu;
    mu = nu.dot(anu);
    flux = anu.dot(g);
    energy = g.dot(m * g);
    tang = std::abs((anu - mu * nu).dot(nu));
  }
  acc.H += w * mu * val * val;
  acc.mass += w * val * val;
  acc.energy += w * energy;
  acc.B += w * flux * flux / mu;
  acc.S += w * val * flux;
  acc.tangentiality = std::max(acc.tangentiality, tang);
}

Accumulator circle_pass(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s,
                        double r, const QuadratureOptions& opts, int sub, int levels, int& points) {
  std::vector<double> breaks = u.circle_breaks(r);
  for (int k = 1; k < 16; ++k) breaks.push_back(k * kPi / 8.0);
  const Rule1D rule =
      angular_rule(std::move(breaks), 0.0, kTwoPi, {0.0, kPi, kTwoPi}, opts.order, sub, levels);
  points = static_cast<int>(rule.size());
  Accumulator acc;
  Vec z(2);
  const double ae = s.weight_exponent();
  for (std::size_t i = 0; i < rule.size(); ++i) {
    z[0] = r * std::cos(rule.x[i]);
    z[1] = r * std::sin(rule.x[i]);
    accumulate(u, a, ae, z, 1, r * rule.w[i], acc);
  }
  return acc;
}

Accumulator sphere_pass(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s,
                        double r, const QuadratureOptions& opts, int sub, int levels, int& points) {
  // Polar angle phi from the y axis; the weight vanishes or blows up at phi = pi/2.
  const Rule1D polar = angular_rule({kPi / 4, 3 * kPi / 4}, 0.0, kPi, {kPi / 2}, opts.order, sub,
                                    levels);
  std::vector<double> azimuth_breaks;
  for (int k = 1; k < 8; ++k) azimuth_breaks.push_back(k * kPi / 4);
  const Rule1D azimuth = angular_rule(azimuth_breaks, 0.0, kTwoPi, {}, opts.order, sub, 0);
  points = static_cast<int>(polar.size() * azimuth.size());
  Accumulator acc;
  Vec z(3);
  const double ae = s.weight_exponent();
  for (std::size_t i = 0; i < polar.size(); ++i) {
    const double sp = std::sin(polar.x[i]), cp = std::cos(polar.x[i]);
    for (std::size_t j = 0; j < azimuth.size(); ++j) {
      z[0] = r * sp * std::cos(azimuth.x[j]);
      z[1] = r * sp * std::sin(azimuth.x[j]);
      z[2] = r * cp;
      accumulate(u, a, ae, z, 2, r * r * sp * polar.w[i] * azimuth.w[j], acc);
    }
  }
  return acc;
}

double relative_change(double a, double b, double scale) {
  const double d = std::abs(a - b);
  const double denom = std::max(std::abs(b), scale);
  return denom > 0.0 ? d / denom : 0.0;
}

void require_compatible(const Field& u, const ExtendedCoefficient& a) {
  if (u.dimension() != a.dimension()) {
    throw std::invalid_argument("field and coefficient dimensions differ");
  }
  if (u.dimension() != 2 && u.dimension() != 3) {
    throw std::invalid_argument("fields must live in R^2 or R^3");
  }
}

void require_admissible(const Field& u, double r) {
  if (!(r > 0.0)) throw std::invalid_argument("radius must be positive");
  if (r > u.admissible_radius() * (1.0 + 1e-12)) {
    std::ostringstream msg;
    msg << "ball of radius " << r << " exceeds the computational box (admissible radius "
        << u.admissible_radius() << ")";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

namespace {

/// Absolute floors for the convergence test, so that nearly vanishing
/// moments on tiny spheres are not refined against rounding noise.
struct MomentFloor {
  double mass = 0.0;
  double energy = 0.0;
};

SurfaceMoments surface_moments_floored(const Field& u, const ExtendedCoefficient& a,
                                       const FractionalOrder& s, double r,
                                       const QuadratureOptions& opts, const MomentFloor& floor) {
  const int levels = singular_levels(s, opts);
  auto pass = [&](int sub, int& points) {
    return u.dimension() == 2 ? circle_pass(u, a, s, r, opts, sub, levels, points)
                              : sphere_pass(u, a, s, r, opts, sub, levels, points);
  };
  int points = 0;
  Accumulator prev = pass(1, points);
  for (int sub = 2;; sub *= 2) {
    int next_points = 0;
    const Accumulator cur = pass(sub, next_points);
    const double energy_scale = std::max(cur.H / (r * r), floor.energy);
    const double err = std::max({relative_change(cur.H, prev.H, floor.mass),
                                 relative_change(cur.mass, prev.mass, floor.mass),
                                 relative_change(cur.energy, prev.energy, energy_scale)});
    if (err <= opts.tolerance || 2 * next_points > opts.max_points) {
      if (err > opts.tolerance) {
        std::ostringstream msg;
        msg << "surface quadrature at r=" << r << " did not reach relative tolerance "
            << opts.tolerance << " (estimate " << err << " with " << next_points << " points)";
        throw std::runtime_error(msg.str());
      }
      SurfaceMoments m;
      m.r = r;
      m.H = cur.H;
      m.mass = cur.mass;
      m.energy = cur.energy;
      m.B = cur.B;
      m.S = cur.S;
      m.error = err;
      m.points = next_points;
      m.tangentiality = cur.tangentiality;
      return m;
    }
    prev = cur;
  }
}

}  // namespace

SurfaceMoments surface_moments(const Field& u, const ExtendedCoefficient& a,
                               const FractionalOrder& s, double r, const QuadratureOptions& opts) {
  require_compatible(u, a);
  require_admissible(u, r);
  return surface_moments_floored(u, a, s, r, opts, {});
}

BallIntegrals ball_integrals(const Field& u, const ExtendedCoefficient& a,
                             const FractionalOrder& s, const std::vector<double>& radii,
                             const QuadratureOptions& opts) {
  require_compatible(u, a);
  if (radii.empty()) return {};
  const double r_max = *std::max_element(radii.begin(), radii.end());
  for (double r : radii) require_admissible(u, r);

  std::vector<double> pts = u.radial_breaks(r_max);
  pts.insert(pts.end(), radii.begin(), radii.end());
  pts.push_back(0.0);
  std::sort(pts.begin(), pts.end());
  std::vector<double> nodes;
  for (double p : pts) {
    if (!nodes.empty() && p - nodes.back() <= 1e-13 * r_max) {
      nodes.back() = p;
      continue;
    }
    nodes.push_back(p);
  }
  // Requested radii are kept exactly.
  for (double r : radii) {
    auto it = std::lower_bound(nodes.begin(), nodes.end(), r * (1 - 1e-12));
    if (it != nodes.end()) *it = r;
  }

  const SurfaceMoments outer = surface_moments(u, a, s, r_max, opts);
  MomentFloor floor;
  floor.mass = 1e-6 * outer.mass;
  floor.energy = 1e-6 * (outer.energy + outer.mass / (r_max * r_max));

  // Surface moments near the origin scale like r^{n - |a|}; the first panel
  // already holds a fraction (w / r_max)^{n + 1 - |a|} of the total.
  const int n = u.dimension() - 1;
  const double first_width = nodes.size() > 1 ? nodes[1] : r_max;
  const double radial_exponent = n - std::abs(s.weight_exponent());
  const int radial_levels =
      std::max(1, grading_levels(radial_exponent, opts.grading_tolerance) -
                      static_cast<int>(std::floor(std::log2(r_max / first_width))));

  auto sweep = [&](int sub, std::vector<double>& d_at, std::vector<double>& m_at) {
    // Cumulative integrals at each node.
    std::vector<double> cum_d(nodes.size(), 0.0), cum_m(nodes.size(), 0.0);
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
      const double lo = nodes[k], hi = nodes[k + 1];
      Rule1D rule;
      if (k == 0) {
        rule = composite_rule(graded_breakpoints(lo, hi, radial_levels), opts.order, sub);
      } else {
        rule = composite_rule(std::vector<double>{lo, hi}, opts.order, sub);
      }
      double dd = 0.0, dm = 0.0;
      for (std::size_t i = 0; i < rule.size(); ++i) {
        const SurfaceMoments sm = surface_moments_floored(u, a, s, rule.x[i], opts, floor);
        dd += rule.w[i] * sm.energy;
        dm += rule.w[i] * sm.mass;
      }
      cum_d[k + 1] = cum_d[k] + dd;
      cum_m[k + 1] = cum_m[k] + dm;
    }
    d_at.resize(radii.size());
    m_at.resize(radii.size());
    for (std::size_t q = 0; q < radii.size(); ++q) {
      const auto idx = std::lower_bound(nodes.begin(), nodes.end(), radii[q]) - nodes.begin();
      d_at[q] = cum_d[idx];
      m_at[q] = cum_m[idx];
    }
  };

  BallIntegrals out;
  out.radii = radii;
  std::vector<double> d_prev, m_prev;
  sweep(1, d_prev, m_prev);
  for (int sub = 2;; sub *= 2) {
    std::vector<double> d_cur, m_cur;
    sweep(sub, d_cur, m_cur);
    double worst = 0.0;
    std::vector<double> err(radii.size());
    for (std::size_t q = 0; q < radii.size(); ++q) {
      const double scale = m_cur[q] / (radii[q] * radii[q]);
      err[q] = std::max(relative_change(d_cur[q], d_prev[q], scale),
                        relative_change(m_cur[q], m_prev[q], 0.0));
      worst = std::max(worst, err[q]);
    }
    if (worst <= opts.tolerance || sub >= opts.max_radial_subdivisions) {
      if (worst > opts.tolerance) {
        std::ostringstream msg;
        msg << "radial quadrature did not reach relative tolerance " << opts.tolerance
            << " (estimate " << worst << ")";
        throw std::runtime_error(msg.str());
      }
      out.D = std::move(d_cur);
      out.mass = std::move(m_cur);
      out.error = std::move(err);
      return out;
    }
    d_prev = std::move(d_cur);
    m_prev = std::move(m_cur);
  }
}

Measured height(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s, double r,
                const QuadratureOptions& opts) {
  const SurfaceMoments m = surface_moments(u, a, s, r, opts);
  return {m.H, m.error};
}

Measured dirichlet(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s,
                   double r, const QuadratureOptions& opts) {
  const BallIntegrals b = ball_integrals(u, a, s, {r}, opts);
  return {b.D[0], b.error[0]};
}

Measured ball_mass(const Field& u, const ExtendedCoefficient& a, const FractionalOrder& s,
                   double r, const QuadratureOptions& opts) {
  const BallIntegrals b = ball_integrals(u, a, s, {r}, opts);
  return {b.mass[0], b.error[0]};
}

std::vector<double> FrequencyProfile::radii() const {
  std::vector<double> r;
  for (const auto& smp : samples) r.push_back(smp.r);
  return r;
}

FrequencyProfile frequency_profile(const Field& u, const ExtendedCoefficient& a,
                                   const FractionalOrder& s, const std::vector<double>& radii,
                                   const ProfileOptions& opts) {
  require_compatible(u, a);
  if (radii.empty()) throw std::invalid_argument("frequency_profile: no radii");
  for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
    if (!(radii[k + 1] > radii[k])) {
      throw std::invalid_argument("frequency_profile: radii must be strictly increasing");
    }
  }
  const double step = opts.derivative_step;
  if (!(step > 0.0 && step < 0.1)) {
    throw std::invalid_argument("frequency_profile: derivative step must lie in (0, 0.1)");
  }
  for (double r : radii) require_admissible(u, r * (1.0 + 2.0 * step));

  // Fourth-order centered differences: offsets -2, -1, 0, 1, 2 times step * r.
  std::vector<double> all;
  for (double r : radii)
    for (int o = -2; o <= 2; ++o) all.push_back(r * (1.0 + o * step));
  const BallIntegrals balls = ball_integrals(u, a, s, all, opts.quadrature);

  FrequencyProfile profile;
  profile.n = u.dimension() - 1;
  profile.s = s.value();
  profile.C = opts.C;
  profile.derivative_step = step;
  const double n = profile.n;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const double r = radii[k];
    const double dr = step * r;
    std::array<SurfaceMoments, 5> sm;
    for (int o = -2; o <= 2; ++o) sm[o + 2] = surface_moments(u, a, s, r + o * dr, opts.quadrature);
    const SurfaceMoments& mid = sm[2];
    auto derivative = [dr](double m2, double m1, double p1, double p2) {
      return (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * dr);
    };
    const double* d = &balls.D[5 * k];
    if (!(mid.H > 0.0)) {
      throw TrivialFieldError("H(r) vanishes at r = " + std::to_string(r) + ": trivial field");
    }
    FrequencySample smp;
    smp.r = r;
    smp.H = mid.H;
    smp.D = d[2];
    smp.mass = balls.mass[5 * k + 2];
    smp.N = r * smp.D / smp.H;
    smp.Nbar = std::exp(opts.C * r) * smp.N;
    smp.dH = derivative(sm[0].H, sm[1].H, sm[3].H, sm[4].H);
    smp.dD = derivative(d[0], d[1], d[3], d[4]);
    smp.B = mid.B;
    smp.S = mid.S;
    smp.rhoH = std::abs(smp.dH - (n + 1.0 - 2.0 * s.value()) * smp.H / r - 2.0 * smp.D) / smp.H;
    const double eps = 1e-12 * smp.H / r;
    smp.rhoD = std::abs(smp.dD - (n - 2.0 * s.value()) * smp.D / r - 2.0 * smp.B) /
               std::max(smp.D, eps);
    for (int o = 0; o < 5; ++o) {
      smp.quadErrH = std::max(smp.quadErrH, sm[o].error);
      smp.quadErrD = std::max(smp.quadErrD, balls.error[5 * k + o]);
      smp.tangentiality = std::max(smp.tangentiality, sm[o].tangentiality);
    }
    profile.samples.push_back(smp);
  }
  return profile;
}

void set_nbar_constant(FrequencyProfile& profile, double C) {
  profile.C = C;
  for (auto& smp : profile.samples) smp.Nbar = std::exp(C * smp.r) * smp.N;
}

ResidualReport identity_residuals(const FrequencyProfile& profile, double lipschitz, double K,
                                  double budget_H, double budget_D) {
  ResidualReport rep;
  rep.bound_H = K * lipschitz + budget_H;
  rep.bound_D = K * lipschitz + budget_D;
  for (const auto& smp : profile.samples) {
    if (smp.rhoH > rep.max_rhoH) {
      rep.max_rhoH = smp.rhoH;
      rep.worst_radius_H = smp.r;
    }
    if (smp.rhoD > rep.max_rhoD) {
      rep.max_rhoD = smp.rhoD;
      rep.worst_radius_D = smp.r;
    }
  }
  rep.passed = rep.max_rhoH <= rep.bound_H && rep.max_rhoD <= rep.bound_D;
  return rep;
}

MonotonicityReport monotonicity_report(const FrequencyProfile& profile, double cap) {
  const auto& smp = profile.samples;
  if (smp.size() < 10) throw std::invalid_argument("monotonicity_report: need at least 10 radii");
  int zeros = 0;
  for (const auto& p : smp) zeros += p.N == 0.0;
  MonotonicityReport rep;
  if (zeros == static_cast<int>(smp.size())) {
    rep.pair_constants.assign(smp.size() - 1, 0.0);
    return rep;
  }
  if (zeros > 0) {
    throw TrivialFieldError(
        "monotonicity_report: N vanishes at some radii but not all (degenerate profile)");
  }
  for (std::size_t k = 0; k + 1 < smp.size(); ++k) {
    const double c =
        std::max(0.0, -std::log(smp[k + 1].N / smp[k].N) / (smp[k + 1].r - smp[k].r));
    rep.pair_constants.push_back(c);
    rep.C_min = std::max(rep.C_min, c);
    if (c > cap) rep.violations.push_back({smp[k].r, smp[k + 1].r, c});
  }
  return rep;
}

DoublingReport doubling_report(const Field& u, const ExtendedCoefficient& a,
                               const FractionalOrder& s, const std::vector<double>& radii,
                               const QuadratureOptions& opts) {
  if (radii.empty()) throw std::invalid_argument("doubling_report: no radii");
  std::vector<double> all;
  for (double t : radii) {
    all.push_back(t);
    all.push_back(2.0 * t);
  }
  const BallIntegrals b = ball_integrals(u, a, s, all, opts);
  DoublingReport rep;
  rep.radii = radii;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (!(b.mass[2 * k] > 0.0)) {
      throw TrivialFieldError("doubling_report: zero ball mass at r = " + std::to_string(radii[k]));
    }
    rep.ratios.push_back(b.mass[2 * k + 1] / b.mass[2 * k]);
  }
  const auto [mn, mx] = std::minmax_element(rep.ratios.begin(), rep.ratios.end());
  rep.C_doubling = *mx;
  rep.variation = (*mx - *mn) / *mn;
  return rep;
}

GammaEstimate gamma_limit(const FrequencyProfile& profile, double min_radius,
                          double confidence_tolerance) {
  std::vector<const FrequencySample*> usable;
  for (const auto& smp : profile.samples)
    if (smp.r >= min_radius * (1.0 - 1e-12)) usable.push_back(&smp);
  if (usable.empty()) throw std::invalid_argument("gamma_limit: no radius above the minimum");
  GammaEstimate g;
  g.gamma = usable[0]->N;
  g.radius = usable[0]->r;
  if (usable.size() < 2) {
    g.extrapolated = g.gamma;
    g.low_confidence = true;
    return g;
  }
  const double r0 = usable[0]->r, r1 = usable[1]->r;
  const double n0 = usable[0]->N, n1 = usable[1]->N;
  g.extrapolated = n0 - r0 * (n1 - n0) / (r1 - r0);
  g.low_confidence = std::abs(g.extrapolated - g.gamma) > confidence_tolerance;
  return g;
}

HeightBoundReport height_lower_bound_check(const FrequencyProfile& profile, double gamma,
                                           double delta, int fit_points, double min_radius) {
  if (!(delta > 0.0)) throw std::invalid_argument("height_lower_bound_check: delta must be > 0");
  std::vector<const FrequencySample*> usable;
  for (const auto& smp : profile.samples)
    if (smp.r >= min_radius * (1.0 - 1e-12)) usable.push_back(&smp);
  if (static_cast<int>(usable.size()) < std::max(2, fit_points)) {
    throw std::invalid_argument("height_lower_bound_check: not enough radii");
  }
  HeightBoundReport rep;
  rep.target = profile.n + 1.0 - 2.0 * profile.s + 2.0 * gamma;
  rep.exponent = rep.target + delta;
  rep.constant = std::numeric_limits<double>::infinity();
  for (const auto* smp : usable) {
    const double c = smp->H / std::pow(smp->r, rep.exponent);
    if (!(c > 0.0)) rep.failing_radii.push_back(smp->r);
    rep.constant = std::min(rep.constant, c);
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int k = 0; k < fit_points; ++k) {
    const double x = std::log(usable[k]->r), y = std::log(usable[k]->H);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = fit_points;
  rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  rep.slope_deviation = std::abs(rep.slope - rep.target);
  rep.passed = rep.failing_radii.empty() && rep.constant > 0.0 && rep.slope <= rep.exponent;
  return rep;
}

}  // namespace fracfreq
