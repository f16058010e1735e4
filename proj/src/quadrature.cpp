#include "fracfreq/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

#include "fracfreq/types.hpp"

namespace fracfreq {

namespace {

GaussRule compute_gauss_legendre(int order) {
  GaussRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (order + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= order; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) p0 = 1.0;
      dp = order * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute derivative at the converged root.
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= order; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = order == 1 ? 1.0 : order * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[order - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
  if (order < 1 || order > 512) throw std::invalid_argument("gauss_legendre: bad order");
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(order);
  if (it == cache.end()) it = cache.emplace(order, compute_gauss_legendre(order)).first;
  return it->second;
}

void Rule1D::append_panel(double a, double b, int order) {
  const GaussRule& g = gauss_legendre(order);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  for (int i = 0; i < order; ++i) {
    x.push_back(mid + half * g.nodes[i]);
    w.push_back(half * g.weights[i]);
  }
}

Rule1D composite_rule(std::span<const double> breakpoints, int order, int subdivisions) {
  Rule1D rule;
  for (std::size_t k = 0; k + 1 < breakpoints.size(); ++k) {
    const double a = breakpoints[k];
    const double b = breakpoints[k + 1];
    if (!(b > a)) continue;
    const double step = (b - a) / subdivisions;
    for (int p = 0; p < subdivisions; ++p) {
      const double lo = a + p * step;
      const double hi = p + 1 == subdivisions ? b : lo + step;
      rule.append_panel(lo, hi, order);
    }
  }
  return rule;
}

std::vector<double> graded_breakpoints(double a, double b, int levels) {
  std::vector<double> pts;
  pts.reserve(levels + 2);
  pts.push_back(a);
  const double width = b - a;
  for (int k = levels; k >= 1; --k) pts.push_back(a + width * std::ldexp(1.0, -k));
  pts.push_back(b);
  return pts;
}

int grading_levels(double exponent, double tolerance) {
  if (!(exponent > -1.0)) throw std::invalid_argument("grading_levels: exponent must be > -1");
  // mass of [0, w] relative to [0, 1] is w^{exponent + 1}
  const double levels = std::log2(1.0 / tolerance) / (exponent + 1.0);
  return std::clamp(static_cast<int>(std::ceil(levels)), 1, 400);
}

}  // namespace fracfreq
