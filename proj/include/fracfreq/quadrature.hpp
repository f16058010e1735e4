#pragma once

#include <span>
#include <vector>

namespace fracfreq {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Cached rule of the given order (computed once per order by Newton
/// iteration on the Legendre recurrence).
const GaussRule& gauss_legendre(int order);

/// A 1D quadrature: sum_i w_i f(x_i).
struct Rule1D {
  std::vector<double> x;
  std::vector<double> w;

  void append_panel(double a, double b, int order);
  std::size_t size() const { return x.size(); }
};

/// Composite Gauss-Legendre rule on the panels defined by sorted breakpoints
/// (duplicates and zero-width panels are dropped). Each panel is split into
/// `subdivisions` equal parts.
Rule1D composite_rule(std::span<const double> breakpoints, int order, int subdivisions = 1);

/// Breakpoints geometrically graded toward `a` on [a, b]: the panel next to b
/// has width (b-a)/2 and each further panel halves, down to width
/// (b-a) * 2^-levels; the innermost panel [a, a + (b-a) 2^-levels] is kept.
std::vector<double> graded_breakpoints(double a, double b, int levels);

/// Number of halving levels needed so that a panel of width w next to an
/// integrable singularity |t|^{exponent} (exponent > -1) carries at most
/// `tolerance` of the mass of the unit interval. Clamped to [1, 400].
int grading_levels(double exponent, double tolerance);

}  // namespace fracfreq
