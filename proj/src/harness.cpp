#include "fracfreq/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "fracfreq/blowup.hpp"
#include "fracfreq/coefficient.hpp"
#include "fracfreq/extension.hpp"
#include "fracfreq/field.hpp"
#include "fracfreq/frequency.hpp"
#include "fracfreq/io.hpp"
#include "fracfreq/operator.hpp"
#include "fracfreq/spectral.hpp"

namespace fracfreq {

namespace fs = std::filesystem;

std::vector<double> RadiusSchedule::values() const {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(min + (max - min) * k / (count - 1));
  return out;
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Eigenmode: return "eigenmode";
    case ScenarioKind::SHarmonic: return "s_harmonic";
    case ScenarioKind::DirectPde: return "direct_weighted_pde";
    case ScenarioKind::AnalyticLinear: return "analytic:U=x";
    case ScenarioKind::AnalyticConstant: return "analytic:U=const";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
  for (auto k : {ScenarioKind::Eigenmode, ScenarioKind::SHarmonic, ScenarioKind::DirectPde,
                 ScenarioKind::AnalyticLinear, ScenarioKind::AnalyticConstant}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown scenario kind '" + name + "'");
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::SoftWarn: return "soft-warn";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw std::invalid_argument(where + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(where + "." + key + ": wrong type");
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: " + what);
}

bool is_solution_kind(ScenarioKind k) {
  return k == ScenarioKind::SHarmonic || k == ScenarioKind::DirectPde;
}

bool is_analytic(ScenarioKind k) {
  return k == ScenarioKind::AnalyticLinear || k == ScenarioKind::AnalyticConstant;
}

}  // namespace

void ScenarioConfig::validate() const {
  require(!name.empty(), "name must not be empty");
  require(dimension == 1 || dimension == 2, "dimension must be 1 or 2");
  require(s > 0.0 && s < 1.0, "s must lie strictly between 0 and 1, got " + format_real(s));
  require(grid.lower < 0.0 && grid.upper > 0.0, "grid must contain the origin in its interior");
  require(grid.nodes >= 9 && grid.nodes % 2 == 1, "grid.nodes must be odd and at least 9");
  require(dimension == 1 ? grid.nodes <= 3199 : grid.nodes <= 63,
          "grid.nodes above the limit for a dense eigendecomposition (3199 in 1D, 63 in 2D)");
  require(grid.y_intervals >= 16 && grid.y_intervals <= 4000, "grid.y_intervals must lie in [16, 4000]");
  require(grid.grading >= 1.0 && grid.grading <= 4.0, "grid.grading must lie in [1, 4]");
  require(grid.height >= 0.0, "grid.height must be >= 0");
  require(grid.decay_lengths > 0.0, "grid.decay_lengths must be > 0");
  require(coefficient.epsilon >= 0.0 && coefficient.epsilon < 1.0, "coefficient.epsilon must lie in [0, 1)");
  require(!modes.empty(), "modes must not be empty");
  for (int m : modes) require(m >= 1 && m <= grid.nodes, "modes are 1-based and at most grid.nodes");
  require(mask_radius > 0.0, "mask_radius must be > 0");
  require(exterior_terms >= 1 && exterior_terms <= 64, "exterior_terms must lie in [1, 64]");
  require(radii.count >= 10, "radii.count must be at least 10");
  require(radii.min > 0.0 && radii.max > radii.min, "radii need 0 < min < max");
  for (double t : taus) require(t > 0.0 && t < 1.0, "taus must lie in (0, 1)");
  if (is_analytic(kind)) {
    require(coefficient.name == "id" && coefficient.csv.empty(),
            "analytic scenarios require the identity coefficient");
  }
  const auto& t = tolerances;
  for (double v : {t.quadrature, t.spectral, t.trace, t.route, t.route_decay_lengths, t.frequency_exact,
                   t.doubling_exact, t.closed_form, t.monotonicity, t.lipschitz_factor, t.cauchy_schwarz,
                   t.doubling_variation, t.slope_delta, t.blowup_height, t.blowup_transport,
                   t.order_monomial, t.order_gamma, t.residual_shrink, t.residual_floor}) {
    require(v > 0.0 && std::isfinite(v), "tolerances must be positive and finite");
  }
}

ScenarioConfig parse_config(const json& j) {
  reject_unknown(j, {"name", "dimension", "grid", "s", "coefficient", "kind", "modes", "mask_radius",
                     "exterior_terms", "radii", "taus", "refine", "tolerances", "output", "seed"},
                 "config");
  ScenarioConfig c;
  read(j, "name", c.name, "config");
  read(j, "dimension", c.dimension, "config");
  read(j, "s", c.s, "config");
  std::string kind = to_string(c.kind);
  read(j, "kind", kind, "config");
  c.kind = scenario_kind_from_string(kind);
  read(j, "modes", c.modes, "config");
  read(j, "mask_radius", c.mask_radius, "config");
  read(j, "exterior_terms", c.exterior_terms, "config");
  read(j, "taus", c.taus, "config");
  read(j, "refine", c.refine, "config");
  read(j, "output", c.output, "config");
  read(j, "seed", c.seed, "config");
  if (j.contains("grid")) {
    const json& g = j["grid"];
    reject_unknown(g, {"lower", "upper", "nodes", "y_intervals", "grading", "height", "decay_lengths"},
                   "grid");
    read(g, "lower", c.grid.lower, "grid");
    read(g, "upper", c.grid.upper, "grid");
    read(g, "nodes", c.grid.nodes, "grid");
    read(g, "y_intervals", c.grid.y_intervals, "grid");
    read(g, "grading", c.grid.grading, "grid");
    read(g, "height", c.grid.height, "grid");
    read(g, "decay_lengths", c.grid.decay_lengths, "grid");
  }
  if (j.contains("coefficient")) {
    const json& a = j["coefficient"];
    reject_unknown(a, {"name", "epsilon", "csv"}, "coefficient");
    read(a, "name", c.coefficient.name, "coefficient");
    read(a, "epsilon", c.coefficient.epsilon, "coefficient");
    read(a, "csv", c.coefficient.csv, "coefficient");
  }
  if (j.contains("radii")) {
    const json& r = j["radii"];
    reject_unknown(r, {"min", "max", "count"}, "radii");
    read(r, "min", c.radii.min, "radii");
    read(r, "max", c.radii.max, "radii");
    read(r, "count", c.radii.count, "radii");
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    auto& o = c.tolerances;
    const std::vector<std::pair<const char*, double*>> fields{
        {"quadrature", &o.quadrature},
        {"spectral", &o.spectral},
        {"trace", &o.trace},
        {"route", &o.route},
        {"route_decay_lengths", &o.route_decay_lengths},
        {"frequency_exact", &o.frequency_exact},
        {"doubling_exact", &o.doubling_exact},
        {"closed_form", &o.closed_form},
        {"monotonicity", &o.monotonicity},
        {"lipschitz_factor", &o.lipschitz_factor},
        {"cauchy_schwarz", &o.cauchy_schwarz},
        {"doubling_variation", &o.doubling_variation},
        {"slope_delta", &o.slope_delta},
        {"blowup_height", &o.blowup_height},
        {"blowup_transport", &o.blowup_transport},
        {"order_monomial", &o.order_monomial},
        {"order_gamma", &o.order_gamma},
        {"residual_shrink", &o.residual_shrink},
        {"residual_floor", &o.residual_floor}};
    std::set<std::string> allowed;
    for (const auto& [k, p] : fields) allowed.insert(k);
    reject_unknown(t, allowed, "tolerances");
    for (const auto& [k, p] : fields) read(t, k, *p, "tolerances");
  }
  c.validate();
  return c;
}

ScenarioConfig load_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ScenarioConfig& c) {
  const auto& t = c.tolerances;
  return {{"name", c.name},
          {"dimension", c.dimension},
          {"grid",
           {{"lower", c.grid.lower},
            {"upper", c.grid.upper},
            {"nodes", c.grid.nodes},
            {"y_intervals", c.grid.y_intervals},
            {"grading", c.grid.grading},
            {"height", c.grid.height},
            {"decay_lengths", c.grid.decay_lengths}}},
          {"s", c.s},
          {"coefficient",
           {{"name", c.coefficient.name}, {"epsilon", c.coefficient.epsilon}, {"csv", c.coefficient.csv}}},
          {"kind", to_string(c.kind)},
          {"modes", c.modes},
          {"mask_radius", c.mask_radius},
          {"exterior_terms", c.exterior_terms},
          {"radii", {{"min", c.radii.min}, {"max", c.radii.max}, {"count", c.radii.count}}},
          {"taus", c.taus},
          {"refine", c.refine},
          {"tolerances",
           {{"quadrature", t.quadrature},
            {"spectral", t.spectral},
            {"trace", t.trace},
            {"route", t.route},
            {"route_decay_lengths", t.route_decay_lengths},
            {"frequency_exact", t.frequency_exact},
            {"doubling_exact", t.doubling_exact},
            {"closed_form", t.closed_form},
            {"monotonicity", t.monotonicity},
            {"lipschitz_factor", t.lipschitz_factor},
            {"cauchy_schwarz", t.cauchy_schwarz},
            {"doubling_variation", t.doubling_variation},
            {"slope_delta", t.slope_delta},
            {"blowup_height", t.blowup_height},
            {"blowup_transport", t.blowup_transport},
            {"order_monomial", t.order_monomial},
            {"order_gamma", t.order_gamma},
            {"residual_shrink", t.residual_shrink},
            {"residual_floor", t.residual_floor}}},
          {"output", c.output},
          {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Reports

bool VerificationReport::passed() const {
  return std::none_of(checks.begin(), checks.end(),
                      [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

const CheckResult* VerificationReport::find(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

json VerificationReport::to_json() const {
  json list = json::array();
  for (const auto& c : checks) {
    json e{{"name", c.name},   {"status", to_string(c.status)}, {"value", c.value},
           {"budget", c.budget}, {"anchor", c.anchor},          {"criterion", c.criterion}};
    if (!c.message.empty()) e["message"] = c.message;
    list.push_back(e);
  }
  return {{"scenario", scenario}, {"seed", seed}, {"passed", passed()}, {"checks", list}, {"metrics", metrics}};
}

fs::path resolve_output(const std::string& output) {
  fs::path p(output);
  if (p.is_relative()) {
    if (const char* root = std::getenv("FRACFREQ_OUTPUT_ROOT"); root && *root) return fs::path(root) / p;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double nb = b.norm();
  return nb > 0.0 ? (a - b).norm() / nb : a.norm();
}

SpatialGrid make_grid(const ScenarioConfig& c, int nodes) {
  std::vector<Axis> axes(c.dimension, Axis{c.grid.lower, c.grid.upper, nodes});
  return SpatialGrid(axes);
}

/// Sum of seeded sine terms vanishing on the box boundary.
GridFunction exterior_data(const SpatialGrid& g, int terms, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<double> c(terms);
  for (double& v : c) v = normal(rng);
  Eigen::VectorXd v(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const Vec p = g.point(i);
    double sum = 0.0;
    for (int k = 0; k < terms; ++k) {
      double term = c[k];
      for (int ax = 0; ax < g.dimension(); ++ax) {
        const double xi = (p[ax] - g.axis(ax).lower) / (g.axis(ax).upper - g.axis(ax).lower);
        term *= std::sin((ax == 0 ? k + 1 : 1) * kPi * xi);
      }
      sum += term;
    }
    v[i] = sum;
  }
  return GridFunction(g, v);
}

CoefficientField make_coefficient(const ScenarioConfig& c, const SpatialGrid& grid) {
  if (!c.coefficient.csv.empty()) return load_coefficient_csv(c.coefficient.csv, grid);
  return catalog_coefficient(c.coefficient.name, grid, c.coefficient.epsilon);
}

PreparedScenario build(const ScenarioConfig& c, int nodes, int y_intervals,
                       const std::function<void(const std::string&)>& enter) {
  PreparedScenario b;
  const FractionalOrder s(c.s);
  if (is_analytic(c.kind)) {
    b.grid = make_grid(c, nodes);
    b.a = ExtendedCoefficient::identity(c.dimension + 1);
    b.field = std::make_shared<AnalyticField>(c.kind == ScenarioKind::AnalyticLinear
                                                  ? AnalyticField::linear(c.dimension + 1, 0)
                                                  : AnalyticField::constant(c.dimension + 1, 1.0));
    return b;
  }
  enter("assemble");
  b.grid = make_grid(c, nodes);
  b.coeff = make_coefficient(c, b.grid);
  b.op = assemble_operator(b.grid, *b.coeff);
  b.a = ExtendedCoefficient::from_spatial(*b.coeff);
  enter("eigendecompose");
  b.spec = eigendecompose(*b.op);
  const double height = c.grid.height > 0.0 ? c.grid.height : default_height(*b.spec, c.grid.decay_lengths);
  b.ygrid = YGrid(height, y_intervals, c.grid.grading);

  enter("build_u");
  switch (c.kind) {
    case ScenarioKind::Eigenmode: {
      Eigen::VectorXd coef = Eigen::VectorXd::Zero(b.spec->size());
      coef[c.modes.front() - 1] = 1.0;
      b.u = synthesize(*b.spec, coef);
      break;
    }
    case ScenarioKind::SHarmonic: {
      const auto mask = centered_mask(b.grid, c.mask_radius);
      const GridFunction g = exterior_data(b.grid, c.exterior_terms, c.seed);
      const auto ug = solve_s_harmonic(*b.spec, s, mask, g);
      const auto u1 = solve_s_harmonic(*b.spec, s, mask,
                                       GridFunction(b.grid, Eigen::VectorXd::Ones(b.grid.size())));
      const int o = b.grid.origin_index();
      b.u = GridFunction(b.grid, ug.u.values - (ug.u.values[o] / u1.u.values[o]) * u1.u.values);
      break;
    }
    case ScenarioKind::DirectPde:
      b.u = exterior_data(b.grid, c.exterior_terms, c.seed);
      break;
    default:
      break;
  }

  enter("extend");
  if (c.kind == ScenarioKind::DirectPde) {
    b.ext = solve_weighted_pde(*b.op, s, mirrored_nodes(*b.ygrid), *b.u, *b.u);
    b.field = std::make_shared<GridFieldSampler>(*b.ext);
  } else {
    b.ext = extend_semigroup(*b.spec, s, *b.u, *b.ygrid);
    b.field = std::make_shared<GridFieldSampler>(reflect_even(*b.ext));
  }
  return b;
}

class Recorder {
 public:
  explicit Recorder(VerificationReport& r) : report_(r) {}

  /// `value <= budget` (or `>=` with `at_least`).
  void bound(const std::string& name, double value, double budget, const std::string& anchor,
             int criterion, bool at_least = false, const std::string& message = {}) {
    const bool ok = std::isfinite(value) && (at_least ? value >= budget : value <= budget);
    add(name, ok, value, budget, anchor, criterion, message);
  }

  void add(const std::string& name, bool ok, double value, double budget, const std::string& anchor,
           int criterion, const std::string& message = {}) {
    CheckResult r;
    r.name = name;
    r.status = ok ? CheckStatus::Pass : (criterion == 0 ? CheckStatus::SoftWarn : CheckStatus::Fail);
    r.value = value;
    r.budget = budget;
    r.anchor = anchor;
    r.criterion = criterion;
    r.message = message;
    report_.checks.push_back(r);
  }

  void note(const std::string& name, double value, const std::string& anchor, const std::string& message) {
    CheckResult r;
    r.name = name;
    r.status = CheckStatus::SoftWarn;
    r.value = value;
    r.anchor = anchor;
    r.message = message;
    report_.checks.push_back(r);
  }

 private:
  VerificationReport& report_;
};

std::string with_seed(const std::string& csv, const ScenarioConfig& c) {
  return "# scenario=" + c.name + "\n# seed=" + std::to_string(c.seed) + "\n" + csv;
}

void write_json(const fs::path& path, json j, const ScenarioConfig& c) {
  j["seed"] = c.seed;
  write_atomic(path, j.dump(2) + "\n");
}

double max_of(const FrequencyProfile& p, double FrequencySample::*field) {
  double m = 0.0;
  for (const auto& smp : p.samples) m = std::max(m, smp.*field);
  return m;
}

double max_scaled_residual(const FrequencyProfile& p) {
  double m = 0.0;
  for (const auto& smp : p.samples) m = std::max({m, smp.r * smp.rhoH, smp.r * smp.rhoD});
  return m;
}

}  // namespace

PreparedScenario prepare(const ScenarioConfig& config) {
  config.validate();
  return build(config, config.grid.nodes, config.grid.y_intervals, [](const std::string&) {});
}

VerificationReport run_scenario(const ScenarioConfig& config) {
  config.validate();
  VerificationReport report;
  report.scenario = config.name;
  report.seed = config.seed;
  Recorder rec(report);
  const auto& tol = config.tolerances;
  const FractionalOrder s(config.s);
  const int n = config.dimension;
  const bool identity = config.coefficient.csv.empty() && config.coefficient.name == "id";
  const fs::path out = config.output.empty() ? fs::path() : resolve_output(config.output);
  QuadratureOptions qopts;
  qopts.tolerance = tol.quadrature;

  json& metrics = report.metrics;
  metrics["kind"] = to_string(config.kind);
  metrics["s"] = config.s;
  metrics["coefficient"] = config.coefficient.csv.empty() ? config.coefficient.name : config.coefficient.csv;
  metrics["epsilon"] = config.coefficient.epsilon;

  std::string stage = "config";
  const bool timing = std::getenv("FRACFREQ_TIMING") != nullptr;
  auto t_stage = std::chrono::steady_clock::now();
  auto enter = [&](const std::string& name) {
    if (timing) {
      const auto now = std::chrono::steady_clock::now();
      std::fprintf(stderr, "[%s] %-14s %.2f s\n", config.name.c_str(), stage.c_str(),
                   std::chrono::duration<double>(now - t_stage).count());
      t_stage = now;
    }
    stage = name;
  };

  try {
    PreparedScenario b = build(config, config.grid.nodes, config.grid.y_intervals, enter);
    const ExtendedCoefficient& a = *b.a;
    metrics["lipschitz"] = a.lipschitz();
    if (!out.empty() && b.u) {
      write_atomic(out / "u.csv", with_seed(grid_function_csv(*b.u), config));
      write_atomic(out / "extension.csv", with_seed(extension_field_csv(*b.ext), config));
    }

    // Spectral and extension checks on eigenmodes.
    if (config.kind == ScenarioKind::Eigenmode) {
      enter("spectral");
      const auto& spec = *b.spec;
      double err = 0.0;
      for (int m : config.modes) {
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(spec.size());
        coef[m - 1] = 1.0;
        const GridFunction e = synthesize(spec, coef);
        err = std::max(err, rel(fractional_apply(spec, s, e).values,
                                std::pow(spec.eigenvalues[m - 1], config.s) * e.values));
      }
      const GridFunction r = exterior_data(b.grid, 7, config.seed + 1);
      const double t1 = 0.25 / spec.eigenvalues[0], t2 = 0.5 / spec.eigenvalues[0];
      err = std::max(err, rel(heat_semigroup(spec, t1, heat_semigroup(spec, t2, r)).values,
                              heat_semigroup(spec, t1 + t2, r).values));
      err = std::max(err, rel(fractional_apply(spec, FractionalOrder(1.0 - config.s), fractional_apply(spec, s, r)).values,
                              spectral_power(spec, 1.0, r).values));
      rec.bound("spectral_exactness", err, tol.spectral, "eigenmode relations of the spectral power", 1);

      enter("trace");
      const double c_s = trace_constant(s);
      for (int m : config.modes) {
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(spec.size());
        coef[m - 1] = 1.0;
        const GridFunction e = synthesize(spec, coef);
        const Eigen::VectorXd target = c_s * std::pow(spec.eigenvalues[m - 1], config.s) * e.values;
        double errs[2];
        for (int k = 0; k < 2; ++k) {
          const YGrid yg(b.ygrid->height, config.grid.y_intervals << k, config.grid.grading);
          errs[k] = rel(neumann_trace(extend_semigroup(spec, s, e, yg), s).trace.values, target);
        }
        const std::string tag = "_e" + std::to_string(m);
        rec.bound("trace_identity" + tag, errs[0], tol.trace, "weighted Neumann trace identity", 2);
        rec.add("trace_refinement" + tag, errs[1] < errs[0], errs[1], errs[0],
                "weighted Neumann trace identity", 2, "error after doubling J must decrease");
        metrics["trace_error" + tag] = {errs[0], errs[1]};
      }

      enter("route");
      const YGrid yg(default_height(spec, tol.route_decay_lengths), config.grid.y_intervals, config.grid.grading);
      for (int m : config.modes) {
        Eigen::VectorXd coef = Eigen::VectorXd::Zero(spec.size());
        coef[m - 1] = 1.0;
        const GridFunction e = synthesize(spec, coef);
        const double d = weighted_l2_discrepancy(extend_pde(*b.op, s, e, yg), extend_semigroup(spec, s, e, yg));
        rec.bound("route_equivalence_e" + std::to_string(m), d, tol.route, "semigroup and PDE extensions agree", 3);
      }
    }

    // Frequency profile.
    enter("frequency");
    const std::vector<double> radii = config.radii.values();
    ProfileOptions popts;
    popts.quadrature = qopts;
    FrequencyProfile profile = frequency_profile(*b.field, a, s, radii, popts);

    double cs_worst = std::numeric_limits<double>::infinity();
    for (const auto& p : profile.samples) {
      const double bh = p.B * p.H;
      cs_worst = std::min(cs_worst, bh > 0.0 ? (bh - p.S * p.S) / bh : 0.0);
    }
    rec.bound("cauchy_schwarz", cs_worst, -tol.cauchy_schwarz, "Cauchy-Schwarz inequality B H >= S^2", 7, true);

    enter("monotonicity");
    const MonotonicityReport mono = monotonicity_report(profile);
    set_nbar_constant(profile, mono.C_min);
    metrics["C_min"] = mono.C_min;
    if (identity) {
      rec.bound("monotonicity", mono.C_min, tol.monotonicity, "almost monotonicity of the frequency", 5);
    } else {
      rec.bound("monotonicity", mono.C_min, tol.lipschitz_factor * a.lipschitz(),
                "almost monotonicity of the frequency", 5);
    }

    enter("gamma");
    const GammaEstimate gamma = gamma_limit(profile, config.radii.min);
    metrics["gamma"] = gamma.gamma;

    // Derivative identities.
    enter("residuals");
    const double e1H = max_of(profile, &FrequencySample::rhoH);
    const double e1D = max_of(profile, &FrequencySample::rhoD);
    metrics["rho"] = {{"H", e1H}, {"D", e1D}};
    json budgets = {{"cauchy_schwarz", tol.cauchy_schwarz}, {"monotonicity", tol.monotonicity}};
    if (is_analytic(config.kind)) {
      rec.bound("residual_floor", max_scaled_residual(profile), tol.residual_floor,
                "derivative identities for H and D", 6);
    } else if (is_solution_kind(config.kind) && identity && config.refine) {
      enter("refinement");
      PreparedScenario fine = build(config, 2 * config.grid.nodes + 1, 2 * config.grid.y_intervals, enter);
      enter("residuals");
      const FrequencyProfile pf = frequency_profile(*fine.field, *fine.a, s, radii, popts);
      const double e2H = max_of(pf, &FrequencySample::rhoH);
      const double e2D = max_of(pf, &FrequencySample::rhoD);
      const double bH = 2.0 * (4.0 / 3.0) * std::abs(e1H - e2H);
      const double bD = 2.0 * (4.0 / 3.0) * std::abs(e1D - e2D);
      metrics["rho_refined"] = {{"H", e2H}, {"D", e2D}};
      budgets["residual_H"] = bH;
      budgets["residual_D"] = bD;
      rec.bound("residual_H", e1H, bH, "derivative identity for H", 6);
      rec.bound("residual_D", e1D, bD, "derivative identity for D", 6);
      rec.bound("residual_H_shrink", e1H / e2H, tol.residual_shrink, "derivative identity for H", 6, true);
      rec.bound("residual_D_shrink", e1D / e2D, tol.residual_shrink, "derivative identity for D", 6, true);
    } else {
      rec.note("residual_H", e1H, "derivative identity for H",
               is_solution_kind(config.kind) ? "no refinement run" : "field does not solve the extension equation");
      rec.note("residual_D", e1D, "derivative identity for D",
               is_solution_kind(config.kind) ? "no refinement run" : "field does not solve the extension equation");
    }

    // Doubling and growth.
    enter("doubling");
    const double rmax = config.radii.max;
    const DoublingReport dbl = doubling_report(*b.field, a, s, {rmax / 8, rmax / 4, rmax / 2}, qopts);
    metrics["doubling_ratios"] = dbl.ratios;
    const HeightBoundReport bound = height_lower_bound_check(profile, gamma.gamma, tol.slope_delta, 3, config.radii.min);
    const bool growth_primary = config.kind == ScenarioKind::Eigenmode || config.kind == ScenarioKind::SHarmonic;
    rec.bound("doubling_stability", dbl.variation, tol.doubling_variation, "doubling inequality",
              growth_primary ? 8 : 0);
    rec.bound("height_slope", bound.slope_deviation, tol.slope_delta, "lower bound on the growth of H",
              growth_primary ? 8 : 0);
    rec.add("height_lower_bound", bound.passed, bound.constant, 0.0, "lower bound on the growth of H",
            growth_primary ? 8 : 0);

    if (config.kind == ScenarioKind::AnalyticLinear || config.kind == ScenarioKind::AnalyticConstant) {
      enter("closed_forms");
      const bool linear = config.kind == ScenarioKind::AnalyticLinear;
      double worst = 0.0;
      for (const auto& p : profile.samples) worst = std::max(worst, std::abs(p.N - (linear ? 1.0 : 0.0)));
      rec.bound("exact_frequency", worst, tol.frequency_exact, "frequency of homogeneous fields", 4);
      // Ball mass scales as r^{n+1+a} times r^{2 deg}.
      const double mass_ratio = std::pow(2.0, n + 2 - 2 * config.s + (linear ? 2 : 0));
      double dev = 0.0;
      for (double r : dbl.ratios) dev = std::max(dev, std::abs(r - mass_ratio));
      rec.bound("doubling_ratio", dev, tol.doubling_exact, "doubling of the ball mass", 4,
                false, "expected " + format_real(mass_ratio));
      const double h1 = height(*b.field, a, s, rmax / 2, qopts).value;
      const double h2 = height(*b.field, a, s, rmax, qopts).value;
      const double height_ratio = std::pow(2.0, n + 1 - 2 * config.s + (linear ? 2 : 0));
      rec.bound("height_doubling_ratio", std::abs(h2 / h1 - height_ratio), tol.doubling_exact,
                "doubling of the height", 4, false, "expected " + format_real(height_ratio));
      if (linear && n == 1 && config.s == 0.5) {
        double cf = 0.0;
        for (const auto& p : profile.samples) {
          cf = std::max({cf, std::abs(p.H / (kPi * p.r * p.r * p.r) - 1.0), std::abs(p.D / (kPi * p.r * p.r) - 1.0)});
        }
        rec.bound("closed_form_HD", cf, tol.closed_form, "H = pi r^3 and D = pi r^2", 4);
      }
    }

    // Blow-up family.
    enter("blowup");
    json blow = json::array();
    double nmax = profile.samples.back().N;
    for (const BlowupRecord& br : rescale_all(b.field, a, s, config.taus, {0.25, 0.5, 1.0}, qopts)) {
      const double tau = br.tau;
      blow.push_back(to_json(br));
      const std::string tag = "_tau" + format_real(tau);
      rec.bound("blowup_height" + tag, std::abs(br.H1.value - 1.0), tol.blowup_height,
                "normalization of the blow-up family", 9);
      rec.bound("blowup_transport" + tag, br.max_transport_error(), tol.blowup_transport,
                "frequency transport under rescaling", 9);
      if (tau <= rmax) {
        const double cap = std::exp(mono.C_min * (rmax - tau)) * nmax * (1.0 + 1e-6) + 1e-12;
        rec.bound("blowup_energy" + tag, br.D1.value, cap, "boundedness of the blow-up family", 0);
      }
    }

    // Vanishing order.
    enter("order");
    json order;
    if (config.kind == ScenarioKind::SHarmonic) {
      const auto est = vanishing_order(*b.u, b.grid.origin_index(), dyadic_radii(config.mask_radius / 4));
      order = to_json(est);
      metrics["order"] = est.d;
      rec.add("order_finite", est.verdict == OrderVerdict::Finite && std::isfinite(est.d), est.d, 0.0,
              "finite vanishing order", 10, "verdict " + to_string(est.verdict));
      rec.bound("order_vs_gamma", est.d, gamma.gamma + tol.order_gamma, "vanishing order bounded by gamma", 10);
    } else if (config.kind == ScenarioKind::Eigenmode) {
      const auto est = vanishing_order(*b.u, b.grid.origin_index(), dyadic_radii(rmax / 4));
      order = to_json(est);
    } else if (config.kind == ScenarioKind::AnalyticLinear) {
      const SpatialGrid& g = b.grid;
      const double r0 = 0.25 * std::min(-g.axis(0).lower, g.axis(0).upper);
      for (int p : {1, 2}) {
        Eigen::VectorXd v(g.size());
        for (int i = 0; i < g.size(); ++i) v[i] = std::pow(g.point(i)[0], p);
        const auto est = vanishing_order(GridFunction(g, v), g.origin_index(), dyadic_radii(r0));
        if (p == 1) order = to_json(est);
        rec.bound("order_monomial_x" + std::to_string(p), std::abs(est.d - p), tol.order_monomial,
                  "vanishing order of monomials", 10);
      }
    }

    enter("write");
    if (!out.empty()) {
      write_atomic(out / "profile.csv", with_seed(profile_csv(profile), config));
      write_json(out / "report.json", report_json(mono, dbl, gamma, bound, budgets), config);
      write_json(out / "blowup.json", json{{"records", blow}}, config);
      if (!order.is_null()) write_json(out / "order.json", order, config);
    }
  } catch (const std::exception& e) {
    CheckResult r;
    r.name = "stage:" + stage;
    r.status = CheckStatus::Fail;
    r.anchor = "pipeline";
    r.message = e.what();
    report.checks.push_back(r);
  }

  if (!out.empty()) {
    try {
      write_json(out / "verification.json", report.to_json(), config);
    } catch (const std::exception& e) {
      CheckResult r;
      r.name = "stage:write";
      r.status = CheckStatus::Fail;
      r.anchor = "pipeline";
      r.message = e.what();
      report.checks.push_back(r);
    }
  }
  return report;
}

BatchResult verify_all(const fs::path& config_dir, std::ostream& log) {
  BatchResult batch;
  if (!fs::is_directory(config_dir)) {
    log << "error: " << config_dir.string() << " is not a directory\n";
    batch.exit_status = 2;
    return batch;
  }
  for (const auto& entry : fs::directory_iterator(config_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") batch.configs.push_back(entry.path());
  }
  std::sort(batch.configs.begin(), batch.configs.end());
  if (batch.configs.empty()) {
    log << "warning: no scenarios in " << config_dir.string() << "\n";
    return batch;
  }
  for (const auto& path : batch.configs) {
    const auto t0 = std::chrono::steady_clock::now();
    VerificationReport report;
    try {
      report = run_scenario(load_config(path));
    } catch (const std::exception& e) {
      report.scenario = path.stem().string();
      CheckResult r;
      r.name = "stage:config";
      r.status = CheckStatus::Fail;
      r.anchor = "pipeline";
      r.message = e.what();
      report.checks.push_back(r);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    int fails = 0, warns = 0;
    for (const auto& c : report.checks) {
      fails += c.status == CheckStatus::Fail;
      warns += c.status == CheckStatus::SoftWarn;
    }
    log << (report.passed() ? "PASS " : "FAIL ") << report.scenario << "  checks=" << report.checks.size()
        << " failed=" << fails << " warnings=" << warns << "  (" << std::fixed;
    log.precision(1);
    log << secs << " s)\n";
    log.unsetf(std::ios::floatfield);
    for (const auto& c : report.checks) {
      if (c.status == CheckStatus::Fail) {
        log << "    " << c.name << ": value " << c.value << " budget " << c.budget;
        if (!c.message.empty()) log << " (" << c.message << ")";
        log << "\n";
      }
    }
    if (!report.passed()) batch.exit_status = 1;
    batch.reports.push_back(std::move(report));
  }
  return batch;
}

}  // namespace fracfreq
