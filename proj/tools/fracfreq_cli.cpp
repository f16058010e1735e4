#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracfreq/blowup.hpp"
#include "fracfreq/frequency.hpp"
#include "fracfreq/harness.hpp"
#include "fracfreq/io.hpp"

using namespace fracfreq;
namespace fs = std::filesystem;

namespace {

// Flags mirroring ScenarioConfig; only those given on the command line
// override the config file.
struct ScenarioFlags {
  std::string config;
  std::optional<std::string> name, kind, coefficient, coefficient_csv, output;
  std::optional<int> dimension, nodes, y_intervals, radii_count, exterior_terms;
  std::optional<double> s, lower, upper, grading, height, decay_lengths, epsilon, mask_radius;
  std::optional<double> radii_min, radii_max;
  std::optional<std::uint64_t> seed;
  std::vector<int> modes;
  std::vector<double> taus;
  bool no_refine = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "scenario config (JSON)")->check(CLI::ExistingFile);
    app->add_option("--name", name);
    app->add_option("--kind", kind, "eigenmode | s_harmonic | direct_weighted_pde | analytic:U=x | analytic:U=const");
    app->add_option("--dimension", dimension);
    app->add_option("--s", s, "order in (0, 1)");
    app->add_option("--lower", lower);
    app->add_option("--upper", upper);
    app->add_option("--nodes", nodes, "interior nodes per axis");
    app->add_option("--y-intervals", y_intervals);
    app->add_option("--grading", grading);
    app->add_option("--height", height, "truncation height Y (0: from decay lengths)");
    app->add_option("--decay-lengths", decay_lengths);
    app->add_option("--coefficient", coefficient, "catalog entry");
    app->add_option("--epsilon", epsilon);
    app->add_option("--coefficient-csv", coefficient_csv);
    app->add_option("--modes", modes, "1-based mode indices");
    app->add_option("--mask-radius", mask_radius);
    app->add_option("--exterior-terms", exterior_terms);
    app->add_option("--radii-min", radii_min);
    app->add_option("--radii-max", radii_max);
    app->add_option("--radii-count", radii_count);
    app->add_option("--taus", taus);
    app->add_option("--output", output, "artifact directory (relative to FRACFREQ_OUTPUT_ROOT if set)");
    app->add_option("--seed", seed);
    app->add_flag("--no-refine", no_refine, "skip the residual refinement run");
  }

  ScenarioConfig resolve() const {
    ScenarioConfig c = config.empty() ? ScenarioConfig{} : load_config(config);
    if (name) c.name = *name;
    if (kind) c.kind = scenario_kind_from_string(*kind);
    if (dimension) c.dimension = *dimension;
    if (s) c.s = *s;
    if (lower) c.grid.lower = *lower;
    if (upper) c.grid.upper = *upper;
    if (nodes) c.grid.nodes = *nodes;
    if (y_intervals) c.grid.y_intervals = *y_intervals;
    if (grading) c.grid.grading = *grading;
    if (height) c.grid.height = *height;
    if (decay_lengths) c.grid.decay_lengths = *decay_lengths;
    if (coefficient) c.coefficient.name = *coefficient;
    if (epsilon) c.coefficient.epsilon = *epsilon;
    if (coefficient_csv) c.coefficient.csv = *coefficient_csv;
    if (!modes.empty()) c.modes = modes;
    if (mask_radius) c.mask_radius = *mask_radius;
    if (exterior_terms) c.exterior_terms = *exterior_terms;
    if (radii_min) c.radii.min = *radii_min;
    if (radii_max) c.radii.max = *radii_max;
    if (radii_count) c.radii.count = *radii_count;
    if (!taus.empty()) c.taus = taus;
    if (output) c.output = *output;
    if (seed) c.seed = *seed;
    if (no_refine) c.refine = false;
    c.validate();
    return c;
  }
};

fs::path output_dir(const ScenarioConfig& c) {
  return resolve_output(c.output.empty() ? "fracfreq-out/" + c.name : c.output);
}

QuadratureOptions quadrature(const ScenarioConfig& c) {
  QuadratureOptions q;
  q.tolerance = c.tolerances.quadrature;
  return q;
}

int cmd_extend(const ScenarioFlags& f, const std::string& route) {
  const ScenarioConfig c = f.resolve();
  if (c.kind != ScenarioKind::Eigenmode && c.kind != ScenarioKind::SHarmonic) {
    throw std::invalid_argument("extend needs an eigenmode or s_harmonic scenario");
  }
  const PreparedScenario p = prepare(c);
  const fs::path dir = output_dir(c);
  const FractionalOrder s(c.s);
  write_atomic(dir / "u.csv", grid_function_csv(*p.u));
  if (route == "semigroup" || route == "both") {
    write_atomic(dir / "extension_semigroup.csv", extension_field_csv(*p.ext));
  }
  if (route == "pde" || route == "both") {
    const ExtensionField pde = extend_pde(*p.op, s, *p.u, *p.ygrid);
    write_atomic(dir / "extension_pde.csv", extension_field_csv(pde));
    if (route == "both") {
      std::printf("weighted L2 discrepancy (pde vs semigroup): %.3e\n", weighted_l2_discrepancy(pde, *p.ext));
    }
  }
  const NeumannTrace tr = neumann_trace(*p.ext, s);
  write_atomic(dir / "neumann_trace.csv", grid_function_csv(tr.trace));
  std::printf("Y = %.6g, J = %d, truncation ratio %.3e, flagged trace nodes %d\n", p.ygrid->height,
              p.ygrid->intervals, truncation_ratio(*p.ext), tr.flagged);
  std::printf("wrote %s\n", dir.string().c_str());
  return 0;
}

int cmd_frequency(const ScenarioFlags& f) {
  const ScenarioConfig c = f.resolve();
  const PreparedScenario p = prepare(c);
  ProfileOptions opts;
  opts.quadrature = quadrature(c);
  FrequencyProfile prof = frequency_profile(*p.field, *p.a, FractionalOrder(c.s), c.radii.values(), opts);
  const MonotonicityReport mono = monotonicity_report(prof);
  set_nbar_constant(prof, mono.C_min);
  std::printf("%8s %14s %14s %10s %10s %10s\n", "r", "H", "D", "N", "rhoH", "rhoD");
  for (const auto& smp : prof.samples) {
    std::printf("%8.4f %14.6e %14.6e %10.6f %10.2e %10.2e\n", smp.r, smp.H, smp.D, smp.N, smp.rhoH, smp.rhoD);
  }
  const GammaEstimate g = gamma_limit(prof, c.radii.min);
  std::printf("C_min = %.3e, gamma = %.6f%s\n", mono.C_min, g.gamma, g.low_confidence ? " (low confidence)" : "");
  const fs::path dir = output_dir(c);
  write_atomic(dir / "profile.csv", profile_csv(prof));
  std::printf("wrote %s\n", (dir / "profile.csv").string().c_str());
  return 0;
}

int cmd_doubling(const ScenarioFlags& f) {
  const ScenarioConfig c = f.resolve();
  const PreparedScenario p = prepare(c);
  const double rmax = c.radii.max;
  const DoublingReport d =
      doubling_report(*p.field, *p.a, FractionalOrder(c.s), {rmax / 8, rmax / 4, rmax / 2}, quadrature(c));
  for (std::size_t k = 0; k < d.radii.size(); ++k) {
    std::printf("M(%.4f)/M(%.4f) = %.6f\n", 2 * d.radii[k], d.radii[k], d.ratios[k]);
  }
  std::printf("C_doubling = %.6f, variation = %.3f\n", d.C_doubling, d.variation);
  return 0;
}

int cmd_order(const ScenarioFlags& f, const std::string& input, double r0) {
  GridFunction u;
  ScenarioConfig c;
  if (!input.empty()) {
    u = parse_grid_function_csv(read_text(input));
    c = f.resolve();
  } else {
    c = f.resolve();
    const PreparedScenario p = prepare(c);
    if (!p.u) throw std::invalid_argument("order needs --input for analytic scenarios");
    u = *p.u;
  }
  if (!(r0 > 0.0)) r0 = c.mask_radius / 4;
  const OrderEstimate est = vanishing_order(u, u.grid.origin_index(), dyadic_radii(r0));
  const auto j = to_json(est);
  std::printf("%s\n", j.dump(2).c_str());
  if (f.output) write_atomic(resolve_output(*f.output) / "order.json", j.dump(2) + "\n");
  return 0;
}

int cmd_blowup(const ScenarioFlags& f) {
  const ScenarioConfig c = f.resolve();
  const PreparedScenario p = prepare(c);
  nlohmann::json records = nlohmann::json::array();
  for (const BlowupRecord& r : rescale_all(p.field, *p.a, FractionalOrder(c.s), c.taus, {0.25, 0.5, 1.0}, quadrature(c))) {
    std::printf("tau=%.3f  H_tau(1)=%.9f  D_tau(1)=%.6f  max|N_tau(r)-N(tau r)|=%.2e\n", r.tau, r.H1.value,
                r.D1.value, r.max_transport_error());
    records.push_back(to_json(r));
  }
  const fs::path dir = output_dir(c);
  write_atomic(dir / "blowup.json", nlohmann::json{{"records", records}}.dump(2) + "\n");
  return 0;
}

void print_report(const VerificationReport& r) {
  std::printf("%s: %s\n", r.scenario.c_str(), r.passed() ? "PASS" : "FAIL");
  for (const auto& c : r.checks) {
    std::printf("  %-10s %-28s value %-12.4g budget %-12.4g %s%s%s\n", to_string(c.status).c_str(),
                c.name.c_str(), c.value, c.budget, c.anchor.c_str(), c.message.empty() ? "" : " | ",
                c.message.c_str());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Frequency-function verification for spectral fractional operators"};
  app.require_subcommand(1);

  ScenarioFlags f_extend, f_freq, f_doubling, f_order, f_blowup, f_run;
  std::string route = "both", input, config_dir;
  double r0 = 0.0;

  auto* extend = app.add_subcommand("extend", "extend u to the upper half space and write the fields");
  f_extend.attach(extend);
  extend->add_option("--route", route, "semigroup | pde | both")
      ->check(CLI::IsMember({"semigroup", "pde", "both"}));
  auto* freq = app.add_subcommand("frequency", "frequency profile of the scenario field");
  f_freq.attach(freq);
  auto* doubling = app.add_subcommand("doubling", "dyadic doubling ratios of the ball mass");
  f_doubling.attach(doubling);
  auto* order = app.add_subcommand("order", "vanishing order of u at the origin");
  f_order.attach(order);
  order->add_option("--input", input, "grid function CSV instead of the scenario trace");
  order->add_option("--r0", r0, "largest dyadic radius (default mask_radius / 4)");
  auto* blowup = app.add_subcommand("blowup", "blow-up records for the configured taus");
  f_blowup.attach(blowup);
  auto* run = app.add_subcommand("run", "run one scenario and print its verification report");
  f_run.attach(run);
  auto* verify = app.add_subcommand("verify", "run every scenario config in a directory");
  verify->add_option("dir", config_dir, "directory of scenario configs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*extend) return cmd_extend(f_extend, route);
    if (*freq) return cmd_frequency(f_freq);
    if (*doubling) return cmd_doubling(f_doubling);
    if (*order) return cmd_order(f_order, input, r0);
    if (*blowup) return cmd_blowup(f_blowup);
    if (*run) {
      const VerificationReport r = run_scenario(f_run.resolve());
      print_report(r);
      return r.passed() ? 0 : 1;
    }
    if (*verify) return verify_all(config_dir, std::cout).exit_status;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
