#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fracfreq/extension.hpp"
#include "fracfreq/field.hpp"

namespace fracfreq {

struct GridConfig {
  double lower = -1.0;
  double upper = 1.0;
  int nodes = 199;            ///< interior nodes per axis
  int y_intervals = 200;      ///< J
  double grading = 2.0;       ///< kappa
  double height = 0.0;        ///< Y; 0 selects decay_lengths / sqrt(lambda_1)
  double decay_lengths = 4.0;
};

struct CoefficientConfig {
  std::string name = "id";    ///< catalog entry
  double epsilon = 0.0;
  std::string csv;            ///< tabulated coefficient, overrides name
};

struct RadiusSchedule {
  double min = 0.08;
  double max = 0.8;
  int count = 10;
  std::vector<double> values() const;  ///< evenly spaced, inclusive
};

/// Every budget used by run_scenario.
struct Tolerances {
  double quadrature = 1e-8;
  double spectral = 1e-12;
  double trace = 0.01;
  double route = 0.01;
  double route_decay_lengths = 8.0;
  double frequency_exact = 1e-3;
  double doubling_exact = 1e-2;
  double closed_form = 1e-5;
  double monotonicity = 1e-3;
  double lipschitz_factor = 10.0;
  double cauchy_schwarz = 1e-6;
  double doubling_variation = 0.2;
  double slope_delta = 0.1;
  double blowup_height = 1e-3;
  double blowup_transport = 1e-2;
  double order_monomial = 0.05;
  double order_gamma = 0.2;
  double residual_shrink = 2.0;
  double residual_floor = 1e-6;   ///< fields without a grid: max r rho
};

enum class ScenarioKind { Eigenmode, SHarmonic, DirectPde, AnalyticLinear, AnalyticConstant };
std::string to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(const std::string& name);

struct ScenarioConfig {
  std::string name = "scenario";
  int dimension = 1;
  GridConfig grid;
  double s = 0.5;
  CoefficientConfig coefficient;
  ScenarioKind kind = ScenarioKind::Eigenmode;
  std::vector<int> modes{1};      ///< 1-based; the first one is analysed
  double mask_radius = 1.0;       ///< s-harmonic interior set
  int exterior_terms = 5;         ///< random sine terms of the exterior data
  RadiusSchedule radii;
  std::vector<double> taus{0.25, 0.5, 0.75};
  bool refine = true;             ///< residual refinement run for solution fields
  Tolerances tolerances;
  std::string output;             ///< empty: no artifacts
  std::uint64_t seed = 42;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Unknown keys anywhere are errors.
ScenarioConfig parse_config(const nlohmann::json& j);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& c);

enum class CheckStatus { Pass, Fail, SoftWarn };
std::string to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  CheckStatus status = CheckStatus::Pass;
  double value = 0.0;
  double budget = 0.0;
  std::string anchor;
  int criterion = 0;      ///< acceptance criterion, 0 for diagnostics
  std::string message;
};

struct VerificationReport {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;
  nlohmann::json metrics = nlohmann::json::object();

  bool passed() const;  ///< no check failed
  const CheckResult* find(const std::string& name) const;
  nlohmann::json to_json() const;
};

/// Grid, operator, trace u and the field U analysed by a scenario. Analytic
/// kinds carry only the grid, the coefficient and the field.
struct PreparedScenario {
  SpatialGrid grid;
  std::optional<CoefficientField> coeff;
  std::optional<DiscreteOperator> op;
  std::optional<SpectralDecomposition> spec;
  std::optional<GridFunction> u;
  std::optional<ExtensionField> ext;  ///< before reflection
  std::shared_ptr<const Field> field;
  std::optional<ExtendedCoefficient> a;
  std::optional<YGrid> ygrid;
};

PreparedScenario prepare(const ScenarioConfig& config);

/// Output directory with FRACFREQ_OUTPUT_ROOT prepended to relative paths.
std::filesystem::path resolve_output(const std::string& output);

/// Stage errors become failed checks named "stage:<stage>"; later stages
/// are skipped. Artifacts go to resolve_output(config.output) when set.
VerificationReport run_scenario(const ScenarioConfig& config);

struct BatchResult {
  std::vector<std::filesystem::path> configs;
  std::vector<VerificationReport> reports;
  int exit_status = 0;
};

/// Runs every *.json in `config_dir` in name order. A config that fails to
/// load yields a report with a failed "stage:config" check.
BatchResult verify_all(const std::filesystem::path& config_dir, std::ostream& log);

}  // namespace fracfreq
