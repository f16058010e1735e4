#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "fracfreq/blowup.hpp"
#include "fracfreq/extension.hpp"
#include "fracfreq/frequency.hpp"
#include "fracfreq/spectral.hpp"

namespace fracfreq {

using json = nlohmann::json;

/// Writes to a temporary sibling, then renames over `path`. Parent
/// directories are created.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_text(const std::filesystem::path& path);

/// Shortest decimal form that parses back to the same double.
std::string format_real(double v);

/// `# dimension=n`, one `# axis=lower,upper,nodes` line per axis, a column
/// header `x[,y],value`, then one row per interior node, axis 0 fastest.
std::string grid_function_csv(const GridFunction& u);
GridFunction parse_grid_function_csv(const std::string& text);

/// Header block (dimension, axes, levels, s, grading, provenance), a column
/// header, then one row per y level: `y, U(x_0, y), U(x_1, y), ...`.
std::string extension_field_csv(const ExtensionField& f);
ExtensionField parse_extension_field_csv(const std::string& text);

/// Columns r,H,D,N,Nbar,rhoH,rhoD,quadErrH,quadErrD.
std::string profile_csv(const FrequencyProfile& p);

json report_json(const MonotonicityReport& mono, const DoublingReport& doubling,
                 const GammaEstimate& gamma, const HeightBoundReport& bound, const json& budgets);

json to_json(const OrderEstimate& est);
json to_json(const BlowupRecord& rec);

}  // namespace fracfreq
