#include "fracfreq/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

namespace fracfreq {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw std::runtime_error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_real(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  while (first < s.data() + s.size() && *first == ' ') ++first;
  const auto res = std::from_chars(first, s.data() + s.size(), v);
  if (res.ec != std::errc()) throw std::runtime_error("not a number: '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string item;
  std::istringstream ss(line);
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

struct Header {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> rows;  // data rows after the column header

  const std::string& get(const std::string& key) const {
    for (const auto& [k, v] : entries) {
      if (k == key) return v;
    }
    throw std::runtime_error("missing header entry '" + key + "'");
  }
};

Header parse_header(const std::string& text) {
  Header h;
  std::istringstream in(text);
  std::string line;
  bool columns = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw std::runtime_error("malformed header line: " + line);
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      h.entries.emplace_back(key, line.substr(eq + 1));
    } else if (!columns) {
      columns = true;
    } else {
      h.rows.push_back(line);
    }
  }
  return h;
}

std::string grid_header(const SpatialGrid& g) {
  std::ostringstream out;
  out << "# dimension=" << g.dimension() << "\n";
  for (int k = 0; k < g.dimension(); ++k) {
    out << "# axis=" << format_real(g.axis(k).lower) << "," << format_real(g.axis(k).upper) << ","
        << g.nodes(k) << "\n";
  }
  return out.str();
}

SpatialGrid grid_from_header(const Header& h) {
  const int dim = std::stoi(h.get("dimension"));
  if (dim < 1 || dim > 2) throw std::runtime_error("dimension must be 1 or 2");
  std::vector<Axis> axes;
  for (const auto& [k, v] : h.entries) {
    if (k != "axis") continue;
    const auto f = split(v);
    if (f.size() != 3) throw std::runtime_error("axis entry needs lower,upper,nodes");
    axes.push_back(Axis{parse_real(f[0]), parse_real(f[1]), std::stoi(f[2])});
  }
  if (static_cast<int>(axes.size()) != dim) throw std::runtime_error("axis count does not match dimension");
  return SpatialGrid(axes);
}

}  // namespace

std::string grid_function_csv(const GridFunction& u) {
  const SpatialGrid& g = u.grid;
  std::ostringstream out;
  out << grid_header(g);
  out << (g.dimension() == 1 ? "x,value\n" : "x,y,value\n");
  for (int i = 0; i < g.size(); ++i) {
    const Vec p = g.point(i);
    for (int k = 0; k < g.dimension(); ++k) out << format_real(p[k]) << ",";
    out << format_real(u.values[i]) << "\n";
  }
  return out.str();
}

GridFunction parse_grid_function_csv(const std::string& text) {
  const Header h = parse_header(text);
  const SpatialGrid g = grid_from_header(h);
  if (static_cast<int>(h.rows.size()) != g.size()) {
    throw std::runtime_error("expected " + std::to_string(g.size()) + " rows, found " +
                             std::to_string(h.rows.size()));
  }
  Eigen::VectorXd v(g.size());
  for (int i = 0; i < g.size(); ++i) {
    const auto f = split(h.rows[i]);
    if (static_cast<int>(f.size()) != g.dimension() + 1) throw std::runtime_error("bad row: " + h.rows[i]);
    v[i] = parse_real(f.back());
  }
  return GridFunction(g, v);
}

std::string extension_field_csv(const ExtensionField& f) {
  std::ostringstream out;
  out << grid_header(f.grid);
  out << "# levels=" << f.levels() << "\n";
  out << "# s=" << format_real(f.s) << "\n";
  out << "# grading=" << format_real(f.grading) << "\n";
  out << "# provenance=" << to_string(f.provenance) << "\n";
  out << "y";
  for (int i = 0; i < f.grid.size(); ++i) out << ",u" << i;
  out << "\n";
  for (int j = 0; j < f.levels(); ++j) {
    out << format_real(f.y[j]);
    for (int i = 0; i < f.grid.size(); ++i) out << "," << format_real(f.values(j, i));
    out << "\n";
  }
  return out.str();
}

ExtensionField parse_extension_field_csv(const std::string& text) {
  const Header h = parse_header(text);
  ExtensionField f;
  f.grid = grid_from_header(h);
  const int levels = std::stoi(h.get("levels"));
  f.s = parse_real(h.get("s"));
  f.grading = parse_real(h.get("grading"));
  f.provenance = provenance_from_string(h.get("provenance"));
  if (static_cast<int>(h.rows.size()) != levels) throw std::runtime_error("level count mismatch");
  f.values.resize(levels, f.grid.size());
  for (int j = 0; j < levels; ++j) {
    const auto cells = split(h.rows[j]);
    if (static_cast<int>(cells.size()) != f.grid.size() + 1) throw std::runtime_error("bad level row");
    f.y.push_back(parse_real(cells[0]));
    for (int i = 0; i < f.grid.size(); ++i) f.values(j, i) = parse_real(cells[i + 1]);
  }
  return f;
}

std::string profile_csv(const FrequencyProfile& p) {
  std::ostringstream out;
  out << "r,H,D,N,Nbar,rhoH,rhoD,quadErrH,quadErrD\n";
  for (const auto& s : p.samples) {
    out << format_real(s.r) << "," << format_real(s.H) << "," << format_real(s.D) << ","
        << format_real(s.N) << "," << format_real(s.Nbar) << "," << format_real(s.rhoH) << ","
        << format_real(s.rhoD) << "," << format_real(s.quadErrH) << "," << format_real(s.quadErrD)
        << "\n";
  }
  return out.str();
}

json report_json(const MonotonicityReport& mono, const DoublingReport& doubling,
                 const GammaEstimate& gamma, const HeightBoundReport& bound, const json& budgets) {
  json j;
  j["C_min"] = mono.C_min;
  j["C_doubling"] = doubling.C_doubling;
  j["gamma"] = {{"value", gamma.gamma},
                {"extrapolated", gamma.extrapolated},
                {"radius", gamma.radius},
                {"low_confidence", gamma.low_confidence}};
  j["bound_check"] = {{"exponent", bound.exponent},     {"constant", bound.constant},
                      {"slope", bound.slope},           {"target", bound.target},
                      {"slope_deviation", bound.slope_deviation},
                      {"failing_radii", bound.failing_radii},
                      {"passed", bound.passed}};
  j["budgets"] = budgets;
  return j;
}

json to_json(const OrderEstimate& est) {
  json x0 = json::array();
  for (int k = 0; k < est.point.size(); ++k) x0.push_back(est.point[k]);
  return {{"x0", x0},
          {"radii", est.radii},
          {"q_values", est.q_values},
          {"d", est.d},
          {"pairwise_slopes", est.pairwise_slopes},
          {"verdict", to_string(est.verdict)}};
}

json to_json(const BlowupRecord& rec) {
  json t = json::array();
  for (const auto& s : rec.transport) {
    t.push_back({{"r", s.r}, {"N_rescaled", s.N_rescaled}, {"N_direct", s.N_direct}});
  }
  return {{"tau", rec.tau},
          {"normalization", rec.normalization},
          {"H1", rec.H1.value},
          {"D1", rec.D1.value},
          {"transport", t}};
}

}  // namespace fracfreq
