#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fracfreq/blowup.hpp"
#include "fracfreq/extension.hpp"
#include "fracfreq/harness.hpp"
#include "fracfreq/spectral.hpp"

namespace py = pybind11;
using namespace fracfreq;

namespace {

struct LineSpectrum {
  SpatialGrid grid;
  SpectralDecomposition spec;

  LineSpectrum(double lower, double upper, int nodes)
      : grid(SpatialGrid::line(lower, upper, nodes)),
        spec(eigendecompose(assemble_operator(grid, CoefficientField::identity(1)))) {}

  Eigen::VectorXd nodes() const {
    Eigen::VectorXd x(grid.size());
    for (int i = 0; i < grid.size(); ++i) x[i] = grid.point(i)[0];
    return x;
  }
  Eigen::VectorXd power(double exponent, const Eigen::VectorXd& u) const {
    return spectral_power(spec, exponent, GridFunction(grid, u)).values;
  }
  Eigen::VectorXd heat(double t, const Eigen::VectorXd& u) const {
    return heat_semigroup(spec, t, GridFunction(grid, u)).values;
  }
  Eigen::VectorXd neumann(double s, const Eigen::VectorXd& u, int intervals, double decay_lengths) const {
    const FractionalOrder order(s);
    const YGrid yg(default_height(spec, decay_lengths), intervals, 2.0);
    return neumann_trace(extend_semigroup(spec, order, GridFunction(grid, u), yg), order).trace.values;
  }
  py::dict order(const Eigen::VectorXd& u, double r0, int count) const {
    const OrderEstimate est = vanishing_order(GridFunction(grid, u), grid.origin_index(), dyadic_radii(r0, count));
    py::dict d;
    d["d"] = est.d;
    d["radii"] = est.radii;
    d["q_values"] = est.q_values;
    d["verdict"] = to_string(est.verdict);
    return d;
  }
};

std::string run_json(const std::string& config) {
  return run_scenario(parse_config(nlohmann::json::parse(config))).to_json().dump();
}

std::string verify_json(const std::string& dir) {
  std::ostringstream log;
  const BatchResult b = verify_all(dir, log);
  nlohmann::json out{{"exit_status", b.exit_status}, {"log", log.str()}};
  out["reports"] = nlohmann::json::array();
  for (const auto& r : b.reports) out["reports"].push_back(r.to_json());
  return out.dump();
}

}  // namespace

PYBIND11_MODULE(_fracfreq, m) {
  m.doc() = "Frequency-function verification for spectral fractional operators";

  m.def("extension_profile", [](double s, double rho) { return extension_profile_bessel(s, rho); },
        py::arg("s"), py::arg("rho"));
  m.def("trace_constant", [](double s) { return trace_constant(FractionalOrder(s)); }, py::arg("s"));

  py::class_<LineSpectrum>(m, "LineSpectrum")
      .def(py::init<double, double, int>(), py::arg("lower"), py::arg("upper"), py::arg("nodes"))
      .def_property_readonly("nodes", &LineSpectrum::nodes)
      .def_property_readonly("eigenvalues", [](const LineSpectrum& l) { return l.spec.eigenvalues; })
      .def_property_readonly("eigenvectors", [](const LineSpectrum& l) { return l.spec.eigenvectors; })
      .def("power", &LineSpectrum::power, py::arg("exponent"), py::arg("u"))
      .def("heat", &LineSpectrum::heat, py::arg("t"), py::arg("u"))
      .def("neumann_trace", &LineSpectrum::neumann, py::arg("s"), py::arg("u"), py::arg("intervals") = 200,
           py::arg("decay_lengths") = 4.0)
      .def("vanishing_order", &LineSpectrum::order, py::arg("u"), py::arg("r0"), py::arg("count") = 4);

  m.def("_run_scenario", &run_json, py::call_guard<py::gil_scoped_release>());
  m.def("_verify_all", &verify_json, py::call_guard<py::gil_scoped_release>());
}
