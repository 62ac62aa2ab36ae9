// Python bindings for the main operations. Arrays are float64 and copied at the boundary.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fraclab/commands.hpp"
#include "fraclab/errors.hpp"
#include "fraclab/extension.hpp"
#include "fraclab/fractional.hpp"
#include "fraclab/generator.hpp"
#include "fraclab/special.hpp"

namespace py = pybind11;
using namespace fraclab;

namespace {

// A preset frame with its sub-Laplacian eigendecomposition.
struct Operator {
  VectorFieldFrame frame;
  SpectralDecomposition dec;
};

Operator make_operator(const std::string& name, int nodes, int dim) {
  auto f = preset(name, nodes, dim);
  return {f, spectral_decompose(assemble(f))};
}

TimeSymbol symbol_of(const std::string& s) {
  if (s == "spectral") return TimeSymbol::Spectral;
  if (s == "causal") return TimeSymbol::Causal;
  throw InputError("time symbol must be 'spectral' or 'causal'");
}

SpaceTimeField field_of(const Eigen::MatrixXd& u, double period) {
  TimeCircle c;
  c.period = period;
  c.samples = static_cast<int>(u.cols());
  return SpaceTimeField(u, c);
}

bool balakrishnan(const std::string& method) {
  if (method == "spectral") return false;
  if (method == "balakrishnan") return true;
  throw InputError("method must be 'spectral' or 'balakrishnan'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fractional sub-Laplacians and heat operators on periodic grids";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_MemoryError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::class_<Operator>(m, "Operator")
      .def(py::init(&make_operator), py::arg("preset"), py::arg("nodes"), py::arg("dim") = 1)
      .def_property_readonly("size", [](const Operator& o) { return o.dec.size(); })
      .def_property_readonly("eigenvalues", [](const Operator& o) { return o.dec.eigenvalues(); })
      .def_property_readonly("eigenvectors", [](const Operator& o) { return o.dec.eigenvectors(); })
      .def("heat", [](const Operator& o, double t, const Eigen::VectorXd& u) { return heat_apply(o.dec, t, u); },
           py::arg("t"), py::arg("u"))
      .def("random_field", [](const Operator& o, std::uint64_t seed, double tau) {
             return smooth_random_field(o.dec, seed, tau);
           }, py::arg("seed"), py::arg("tau") = 0.0)
      .def("random_spacetime", [](const Operator& o, std::uint64_t seed, int samples, double period, double tau) {
             TimeCircle c{period, samples, 0.0};
             return smooth_random_spacetime(o.dec, c, seed, tau).values();
           }, py::arg("seed"), py::arg("samples") = 16, py::arg("period") = 2 * 3.141592653589793,
           py::arg("tau") = 0.0);

  m.def("frac_L", [](const Operator& o, double s, const Eigen::VectorXd& u, const std::string& method) {
          return balakrishnan(method) ? frac_L_balakrishnan(o.dec, s, u) : frac_L_spectral(o.dec, s, u);
        }, py::arg("op"), py::arg("s"), py::arg("u"), py::arg("method") = "spectral",
        "L^s u for a node vector u.");

  m.def("frac_H", [](const Operator& o, double s, const Eigen::MatrixXd& u, double period, const std::string& method,
                     const std::string& symbol) {
          const auto f = field_of(u, period);
          const auto sym = symbol_of(symbol);
          return (balakrishnan(method) ? frac_H_balakrishnan(o.dec, s, f, {}, sym) : frac_H_spectral(o.dec, s, f, sym))
              .values();
        }, py::arg("op"), py::arg("s"), py::arg("u"), py::arg("period") = 2 * 3.141592653589793,
        py::arg("method") = "spectral", py::arg("symbol") = "spectral",
        "(d_t + L)^s u for u of shape (nodes, time samples) on a periodic time circle.");

  m.def("frac_L_matrix", [](const Operator& o, double s) { return frac_L_matrix(o.dec, s); }, py::arg("op"),
        py::arg("s"));

  m.def("trace_check", [](const Operator& o, double s, const Eigen::MatrixXd& u, double period) {
          const auto V = extend_parabolic(o.dec, s, field_of(u, period), ZGrid::geometric());
          const auto tr = trace_rate(o.dec, V);
          const auto nl = neumann_limit(o.dec, V);
          py::dict d;
          d["z"] = tr.z;
          d["error"] = tr.error;
          d["slope"] = tr.slope;
          d["prefactor"] = tr.prefactor;
          d["bound"] = tr.bound;
          d["neumann_defect"] = nl.defect;
          d["c_a"] = nl.c_a;
          return d;
        }, py::arg("op"), py::arg("s"), py::arg("u"), py::arg("period") = 2 * 3.141592653589793,
        "Extend u to z > 0, fit the trace rate and check the Neumann limit.");

  m.def("special_identities", [](const std::vector<double>& s_values, double tol) {
          py::list out;
          for (const auto& r : special_identities_check(s_values, tol)) {
            py::dict d;
            d["identity"] = r.identity;
            d["parameters"] = r.parameters;
            d["value"] = r.value;
            d["expected"] = r.expected;
            d["defect"] = r.defect;
            d["status"] = r.report_only ? "report-only" : (r.pass() ? "pass" : "fail");
            out.append(d);
          }
          return out;
        }, py::arg("s_values") = std::vector<double>{0.25, 0.5, 0.75}, py::arg("tolerance") = 1e-8);

  m.def("neumann_constant", &neumann_constant, py::arg("s"));
  m.def("bessel_k", &bessel_k, py::arg("nu"), py::arg("x"));
  m.def("command_names", &command_names);

  m.def("run", [](const std::string& command, const std::string& config) {
          std::ostringstream out, err;
          int code;
          {
            py::gil_scoped_release nogil;
            code = execute(command, config, out, err);
          }
          return py::make_tuple(code, out.str(), err.str());
        }, py::arg("command"), py::arg("config"),
        "Run a CLI command on a config file; returns (exit code, stdout, stderr).");
}
