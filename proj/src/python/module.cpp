#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "boxcorner/corners.hpp"
#include "boxcorner/error.hpp"
#include "boxcorner/io.hpp"
#include "boxcorner/norms.hpp"
#include "boxcorner/oracle.hpp"
#include "boxcorner/pipeline.hpp"

namespace py = pybind11;
using namespace bc;

namespace {

using Points = std::vector<std::vector<int>>;

// points of H^3 given as element codes; the set-file JSON reader does the validation
io::SetData set_of(const Points& pts, const std::string& space) {
  io::Json j{{"space", space}, {"arity", 3}, {"points", pts}};
  return io::parse_set(j.dump());
}

GroupPtr group_of(const std::string& space) {
  auto s = set_of({}, space);
  return Group::field(s.p, s.n);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "corner-free sets, box norms and density increments on F_p^n";

  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_ValueError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);

  m.def("box_norm", py::overload_cast<const std::vector<double>&, const std::vector<int>&>(&box_norm),
        py::arg("values"), py::arg("dims"), "box norm of a row-major table");
  m.def(
      "u3_norm",
      [](const std::vector<double>& f, const std::string& space) {
        return u3_norm(f, *group_of(space));
      },
      py::arg("values"), py::arg("space"));

  m.def(
      "count_corners",
      [](const Points& pts, const std::string& space, bool include_trivial) {
        auto s = set_of(pts, space);
        return count_corners(s.A, io::make_cube(s.p, s.n)->H(), 3, include_trivial);
      },
      py::arg("points"), py::arg("space"), py::arg("include_trivial") = false);

  m.def(
      "find_corner",
      [](const Points& pts, const std::string& space) -> std::optional<std::string> {
        auto s = set_of(pts, space);
        auto w = find_corner(s.A, io::make_cube(s.p, s.n)->H(), 3);
        if (!w) return std::nullopt;
        return io::to_json(*w).dump();
      },
      py::arg("points"), py::arg("space"));

  m.def(
      "decide",
      [](const Points& pts, const std::string& space, double kappa) {
        auto s = set_of(pts, space);
        auto cube = io::make_cube(s.p, s.n);
        DecideOptions opt;
        opt.kappa = kappa;
        opt.soft_admissibility = true;
        return io::to_json(von_neumann_decide({TSystem::trivial(cube), s.A}, opt)).dump();
      },
      py::arg("points"), py::arg("space"), py::arg("kappa") = 1.0);

  m.def(
      "admissible",
      [](const std::string& system_json, double eps, double C, double kappa) {
        auto cs = io::system_from_json(io::Json::parse(system_json));
        return io::to_json(is_admissible(cs.sys, eps, C, kappa)).dump();
      },
      py::arg("system"), py::arg("eps"), py::arg("C") = 64.0, py::arg("kappa") = 0.01);

  m.def(
      "pipeline",
      [](const Points& pts, const std::string& space, const std::string& config_json) {
        auto s = set_of(pts, space);
        PipelineConfig cfg;
        if (!config_json.empty()) cfg = io::config_from_json(io::Json::parse(config_json));
        cfg.p = s.p;
        cfg.n = s.n;
        PipelineTrace tr;
        {
          py::gil_scoped_release nogil;
          tr = run_pipeline(io::make_cube(s.p, s.n), s.A, cfg);
        }
        return io::to_json(tr).dump();
      },
      py::arg("points"), py::arg("space"), py::arg("config") = "");

  m.def(
      "trace_csv",
      [](const std::string& trace_json) {
        return io::trace_csv(io::trace_from_json(io::Json::parse(trace_json)));
      },
      py::arg("trace"));

  m.def(
      "max_cornerfree",
      [](int N, int d) {
        oracle::MaxCornerFree r;
        {
          py::gil_scoped_release nogil;
          r = oracle::max_cornerfree(N, d);
        }
        return io::to_json(r).dump();
      },
      py::arg("N"), py::arg("d") = 2);
}
