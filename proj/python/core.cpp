#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "mflqr/config.hpp"
#include "mflqr/errors.hpp"
#include "mflqr/io.hpp"
#include "mflqr/oracle.hpp"
#include "mflqr/sim.hpp"

namespace py = pybind11;
using namespace mflqr;

namespace {

void require_valid(const ExperimentConfig& cfg) {
  const ValidationReport report = validate(cfg.model, cfg.cost);
  if (const Check* bad = report.first_failure()) {
    throw Error("ValidationFailed", bad->name + ": " + bad->detail);
  }
}

GainSchedule gains_of(const ExperimentConfig& cfg) {
  require_valid(cfg);
  return compute_gains(solve(cfg.model, cfg.cost), cfg.model, cfg.cost);
}

py::dict gains(const std::string& text) {
  const ExperimentConfig cfg = parse_config(text);
  require_valid(cfg);
  const RiccatiSolution ric = solve(cfg.model, cfg.cost);
  const GainSchedule g = compute_gains(ric, cfg.model, cfg.cost);
  const int steps = g.is_stationary() ? 1 : g.horizon();
  std::vector<MatrixXd> dev, bar, m_dev, m_aug;
  for (int t = 1; t <= steps; ++t) {
    dev.push_back(g.dev(t));
    bar.push_back(g.bar(t));
    m_dev.push_back(ric.dev(t));
    m_aug.push_back(ric.aug(t));
  }
  py::dict out;
  out["stationary"] = g.is_stationary();
  out["leaderless"] = g.leaderless();
  out["L_dev"] = dev;
  out["L_bar"] = bar;
  out["M_dev"] = m_dev;
  out["M_aug"] = m_aug;
  if (g.is_stationary()) {
    out["are_residual"] = std::max(ric.dev_diagnostics().residual, ric.aug_diagnostics().residual);
  }
  return out;
}

py::dict run_simulation(const std::string& text, std::optional<std::uint64_t> seed) {
  const ExperimentConfig cfg = parse_config(text);
  const SimulationTrace tr =
      mflqr::simulate(cfg.model, cfg.cost, gains_of(cfg), cfg.T, seed.value_or(cfg.seed));
  py::dict out;
  out["x0"] = tr.x0;
  out["X"] = tr.X;
  out["u0"] = tr.u0;
  out["U"] = tr.U;
  out["mean_abs_dev"] = tr.mean_abs_dev;
  out["stage_cost"] = tr.stage_cost;
  out["cost_direct"] = evaluate_cost_direct(tr, cfg.cost);
  out["cost_decomposed"] = evaluate_cost_decomposed(tr, cfg.cost);
  out["deviation_residual"] = deviation_residual(tr, cfg.model);
  return out;
}

double oracle_check(const std::string& text, std::optional<int> n) {
  const ExperimentConfig cfg = parse_config(text);
  const int k = n.value_or(cfg.oracle_n);
  SystemModel model = cfg.model;
  model.n = k;
  const GainSchedule g = gains_of(cfg);
  return oracle::compare(oracle::solve_centralized(oracle::build_centralized(model, cfg.cost, k)),
                         oracle::assemble_meanfield_as_centralized(g, k));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Leader-follower mean-field LQ team solver";

  const auto& error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", error.ptr());
  // Prefix messages with the error kind or the JSON pointer.
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      const py::object type = py::module_::import("mflqr._core").attr("ConfigError");
      PyErr_SetString(type.ptr(), (e.pointer() + ": " + e.what()).c_str());
    } catch (const Error& e) {
      const py::object type = py::module_::import("mflqr._core").attr("Error");
      PyErr_SetString(type.ptr(), (e.kind() + ": " + e.what()).c_str());
    }
  });

  m.def("example1_config", &example1_config_text, py::arg("infinite") = false,
        "Bundled 100-follower example as JSON text.");
  m.def(
      "validate",
      [](const std::string& text) {
        const ExperimentConfig cfg = parse_config(text);
        return to_json(validate(cfg.model, cfg.cost)).dump();
      },
      py::arg("config"), "Assumption checks as a JSON string.");
  m.def("gains", &gains, py::arg("config"));
  m.def("simulate", &run_simulation, py::arg("config"), py::arg("seed") = py::none());
  m.def("oracle_check", &oracle_check, py::arg("config"), py::arg("n") = py::none(),
        "Max gain deviation from the centralized solution for n followers.");
}
