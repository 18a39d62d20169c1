// Copyright (c) 2026 swarmplan authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "swarmplan/groups.hpp"
#include "swarmplan/model.hpp"
#include "swarmplan/netsim.hpp"
#include "swarmplan/scenario.hpp"
#include "swarmplan/sgd.hpp"
#include "swarmplan/strategy.hpp"

namespace py = pybind11;
using namespace swarmplan;

namespace {

std::vector<std::vector<double>> matrix_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out[i].resize(m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  }
  return out;
}

py::dict solve_strategy_py(const std::string& spec_json) {
  CollaborationSpec spec = spec_from_json(spec_json);
  StrategyAssignment s = strategy::solve_strategy(spec);
  py::dict out;
  out["steps_per_sec"] = s.xi;
  out["fractions"] = s.fractions;
  out["compute"] = s.compute;
  out["duty_cycle"] = s.c_raw;
  out["gradient_flows"] = matrix_rows(s.a);
  out["average_flows"] = matrix_rows(s.g);
  out["lp_iterations"] = s.lp_iterations;
  return out;
}

double simulate_averaging_py(const std::string& spec_json,
                             const std::string& algorithm, int server) {
  CollaborationSpec spec = spec_from_json(spec_json);
  return netsim::simulate_averaging(
      spec, netsim::algorithm_from_name(algorithm), server);
}

py::list compare_strategies_py(const std::string& spec_json) {
  CollaborationSpec spec = spec_from_json(spec_json);
  py::list out;
  for (const auto& cmp : netsim::compare_strategies(spec)) {
    py::dict row;
    row["algorithm"] = netsim::algorithm_name(cmp.algorithm);
    row["round_s"] = cmp.round_s;
    row["steps_per_hour"] = cmp.steps_per_hour;
    out.append(row);
  }
  return out;
}

py::dict run_training_py(const std::string& scenario_json, double hours) {
  Scenario sc = scenario_from_json(scenario_json);
  netsim::ChurnTrace trace = sc.trace.value_or(netsim::ChurnTrace{3600.0, {}});
  if (hours > 0) trace.horizon_s = hours * 3600.0;
  netsim::SimTrace run =
      netsim::simulate_training(sc.collaboration, trace, sc.sim);
  py::dict out;
  out["steps_total"] = run.steps.size();
  out["steps_per_hour"] = run.steps_per_hour(0.0, trace.horizon_s);
  out["samples_total"] = run.samples_total;
  out["retries_total"] = run.retries_total;
  out["lp_solves"] = run.lp_solves;
  return out;
}

py::dict check_bound_py(int dim, double mu, double L, double sigma0_sq, int T,
                        int m, int seeds, std::uint64_t seed, double radius) {
  sgd::QuadraticProblem p = sgd::make_problem(dim, mu, L, sigma0_sq, seed);
  Eigen::VectorXd x0 = p.x_star.array() + radius / std::sqrt(double(dim));
  sgd::BoundCheck bc = sgd::check_bound(p, x0, T, m, seeds, seed);
  py::dict out;
  out["lhs"] = bc.lhs;
  out["rhs"] = bc.rhs;
  out["holds"] = bc.holds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_swarmplan, m) {
  m.doc() = "adaptive collaboration planning core";
  m.attr("__version__") = "0.1.0";

  py::register_exception<SpecParseError>(m, "SpecParseError",
                                         PyExc_ValueError);

  m.def("solve_strategy", &solve_strategy_py, py::arg("spec_json"),
        "Solve the communication strategy for a collaboration spec (JSON "
        "text); returns flows, duty cycles, aggregation fractions and the "
        "optimizer step rate.");
  m.def("assignment_json",
        [](const std::string& spec_json) {
          CollaborationSpec spec = spec_from_json(spec_json);
          return assignment_to_json(spec, strategy::solve_strategy(spec));
        },
        py::arg("spec_json"), "solve_strategy, serialized to JSON text");
  m.def("validate_spec",
        [](const std::string& spec_json) {
          CollaborationSpec spec = spec_from_json(spec_json);
          py::list out;
          for (const auto& v : validate(spec)) {
            py::dict row;
            row["peer"] = v.peer;
            row["field"] = v.field;
            row["message"] = v.message;
            out.append(row);
          }
          return out;
        },
        py::arg("spec_json"));
  m.def("simulate_averaging", &simulate_averaging_py, py::arg("spec_json"),
        py::arg("algorithm"), py::arg("server") = -1,
        "Seconds for one averaging round (allreduce, parameter_server or "
        "adaptive).");
  m.def("compare_strategies", &compare_strategies_py, py::arg("spec_json"));
  m.def("run_training", &run_training_py, py::arg("scenario_json"),
        py::arg("hours") = 0.0,
        "Event-driven churn simulation; returns the summary counters.");
  m.def("build_plan",
        [](int n, int m_size) {
          return groups::build_plan(n, m_size).rounds;
        },
        py::arg("n"), py::arg("m"),
        "Group partitions per round for an n-peer fleet with group size m.");
  m.def("expected_iterations", &groups::expected_iterations, py::arg("n"),
        py::arg("m"), py::arg("p"));
  m.def("optimal_group_size", &groups::optimal_group_size, py::arg("n"),
        py::arg("p"));
  m.def("check_bound", &check_bound_py, py::arg("dim") = 20,
        py::arg("mu") = 0.5, py::arg("L") = 10.0, py::arg("sigma0_sq") = 1.0,
        py::arg("T") = 500, py::arg("m") = 8, py::arg("seeds") = 10,
        py::arg("seed") = 1, py::arg("radius") = 10.0,
        "Empirical convergence statistic vs the closed-form bound.");
}
