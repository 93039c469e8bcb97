#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include "dcmpc/config.hpp"
#include "dcmpc/errors.hpp"
#include "dcmpc/report.hpp"
#include "dcmpc/simulation.hpp"
#include "dcmpc/synthesis.hpp"

namespace py = pybind11;
using namespace dcmpc;

namespace {

// A loaded configuration together with its assembled, certified problem.
struct Problem {
  ProblemConfig config;
  AssembledProblem assembled;

  explicit Problem(ProblemConfig c) : config(std::move(c)), assembled(assemble(config)) {}
};

StrategyConfig make_strategy(const Problem& pr, const std::string& name, int iterations) {
  StrategyConfig cfg;
  cfg.kind = parse_strategy(name);
  cfg.iterations = iterations;
  cfg.weights = pr.config.sim.weights;
  return cfg;
}

VectorXd start_state(const Problem& pr, const std::optional<VectorXd>& xbar0) {
  if (!xbar0) return initial_state(pr.config, pr.assembled);
  if (xbar0->size() != pr.assembled.problem.state_dim()) {
    throw Error(ErrorKind::DimensionMismatch, "xbar0 has length " + std::to_string(xbar0->size()) + ", expected " +
                                                  std::to_string(pr.assembled.problem.state_dim()));
  }
  return *xbar0;
}

py::dict cost_dict(const CostValue& c) {
  py::dict d;
  d["gc"] = c.gc;
  d["cc"] = c.cc;
  return d;
}

py::dict solve(const Problem& pr, const std::optional<VectorXd>& xbar0, const std::string& strategy,
               int iterations) {
  const auto& p = pr.assembled.problem;
  const VectorXd x = start_state(pr, xbar0);
  const auto cfg = make_strategy(pr, strategy, iterations);
  ControllerResult r;
  {
    py::gil_scoped_release release;
    switch (cfg.kind) {
      case StrategyKind::Centralized: r = solve_centralized(p, x); break;
      case StrategyKind::DistributedNoIter: r = solve_noiter(p, x); break;
      case StrategyKind::CooperativeIter: r = solve_cooperative(p, x, cfg); break;
    }
  }
  py::dict d = cost_dict(evaluate_cost(p, x, r.inputs));
  d["inputs"] = r.inputs.u;
  d["stacked"] = stack_inputs(p, r.inputs);
  d["status"] = std::string(to_string(r.stats.status));
  d["iterations"] = r.stats.iterations;
  d["cost_history"] = r.cost_history;
  return d;
}

py::dict simulate(const Problem& pr, int steps, const std::string& strategy, int iterations,
                  const std::optional<VectorXd>& xbar0, bool shadow_centralized) {
  const auto& p = pr.assembled.problem;
  const VectorXd x = start_state(pr, xbar0);
  const auto cfg = make_strategy(pr, strategy, iterations);
  RunOptions opts;
  opts.shadow_centralized = shadow_centralized;
  ClosedLoopTrace trace;
  {
    py::gil_scoped_release release;
    trace = run_closed_loop(p, x, cfg, steps, opts);
  }
  const int T = static_cast<int>(trace.steps.size());
  MatrixXd states(T + 1, p.state_dim()), inputs(T, p.input_dim());
  VectorXd gc(T), cc(T), gc_c = VectorXd::Constant(T, std::numeric_limits<double>::quiet_NaN());
  VectorXd cc_c = gc_c;
  std::vector<int> iters(T);
  for (int t = 0; t < T; ++t) {
    const auto& s = trace.steps[t];
    states.row(t) = s.xbar.transpose();
    for (int i = 0; i < p.agents(); ++i) {
      inputs.row(t).segment(p.input_offsets[i], s.u[i].size()) = s.u[i].transpose();
    }
    gc(t) = s.cost.gc;
    cc(t) = s.cost.cc;
    if (s.centralized) {
      gc_c(t) = s.centralized->gc;
      cc_c(t) = s.centralized->cc;
    }
    iters[t] = s.iterations;
  }
  states.row(T) = trace.final_state.transpose();

  py::dict d;
  d["strategy"] = trace.strategy;
  d["states"] = states;
  d["inputs"] = inputs;
  d["gc"] = gc;
  d["cc"] = cc;
  d["gc_centralized"] = gc_c;
  d["cc_centralized"] = cc_c;
  d["iterations"] = iters;
  d["failures"] = trace.failures;
  d["aborted"] = trace.aborted;
  d["accumulated_stage_cost"] = trace.accumulated_stage_cost;
  std::ostringstream csv;
  write_trace_csv(csv, p, trace, false);
  d["csv"] = csv.str();
  return d;
}

py::list compare(const Problem& pr, int max_iterations, std::optional<int> warmup_steps,
                 const std::optional<VectorXd>& xbar0) {
  const VectorXd x = start_state(pr, xbar0);
  std::vector<StrategyConfig> strategies;
  strategies.push_back({StrategyKind::DistributedNoIter, 0, {}, WarmStart::ShiftedPrevious});
  for (int k = max_iterations; k >= 1; --k) {
    strategies.push_back({StrategyKind::CooperativeIter, k, pr.config.sim.weights, WarmStart::ShiftedPrevious});
  }
  ComparisonTable table;
  {
    py::gil_scoped_release release;
    table = compare_strategies(pr.assembled.problem, x, strategies,
                               warmup_steps.value_or(pr.config.sim.warmup_steps));
  }
  py::list rows;
  for (const auto& r : table.rows) {
    py::dict d;
    d["label"] = r.label;
    d["gc"] = r.gc;
    d["gc_loss"] = r.gc_loss;
    d["cc"] = r.cc;
    d["cc_loss"] = r.cc_loss;
    d["millis"] = r.millis;
    rows.append(d);
  }
  return rows;
}

py::dict run_monte_carlo(const Problem& pr, std::optional<int> draws, std::optional<std::uint64_t> seed,
                         const std::string& strategy, int iterations, int threads) {
  const auto& sim = pr.config.sim;
  MonteCarloReport rep;
  {
    py::gil_scoped_release release;
    rep = monte_carlo(pr.assembled.problem, draws.value_or(sim.draws), sim.lower, sim.upper,
                      make_strategy(pr, strategy, iterations), seed.value_or(sim.seed), threads);
  }
  py::dict d;
  d["draws"] = rep.draws;
  d["evaluated"] = rep.evaluated;
  d["excluded"] = rep.excluded;
  d["loss_mean"] = rep.loss_mean;
  d["loss_worst"] = rep.loss_worst;
  d["per_draw_loss"] = rep.per_draw_loss;
  d["seed"] = rep.seed;
  d["strategy"] = rep.strategy;
  return d;
}

}  // namespace

PYBIND11_MODULE(_dcmpc, m) {
  m.doc() = "Divide-and-conquer cooperative distributed MPC";

  static py::exception<Error> error_type(m, "DcmpcError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr e) {
    try {
      if (e) std::rethrow_exception(e);
    } catch (const Error& err) {
      py::tuple args = py::make_tuple(std::string(to_string(err.kind())), std::string(err.what()));
      PyErr_SetObject(error_type.ptr(), args.ptr());
    }
  });

  m.def("solve_discrete_lyapunov", &solve_discrete_lyapunov, py::arg("F"), py::arg("W"),
        "P with F^T P F + W = P.");
  m.def(
      "lqr_gain",
      [](const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R) {
        const auto r = lqr_gain(A, B, Q, R);
        return py::make_tuple(r.K, r.P);
      },
      py::arg("A"), py::arg("B"), py::arg("Q"), py::arg("R"), "(K, P) with u = K x.");
  m.def(
      "permutation",
      [](const DimsTable& dims) {
        const auto map = build_permutation(dims);
        return py::make_tuple(map.T, map.bar_dims);
      },
      py::arg("dims"), "(T, bar_dims) for x = T xbar.");

  py::class_<Problem>(m, "Problem")
      .def_static(
          "from_file", [](const std::filesystem::path& path) { return Problem(load_config(path)); },
          py::arg("path"))
      .def_static(
          "from_json", [](const std::string& text) { return Problem(parse_config(text)); }, py::arg("text"))
      .def_property_readonly("name", [](const Problem& p) { return p.config.name; })
      .def_property_readonly("certified", [](const Problem& p) { return p.assembled.certified(); })
      .def_property_readonly("agents", [](const Problem& p) { return p.assembled.problem.agents(); })
      .def_property_readonly("state_dim", [](const Problem& p) { return p.assembled.problem.state_dim(); })
      .def_property_readonly("input_dim", [](const Problem& p) { return p.assembled.problem.input_dim(); })
      .def_property_readonly("horizon", [](const Problem& p) { return p.assembled.problem.horizon; })
      .def_property_readonly("config_hash", [](const Problem& p) { return config_hash(p.config); })
      .def_property_readonly("T", [](const Problem& p) { return p.assembled.plant.map.T; })
      .def_property_readonly("bar_dims", [](const Problem& p) { return p.assembled.plant.map.bar_dims; })
      .def_property_readonly("Abar", [](const Problem& p) { return p.assembled.problem.A; })
      .def_property_readonly("Bbar", [](const Problem& p) { return p.assembled.problem.B; })
      .def_property_readonly("Qbar", [](const Problem& p) { return p.assembled.problem.cost.Qbar; })
      .def_property_readonly("Pbar", [](const Problem& p) { return p.assembled.problem.cost.Pbar; })
      .def_property_readonly("Phat", [](const Problem& p) { return p.assembled.ingredients.Phat; })
      .def_property_readonly("K", [](const Problem& p) { return p.assembled.ingredients.K; })
      .def_property_readonly("P", [](const Problem& p) { return p.assembled.cost.P; })
      .def_property_readonly("radius", [](const Problem& p) { return p.assembled.problem.radius; })
      .def_property_readonly("alpha",
                             [](const Problem& p) -> std::optional<double> {
                               if (!p.assembled.selection) return std::nullopt;
                               return p.assembled.selection->alpha;
                             })
      .def_property_readonly("selection_method",
                             [](const Problem& p) -> std::optional<std::string> {
                               if (!p.assembled.selection) return std::nullopt;
                               return p.assembled.selection->method;
                             })
      .def("initial_state", [](const Problem& p) { return initial_state(p.config, p.assembled); })
      .def("to_original", [](const Problem& p, const VectorXd& xbar) { return p.assembled.plant.map.restore(xbar); },
           py::arg("xbar"))
      .def("to_transformed",
           [](const Problem& p, const VectorXd& x) { return p.assembled.plant.map.transform(x); }, py::arg("x"))
      .def("config_json", [](const Problem& p) { return serialize_config(p.config); })
      .def("synthesis_report", [](const Problem& p) { return synthesis_report(p.config, p.assembled); })
      .def("transform_report", [](const Problem& p) { return transform_report(p.config, p.assembled); })
      .def("solve", &solve, py::arg("xbar0") = py::none(), py::arg("strategy") = "centralized",
           py::arg("iterations") = 1, "One MPC instant; returns inputs, costs and solver statistics.")
      .def("simulate", &simulate, py::arg("steps") = 60, py::arg("strategy") = "noiter", py::arg("iterations") = 1,
           py::arg("xbar0") = py::none(), py::arg("shadow_centralized") = false)
      .def("compare", &compare, py::arg("max_iterations") = 5, py::arg("warmup_steps") = py::none(),
           py::arg("xbar0") = py::none())
      .def("monte_carlo", &run_monte_carlo, py::arg("draws") = py::none(), py::arg("seed") = py::none(),
           py::arg("strategy") = "noiter", py::arg("iterations") = 1, py::arg("threads") = 0);
}
