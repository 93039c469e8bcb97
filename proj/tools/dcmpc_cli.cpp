// dcmpc: synthesize, check, transform, simulate, compare, montecarlo.
//
// Exit codes: 0 success, 2 parse/config error, 3 certification failure,
// 4 solver failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "dcmpc/config.hpp"
#include "dcmpc/errors.hpp"
#include "dcmpc/report.hpp"
#include "dcmpc/simulation.hpp"

namespace fs = std::filesystem;
using namespace dcmpc;

namespace {

constexpr int kOk = 0;
constexpr int kParse = 2;
constexpr int kCertification = 3;
constexpr int kSolver = 4;

struct Options {
  std::string config;
  std::string out_dir = ".";
  std::string strategy;
  int iters = -1;
  int steps = -1;
  long long seed = -1;
  int draws = -1;
  bool no_check = false;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::StructureViolation:
    case ErrorKind::NotPSD:
    case ErrorKind::NotPD:
      return kParse;
    case ErrorKind::NotSchur:
    case ErrorKind::SingularSystem:
    case ErrorKind::RiccatiDiverged:
    case ErrorKind::NotStabilized:
    case ErrorKind::SelectionFailed:
      return kCertification;
    case ErrorKind::QpFailure:
      return kSolver;
  }
  return kSolver;
}

ProblemConfig load(const Options& o) {
  ProblemConfig c = load_config(o.config);
  if (!o.strategy.empty()) c.sim.strategy = parse_strategy(o.strategy);
  if (o.iters >= 0) c.sim.iterations = o.iters;
  if (o.steps >= 0) c.sim.steps = o.steps;
  if (o.seed >= 0) c.sim.seed = static_cast<std::uint64_t>(o.seed);
  if (o.draws >= 0) c.sim.draws = o.draws;
  if (c.sim.steps < 1) throw Error(ErrorKind::Parse, "--steps must be positive");
  if (c.sim.draws < 1) throw Error(ErrorKind::Parse, "--draws must be positive");
  return c;
}

fs::path output(const Options& o, const char* name) {
  fs::create_directories(o.out_dir);
  return fs::path(o.out_dir) / name;
}

void write(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

void print_certification(const AssembledProblem& a) {
  const auto& c = a.ingredients.cert;
  std::printf("prop1 %s (margin %.6g)\n", c.prop1.holds ? "holds" : "FAILS", c.prop1.margin);
  for (std::size_t i = 0; i < c.prop2.size(); ++i) {
    std::printf("agent %zu: block margin %.6g, sigma_max(A_K) %.6g, ball invariant %s, input admissible %s\n", i + 1,
                c.prop2[i].margin, c.balls[i].sigma_max, c.balls[i].ball_invariant ? "yes" : "no",
                c.balls[i].input_admissible ? "yes" : "no");
  }
  std::printf("diagonal dominance %s (slack %.6g)\n", c.dd.holds ? "holds" : "fails", c.dd.slack);
  if (a.selection) std::printf("terminal weights: %s, alpha %.6g\n", a.selection->method.c_str(), a.selection->alpha);
}

int certification_status(const AssembledProblem& a, const Options& o) {
  if (a.certified() || o.no_check) return kOk;
  std::cerr << "certification failed (prop1 margin " << a.ingredients.cert.prop1.margin
            << (a.ingredients.cert.inputs_admissible() ? "" : ", terminal ball not input admissible") << ")\n";
  return kCertification;
}

int cmd_synthesize(const Options& o) {
  const auto cfg = load(o);
  const auto a = assemble(cfg);
  write(output(o, "synthesis.json"), synthesis_report(cfg, a));
  print_certification(a);
  return a.certified() ? kOk : kCertification;
}

int cmd_check(const Options& o) {
  const auto cfg = load(o);
  const auto a = assemble(cfg);
  print_certification(a);
  return a.certified() ? kOk : kCertification;
}

int cmd_transform(const Options& o) {
  const auto cfg = load(o);
  const auto a = assemble(cfg);
  write(output(o, "transform.json"), transform_report(cfg, a));
  return kOk;
}

int cmd_simulate(const Options& o) {
  const auto cfg = load(o);
  const auto a = assemble(cfg);
  if (int rc = certification_status(a, o)) return rc;
  const auto& p = a.problem;
  RunOptions run;
  run.shadow_centralized = cfg.sim.strategy != StrategyKind::Centralized;
  auto trace = run_closed_loop(p, initial_state(cfg, a), strategy_from(cfg.sim), cfg.sim.steps, run);
  trace.seed = cfg.sim.seed;
  trace.config_hash = config_hash(cfg);
  {
    std::ofstream out(output(o, "trace.csv"), std::ios::binary);
    write_trace_csv(out, p, trace);
  }
  std::cout << "wrote " << output(o, "trace.csv").string() << "\n";
  const auto timing = summarize_timing(trace);
  write(output(o, "timing.csv"), timing_csv(timing, trace.strategy));
  std::printf("%s: %zu steps, final |xbar| %.6g, worst %.4f ms, average %.4f ms\n", trace.strategy.c_str(),
              trace.steps.size(), trace.final_state.norm(), timing.worst_ms, timing.average_ms);
  if (trace.failures > 0) {
    std::cerr << trace.failures << " solve(s) did not reach Solved" << (trace.aborted ? "; run aborted" : "") << "\n";
    return kSolver;
  }
  return kOk;
}

int cmd_compare(const Options& o) {
  const auto cfg = load(o);
  const auto a = assemble(cfg);
  if (int rc = certification_status(a, o)) return rc;
  std::vector<StrategyConfig> strategies;
  strategies.push_back({StrategyKind::DistributedNoIter, 0, {}, WarmStart::ShiftedPrevious});
  const int max_iters = o.iters >= 0 ? o.iters : std::max(cfg.sim.iterations, 1);
  for (int k = max_iters; k >= 1; --k) {
    strategies.push_back({StrategyKind::CooperativeIter, k, cfg.sim.weights, WarmStart::ShiftedPrevious});
  }
  const auto table = compare_strategies(a.problem, initial_state(cfg, a), strategies, cfg.sim.warmup_steps);
  {
    std::ofstream out(output(o, "compare.csv"), std::ios::binary);
    write_comparison_csv(out, table);
  }
  std::cout << "wrote " << output(o, "compare.csv").string() << "\n";
  std::printf("%-12s %14s %10s %12s %10s\n", "Method", "GC", "GC loss", "CC", "CC loss");
  for (const auto& r : table.rows) {
    std::printf("%-12s %14.6g %9.3f%% %12.6g %9.3f%%\n", r.label.c_str(), r.gc, 100.0 * r.gc_loss, r.cc,
                100.0 * r.cc_loss);
  }
  return kOk;
}

int cmd_montecarlo(const Options& o) {
  const auto cfg = load(o);
  const auto a = assemble(cfg);
  if (int rc = certification_status(a, o)) return rc;
  const auto rep = monte_carlo(a.problem, cfg.sim.draws, cfg.sim.lower, cfg.sim.upper, strategy_from(cfg.sim),
                               cfg.sim.seed);
  write(output(o, "montecarlo.json"), monte_carlo_report(rep, config_hash(cfg)));
  std::printf("%s: %d/%d draws evaluated, mean loss %.4f%%, worst %.4f%%\n", rep.strategy.c_str(), rep.evaluated,
              rep.draws, 100.0 * rep.loss_mean, 100.0 * rep.loss_worst);
  return rep.evaluated > 0 ? kOk : kSolver;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed MPC over permutation-decoupled linear plants"};
  app.require_subcommand(1);
  Options o;
  int (*selected)(const Options&) = nullptr;

  auto add = [&](const char* name, const char* help, int (*fn)(const Options&)) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "problem description (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out-dir", o.out_dir, "directory for artifacts");
    sub->add_option("--strategy", o.strategy, "centralized | noiter | coop")
        ->check(CLI::IsMember({"centralized", "noiter", "coop"}));
    sub->add_option("--iters", o.iters, "cooperative iterations")->check(CLI::NonNegativeNumber);
    sub->add_option("--steps", o.steps, "closed-loop steps")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "random seed")->check(CLI::NonNegativeNumber);
    sub->add_option("--draws", o.draws, "Monte-Carlo draws")->check(CLI::PositiveNumber);
    sub->add_flag("--no-check", o.no_check, "run even when certification fails");
    sub->callback([fn, &selected] { selected = fn; });
  };
  add("synthesize", "terminal ingredients and certificates -> synthesis.json", cmd_synthesize);
  add("check", "print the certificates", cmd_check);
  add("transform", "permutation and transformed matrices -> transform.json", cmd_transform);
  add("simulate", "closed-loop run -> trace.csv, timing.csv", cmd_simulate);
  add("compare", "strategies at a shared state -> compare.csv", cmd_compare);
  add("montecarlo", "random initial states -> montecarlo.json", cmd_montecarlo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kParse;
  }
  try {
    return selected(o);
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
}
