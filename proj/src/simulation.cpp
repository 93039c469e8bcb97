#include "dcmpc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <thread>

#include "dcmpc/errors.hpp"

namespace dcmpc {
namespace {

ControllerResult solve_with(const DistributedProblem& p, const VectorXd& x, const StrategyConfig& cfg,
                            const std::optional<InputSequenceSet>& previous) {
  switch (cfg.kind) {
    case StrategyKind::Centralized: return solve_centralized(p, x);
    case StrategyKind::DistributedNoIter: return solve_noiter(p, x);
    case StrategyKind::CooperativeIter: {
      std::optional<InputSequenceSet> warm;
      if (previous && cfg.warm_start == WarmStart::ShiftedPrevious) warm = shift_sequences(p, x, *previous);
      return solve_cooperative(p, x, cfg, warm);
    }
  }
  throw Error(ErrorKind::Parse, "unknown strategy");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

CostValue evaluate_cost(const DistributedProblem& p, const VectorXd& xbar0, const InputSequenceSet& s) {
  if (xbar0.size() != p.state_dim()) throw Error(ErrorKind::DimensionMismatch, "initial state size");
  const VectorXd u = stack_inputs(p, s);
  const int m = p.input_dim();
  CostValue c;
  VectorXd x = xbar0;
  for (int k = 0; k < p.horizon; ++k) {
    const auto uk = u.segment(k * m, m);
    c.gc += x.dot(p.cost.Qbar * x) + uk.dot(p.cost.Rglobal * uk);
    c.cc += x.dot(p.cost.Qtilde * x);
    x = p.A * x + p.B * uk;
  }
  c.gc += x.dot(p.cost.Pbar * x);
  c.cc += x.dot(p.cost.Ptilde * x);
  return c;
}

ClosedLoopTrace run_closed_loop(const DistributedProblem& p, const VectorXd& xbar0,
                                const std::vector<StrategySegment>& schedule, int steps,
                                const RunOptions& options) {
  if (schedule.empty()) throw Error(ErrorKind::Parse, "empty strategy schedule");
  if (steps < 1) throw Error(ErrorKind::DimensionMismatch, "at least one step is required");
  if (xbar0.size() != p.state_dim()) throw Error(ErrorKind::DimensionMismatch, "initial state size");

  ClosedLoopTrace trace;
  trace.strategy = strategy_label(schedule.front().cfg);
  for (std::size_t s = 1; s < schedule.size(); ++s) trace.strategy += "->" + strategy_label(schedule[s].cfg);

  VectorXd x = xbar0;
  std::optional<InputSequenceSet> previous;
  int consecutive = 0;
  for (int t = 0; t < steps; ++t) {
    const StrategyConfig* cfg = &schedule.front().cfg;
    for (const auto& seg : schedule) {
      if (seg.start <= t) cfg = &seg.cfg;
    }
    const ControllerResult res = solve_with(p, x, *cfg, previous);

    StepRecord rec;
    rec.t = t;
    rec.xbar = x;
    rec.cost = evaluate_cost(p, x, res.inputs);
    rec.iterations = res.stats.iterations;
    rec.millis = res.stats.millis;
    rec.status = res.stats.status;
    rec.strategy = cfg->kind;
    if (options.shadow_centralized) rec.centralized = evaluate_cost(p, x, solve_centralized(p, x).inputs);

    VectorXd u0(p.input_dim());
    for (int i = 0; i < p.agents(); ++i) {
      rec.u.push_back(res.inputs.u[i].col(0));
      u0.segment(p.input_offsets[i], rec.u.back().size()) = rec.u.back();
    }
    trace.accumulated_stage_cost += x.dot(p.cost.Qbar * x) + u0.dot(p.cost.Rglobal * u0);
    x = p.A * x + p.B * u0;
    previous = res.inputs;
    trace.steps.push_back(std::move(rec));

    if (res.stats.status != QpStatus::Solved) {
      ++trace.failures;
      if (++consecutive >= 3) {
        trace.aborted = true;
        break;
      }
    } else {
      consecutive = 0;
    }
  }
  trace.final_state = x;
  return trace;
}

ClosedLoopTrace run_closed_loop(const DistributedProblem& p, const VectorXd& xbar0,
                                const StrategyConfig& cfg, int steps, const RunOptions& options) {
  return run_closed_loop(p, xbar0, std::vector<StrategySegment>{{0, cfg}}, steps, options);
}

std::vector<VectorXd> replay_states(const DistributedProblem& p, const VectorXd& xbar0,
                                    const ClosedLoopTrace& trace) {
  std::vector<VectorXd> xs{xbar0};
  for (const auto& rec : trace.steps) {
    VectorXd u0(p.input_dim());
    for (int i = 0; i < p.agents(); ++i) u0.segment(p.input_offsets[i], rec.u[i].size()) = rec.u[i];
    xs.push_back(p.A * xs.back() + p.B * u0);
  }
  return xs;
}

std::string strategy_label(const StrategyConfig& cfg) {
  switch (cfg.kind) {
    case StrategyKind::Centralized: return "Centralized";
    case StrategyKind::DistributedNoIter: return "no iters";
    case StrategyKind::CooperativeIter:
      return std::to_string(cfg.iterations) + (cfg.iterations == 1 ? " iter" : " iters");
  }
  return "unknown";
}

ComparisonTable compare_strategies(const DistributedProblem& p, const VectorXd& xbar0,
                                   const std::vector<StrategyConfig>& strategies, int warmup_steps) {
  VectorXd x = xbar0;
  std::optional<InputSequenceSet> previous;
  for (int t = 0; t < warmup_steps; ++t) {
    auto res = solve_noiter(p, x);
    VectorXd u0(p.input_dim());
    for (int i = 0; i < p.agents(); ++i) u0.segment(p.input_offsets[i], res.inputs.u[i].rows()) = res.inputs.u[i].col(0);
    x = p.A * x + p.B * u0;
    previous = std::move(res.inputs);
  }

  ComparisonTable table;
  table.state = x;
  const auto central = solve_centralized(p, x);
  const CostValue ref = evaluate_cost(p, x, central.inputs);
  auto row = [&](const std::string& label, const CostValue& c, double ms) {
    ComparisonRow r;
    r.label = label;
    r.gc = c.gc;
    r.cc = c.cc;
    r.gc_loss = ref.gc != 0.0 ? (c.gc - ref.gc) / std::abs(ref.gc) : 0.0;
    r.cc_loss = ref.cc != 0.0 ? (c.cc - ref.cc) / std::abs(ref.cc) : 0.0;
    r.millis = ms;
    return r;
  };
  table.rows.push_back(row("Centralized", ref, central.stats.millis));
  for (const auto& cfg : strategies) {
    if (cfg.kind == StrategyKind::Centralized) continue;
    const auto res = solve_with(p, x, cfg, previous);
    table.rows.push_back(row(strategy_label(cfg), evaluate_cost(p, x, res.inputs), res.stats.millis));
  }
  return table;
}

MonteCarloReport monte_carlo(const DistributedProblem& p, int draws, double lo, double hi,
                             const StrategyConfig& cfg, std::uint64_t seed, int threads) {
  if (draws < 1) throw Error(ErrorKind::DimensionMismatch, "at least one draw is required");
  const int n = p.state_dim();
  UniformSource rng(seed);
  std::vector<VectorXd> initial(draws, VectorXd(n));
  for (auto& x : initial) {
    for (int k = 0; k < n; ++k) x(k) = lo + (hi - lo) * rng.next();
  }

  MonteCarloReport rep;
  rep.draws = draws;
  rep.seed = seed;
  rep.strategy = strategy_label(cfg);
  rep.per_draw_loss.assign(draws, std::numeric_limits<double>::quiet_NaN());

  auto evaluate = [&](int d) {
    const VectorXd xbar = p.plant.map.transform(initial[d]);
    const auto central = solve_centralized(p, xbar);
    const auto other = solve_with(p, xbar, cfg, std::nullopt);
    if (central.stats.status != QpStatus::Solved || other.stats.status != QpStatus::Solved) return;
    const double gc_c = evaluate_cost(p, xbar, central.inputs).gc;
    const double gc_s = evaluate_cost(p, xbar, other.inputs).gc;
    rep.per_draw_loss[d] = gc_c != 0.0 ? (gc_s - gc_c) / std::abs(gc_c) : 0.0;
  };

  const int workers = std::max(1, std::min(threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency()), draws));
  if (workers == 1) {
    for (int d = 0; d < draws; ++d) evaluate(d);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (int d = w; d < draws; d += workers) evaluate(d);
      });
    }
    for (auto& t : pool) t.join();
  }

  double sum = 0.0;
  rep.loss_worst = -std::numeric_limits<double>::infinity();
  for (double l : rep.per_draw_loss) {
    if (std::isnan(l)) {
      ++rep.excluded;
      continue;
    }
    ++rep.evaluated;
    sum += l;
    rep.loss_worst = std::max(rep.loss_worst, l);
  }
  if (rep.evaluated > 0) {
    rep.loss_mean = sum / rep.evaluated;
  } else {
    rep.loss_worst = 0.0;
  }
  return rep;
}

TimingSummary summarize_timing(const ClosedLoopTrace& trace) {
  TimingSummary s;
  if (trace.steps.empty()) return s;
  double sum = 0.0;
  for (const auto& rec : trace.steps) {
    s.worst_ms = std::max(s.worst_ms, rec.millis);
    sum += rec.millis;
  }
  s.average_ms = sum / static_cast<double>(trace.steps.size());
  return s;
}

void write_trace_csv(std::ostream& os, const DistributedProblem& p, const ClosedLoopTrace& trace,
                     bool with_timing) {
  const bool shadow = !trace.steps.empty() && trace.steps.front().centralized.has_value();
  os << "t";
  for (int k = 0; k < p.state_dim(); ++k) os << ",xbar_" << k;
  for (int i = 0; i < p.agents(); ++i) {
    const int mi = p.input_offsets[i + 1] - p.input_offsets[i];
    if (mi == 1) {
      os << ",u_agent" << i + 1;
    } else {
      for (int c = 0; c < mi; ++c) os << ",u_agent" << i + 1 << "_" << c;
    }
  }
  os << ",GC,CC,iters,millis";
  if (shadow) os << ",GC_centralized,CC_centralized";
  os << "\n";
  for (const auto& rec : trace.steps) {
    os << rec.t;
    for (int k = 0; k < rec.xbar.size(); ++k) os << "," << fmt(rec.xbar(k));
    for (const auto& u : rec.u) {
      for (int c = 0; c < u.size(); ++c) os << "," << fmt(u(c));
    }
    os << "," << fmt(rec.cost.gc) << "," << fmt(rec.cost.cc) << "," << rec.iterations << ","
       << (with_timing ? fmt(rec.millis) : "0");
    if (shadow) os << "," << fmt(rec.centralized->gc) << "," << fmt(rec.centralized->cc);
    os << "\n";
  }
}

void write_comparison_csv(std::ostream& os, const ComparisonTable& table) {
  os << "Method,GC,GC loss,CC,CC loss,millis\n";
  for (const auto& r : table.rows) {
    os << r.label << "," << fmt(r.gc) << "," << fmt(r.gc_loss) << "," << fmt(r.cc) << ","
       << fmt(r.cc_loss) << "," << fmt(r.millis) << "\n";
  }
}

}  // namespace dcmpc
