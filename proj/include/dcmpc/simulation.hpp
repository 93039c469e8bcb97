#pragma once

// Closed-loop simulation over the transformed plant, global/coupled cost
// accounting, strategy comparison at a shared state and Monte-Carlo loss
// studies.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dcmpc/controllers.hpp"

namespace dcmpc {

struct CostValue {
  double gc = 0.0;  // global cost with Qbar, Pbar, R
  double cc = 0.0;  // coupled part: hollow Qtilde, Ptilde, no input term
  double decoupled() const { return gc - cc; }
};

CostValue evaluate_cost(const DistributedProblem& p, const VectorXd& xbar0, const InputSequenceSet& s);

struct StepRecord {
  int t = 0;
  VectorXd xbar;                // state at t, before the input is applied
  std::vector<VectorXd> u;      // first input of every agent
  CostValue cost;               // of the open-loop sequence computed at t
  std::optional<CostValue> centralized;  // shadow centralized solve at the same state
  int iterations = 0;
  double millis = 0.0;
  QpStatus status = QpStatus::Solved;
  StrategyKind strategy = StrategyKind::DistributedNoIter;
};

struct ClosedLoopTrace {
  std::vector<StepRecord> steps;
  VectorXd final_state;
  std::string strategy;
  std::uint64_t seed = 0;
  std::string config_hash;
  int failures = 0;
  bool aborted = false;
  double accumulated_stage_cost = 0.0;  // realized sum of x'Qbar x + u'Ru along the run
};

/// Strategy `cfg` is used from step `start` on.
struct StrategySegment {
  int start = 0;
  StrategyConfig cfg;
};

struct RunOptions {
  bool shadow_centralized = false;
};

ClosedLoopTrace run_closed_loop(const DistributedProblem& p, const VectorXd& xbar0,
                                const std::vector<StrategySegment>& schedule, int steps,
                                const RunOptions& options = {});

ClosedLoopTrace run_closed_loop(const DistributedProblem& p, const VectorXd& xbar0,
                                const StrategyConfig& cfg, int steps, const RunOptions& options = {});

/// Re-simulates the logged first inputs; returns states at t = 0..steps.
std::vector<VectorXd> replay_states(const DistributedProblem& p, const VectorXd& xbar0,
                                    const ClosedLoopTrace& trace);

struct ComparisonRow {
  std::string label;
  double gc = 0.0;
  double gc_loss = 0.0;  // relative to centralized
  double cc = 0.0;
  double cc_loss = 0.0;  // relative to centralized coupled cost
  double millis = 0.0;
};

struct ComparisonTable {
  VectorXd state;  // shared state at which every strategy is evaluated
  std::vector<ComparisonRow> rows;
};

/// Runs `warmup_steps` of the no-iteration strategy from xbar0, then evaluates
/// every strategy once at the reached state.  Cooperative rows warm start from
/// the shifted last no-iteration sequence.  The centralized row comes first.
ComparisonTable compare_strategies(const DistributedProblem& p, const VectorXd& xbar0,
                                   const std::vector<StrategyConfig>& strategies, int warmup_steps);

std::string strategy_label(const StrategyConfig& cfg);

struct MonteCarloReport {
  int draws = 0;
  int evaluated = 0;
  int excluded = 0;
  double loss_mean = 0.0;
  double loss_worst = 0.0;
  std::vector<double> per_draw_loss;  // NaN for excluded draws
  std::uint64_t seed = 0;
  std::string strategy;
};

/// Uniform initial states in [lo, hi]^n (original coordinates), single-instant
/// GC loss of `cfg` against the centralized solution.
MonteCarloReport monte_carlo(const DistributedProblem& p, int draws, double lo, double hi,
                             const StrategyConfig& cfg, std::uint64_t seed, int threads = 0);

/// Uniform doubles in [0, 1): top 53 bits of std::mt19937_64, whose output
/// sequence is fixed by the standard (unlike the library distributions).
class UniformSource {
 public:
  explicit UniformSource(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct TimingSummary {
  double worst_ms = 0.0;
  double average_ms = 0.0;
};

TimingSummary summarize_timing(const ClosedLoopTrace& trace);

void write_trace_csv(std::ostream& os, const DistributedProblem& p, const ClosedLoopTrace& trace,
                     bool with_timing = true);
void write_comparison_csv(std::ostream& os, const ComparisonTable& table);

}  // namespace dcmpc
