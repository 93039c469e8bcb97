#pragma once

// The three ways of computing the plant inputs over the transformed problem:
// one centralized QP, M independent block QPs (no communication within a
// step), and cooperative iterations with convex-combination averaging.

#include <optional>
#include <string_view>
#include <vector>

#include "dcmpc/plant_model.hpp"
#include "dcmpc/qp.hpp"

namespace dcmpc {

/// Transformed plant, transformed weights, constraints and terminal gains.
struct DistributedProblem {
  TransformedPlant plant;
  TransformedCost cost;
  int horizon = 1;
  std::vector<VectorXd> u_max;  // symmetric box per agent: |u_i(k)| <= u_max
  std::vector<double> radius;   // terminal ball per agent
  std::vector<MatrixXd> K;      // terminal controller per agent
  QpSettings qp;

  MatrixXd A, B;  // diag(Abar_i), [Bbar_1 ... Bbar_M]
  std::vector<int> state_offsets;
  std::vector<int> input_offsets;

  int agents() const { return plant.agents(); }
  int state_dim() const { return static_cast<int>(A.rows()); }
  int input_dim() const { return static_cast<int>(B.cols()); }
};

DistributedProblem make_problem(TransformedPlant plant, TransformedCost cost, int horizon,
                                std::vector<VectorXd> u_max, std::vector<double> radius,
                                std::vector<MatrixXd> K, QpSettings qp = {});

enum class StrategyKind { Centralized, DistributedNoIter, CooperativeIter };

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);

enum class WarmStart { Zero, ShiftedPrevious };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::DistributedNoIter;
  int iterations = 1;
  std::vector<double> weights;  // empty means 1/M each
  WarmStart warm_start = WarmStart::ShiftedPrevious;
};

/// u[i] is m_i x N.
struct InputSequenceSet {
  std::vector<MatrixXd> u;
};

struct SolveStats {
  QpStatus status = QpStatus::Solved;
  int iterations = 0;   // cooperative iterations, or total splitting iterations
  double millis = 0.0;  // per-instant compute time (worst agent for distributed)
};

struct ControllerResult {
  InputSequenceSet inputs;
  SolveStats stats;
  std::vector<double> cost_history;  // GC per cooperative iterate, starting at the warm start
};

/// Time-major stacking u = [u(0); ...; u(N-1)], u(k) = [u_1(k); ...; u_M(k)].
VectorXd stack_inputs(const DistributedProblem& p, const InputSequenceSet& s);
InputSequenceSet unstack_inputs(const DistributedProblem& p, const VectorXd& u);

/// Indices of agent i's entries in the stacked vector.
std::vector<int> agent_indices(const DistributedProblem& p, int agent);

/// Plant-wide condensed QP with weights Qbar, Pbar and every agent's ball.
CondensedQp centralized_qp(const DistributedProblem& p, const VectorXd& xbar0);

ControllerResult solve_centralized(const DistributedProblem& p, const VectorXd& xbar0);

struct LocalResult {
  MatrixXd u;  // m_i x N
  QpSolution qp;
  double millis = 0.0;
};

/// Agent i's block problem; reads only agent-i data and xbar_i0.
LocalResult solve_local_noiter(const DistributedProblem& p, int agent, const VectorXd& xbar_i0);

/// All agents' block problems; time is the worst agent's.
ControllerResult solve_noiter(const DistributedProblem& p, const VectorXd& xbar0);

/// Shifts every sequence one step and appends the terminal move K_i xbar_i(N),
/// predicted from xbar0 (the state the shifted sequence starts from); clipped to the box.
InputSequenceSet shift_sequences(const DistributedProblem& p, const VectorXd& xbar0,
                                 const InputSequenceSet& previous);

/// Cooperative iterations from `warm` (or the no-iteration solution when absent).
ControllerResult solve_cooperative(const DistributedProblem& p, const VectorXd& xbar0,
                                   const StrategyConfig& cfg,
                                   const std::optional<InputSequenceSet>& warm = std::nullopt);

/// Same problem with the hollow coupling removed: Qbar -> Qa, Pbar -> Pa.
DistributedProblem build_separable_problem(const DistributedProblem& p);

}  // namespace dcmpc
