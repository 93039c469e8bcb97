#pragma once

// Problem description files (JSON) and their assembly into a certified
// DistributedProblem.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dcmpc/controllers.hpp"
#include "dcmpc/synthesis.hpp"

namespace dcmpc {

struct SimulationParams {
  std::vector<VectorXd> x0;  // per subsystem, original coordinates; empty means draw from bounds
  std::uint64_t seed = 1;
  double lower = -8.0;
  double upper = 8.0;
  int steps = 60;
  StrategyKind strategy = StrategyKind::DistributedNoIter;
  int iterations = 1;
  std::vector<double> weights;
  int warmup_steps = 0;
  int draws = 200;
};

struct ProblemConfig {
  std::string name;
  SubsystemBlocks subsystems;
  std::vector<MatrixXd> Q;
  std::vector<MatrixXd> R;
  std::vector<MatrixXd> P;  // empty when "auto"
  std::vector<double> rho;
  int horizon = 1;
  std::vector<VectorXd> u_max;
  std::vector<double> radius;  // empty when "auto"
  LqrWeights lqr;
  std::optional<std::vector<MatrixXd>> gains;
  QpSettings solver;
  SimulationParams sim;

  bool auto_terminal_weights() const { return P.empty(); }
  bool auto_radius() const { return radius.empty(); }
};

/// Throws Error(Parse) naming the offending field.
ProblemConfig parse_config(const std::string& text);
ProblemConfig load_config(const std::filesystem::path& path);

/// Canonical JSON; parse_config(serialize_config(c)) reproduces c exactly.
std::string serialize_config(const ProblemConfig& config);

bool operator==(const ProblemConfig& a, const ProblemConfig& b);

/// FNV-1a of the canonical serialization, as 16 hex digits.
std::string config_hash(const ProblemConfig& config);

struct AssembledProblem {
  TransformedPlant plant;
  CostSpec cost;  // with the terminal weights in use
  TerminalIngredients ingredients;
  std::optional<TerminalWeightSelection> selection;  // set when P was "auto"
  DistributedProblem problem;

  bool certified() const;
};

/// Transform, terminal synthesis, P selection ("auto") and certification.
AssembledProblem assemble(const ProblemConfig& config);

/// The configured initial state in transformed coordinates.
VectorXd initial_state(const ProblemConfig& config, const AssembledProblem& assembled);

/// StrategyConfig built from the simulation section.
StrategyConfig strategy_from(const SimulationParams& sim);

}  // namespace dcmpc
