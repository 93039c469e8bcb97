#pragma once

// Structured (JSON) artifacts: synthesis report, transform dump and the
// Monte-Carlo loss report.

#include <string>

#include "dcmpc/config.hpp"
#include "dcmpc/simulation.hpp"

namespace dcmpc {

std::string synthesis_report(const ProblemConfig& config, const AssembledProblem& assembled);

/// T, Abar_i, Btilde_i, Qbar, Pbar, Qtilde_a, Ptilde_a and round-trip residuals.
std::string transform_report(const ProblemConfig& config, const AssembledProblem& assembled);

std::string monte_carlo_report(const MonteCarloReport& report, const std::string& config_hash);

std::string timing_csv(const TimingSummary& timing, const std::string& strategy);

}  // namespace dcmpc
