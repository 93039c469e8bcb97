#pragma once

// Condensed finite-horizon QPs over stacked inputs with per-stage input
// boxes and Euclidean-ball constraints on blocks of the terminal state,
// solved by operator splitting (ADMM) with an active-set polish.

#include <string_view>
#include <vector>

#include "dcmpc/linalg.hpp"

namespace dcmpc {

/// ||F u + f||_2 <= radius.
struct BallConstraint {
  MatrixXd F;
  VectorXd f;
  double radius = 1.0;
};

/// A ball on the terminal state slice x(N)[offset, offset + size).
struct TerminalBall {
  int offset = 0;
  int size = 0;
  double radius = 1.0;
};

/// Objective 0.5 u^T H u + g^T u + constant, equal to the horizon cost.
/// Inputs are stacked time-major: u = [u(0); u(1); ...; u(N-1)].
struct CondensedQp {
  MatrixXd H;
  VectorXd g;
  double constant = 0.0;
  std::vector<MatrixXd> Phi;    // x(k) = Phi[k] x0 + Gamma[k] u, k = 0..N
  std::vector<MatrixXd> Gamma;
  VectorXd lower, upper;
  std::vector<BallConstraint> balls;

  int variables() const { return static_cast<int>(g.size()); }
  double objective(const VectorXd& u) const;
};

struct QpSettings {
  double abs_tol = 1e-8;
  double rel_tol = 1e-6;
  int max_iterations = 50000;
  double sigma = 1e-6;
  double relaxation = 1.6;
  int adapt_interval = 50;
  double infeasibility_tol = 1e-6;
  bool polish = true;
};

enum class QpStatus { Solved, MaxIters, Infeasible };

std::string_view to_string(QpStatus status);

struct QpSolution {
  VectorXd u;
  double objective = 0.0;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  QpStatus status = QpStatus::MaxIters;
  bool polished = false;
  // Splitting state, reusable as a warm start.
  VectorXd z, y;
};

/// Condensed QP of  sum_{k<N} x'Qx + u'Ru + x(N)'P x(N)  for x+ = A x + B u.
/// `lower`/`upper` are per-stage input bounds (length m), repeated over the horizon.
CondensedQp build_condensed(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                            const MatrixXd& P, const MatrixXd& R, int horizon, const VectorXd& x0,
                            const VectorXd& lower, const VectorXd& upper,
                            const std::vector<TerminalBall>& terminal = {});

QpSolution solve_qp(const CondensedQp& qp, const QpSettings& settings = {},
                    const QpSolution* warm_start = nullptr);

/// Restriction of `qp` to the variables in `free_idx`, holding the remaining
/// ones at their values in `u_fixed`.  Balls that involve no free variable
/// are dropped.
CondensedQp restrict_qp(const CondensedQp& qp, const std::vector<int>& free_idx,
                        const VectorXd& u_fixed);

}  // namespace dcmpc
