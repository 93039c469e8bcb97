#pragma once

// Terminal ingredients: local LQR gains, the plant-wide Lyapunov solution
// Phat of  A_K^T Phat A_K + Qbar + K^T R K = Phat,  ball terminal sets, and
// the certificates that tie the terminal weights P_i to Phat.

#include <optional>
#include <string>
#include <vector>

#include "dcmpc/plant_model.hpp"

namespace dcmpc {

struct LqrWeights {
  std::vector<MatrixXd> QL;
  std::vector<MatrixXd> RL;
};

struct LqrResult {
  MatrixXd K;  // u = K x
  MatrixXd P;
  int iterations = 0;
};

struct InequalityCheck {
  bool holds = false;
  double margin = 0.0;  // minimum eigenvalue of the tested matrix
};

struct DominanceCheck {
  bool holds = false;
  double slack = 0.0;  // min_k (S_kk - sum_{l != k} |S_kl|), also capped by min_k S_kk
};

struct BallCertificate {
  bool ball_invariant = false;
  bool input_admissible = false;
  double sigma_max = 0.0;
  double input_margin = 0.0;  // min_k (u_max[k] - ||K_k|| r)
};

struct Certification {
  InequalityCheck prop1;
  std::vector<InequalityCheck> prop2;
  DominanceCheck dd;
  std::vector<BallCertificate> balls;

  bool prop2_holds() const;
  bool balls_invariant() const;
  bool inputs_admissible() const;
};

struct TerminalIngredients {
  std::vector<MatrixXd> K;
  std::vector<MatrixXd> AK;
  MatrixXd Phat;
  std::vector<double> ball_radius;
  Certification cert;

  MatrixXd global_K() const { return block_diagonal(K); }
  MatrixXd global_AK() const { return block_diagonal(AK); }
};

struct TerminalWeightSelection {
  std::vector<MatrixXd> P;  // original-coordinate terminal weights P_i
  double alpha = 1.0;
  std::string method;  // "lyapunov-blocks" or "structured-lyapunov"
  InequalityCheck prop1;
};

/// Solves F^T P F + W = P by dense vectorization.
MatrixXd solve_discrete_lyapunov(const MatrixXd& F, const MatrixXd& W);

/// Infinite-horizon discrete LQR via Riccati fixed-point iteration.
/// Convention u = K x with K = -(R + B^T P B)^-1 B^T P A.
LqrResult lqr_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                   int max_iterations = 200000, double tolerance = 1e-11);

BallCertificate verify_ball_terminal(const MatrixXd& AK, const MatrixXd& K, double radius,
                                     const VectorXd& u_max);

/// Tests A_K^T (Pbar - Phat) A_K <= Pbar - Phat.
InequalityCheck check_prop1(const MatrixXd& Pbar, const MatrixXd& Phat, const MatrixXd& AK);

/// The same test restricted to every diagonal block.
std::vector<InequalityCheck> check_prop2_blocks(const MatrixXd& Pbar, const MatrixXd& Phat,
                                                const std::vector<MatrixXd>& AK);

/// Diagonal dominance (with nonnegative diagonal) of Delta - A_K^T Delta A_K.
DominanceCheck check_corollary1(const MatrixXd& Pbar, const MatrixXd& Phat, const MatrixXd& AK);

/// Largest radius for which the ball is input admissible under K.
double admissible_radius(const MatrixXd& K, const VectorXd& u_max);

/// Everything except the terminal weights: gains, closed loops, Phat, ball
/// certificates.  `gains` overrides the LQR design when given.
TerminalIngredients synthesize_ingredients(const TransformedPlant& plant, const CostSpec& cost,
                                           const LqrWeights& lqr,
                                           const std::vector<VectorXd>& u_max,
                                           const std::vector<double>& radius,
                                           const std::optional<std::vector<MatrixXd>>& gains = {});

/// Picks SPD P_i such that the induced Pbar satisfies the plant-wide
/// decrease inequality.  Throws SelectionFailed if no scaling works.
TerminalWeightSelection select_terminal_weights(const CostSpec& cost, const TransformedPlant& plant,
                                                const TerminalIngredients& ingredients);

/// Fills prop1/prop2/dd in `ingredients.cert` for the given Pbar.
void certify(TerminalIngredients& ingredients, const MatrixXd& Pbar);

/// Finds block-diagonal (subsystem blocks, original coordinates) P with
/// P - A^T P A > 0 and trace(P) = 1.  Returns nullopt on failure.
std::optional<MatrixXd> structured_lyapunov(const MatrixXd& A, const std::vector<int>& block_sizes);

}  // namespace dcmpc
