#include "dcmpc/synthesis.hpp"

#include <gtest/gtest.h>

#include <functional>

#include "dcmpc/errors.hpp"
#include "support.hpp"

namespace dcmpc {
namespace {

using testing::config_path;

MatrixXd scalar(double v) { return MatrixXd::Constant(1, 1, v); }

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no Error thrown";
  return ErrorKind::Parse;
}

GTEST_TEST(Lyapunov, ScalarClosedForm) {
  EXPECT_NEAR(solve_discrete_lyapunov(scalar(0.5), scalar(0.75))(0, 0), 1.0, 1e-15);
}

GTEST_TEST(Lyapunov, ZeroDynamicsReturnsTheWeight) {
  MatrixXd W(2, 2);
  W << 2, 0.5, 0.5, 1;
  EXPECT_EQ(solve_discrete_lyapunov(MatrixXd::Zero(2, 2), W), W);
}

GTEST_TEST(Lyapunov, MatchesFixedPointIteration) {
  MatrixXd F(2, 2);
  F << 0.5, 0.1, 0, 0.4;
  const MatrixXd W = MatrixXd::Identity(2, 2);
  const MatrixXd P = solve_discrete_lyapunov(F, W);
  EXPECT_LE((P - testing::lyapunov_by_iteration(F, W)).cwiseAbs().maxCoeff(), 1e-12);
}

GTEST_TEST(Lyapunov, ResidualOnRandomSchurMatrices) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = testing::uniform_int(rng, 1, 6);
    const MatrixXd F = testing::random_with_radius(rng, n, testing::uniform(rng, 0.1, 0.95));
    const MatrixXd W = testing::random_spd(rng, n);
    const MatrixXd P = solve_discrete_lyapunov(F, W);
    const double residual = norm_inf(F.transpose() * P * F + W - P);
    EXPECT_LE(residual, 1e-8 * (1.0 + norm_inf(P)));
    EXPECT_LE((P - testing::lyapunov_by_iteration(F, W)).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + norm_inf(P)));
  }
}

GTEST_TEST(Lyapunov, RejectsUnstableDynamics) {
  EXPECT_EQ(kind_of([] { solve_discrete_lyapunov(scalar(1.0), scalar(1.0)); }), ErrorKind::NotSchur);
  EXPECT_EQ(kind_of([] { solve_discrete_lyapunov(MatrixXd::Identity(2, 2), MatrixXd::Identity(3, 3)); }),
            ErrorKind::DimensionMismatch);
}

GTEST_TEST(Lqr, DeadbeatPlantNeedsNoFeedback) {
  const auto r = lqr_gain(scalar(0.0), scalar(1.0), scalar(3.0), scalar(1.0));
  EXPECT_NEAR(r.K(0, 0), 0.0, 1e-15);
  EXPECT_NEAR(r.P(0, 0), 3.0, 1e-15);
}

GTEST_TEST(Lqr, GoldenRatio) {
  // p^2 - p - 1 = 0 for a = b = q = r = 1.
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  const auto r = lqr_gain(scalar(1.0), scalar(1.0), scalar(1.0), scalar(1.0));
  EXPECT_NEAR(r.P(0, 0), phi, 1e-9);
  EXPECT_NEAR(r.K(0, 0), -phi / (1.0 + phi), 1e-9);
}

GTEST_TEST(Lqr, RandomClosedLoopsAreSchur) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = testing::uniform_int(rng, 1, 5), m = testing::uniform_int(rng, 1, 2);
    const MatrixXd A = testing::random_with_radius(rng, n, testing::uniform(rng, 0.5, 1.5));
    const MatrixXd B = testing::random_matrix(rng, n, m);
    const auto r = lqr_gain(A, B, MatrixXd::Identity(n, n), MatrixXd::Identity(m, m));
    EXPECT_LT(spectral_radius(A + B * r.K), 1.0 - 1e-8);
    // The Riccati solution is the closed-loop Lyapunov solution for Q + K'RK.
    const MatrixXd AK = A + B * r.K;
    const MatrixXd W = MatrixXd::Identity(n, n) + r.K.transpose() * r.K;
    EXPECT_LE((testing::lyapunov_by_iteration(AK, W) - r.P).cwiseAbs().maxCoeff(), 1e-7 * (1 + norm_inf(r.P)));
  }
}

GTEST_TEST(Lqr, UncontrollableUnstableModeFails) {
  const auto k = kind_of([] { lqr_gain(scalar(2.0), scalar(0.0), scalar(1.0), scalar(1.0)); });
  EXPECT_TRUE(k == ErrorKind::RiccatiDiverged || k == ErrorKind::NotStabilized);
}

GTEST_TEST(Ball, ContractiveClosedLoop) {
  const MatrixXd AK = 0.5 * MatrixXd::Identity(2, 2);
  MatrixXd K(1, 2);
  K << 1, 0;
  const auto c = verify_ball_terminal(AK, K, 1.0, VectorXd::Constant(1, 4.0));
  EXPECT_TRUE(c.ball_invariant);
  EXPECT_TRUE(c.input_admissible);
  EXPECT_NEAR(c.sigma_max, 0.5, 1e-15);
  EXPECT_NEAR(c.input_margin, 3.0, 1e-15);
}

GTEST_TEST(Ball, ExpansionBreaksInvariance) {
  MatrixXd AK(2, 2);
  AK << 1.2, 0, 0, 0.1;
  const auto c = verify_ball_terminal(AK, MatrixXd::Zero(1, 2), 1.0, VectorXd::Constant(1, 4.0));
  EXPECT_FALSE(c.ball_invariant);
  EXPECT_NEAR(c.sigma_max, 1.2, 1e-14);
}

GTEST_TEST(Ball, AdmissibleRadiusIsTight) {
  MatrixXd K(2, 3);
  K << 3, 4, 0, 0, 1, 0;
  VectorXd u(2);
  u << 10, 1;
  const double r = admissible_radius(K, u);
  EXPECT_DOUBLE_EQ(r, 1.0);
  EXPECT_TRUE(verify_ball_terminal(MatrixXd::Zero(3, 3), K, r, u).input_admissible);
  EXPECT_FALSE(verify_ball_terminal(MatrixXd::Zero(3, 3), K, 1.01 * r, u).input_admissible);
}

GTEST_TEST(Prop1, EqualWeightsHoldWithZeroMargin) {
  const MatrixXd AK = 0.3 * MatrixXd::Identity(3, 3);
  const MatrixXd P = 2.0 * MatrixXd::Identity(3, 3);
  const auto c = check_prop1(P, P, AK);
  EXPECT_TRUE(c.holds);
  EXPECT_EQ(c.margin, 0.0);
}

GTEST_TEST(Prop1, ZeroClosedLoopReducesToOrdering) {
  const MatrixXd Phat = MatrixXd::Identity(2, 2);
  MatrixXd Pbar(2, 2);
  Pbar << 2, 0, 0, 0.5;
  const auto c = check_prop1(Pbar, Phat, MatrixXd::Zero(2, 2));
  EXPECT_FALSE(c.holds);
  EXPECT_NEAR(c.margin, -0.5, 1e-15);
}

GTEST_TEST(Prop1, IdentityGapNeedsNonExpansion) {
  std::mt19937_64 rng(4);
  const MatrixXd Phat = testing::random_spd(rng, 3);
  const MatrixXd Pbar = Phat + MatrixXd::Identity(3, 3);
  MatrixXd AK = testing::random_matrix(rng, 3, 3);
  const double s = AK.jacobiSvd().singularValues()(0);
  EXPECT_TRUE(check_prop1(Pbar, Phat, AK * (0.9 / s)).holds);
  EXPECT_FALSE(check_prop1(Pbar, Phat, AK * (1.1 / s)).holds);
}

GTEST_TEST(Prop2, BlockMarginsFollowFromProp1) {
  std::mt19937_64 rng(8);
  int prop1_cases = 0, block_failures = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<MatrixXd> AK;
    std::vector<int> sizes;
    for (int i = 0; i < 3; ++i) {
      sizes.push_back(testing::uniform_int(rng, 1, 2));
      AK.push_back(testing::random_with_radius(rng, sizes.back(), testing::uniform(rng, 0.1, 0.9)));
    }
    const MatrixXd A = block_diagonal(AK);
    const int n = static_cast<int>(A.rows());
    const MatrixXd Phat = testing::random_spd(rng, n);
    // Either a certified gap (Lyapunov solution of a PSD right side) or a random one.
    const MatrixXd delta = trial % 2 == 0 ? testing::lyapunov_by_iteration(A, testing::random_spd(rng, n, 0.0))
                                          : MatrixXd(testing::random_spd(rng, n) - testing::random_spd(rng, n));
    const MatrixXd Pbar = Phat + delta;
    const auto p1 = check_prop1(Pbar, Phat, A);
    const auto p2 = check_prop2_blocks(Pbar, Phat, AK);
    bool blocks_ok = true;
    for (const auto& b : p2) blocks_ok = blocks_ok && b.margin >= -1e-9;
    if (p1.holds) {
      ++prop1_cases;
      EXPECT_TRUE(blocks_ok);
    }
    if (!blocks_ok) {
      ++block_failures;
      EXPECT_FALSE(p1.holds);
    }
  }
  EXPECT_GT(prop1_cases, 50);
  EXPECT_GT(block_failures, 10);
}

GTEST_TEST(Prop2, EqualBlocksHaveZeroMargin) {
  const std::vector<MatrixXd> AK = {0.5 * MatrixXd::Identity(2, 2), scalar(0.2)};
  std::mt19937_64 rng(2);
  const MatrixXd Phat = testing::random_spd(rng, 3);
  MatrixXd Pbar = Phat;
  Pbar(2, 2) += 1.0;
  const auto b = check_prop2_blocks(Pbar, Phat, AK);
  EXPECT_EQ(b[0].margin, 0.0);
  EXPECT_NEAR(b[1].margin, 1.0 - 0.04, 1e-15);
}

GTEST_TEST(Corollary1, DiagonalDecreaseIsDominant) {
  const MatrixXd Phat = MatrixXd::Identity(2, 2);
  MatrixXd S(2, 2);
  S << 1, 0, 0, 3;
  EXPECT_TRUE(check_corollary1(Phat + S, Phat, MatrixXd::Zero(2, 2)).holds);
  S << 1, 2, 2, 1;
  const auto c = check_corollary1(Phat + S, Phat, MatrixXd::Zero(2, 2));
  EXPECT_FALSE(c.holds);
  EXPECT_NEAR(c.slack, -1.0, 1e-15);
}

GTEST_TEST(Corollary1, DominanceImpliesProp1) {
  std::mt19937_64 rng(12);
  int dominant = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = testing::uniform_int(rng, 2, 6);
    const MatrixXd A = testing::random_with_radius(rng, n, testing::uniform(rng, 0.1, 0.9));
    MatrixXd S = testing::random_matrix(rng, n, n, 0.3);
    S = symmetrize(S);
    S.diagonal() = S.cwiseAbs().rowwise().sum() + VectorXd::Constant(n, testing::uniform(rng, -0.5, 0.5));
    const MatrixXd delta = testing::lyapunov_by_iteration(A, S);
    const MatrixXd Phat = testing::random_spd(rng, n);
    const auto dd = check_corollary1(Phat + delta, Phat, A);
    if (dd.holds) {
      ++dominant;
      EXPECT_GE(check_prop1(Phat + delta, Phat, A).margin, -1e-9);
    }
  }
  EXPECT_GT(dominant, 20);
}

GTEST_TEST(StructuredLyapunov, FindsABlockCertificate) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<int> sizes = {2, 1, 2};
    MatrixXd A = testing::random_matrix(rng, 5, 5);
    A *= 0.9 / sigma_max(A);
    const auto P = structured_lyapunov(A, sizes);
    ASSERT_TRUE(P.has_value());
    EXPECT_NEAR(P->trace(), 1.0, 1e-9);
    EXPECT_EQ(keep_diagonal_blocks(*P, sizes), *P);
    const MatrixXd L = *P - A.transpose() * *P * A;
    EXPECT_GT(symmetric_eigenvalues(0.5 * (L + L.transpose())).minCoeff(), 0.0);
  }
}

class Flagship : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    config_ = new ProblemConfig(load_config(config_path("academic3.json")));
    assembled_ = new AssembledProblem(assemble(*config_));
  }
  static void TearDownTestSuite() {
    delete assembled_;
    delete config_;
  }
  static ProblemConfig* config_;
  static AssembledProblem* assembled_;
};

ProblemConfig* Flagship::config_ = nullptr;
AssembledProblem* Flagship::assembled_ = nullptr;

TEST_F(Flagship, LqrStabilizesEveryVirtualSubsystem) {
  const auto& ing = assembled_->ingredients;
  for (std::size_t i = 0; i < ing.AK.size(); ++i) {
    EXPECT_LT(spectral_radius(ing.AK[i]), 1.0);
  }
}

TEST_F(Flagship, LyapunovResidual) {
  const auto& ing = assembled_->ingredients;
  const auto& cost = assembled_->problem.cost;
  const MatrixXd AK = ing.global_AK(), K = ing.global_K();
  const MatrixXd W = cost.Qbar + K.transpose() * cost.Rglobal * K;
  const MatrixXd& P = ing.Phat;
  EXPECT_LE(norm_inf(AK.transpose() * P * AK + W - P), 1e-8 * (1.0 + norm_inf(P)));
  EXPECT_LE(norm_inf(testing::lyapunov_by_iteration(AK, W) - P), 1e-8 * (1.0 + norm_inf(P)));
}

TEST_F(Flagship, DiagonalBlocksOfTheLyapunovEquation) {
  const auto& ing = assembled_->ingredients;
  const auto& cost = assembled_->problem.cost;
  const auto off = block_offsets(assembled_->plant.map.bar_dims);
  for (int i = 0; i < 3; ++i) {
    const int o = off[i], n = off[i + 1] - o;
    const MatrixXd Pii = ing.Phat.block(o, o, n, n);
    const MatrixXd Qii = cost.Qbar.block(o, o, n, n);
    const MatrixXd Rii = cost.Rglobal.block(i, i, 1, 1);
    const MatrixXd lhs = ing.AK[i].transpose() * Pii * ing.AK[i] + Qii + ing.K[i].transpose() * Rii * ing.K[i];
    EXPECT_LE(norm_inf(lhs - Pii), 1e-8 * (1.0 + norm_inf(Pii)));

    // With prop1 certified the terminal weight decreases blockwise too.
    const MatrixXd Pbar = cost.Pbar.block(o, o, n, n);
    const MatrixXd dec = ing.AK[i].transpose() * Pbar * ing.AK[i] + Qii + ing.K[i].transpose() * Rii * ing.K[i];
    EXPECT_GE(min_eigenvalue(Pbar - dec), -1e-8);
  }
}

TEST_F(Flagship, SelectedWeightsSatisfyTheDecreaseInequality) {
  ASSERT_TRUE(assembled_->selection.has_value());
  const auto& sel = *assembled_->selection;
  EXPECT_GE(sel.alpha, 1.0);
  for (const auto& P : sel.P) EXPECT_GT(min_eigenvalue(P), 0.0);
  // Independent recomputation from the original-coordinate weights.
  const auto& map = assembled_->plant.map;
  std::vector<MatrixXd> scaled;
  for (std::size_t i = 0; i < sel.P.size(); ++i) scaled.push_back(config_->rho[i] * sel.P[i]);
  const MatrixXd Pbar = map.T.transpose() * block_diagonal(scaled) * map.T;
  const MatrixXd AK = assembled_->ingredients.global_AK();
  const MatrixXd delta = Pbar - assembled_->ingredients.Phat;
  const MatrixXd S = delta - AK.transpose() * delta * AK;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()));
  EXPECT_GE(es.eigenvalues().minCoeff(), 0.0);
  EXPECT_TRUE(assembled_->ingredients.cert.prop1.holds);
  EXPECT_TRUE(assembled_->ingredients.cert.prop2_holds());
}

// The unit ball is input admissible but not invariant under these LQR gains:
// each closed loop stretches some direction of the ball.
TEST_F(Flagship, UnitBallIsAdmissibleButNotInvariant) {
  const auto& ing = assembled_->ingredients;
  for (std::size_t i = 0; i < ing.AK.size(); ++i) {
    Eigen::JacobiSVD<MatrixXd> svd(ing.AK[i], Eigen::ComputeFullV);
    const VectorXd v = svd.matrixV().col(0);
    EXPECT_NEAR(v.norm(), 1.0, 1e-12);
    EXPECT_GT((ing.AK[i] * v).norm(), 1.03);
    EXPECT_FALSE(ing.cert.balls[i].ball_invariant);
    EXPECT_TRUE(ing.cert.balls[i].input_admissible);
    EXPECT_LE(ing.K[i].norm(), 4.0);
  }
}

GTEST_TEST(Selection, DecoupledPlantKeepsPhat) {
  // Every subsystem driven only by its own input: Phat is already block diagonal.
  std::mt19937_64 rng(17);
  ProblemConfig c = testing::random_config(rng, 3, 2, 4);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      c.subsystems.dims[i][j] = 0;
      c.subsystems.A[i][j] = MatrixXd(0, 0);
      c.subsystems.B[i][j] = MatrixXd(0, 1);
    }
    const int n = c.subsystems.dims[i][i];
    c.Q[i] = testing::random_spd(rng, n);
    c.lqr.QL[i] = MatrixXd::Identity(n, n);
  }
  const auto a = assemble(c);
  ASSERT_TRUE(a.selection.has_value());
  EXPECT_EQ(a.selection->alpha, 1.0);
  EXPECT_EQ(a.selection->method, "lyapunov-blocks");
  EXPECT_LE(norm_inf(a.problem.cost.Pbar - a.ingredients.Phat), 1e-9 * norm_inf(a.ingredients.Phat));
}

GTEST_TEST(Selection, ZeroGainOnUnstableBlockIsRejected) {
  std::mt19937_64 rng(19);
  ProblemConfig c = testing::random_config(rng, 2, 1, 3);
  c.subsystems.A[0][0] = scalar(1.5);
  std::vector<MatrixXd> gains;
  for (int i = 0; i < 2; ++i) gains.push_back(MatrixXd::Zero(1, 2));
  c.gains = gains;
  EXPECT_EQ(kind_of([&] { assemble(c); }), ErrorKind::NotSchur);
}

}  // namespace
}  // namespace dcmpc
