#include "dcmpc/synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dcmpc/errors.hpp"

namespace dcmpc {

bool Certification::prop2_holds() const {
  return std::all_of(prop2.begin(), prop2.end(), [](const auto& c) { return c.holds; });
}

bool Certification::balls_invariant() const {
  return std::all_of(balls.begin(), balls.end(), [](const auto& b) { return b.ball_invariant; });
}

bool Certification::inputs_admissible() const {
  return std::all_of(balls.begin(), balls.end(), [](const auto& b) { return b.input_admissible; });
}

MatrixXd solve_discrete_lyapunov(const MatrixXd& F, const MatrixXd& W) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || W.rows() != n || W.cols() != n) {
    throw Error(ErrorKind::DimensionMismatch, "Lyapunov equation needs square F and W of equal size");
  }
  if (n == 0) return MatrixXd();
  const double rho = spectral_radius(F);
  if (rho >= 1.0 - 1e-10) {
    throw Error(ErrorKind::NotSchur, "spectral radius " + std::to_string(rho) + " is not below 1");
  }

  // (I - F^T (x) F^T) vec(P) = vec(W), column-major vec.
  const Eigen::Index nn = n * n;
  MatrixXd lhs = MatrixXd::Identity(nn, nn);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index k = 0; k < n; ++k) {
          lhs(i + n * j, k + n * l) -= F(l, j) * F(k, i);
        }
      }
    }
  }
  Eigen::FullPivLU<MatrixXd> lu(lhs);
  if (!lu.isInvertible()) throw Error(ErrorKind::SingularSystem, "Kronecker system is rank deficient");
  const MatrixXd w = symmetrize(W);
  const VectorXd p = lu.solve(Eigen::Map<const VectorXd>(w.data(), nn));
  return symmetrize(Eigen::Map<const MatrixXd>(p.data(), n, n));
}

LqrResult lqr_gain(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& R,
                   int max_iterations, double tolerance) {
  const Eigen::Index n = A.rows(), m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != m ||
      R.cols() != m) {
    throw Error(ErrorKind::DimensionMismatch, "LQR data sizes are inconsistent");
  }
  require_psd(Q, "Q_L");
  require_pd(R, "R_L");

  LqrResult out;
  if (n == 0) {
    out.K = MatrixXd::Zero(m, 0);
    out.P = MatrixXd::Zero(0, 0);
    return out;
  }
  const MatrixXd q = symmetrize(Q), r = symmetrize(R);
  MatrixXd P = q;
  for (int it = 1; it <= max_iterations; ++it) {
    const MatrixXd BtP = B.transpose() * P;
    const Eigen::LDLT<MatrixXd> gram(r + BtP * B);
    const MatrixXd next = symmetrize(q + A.transpose() * P * A - (BtP * A).transpose() * gram.solve(BtP * A));
    if (!next.allFinite()) throw Error(ErrorKind::RiccatiDiverged, "Riccati iterate is not finite");
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = next;
    // Relative convergence floor.
    if (diff < tolerance * std::max(1.0, P.cwiseAbs().maxCoeff())) {
      out.iterations = it;
      break;
    }
    if (it == max_iterations) {
      throw Error(ErrorKind::RiccatiDiverged, "no convergence within " + std::to_string(max_iterations) +
                                                  " iterations");
    }
  }
  const MatrixXd BtP = B.transpose() * P;
  out.K = -(r + BtP * B).ldlt().solve(BtP * A);
  out.P = P;
  const double rho = spectral_radius(A + B * out.K);
  if (rho >= 1.0) {
    throw Error(ErrorKind::NotStabilized, "closed-loop spectral radius " + std::to_string(rho));
  }
  return out;
}

BallCertificate verify_ball_terminal(const MatrixXd& AK, const MatrixXd& K, double radius,
                                     const VectorXd& u_max) {
  BallCertificate cert;
  cert.sigma_max = sigma_max(AK);
  cert.ball_invariant = cert.sigma_max <= 1.0 + 1e-10;
  cert.input_margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < K.rows(); ++k) {
    cert.input_margin = std::min(cert.input_margin, u_max(k) - K.row(k).norm() * radius);
  }
  cert.input_admissible = cert.input_margin >= -1e-10;
  return cert;
}

namespace {

MatrixXd decrease_matrix(const MatrixXd& Pbar, const MatrixXd& Phat, const MatrixXd& AK) {
  if (Pbar.rows() != Phat.rows() || Pbar.cols() != Phat.cols() || AK.rows() != Pbar.rows() ||
      AK.cols() != Pbar.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "Pbar, Phat and A_K must share one square size");
  }
  const MatrixXd delta = symmetrize(Pbar - Phat);
  return symmetrize(delta - AK.transpose() * delta * AK);
}

InequalityCheck psd_check(const MatrixXd& s, const MatrixXd& delta) {
  InequalityCheck c;
  c.margin = min_eigenvalue(s);
  const double scale = delta.size() == 0 ? 0.0 : sigma_max(symmetrize(delta));
  c.holds = c.margin >= -1e-9 * (1.0 + scale);
  return c;
}

}  // namespace

InequalityCheck check_prop1(const MatrixXd& Pbar, const MatrixXd& Phat, const MatrixXd& AK) {
  return psd_check(decrease_matrix(Pbar, Phat, AK), Pbar - Phat);
}

std::vector<InequalityCheck> check_prop2_blocks(const MatrixXd& Pbar, const MatrixXd& Phat,
                                                const std::vector<MatrixXd>& AK) {
  std::vector<InequalityCheck> out;
  Eigen::Index off = 0;
  for (const auto& a : AK) {
    const Eigen::Index ni = a.rows();
    if (a.cols() != ni || off + ni > Pbar.rows()) {
      throw Error(ErrorKind::DimensionMismatch, "closed-loop blocks do not partition Pbar");
    }
    const MatrixXd pb = Pbar.block(off, off, ni, ni), ph = Phat.block(off, off, ni, ni);
    out.push_back(psd_check(decrease_matrix(pb, ph, a), pb - ph));
    off += ni;
  }
  if (off != Pbar.rows()) throw Error(ErrorKind::DimensionMismatch, "closed-loop blocks do not cover Pbar");
  return out;
}

DominanceCheck check_corollary1(const MatrixXd& Pbar, const MatrixXd& Phat, const MatrixXd& AK) {
  const MatrixXd s = decrease_matrix(Pbar, Phat, AK);
  DominanceCheck c;
  c.slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < s.rows(); ++k) {
    const double off = s.row(k).cwiseAbs().sum() - std::abs(s(k, k));
    c.slack = std::min({c.slack, s(k, k) - off, s(k, k)});
  }
  if (s.rows() == 0) c.slack = 0.0;
  c.holds = c.slack >= 0.0;
  return c;
}

double admissible_radius(const MatrixXd& K, const VectorXd& u_max) {
  double r = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < K.rows(); ++k) {
    const double nk = K.row(k).norm();
    if (nk > 0.0) r = std::min(r, u_max(k) / nk);
  }
  return std::isfinite(r) ? r : 1.0;
}

TerminalIngredients synthesize_ingredients(const TransformedPlant& plant, const CostSpec& cost,
                                           const LqrWeights& lqr,
                                           const std::vector<VectorXd>& u_max,
                                           const std::vector<double>& radius,
                                           const std::optional<std::vector<MatrixXd>>& gains) {
  const int M = plant.agents();
  if (static_cast<int>(u_max.size()) != M || static_cast<int>(radius.size()) != M) {
    throw Error(ErrorKind::DimensionMismatch, "input bounds and radii need one entry per agent");
  }
  TerminalIngredients ing;
  for (int i = 0; i < M; ++i) {
    MatrixXd K;
    if (gains) {
      K = gains->at(i);
      if (K.rows() != plant.Btilde[i].cols() || K.cols() != plant.Abar[i].rows()) {
        throw Error(ErrorKind::DimensionMismatch, "gain K_" + std::to_string(i + 1) + " has wrong size");
      }
    } else {
      if (static_cast<int>(lqr.QL.size()) != M || static_cast<int>(lqr.RL.size()) != M) {
        throw Error(ErrorKind::DimensionMismatch, "LQR weights need one entry per agent");
      }
      K = lqr_gain(plant.Abar[i], plant.Btilde[i], lqr.QL[i], lqr.RL[i]).K;
    }
    ing.AK.push_back(plant.Abar[i] + plant.Btilde[i] * K);
    ing.K.push_back(std::move(K));
  }
  ing.ball_radius = radius;
  for (int i = 0; i < M; ++i) {
    ing.cert.balls.push_back(verify_ball_terminal(ing.AK[i], ing.K[i], radius[i], u_max[i]));
  }

  const MatrixXd qbar = transform_weight(cost.Q, cost.rho, plant.map);
  std::vector<MatrixXd> r;
  for (int i = 0; i < M; ++i) r.push_back(cost.rho[i] * symmetrize(cost.R[i]));
  const MatrixXd Kg = ing.global_K();
  const MatrixXd W = qbar + Kg.transpose() * block_diagonal(r) * Kg;
  ing.Phat = solve_discrete_lyapunov(ing.global_AK(), W);
  return ing;
}

void certify(TerminalIngredients& ing, const MatrixXd& Pbar) {
  const MatrixXd AK = ing.global_AK();
  ing.cert.prop1 = check_prop1(Pbar, ing.Phat, AK);
  ing.cert.prop2 = check_prop2_blocks(Pbar, ing.Phat, ing.AK);
  ing.cert.dd = check_corollary1(Pbar, ing.Phat, AK);
}

std::optional<MatrixXd> structured_lyapunov(const MatrixXd& A, const std::vector<int>& block_sizes) {
  const Eigen::Index n = A.rows();
  if (n == 0) return MatrixXd();
  auto project = [&](const MatrixXd& g) {
    MatrixXd out = keep_diagonal_blocks(symmetrize(g), block_sizes);
    out.diagonal().array() -= out.trace() / static_cast<double>(n);
    return out;
  };
  auto lyap_op = [&](const MatrixXd& p) { return symmetrize(p - A.transpose() * p * A); };

  // Start from the plant-wide Lyapunov solution restricted to the blocks.
  MatrixXd P = keep_diagonal_blocks(solve_discrete_lyapunov(A, MatrixXd::Identity(n, n)), block_sizes);
  P /= P.trace();

  // Smoothed minimum eigenvalue, -1/mu log sum exp(-mu lambda_k), ascended by
  // projected gradient with backtracking; mu is increased when progress stalls.
  double mu = 20.0 * static_cast<double>(n);
  auto smoothed = [&](const MatrixXd& p, MatrixXd* grad) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(lyap_op(p));
    const VectorXd& lam = es.eigenvalues();
    const double lmin = lam.minCoeff();
    const VectorXd e = (-mu * (lam.array() - lmin)).exp().matrix();
    const double s = e.sum();
    if (grad) {
      const MatrixXd G = es.eigenvectors() * (e / s).asDiagonal() * es.eigenvectors().transpose();
      *grad = project(G - A * G * A.transpose());
    }
    return std::pair{lmin - std::log(s) / mu, lmin};
  };

  MatrixXd best = P;
  double best_lmin = min_eigenvalue(lyap_op(P));
  double step = 1.0;
  int stall = 0;
  for (int it = 0; it < 20000 && mu < 1e5 * static_cast<double>(n); ++it) {
    MatrixXd g;
    const auto [val, lmin] = smoothed(P, &g);
    if (lmin > best_lmin) {
      best_lmin = lmin;
      best = P;
    }
    const double gg = g.squaredNorm();
    bool moved = false;
    while (step > 1e-16) {
      const MatrixXd cand = P + step * g;
      if (smoothed(cand, nullptr).first >= val + 1e-4 * step * gg) {
        P = cand;
        step *= 1.5;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    const double gain = moved ? smoothed(P, nullptr).first - val : 0.0;
    if (!moved || gain < 1e-12 * std::max(1.0, std::abs(val))) {
      if (++stall >= 3) {
        mu *= 2.0;
        stall = 0;
        step = 1.0;
      }
    } else {
      stall = 0;
    }
  }
  const double lmin = min_eigenvalue(lyap_op(best));
  if (lmin <= 0.0) return std::nullopt;
  return best;
}

namespace {

std::vector<double> alpha_grid() {
  std::vector<double> grid;
  for (double decade = 1.0; decade < 1e6; decade *= 10.0) {
    for (double m : {1.0, 1.5, 2.0, 3.0, 5.0}) grid.push_back(m * decade);
  }
  grid.push_back(1e6);
  return grid;
}

std::vector<int> subsystem_sizes(const PermutationMap& map) {
  std::vector<int> sizes;
  for (const auto& row : map.dims) {
    int s = 0;
    for (int d : row) s += d;
    sizes.push_back(s);
  }
  return sizes;
}

// Sweeps alpha over the grid with P_i = alpha * base_i / rho_i, where
// `base` = diag(rho_i P_i^0) in original coordinates.  A candidate is taken
// once its margin reaches `robust * ||Pbar - Phat||_2`.
std::optional<TerminalWeightSelection> sweep(const MatrixXd& base, const CostSpec& cost,
                                             const PermutationMap& map, const MatrixXd& Phat,
                                             const MatrixXd& AK, double robust = 0.0) {
  const auto blocks = original_blocks(map.congruence(base), cost.rho, map);
  for (double alpha : alpha_grid()) {
    std::vector<MatrixXd> P;
    bool pd = true;
    for (const auto& b : blocks) {
      P.push_back(alpha * symmetrize(b));
      const double lmin = min_eigenvalue(P.back());
      pd = pd && lmin > 0.0 && lmin >= 1e-12 * P.back().trace();
    }
    if (!pd) continue;
    const MatrixXd Pbar = transform_weight(P, cost.rho, map);
    const auto c = check_prop1(Pbar, Phat, AK);
    if (c.holds && c.margin >= robust * sigma_max(symmetrize(Pbar - Phat))) return TerminalWeightSelection{std::move(P), alpha, "", c};
  }
  return std::nullopt;
}

}  // namespace

TerminalWeightSelection select_terminal_weights(const CostSpec& cost, const TransformedPlant& plant,
                                                const TerminalIngredients& ing) {
  const auto& map = plant.map;
  const MatrixXd AK = ing.global_AK();
  if (ing.Phat.rows() != map.size()) throw Error(ErrorKind::DimensionMismatch, "Phat size");
  const auto sizes = subsystem_sizes(map);

  // First candidate: the subsystem blocks of Phat in original coordinates.
  const MatrixXd candidate = keep_diagonal_blocks(map.inverse_congruence(ing.Phat), sizes);
  if (auto sel = sweep(candidate, cost, map, ing.Phat, AK)) {
    sel->method = "lyapunov-blocks";
    return *sel;
  }

  // Otherwise a block-diagonal Lyapunov function of the closed loop in
  // original coordinates, scaled so its decrease dominates W = Phat - A_K^T Phat A_K.
  const MatrixXd AKorig = map.inverse_congruence(AK);
  const auto structured = structured_lyapunov(AKorig, sizes);
  if (!structured) {
    throw Error(ErrorKind::SelectionFailed, "no block-diagonal Lyapunov function found for A_K");
  }
  const MatrixXd L = symmetrize(*structured - AKorig.transpose() * *structured * AKorig);
  const MatrixXd Phat_orig = map.inverse_congruence(ing.Phat);
  const MatrixXd W = symmetrize(Phat_orig - AKorig.transpose() * Phat_orig * AKorig);
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(W, L, Eigen::EigenvaluesOnly);
  const double scale = std::max(ges.eigenvalues().maxCoeff(), 0.0);
  if (!(scale > 0.0) || !std::isfinite(scale)) {
    throw Error(ErrorKind::SelectionFailed, "degenerate decrease scaling");
  }
  if (auto sel = sweep(scale * *structured, cost, map, ing.Phat, AK, 1e-6)) {
    sel->method = "structured-lyapunov";
    return *sel;
  }
  throw Error(ErrorKind::SelectionFailed, "alpha sweep reached its cap without certification");
}

}  // namespace dcmpc
