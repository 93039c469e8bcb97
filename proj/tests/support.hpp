#pragma once

// Independent reference computations and random instance generators shared
// by the unit tests and the acceptance runner.  Nothing here calls the
// solver or synthesis code it is used to check.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "dcmpc/config.hpp"
#include "dcmpc/errors.hpp"
#include "dcmpc/plant_model.hpp"
#include "dcmpc/synthesis.hpp"

namespace dcmpc::testing {

inline std::string config_path(const std::string& name) { return std::string(DCMPC_CONFIG_DIR) + "/" + name; }

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int k = 0; k < cols; ++k) m(i, k) = uniform(rng, -scale, scale);
  }
  return m;
}

inline MatrixXd random_spd(std::mt19937_64& rng, int n, double floor = 0.1) {
  const MatrixXd g = random_matrix(rng, n, n);
  return g.transpose() * g + floor * MatrixXd::Identity(n, n);
}

/// Scales a random matrix to the requested spectral radius.
inline MatrixXd random_with_radius(std::mt19937_64& rng, int n, double radius) {
  if (n == 0) return MatrixXd(0, 0);
  MatrixXd a = random_matrix(rng, n, n);
  const double r = a.eigenvalues().cwiseAbs().maxCoeff();
  return r > 1e-12 ? MatrixXd(a * (radius / r)) : MatrixXd(radius * MatrixXd::Identity(n, n));
}

inline DimsTable random_dims(std::mt19937_64& rng, int M, int lo, int hi) {
  DimsTable d(M, std::vector<int>(M));
  for (auto& row : d) {
    for (int& x : row) x = uniform_int(rng, lo, hi);
  }
  return d;
}

/// Hand-built permutation oracle: position of original entry (i, j, c) in
/// the transformed ordering, where transformed blocks are grouped by j.
inline std::vector<int> expected_to_original(const DimsTable& dims) {
  const int M = static_cast<int>(dims.size());
  std::vector<std::vector<int>> start(M, std::vector<int>(M));
  int off = 0;
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      start[i][j] = off;
      off += dims[i][j];
    }
  }
  std::vector<int> out;
  for (int j = 0; j < M; ++j) {
    for (int i = 0; i < M; ++i) {
      for (int c = 0; c < dims[i][j]; ++c) out.push_back(start[i][j] + c);
    }
  }
  return out;
}

/// P = sum_k (F^T)^k W F^k by fixed-point iteration.
inline MatrixXd lyapunov_by_iteration(const MatrixXd& F, const MatrixXd& W, double tol = 1e-13,
                                      int max_iter = 1000000) {
  MatrixXd P = W;
  for (int k = 0; k < max_iter; ++k) {
    MatrixXd next = F.transpose() * P * F + W;
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (diff <= tol * std::max(1.0, P.cwiseAbs().maxCoeff())) break;
  }
  return P;
}

/// Sum of x'Qx + u'Ru over k < N plus x(N)'P x(N) along x+ = Ax + Bu.
inline double simulated_cost(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q, const MatrixXd& P,
                             const MatrixXd& R, const VectorXd& x0, const VectorXd& u_stack, int N) {
  const int m = static_cast<int>(B.cols());
  VectorXd x = x0;
  double c = 0.0;
  for (int k = 0; k < N; ++k) {
    const VectorXd u = u_stack.segment(k * m, m);
    c += x.dot(Q * x) + u.dot(R * u);
    x = A * x + B * u;
  }
  return c + x.dot(P * x);
}

/// Exact minimizer of 0.5 u'Hu + g'u over lo <= u <= hi by enumerating
/// every free/lower/upper pattern and keeping the KKT point.
inline VectorXd brute_force_box_qp(const MatrixXd& H, const VectorXd& g, const VectorXd& lo, const VectorXd& hi) {
  const int n = static_cast<int>(g.size());
  std::vector<int> state(n, 0);  // 0 free, 1 lower, 2 upper
  VectorXd best;
  double best_obj = std::numeric_limits<double>::infinity();
  while (true) {
    std::vector<int> freei, fixed;
    VectorXd u = VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
      if (state[k] == 0) {
        freei.push_back(k);
      } else {
        fixed.push_back(k);
        u(k) = state[k] == 1 ? lo(k) : hi(k);
      }
    }
    const int nf = static_cast<int>(freei.size());
    bool ok = true;
    if (nf > 0) {
      MatrixXd Hff(nf, nf);
      VectorXd rhs(nf);
      for (int a = 0; a < nf; ++a) {
        rhs(a) = -g(freei[a]);
        for (int k : fixed) rhs(a) -= H(freei[a], k) * u(k);
        for (int b = 0; b < nf; ++b) Hff(a, b) = H(freei[a], freei[b]);
      }
      const VectorXd uf = Hff.llt().solve(rhs);
      for (int a = 0; a < nf; ++a) {
        u(freei[a]) = uf(a);
        ok = ok && uf(a) >= lo(freei[a]) - 1e-12 && uf(a) <= hi(freei[a]) + 1e-12;
      }
    }
    if (ok) {
      const VectorXd grad = H * u + g;
      for (int k : fixed) {
        const double scale = 1e-9 * (1.0 + std::abs(grad(k)));
        ok = ok && (state[k] == 1 ? grad(k) >= -scale : grad(k) <= scale);
      }
    }
    if (ok) {
      const double obj = 0.5 * u.dot(H * u) + g.dot(u);
      if (obj < best_obj) {
        best_obj = obj;
        best = u;
      }
    }
    int k = 0;
    while (k < n && state[k] == 2) state[k++] = 0;
    if (k == n) break;
    ++state[k];
  }
  return best;
}

/// Random block plant (m_i = 1) with input boxes, LQR weights and cost
/// data; terminal radius and weights left on "auto".
inline ProblemConfig random_config(std::mt19937_64& rng, int M, int max_nij, int horizon, bool coupled = true) {
  ProblemConfig c;
  c.name = "random";
  auto& s = c.subsystems;
  s.M = M;
  s.dims = random_dims(rng, M, 1, max_nij);
  s.input_dims.assign(M, 1);
  s.A.assign(M, {});
  s.B.assign(M, {});
  for (int i = 0; i < M; ++i) {
    for (int j = 0; j < M; ++j) {
      const int n = s.dims[i][j];
      s.A[i].push_back(random_with_radius(rng, n, uniform(rng, 0.3, 1.15)));
      s.B[i].push_back(random_matrix(rng, n, 1));
    }
  }
  for (int i = 0; i < M; ++i) {
    int ni = 0;
    for (int d : s.dims[i]) ni += d;
    MatrixXd q = random_spd(rng, ni, 0.5);
    if (!coupled) q = keep_diagonal_blocks(q, s.dims[i]);
    c.Q.push_back(q);
    c.R.push_back(MatrixXd::Constant(1, 1, uniform(rng, 0.2, 2.0)));
    c.rho.push_back(uniform(rng, 0.5, 2.0));
  }
  c.horizon = horizon;
  for (int i = 0; i < M; ++i) {
    int nbar = 0;
    for (int r = 0; r < M; ++r) nbar += s.dims[r][i];
    c.u_max.push_back(VectorXd::Constant(1, uniform(rng, 2.0, 5.0)));
    c.lqr.QL.push_back(MatrixXd::Identity(nbar, nbar));
    c.lqr.RL.push_back(MatrixXd::Constant(1, 1, 0.5));
  }
  c.sim.steps = 30;
  return c;
}

/// First random plant at or after `seed` that admits a structured terminal
/// weight; the rest have no block-diagonal Lyapunov certificate at all.
inline AssembledProblem certified_random_problem(std::uint64_t& seed, int M, int max_nij, int horizon,
                                                 bool coupled = true) {
  for (;; ++seed) {
    std::mt19937_64 rng(seed);
    try {
      auto a = assemble(random_config(rng, M, max_nij, horizon, coupled));
      if (a.certified()) return a;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SelectionFailed) throw;
    }
  }
}

}  // namespace dcmpc::testing
