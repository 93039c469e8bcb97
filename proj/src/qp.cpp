#include "dcmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "dcmpc/errors.hpp"

namespace dcmpc {

std::string_view to_string(QpStatus status) {
  switch (status) {
    case QpStatus::Solved: return "Solved";
    case QpStatus::MaxIters: return "MaxIters";
    case QpStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

double CondensedQp::objective(const VectorXd& u) const {
  return 0.5 * u.dot(H * u) + g.dot(u) + constant;
}

CondensedQp build_condensed(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                            const MatrixXd& P, const MatrixXd& R, int horizon, const VectorXd& x0,
                            const VectorXd& lower, const VectorXd& upper,
                            const std::vector<TerminalBall>& terminal) {
  const Eigen::Index n = A.rows(), m = B.cols();
  if (horizon < 1) throw Error(ErrorKind::DimensionMismatch, "horizon must be at least 1");
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n || P.rows() != n ||
      P.cols() != n || R.rows() != m || R.cols() != m || x0.size() != n || lower.size() != m ||
      upper.size() != m) {
    throw Error(ErrorKind::DimensionMismatch, "condensed QP data sizes are inconsistent");
  }
  const Eigen::Index nu = m * horizon;

  CondensedQp qp;
  qp.Phi.reserve(horizon + 1);
  qp.Gamma.reserve(horizon + 1);
  qp.Phi.push_back(MatrixXd::Identity(n, n));
  qp.Gamma.push_back(MatrixXd::Zero(n, nu));
  for (int k = 1; k <= horizon; ++k) {
    qp.Phi.push_back(A * qp.Phi.back());
    MatrixXd G = A * qp.Gamma.back();
    G.middleCols((k - 1) * m, m) += B;
    qp.Gamma.push_back(std::move(G));
  }

  const MatrixXd q = symmetrize(Q), p = symmetrize(P), r = symmetrize(R);
  MatrixXd Ht = MatrixXd::Zero(nu, nu);
  VectorXd h = VectorXd::Zero(nu);
  double c = 0.0;
  for (int k = 0; k <= horizon; ++k) {
    const MatrixXd& W = k < horizon ? q : p;
    const VectorXd free = qp.Phi[k] * x0;
    const MatrixXd WG = W * qp.Gamma[k];
    Ht.noalias() += qp.Gamma[k].transpose() * WG;
    h.noalias() += WG.transpose() * free;
    c += free.dot(W * free);
  }
  for (int k = 0; k < horizon; ++k) Ht.block(k * m, k * m, m, m) += r;

  qp.H = symmetrize(2.0 * Ht);
  qp.g = 2.0 * h;
  qp.constant = c;
  qp.lower = lower.replicate(horizon, 1);
  qp.upper = upper.replicate(horizon, 1);
  if ((qp.lower.array() > qp.upper.array()).any()) {
    throw Error(ErrorKind::DimensionMismatch, "input lower bound exceeds upper bound");
  }

  const VectorXd xN_free = qp.Phi[horizon] * x0;
  for (const auto& ball : terminal) {
    if (ball.offset < 0 || ball.size < 0 || ball.offset + ball.size > n) {
      throw Error(ErrorKind::DimensionMismatch, "terminal ball slice out of range");
    }
    qp.balls.push_back({qp.Gamma[horizon].middleRows(ball.offset, ball.size),
                        xN_free.segment(ball.offset, ball.size), ball.radius});
  }
  return qp;
}

CondensedQp restrict_qp(const CondensedQp& qp, const std::vector<int>& free_idx,
                        const VectorXd& u_fixed) {
  const int n = qp.variables();
  std::vector<char> is_free(n, 0);
  for (int i : free_idx) is_free[i] = 1;
  std::vector<int> fixed_idx;
  for (int i = 0; i < n; ++i) {
    if (!is_free[i]) fixed_idx.push_back(i);
  }
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  const auto na = static_cast<Eigen::Index>(fixed_idx.size());
  VectorXd ua(na);
  for (Eigen::Index a = 0; a < na; ++a) ua(a) = u_fixed(fixed_idx[a]);

  CondensedQp out;
  out.H.resize(nf, nf);
  out.g.resize(nf);
  out.lower.resize(nf);
  out.upper.resize(nf);
  MatrixXd Hfa(nf, na);
  for (Eigen::Index r = 0; r < nf; ++r) {
    for (Eigen::Index c = 0; c < nf; ++c) out.H(r, c) = qp.H(free_idx[r], free_idx[c]);
    for (Eigen::Index c = 0; c < na; ++c) Hfa(r, c) = qp.H(free_idx[r], fixed_idx[c]);
    out.g(r) = qp.g(free_idx[r]);
    out.lower(r) = qp.lower(free_idx[r]);
    out.upper(r) = qp.upper(free_idx[r]);
  }
  out.g += Hfa * ua;
  double c = qp.constant;
  for (Eigen::Index a = 0; a < na; ++a) {
    c += qp.g(fixed_idx[a]) * ua(a);
    for (Eigen::Index b = 0; b < na; ++b) c += 0.5 * ua(a) * qp.H(fixed_idx[a], fixed_idx[b]) * ua(b);
  }
  out.constant = c;

  for (const auto& ball : qp.balls) {
    MatrixXd Ff(ball.F.rows(), nf);
    VectorXd f = ball.f;
    for (Eigen::Index r = 0; r < nf; ++r) Ff.col(r) = ball.F.col(free_idx[r]);
    for (Eigen::Index a = 0; a < na; ++a) f += ball.F.col(fixed_idx[a]) * ua(a);
    if (Ff.size() == 0 || Ff.cwiseAbs().maxCoeff() == 0.0) continue;
    out.balls.push_back({std::move(Ff), std::move(f), ball.radius});
  }
  return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double inf_norm(const VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Internal form with balls rescaled to unit operator norm; C = [I; F_1; ...].
struct Splitting {
  const CondensedQp& qp;
  int n = 0;
  int m = 0;
  MatrixXd C;
  std::vector<int> ball_offset;
  std::vector<double> ball_scale;
  std::vector<VectorXd> ball_center;  // -f_j / s_j
  std::vector<double> ball_radius;    // r_j / s_j

  explicit Splitting(const CondensedQp& q) : qp(q) {
    n = qp.variables();
    m = n;
    for (const auto& b : qp.balls) m += static_cast<int>(b.F.rows());
    C = MatrixXd::Zero(m, n);
    C.topRows(n).setIdentity();
    int off = n;
    for (const auto& b : qp.balls) {
      const double s = std::max(sigma_max(b.F), 1e-12);
      C.middleRows(off, b.F.rows()) = b.F / s;
      ball_offset.push_back(off);
      ball_scale.push_back(s);
      ball_center.push_back(-b.f / s);
      ball_radius.push_back(b.radius / s);
      off += static_cast<int>(b.F.rows());
    }
  }

  void project(VectorXd& z) const {
    z.head(n) = z.head(n).cwiseMax(qp.lower).cwiseMin(qp.upper);
    for (std::size_t j = 0; j < qp.balls.size(); ++j) {
      auto seg = z.segment(ball_offset[j], qp.balls[j].F.rows());
      VectorXd w = seg - ball_center[j];
      const double nw = w.norm();
      if (nw > ball_radius[j]) seg = ball_center[j] + w * (ball_radius[j] / nw);
    }
  }

  // sup_{z in Z} dy^T z; +inf when unbounded.
  double support(const VectorXd& dy) const {
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
      if (dy(k) > 0.0) s += std::isfinite(qp.upper(k)) ? qp.upper(k) * dy(k) : kInf;
      if (dy(k) < 0.0) s += std::isfinite(qp.lower(k)) ? qp.lower(k) * dy(k) : kInf;
    }
    for (std::size_t j = 0; j < qp.balls.size(); ++j) {
      const auto seg = dy.segment(ball_offset[j], qp.balls[j].F.rows());
      s += seg.dot(ball_center[j]) + ball_radius[j] * seg.norm();
    }
    return s;
  }

  std::pair<double, double> residuals(const VectorXd& x, const VectorXd& z, const VectorXd& y) const {
    const VectorXd Cx = C * x;
    return {inf_norm(Cx - z), inf_norm(qp.H * x + qp.g + C.transpose() * y)};
  }

  bool converged(const VectorXd& x, const VectorXd& z, const VectorXd& y, const QpSettings& s,
                 double* rp, double* rd) const {
    const VectorXd Cx = C * x;
    const VectorXd Hx = qp.H * x;
    const VectorXd Cty = C.transpose() * y;
    *rp = inf_norm(Cx - z);
    *rd = inf_norm(Hx + qp.g + Cty);
    const double ep = s.abs_tol + s.rel_tol * std::max(inf_norm(Cx), inf_norm(z));
    const double ed = s.abs_tol + s.rel_tol * std::max({inf_norm(Hx), inf_norm(Cty), inf_norm(qp.g)});
    return *rp <= ep && *rd <= ed;
  }
};

struct Polished {
  VectorXd x, z, y;
};

// Solves the equality-constrained problem on a guessed active set and keeps
// the result only if it satisfies the KKT conditions.  Multipliers of the
// guessed balls come from projected Newton ascent on the dual; a ball whose
// multiplier reaches zero drops out on its own.
std::optional<Polished> polish_on(const Splitting& sp, const std::vector<int>& bound,
                                  const std::vector<int>& active_balls, const VectorXd& y_guess) {
  const auto& qp = sp.qp;
  const int n = sp.n;
  std::vector<int> free_idx;
  VectorXd x = VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    if (bound[k] < 0) x(k) = qp.lower(k);
    else if (bound[k] > 0) x(k) = qp.upper(k);
    else free_idx.push_back(k);
  }
  const auto nf = static_cast<Eigen::Index>(free_idx.size());
  MatrixXd Hff(nf, nf);
  VectorXd c(nf);
  const VectorXd Hx_fixed = qp.H * x;
  for (Eigen::Index r = 0; r < nf; ++r) {
    for (Eigen::Index s = 0; s < nf; ++s) Hff(r, s) = qp.H(free_idx[r], free_idx[s]);
    c(r) = qp.g(free_idx[r]) + Hx_fixed(free_idx[r]);
  }

  const int nb = static_cast<int>(active_balls.size());
  std::vector<MatrixXd> Ff(nb);
  std::vector<VectorXd> d(nb);
  VectorXd mu = VectorXd::Zero(nb);
  for (int j = 0; j < nb; ++j) {
    const int b = active_balls[j];
    const auto& ball = qp.balls[b];
    Ff[j].resize(ball.F.rows(), nf);
    for (Eigen::Index r = 0; r < nf; ++r) Ff[j].col(r) = ball.F.col(free_idx[r]);
    d[j] = ball.F * x + ball.f;  // free entries of x are still zero
    const double yn = y_guess.segment(sp.ball_offset[b], ball.F.rows()).norm();
    mu(j) = yn / (2.0 * sp.ball_scale[b] * std::max(ball.radius, 1e-12));
  }

  VectorXd xf = VectorXd::Zero(nf);
  // Minimizer of the Lagrangian for fixed multipliers, and the dual value.
  auto inner = [&](const VectorXd& m, VectorXd& out, Eigen::LLT<MatrixXd>* fact) {
    MatrixXd K = Hff;
    VectorXd rhs = -c;
    for (int j = 0; j < nb; ++j) {
      K.noalias() += 2.0 * m(j) * Ff[j].transpose() * Ff[j];
      rhs.noalias() -= 2.0 * m(j) * Ff[j].transpose() * d[j];
    }
    Eigen::LLT<MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) return -kInf;
    out = llt.solve(rhs);
    double val = 0.5 * out.dot(Hff * out) + c.dot(out);
    for (int j = 0; j < nb; ++j) {
      val += m(j) * ((Ff[j] * out + d[j]).squaredNorm() - qp.balls[active_balls[j]].radius * qp.balls[active_balls[j]].radius);
    }
    if (fact) *fact = std::move(llt);
    return val;
  };

  if (nb > 0) {
    if (nf == 0) return std::nullopt;
    Eigen::LLT<MatrixXd> llt;
    double val = inner(mu, xf, &llt);
    if (!std::isfinite(val)) return std::nullopt;
    bool done = false;
    for (int it = 0; it < 100 && !done; ++it) {
      VectorXd grad(nb);
      MatrixXd V(nf, nb);
      for (int j = 0; j < nb; ++j) {
        const VectorXd e = Ff[j] * xf + d[j];
        const double r = qp.balls[active_balls[j]].radius;
        grad(j) = e.squaredNorm() - r * r;
        V.col(j) = 2.0 * Ff[j].transpose() * e;
      }
      done = true;
      for (int j = 0; j < nb; ++j) {
        const double r = qp.balls[active_balls[j]].radius;
        const double tol = 1e-13 * (1.0 + r * r);
        if (mu(j) > 0.0 ? std::abs(grad(j)) > tol : grad(j) > tol) done = false;
      }
      if (done) break;
      // Multipliers pinned at zero with a descent direction stay out of the step.
      std::vector<int> act;
      for (int j = 0; j < nb; ++j) {
        if (mu(j) > 0.0 || grad(j) > 0.0) act.push_back(j);
      }
      const MatrixXd KinvV = llt.solve(V);
      MatrixXd S(act.size(), act.size());
      VectorXd ga(act.size());
      for (std::size_t a = 0; a < act.size(); ++a) {
        ga(a) = grad(act[a]);
        for (std::size_t b = 0; b < act.size(); ++b) S(a, b) = V.col(act[a]).dot(KinvV.col(act[b]));
      }
      const VectorXd step = S.ldlt().solve(ga);
      double t = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
        VectorXd cand = mu;
        for (std::size_t a = 0; a < act.size(); ++a) cand(act[a]) = std::max(0.0, mu(act[a]) + t * step(a));
        VectorXd xc;
        Eigen::LLT<MatrixXd> lc;
        const double vc = inner(cand, xc, &lc);
        if (vc >= val - 1e-15 * (1.0 + std::abs(val))) {
          moved = (cand - mu).cwiseAbs().maxCoeff() > 0.0;
          mu = cand;
          xf = xc;
          val = vc;
          llt = std::move(lc);
          break;
        }
      }
      if (!moved) break;
    }
  } else if (nf > 0) {
    xf = Hff.ldlt().solve(-c);
  }
  for (Eigen::Index r = 0; r < nf; ++r) x(free_idx[r]) = xf(r);

  // Primal feasibility.
  const double scale = 1.0 + inf_norm(x);
  for (Eigen::Index r = 0; r < nf; ++r) {
    const int k = free_idx[r];
    if (x(k) < qp.lower(k) - 1e-12 * scale || x(k) > qp.upper(k) + 1e-12 * scale) return std::nullopt;
  }
  x = x.cwiseMax(qp.lower).cwiseMin(qp.upper);
  for (std::size_t j = 0; j < qp.balls.size(); ++j) {
    const auto& b = qp.balls[j];
    if ((b.F * x + b.f).norm() > b.radius * (1.0 + 1e-12) + 1e-14) return std::nullopt;
  }

  // Dual feasibility: multipliers of active bounds must push the right way.
  VectorXd grad = qp.H * x + qp.g;
  VectorXd y = VectorXd::Zero(sp.m);
  for (int j = 0; j < nb; ++j) {
    const int bi = active_balls[j];
    const auto& b = qp.balls[bi];
    const VectorXd yb = 2.0 * mu(j) * (b.F * x + b.f);
    grad += b.F.transpose() * yb;
    y.segment(sp.ball_offset[bi], b.F.rows()) = sp.ball_scale[bi] * yb;
  }
  const double gscale = 1.0 + inf_norm(qp.g) + inf_norm(qp.H * x);
  for (int k = 0; k < n; ++k) {
    if (bound[k] == 0 && std::abs(grad(k)) > 1e-9 * gscale) return std::nullopt;
    if (bound[k] < 0 && grad(k) < -1e-10 * gscale) return std::nullopt;
    if (bound[k] > 0 && grad(k) > 1e-10 * gscale) return std::nullopt;
    if (bound[k] != 0) y(k) = -grad(k);
  }
  return Polished{x, sp.C * x, y};
}

std::optional<Polished> polish(const Splitting& sp, const VectorXd& x, const VectorXd& z,
                               const VectorXd& y, const QpSettings& s) {
  const auto& qp = sp.qp;
  const int n = sp.n;
  const double ytol = std::max(s.abs_tol, 1e-10) * (1.0 + inf_norm(y));
  const double ztol = 1e-7 * (1.0 + inf_norm(z));

  // Two guesses for the active set: from the multipliers and from the primal point.
  std::vector<std::vector<int>> bound_guesses(2, std::vector<int>(n, 0));
  for (int k = 0; k < n; ++k) {
    if (y(k) < -ytol) bound_guesses[0][k] = -1;
    if (y(k) > ytol) bound_guesses[0][k] = 1;
    if (z(k) - qp.lower(k) <= ztol) bound_guesses[1][k] = -1;
    else if (qp.upper(k) - z(k) <= ztol) bound_guesses[1][k] = 1;
  }
  std::vector<int> balls;
  for (std::size_t j = 0; j < qp.balls.size(); ++j) {
    const auto& b = qp.balls[j];
    const double slack = b.radius - (b.F * x + b.f).norm();
    const double yj = y.segment(sp.ball_offset[j], b.F.rows()).norm();
    if (yj > ytol || slack <= 1e-6 * (1.0 + b.radius)) balls.push_back(static_cast<int>(j));
  }
  std::vector<std::vector<int>> ball_guesses{balls};
  if (!balls.empty()) ball_guesses.push_back({});

  for (const auto& bounds : bound_guesses) {
    for (const auto& bg : ball_guesses) {
      if (auto p = polish_on(sp, bounds, bg, y)) return p;
    }
  }
  return std::nullopt;
}

}  // namespace

QpSolution solve_qp(const CondensedQp& qp, const QpSettings& settings, const QpSolution* warm_start) {
  const Splitting sp(qp);
  const int n = sp.n, m = sp.m;
  if (qp.H.rows() != n || qp.H.cols() != n || qp.lower.size() != n || qp.upper.size() != n) {
    throw Error(ErrorKind::DimensionMismatch, "QP data sizes are inconsistent");
  }

  QpSolution sol;
  if (n == 0) {
    sol.u = VectorXd();
    sol.objective = qp.constant;
    sol.status = QpStatus::Solved;
    return sol;
  }

  VectorXd x = VectorXd::Zero(n), z = VectorXd::Zero(m), y = VectorXd::Zero(m);
  if (warm_start && warm_start->u.size() == n) {
    x = warm_start->u;
    if (warm_start->z.size() == m && warm_start->y.size() == m) {
      z = warm_start->z;
      y = warm_start->y;
    } else {
      z = sp.C * x;
      sp.project(z);
    }
  } else {
    z = sp.C * x;
    sp.project(z);
  }

  double rho = std::clamp(0.1 * qp.H.diagonal().mean(), 1e-6, 1e6);
  const MatrixXd CtC = sp.C.transpose() * sp.C;
  auto factor = [&](double r) {
    MatrixXd K = qp.H + settings.sigma * MatrixXd::Identity(n, n) + r * CtC;
    return Eigen::LLT<MatrixXd>(K);
  };
  Eigen::LLT<MatrixXd> kkt = factor(rho);
  if (kkt.info() != Eigen::Success) throw Error(ErrorKind::QpFailure, "Hessian is not positive definite");

  const double a = settings.relaxation;
  VectorXd y_prev = y;
  double rp = 0.0, rd = 0.0;
  sol.status = QpStatus::MaxIters;
  int it = 0;
  for (it = 1; it <= settings.max_iterations; ++it) {
    y_prev = y;
    const VectorXd rhs = settings.sigma * x - qp.g + sp.C.transpose() * (rho * z - y);
    const VectorXd xt = kkt.solve(rhs);
    const VectorXd zt = sp.C * xt;
    x = a * xt + (1.0 - a) * x;
    const VectorXd zr = a * zt + (1.0 - a) * z;
    VectorXd zn = zr + y / rho;
    sp.project(zn);
    y += rho * (zr - zn);
    z = std::move(zn);

    if (sp.converged(x, z, y, settings, &rp, &rd)) {
      sol.status = QpStatus::Solved;
      break;
    }
    if (it % settings.adapt_interval == 0) {
      const VectorXd dy = y - y_prev;
      const double ndy = inf_norm(dy);
      if (ndy > 0.0 && inf_norm(sp.C.transpose() * dy) <= settings.infeasibility_tol * ndy &&
          sp.support(dy) <= -settings.infeasibility_tol * ndy) {
        sol.status = QpStatus::Infeasible;
        break;
      }
      // Residual balancing.
      const VectorXd Cx = sp.C * x;
      const double pn = rp / std::max({inf_norm(Cx), inf_norm(z), 1e-12});
      const double dn = rd / std::max({inf_norm(qp.H * x), inf_norm(sp.C.transpose() * y),
                                       inf_norm(qp.g), 1e-12});
      const double ratio = std::sqrt(pn / std::max(dn, 1e-30));
      const double next = std::clamp(rho * ratio, 1e-6, 1e6);
      if (next > 5.0 * rho || next < 0.2 * rho) {
        rho = next;
        kkt = factor(rho);
      }
    }
  }
  sol.iterations = std::min(it, settings.max_iterations);

  if (settings.polish && sol.status != QpStatus::Infeasible) {
    if (auto p = polish(sp, x, z, y, settings)) {
      const auto [prp, prd] = sp.residuals(p->x, p->z, p->y);
      if (prd <= std::max(rd, settings.abs_tol) && prp <= std::max(rp, settings.abs_tol)) {
        x = p->x;
        z = p->z;
        y = p->y;
        rp = prp;
        rd = prd;
        sol.polished = true;
        sol.status = QpStatus::Solved;
      }
    }
  }

  sol.u = x.cwiseMax(qp.lower).cwiseMin(qp.upper);
  sol.z = z;
  sol.y = y;
  sol.primal_residual = rp;
  sol.dual_residual = rd;
  sol.objective = qp.objective(sol.u);
  return sol;
}

}  // namespace dcmpc
