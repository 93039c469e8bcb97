#include "dcmpc/controllers.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "dcmpc/errors.hpp"

namespace dcmpc {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

QpStatus worse(QpStatus a, QpStatus b) {
  if (a == QpStatus::Infeasible || b == QpStatus::Infeasible) return QpStatus::Infeasible;
  if (a == QpStatus::MaxIters || b == QpStatus::MaxIters) return QpStatus::MaxIters;
  return QpStatus::Solved;
}

MatrixXd block(const MatrixXd& x, const DistributedProblem& p, int i) {
  const int o = p.state_offsets[i], n = p.state_offsets[i + 1] - o;
  return x.block(o, o, n, n);
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Centralized: return "centralized";
    case StrategyKind::DistributedNoIter: return "noiter";
    case StrategyKind::CooperativeIter: return "coop";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  if (name == "centralized") return StrategyKind::Centralized;
  if (name == "noiter") return StrategyKind::DistributedNoIter;
  if (name == "coop") return StrategyKind::CooperativeIter;
  throw Error(ErrorKind::Parse, "unknown strategy '" + std::string(name) + "'");
}

DistributedProblem make_problem(TransformedPlant plant, TransformedCost cost, int horizon,
                                std::vector<VectorXd> u_max, std::vector<double> radius,
                                std::vector<MatrixXd> K, QpSettings qp) {
  const int M = plant.agents();
  if (horizon < 1) throw Error(ErrorKind::DimensionMismatch, "horizon must be at least 1");
  if (static_cast<int>(u_max.size()) != M || static_cast<int>(radius.size()) != M ||
      static_cast<int>(K.size()) != M) {
    throw Error(ErrorKind::DimensionMismatch, "bounds, radii and gains need one entry per agent");
  }
  DistributedProblem p;
  p.A = plant.global_A();
  p.B = plant.global_B();
  p.state_offsets = block_offsets(plant.map.bar_dims);
  p.input_offsets = block_offsets(plant.input_dims());
  const int n = static_cast<int>(p.A.rows());
  if (cost.Qbar.rows() != n || cost.Pbar.rows() != n || cost.Rglobal.rows() != p.B.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "transformed cost does not match the plant");
  }
  for (int i = 0; i < M; ++i) {
    if (u_max[i].size() != plant.Btilde[i].cols() || K[i].rows() != plant.Btilde[i].cols() ||
        K[i].cols() != plant.Abar[i].rows()) {
      throw Error(ErrorKind::DimensionMismatch, "agent " + std::to_string(i + 1) + " data sizes");
    }
  }
  p.plant = std::move(plant);
  p.cost = std::move(cost);
  p.horizon = horizon;
  p.u_max = std::move(u_max);
  p.radius = std::move(radius);
  p.K = std::move(K);
  p.qp = qp;
  return p;
}

VectorXd stack_inputs(const DistributedProblem& p, const InputSequenceSet& s) {
  const int m = p.input_dim(), N = p.horizon;
  VectorXd u(m * N);
  for (int i = 0; i < p.agents(); ++i) {
    const int o = p.input_offsets[i], mi = p.input_offsets[i + 1] - o;
    if (s.u.at(i).rows() != mi || s.u[i].cols() != N) {
      throw Error(ErrorKind::DimensionMismatch, "input sequence of agent " + std::to_string(i + 1));
    }
    for (int k = 0; k < N; ++k) u.segment(k * m + o, mi) = s.u[i].col(k);
  }
  return u;
}

InputSequenceSet unstack_inputs(const DistributedProblem& p, const VectorXd& u) {
  const int m = p.input_dim(), N = p.horizon;
  InputSequenceSet s;
  for (int i = 0; i < p.agents(); ++i) {
    const int o = p.input_offsets[i], mi = p.input_offsets[i + 1] - o;
    MatrixXd ui(mi, N);
    for (int k = 0; k < N; ++k) ui.col(k) = u.segment(k * m + o, mi);
    s.u.push_back(std::move(ui));
  }
  return s;
}

std::vector<int> agent_indices(const DistributedProblem& p, int agent) {
  const int m = p.input_dim();
  const int o = p.input_offsets[agent], mi = p.input_offsets[agent + 1] - o;
  std::vector<int> idx;
  for (int k = 0; k < p.horizon; ++k) {
    for (int c = 0; c < mi; ++c) idx.push_back(k * m + o + c);
  }
  return idx;
}

namespace {

VectorXd stacked_bound(const DistributedProblem& p) {
  VectorXd b(p.input_dim());
  for (int i = 0; i < p.agents(); ++i) b.segment(p.input_offsets[i], p.u_max[i].size()) = p.u_max[i];
  return b;
}

std::vector<TerminalBall> all_balls(const DistributedProblem& p) {
  std::vector<TerminalBall> balls;
  for (int i = 0; i < p.agents(); ++i) {
    balls.push_back({p.state_offsets[i], p.state_offsets[i + 1] - p.state_offsets[i], p.radius[i]});
  }
  return balls;
}

}  // namespace

CondensedQp centralized_qp(const DistributedProblem& p, const VectorXd& xbar0) {
  if (xbar0.size() != p.state_dim()) throw Error(ErrorKind::DimensionMismatch, "initial state size");
  const VectorXd b = stacked_bound(p);
  return build_condensed(p.A, p.B, p.cost.Qbar, p.cost.Pbar, p.cost.Rglobal, p.horizon, xbar0, -b, b,
                         all_balls(p));
}

ControllerResult solve_centralized(const DistributedProblem& p, const VectorXd& xbar0) {
  const auto start = Clock::now();
  const CondensedQp qp = centralized_qp(p, xbar0);
  const QpSolution sol = solve_qp(qp, p.qp);
  ControllerResult out;
  out.stats.millis = elapsed_ms(start);
  out.stats.status = sol.status;
  out.stats.iterations = sol.iterations;
  out.inputs = unstack_inputs(p, sol.u);
  return out;
}

LocalResult solve_local_noiter(const DistributedProblem& p, int agent, const VectorXd& xbar_i0) {
  const auto start = Clock::now();
  const int ni = p.plant.map.bar_dims.at(agent);
  if (xbar_i0.size() != ni) throw Error(ErrorKind::DimensionMismatch, "local initial state size");
  const MatrixXd Qii = block(p.cost.Qbar, p, agent);
  const MatrixXd Pii = block(p.cost.Pbar, p, agent);
  const int mo = p.input_offsets[agent], mi = p.input_offsets[agent + 1] - mo;
  const MatrixXd Rii = p.cost.Rglobal.block(mo, mo, mi, mi);
  const CondensedQp qp =
      build_condensed(p.plant.Abar[agent], p.plant.Btilde[agent], Qii, Pii, Rii, p.horizon, xbar_i0,
                      -p.u_max[agent], p.u_max[agent], {{0, ni, p.radius[agent]}});
  LocalResult out;
  out.qp = solve_qp(qp, p.qp);
  out.u = Eigen::Map<const MatrixXd>(out.qp.u.data(), mi, p.horizon);
  out.millis = elapsed_ms(start);
  return out;
}

ControllerResult solve_noiter(const DistributedProblem& p, const VectorXd& xbar0) {
  if (xbar0.size() != p.state_dim()) throw Error(ErrorKind::DimensionMismatch, "initial state size");
  ControllerResult out;
  for (int i = 0; i < p.agents(); ++i) {
    const int o = p.state_offsets[i];
    auto local = solve_local_noiter(p, i, xbar0.segment(o, p.state_offsets[i + 1] - o));
    out.inputs.u.push_back(std::move(local.u));
    out.stats.status = worse(out.stats.status, local.qp.status);
    out.stats.iterations += local.qp.iterations;
    out.stats.millis = std::max(out.stats.millis, local.millis);
  }
  return out;
}

InputSequenceSet shift_sequences(const DistributedProblem& p, const VectorXd& xbar0,
                                 const InputSequenceSet& previous) {
  const int N = p.horizon;
  InputSequenceSet out;
  for (int i = 0; i < p.agents(); ++i) {
    const int o = p.state_offsets[i], ni = p.state_offsets[i + 1] - o;
    const MatrixXd& prev = previous.u.at(i);
    VectorXd x = xbar0.segment(o, ni);
    MatrixXd next(prev.rows(), N);
    for (int k = 0; k + 1 < N; ++k) {
      next.col(k) = prev.col(k + 1);
      x = p.plant.Abar[i] * x + p.plant.Btilde[i] * next.col(k);
    }
    next.col(N - 1) = (p.K[i] * x).cwiseMax(-p.u_max[i]).cwiseMin(p.u_max[i]);
    out.u.push_back(std::move(next));
  }
  return out;
}

ControllerResult solve_cooperative(const DistributedProblem& p, const VectorXd& xbar0,
                                   const StrategyConfig& cfg,
                                   const std::optional<InputSequenceSet>& warm) {
  const int M = p.agents();
  std::vector<double> w = cfg.weights;
  if (w.empty()) w.assign(M, 1.0 / M);
  if (static_cast<int>(w.size()) != M) throw Error(ErrorKind::DimensionMismatch, "one weight per agent");
  const double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  if (std::any_of(w.begin(), w.end(), [](double v) { return !(v > 0.0); }) ||
      std::abs(wsum - 1.0) > 1e-12) {
    throw Error(ErrorKind::DimensionMismatch, "cooperative weights must be positive and sum to 1");
  }

  ControllerResult out;
  double worst_ms = 0.0;
  VectorXd u;
  if (warm) {
    u = stack_inputs(p, *warm);
  } else if (cfg.warm_start == WarmStart::Zero) {
    u = VectorXd::Zero(p.input_dim() * p.horizon);
  } else {
    const auto init = solve_noiter(p, xbar0);
    worst_ms = init.stats.millis;
    out.stats.status = init.stats.status;
    u = stack_inputs(p, init.inputs);
  }

  const CondensedQp full = centralized_qp(p, xbar0);
  std::vector<std::vector<int>> idx(M);
  for (int i = 0; i < M; ++i) idx[i] = agent_indices(p, i);
  std::vector<double> agent_ms(M, 0.0);
  std::vector<std::optional<QpSolution>> last(M);

  out.cost_history.push_back(full.objective(u));
  for (int it = 0; it < cfg.iterations; ++it) {
    VectorXd next = u;
    for (int i = 0; i < M; ++i) {
      const auto start = Clock::now();
      const CondensedQp sub = restrict_qp(full, idx[i], u);
      QpSolution sol = solve_qp(sub, p.qp, last[i] ? &*last[i] : nullptr);
      out.stats.status = worse(out.stats.status, sol.status);
      for (std::size_t r = 0; r < idx[i].size(); ++r) {
        next(idx[i][r]) = w[i] * sol.u(static_cast<Eigen::Index>(r)) + (1.0 - w[i]) * u(idx[i][r]);
      }
      last[i] = std::move(sol);
      agent_ms[i] += elapsed_ms(start);
    }
    u = std::move(next);
    out.cost_history.push_back(full.objective(u));
  }
  out.stats.iterations = cfg.iterations;
  out.stats.millis = worst_ms + (M > 0 ? *std::max_element(agent_ms.begin(), agent_ms.end()) : 0.0);
  out.inputs = unstack_inputs(p, u);
  return out;
}

DistributedProblem build_separable_problem(const DistributedProblem& p) {
  DistributedProblem s = p;
  s.cost.Qbar = p.cost.Qa;
  s.cost.Pbar = p.cost.Pa;
  s.cost.Qtilde.setZero();
  s.cost.Ptilde.setZero();
  return s;
}

}  // namespace dcmpc
