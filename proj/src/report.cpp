#include "dcmpc/report.hpp"

#include <cmath>
#include <cstdio>

#include "json.hpp"

namespace dcmpc {
namespace {

using json = nlohmann::json;

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

json to_json(const InequalityCheck& c) { return {{"holds", c.holds}, {"margin", c.margin}}; }

json list(const std::vector<MatrixXd>& xs) {
  json out = json::array();
  for (const auto& x : xs) out.push_back(to_json(x));
  return out;
}

// NaN and infinities are not JSON numbers.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string synthesis_report(const ProblemConfig& config, const AssembledProblem& a) {
  const auto& ing = a.ingredients;
  const auto& cert = ing.cert;
  json j;
  j["name"] = config.name;
  j["config_hash"] = config_hash(config);
  j["dims"] = config.subsystems.dims;
  j["bar_dims"] = a.plant.map.bar_dims;

  json agents = json::array();
  for (std::size_t i = 0; i < ing.K.size(); ++i) {
    const auto& b = cert.balls[i];
    agents.push_back({{"agent", i + 1},
                      {"K", to_json(ing.K[i])},
                      {"open_loop_spectral_radius", spectral_radius(a.plant.Abar[i])},
                      {"closed_loop_spectral_radius", spectral_radius(ing.AK[i])},
                      {"ball_radius", ing.ball_radius[i]},
                      {"sigma_max", b.sigma_max},
                      {"ball_invariant", b.ball_invariant},
                      {"input_admissible", b.input_admissible},
                      {"input_margin", b.input_margin},
                      {"prop2", to_json(cert.prop2[i])}});
  }
  j["agents"] = agents;
  j["Phat"] = to_json(ing.Phat);
  j["P"] = list(a.cost.P);
  j["P_source"] = a.selection ? "auto" : "config";
  if (a.selection) {
    j["alpha"] = a.selection->alpha;
    j["selection_method"] = a.selection->method;
  }
  j["prop1_holds"] = cert.prop1.holds;
  j["prop1_margin"] = cert.prop1.margin;
  j["prop2_holds"] = cert.prop2_holds();
  j["dd_holds"] = cert.dd.holds;
  j["dd_slack"] = finite_or_null(cert.dd.slack);
  j["balls_invariant"] = cert.balls_invariant();
  j["inputs_admissible"] = cert.inputs_admissible();
  j["certified"] = a.certified();
  return j.dump(2) + "\n";
}

std::string transform_report(const ProblemConfig& config, const AssembledProblem& a) {
  const auto& map = a.plant.map;
  const auto& cost = a.problem.cost;
  const CompositePlant original = build_composite(config.subsystems);
  const CompositePlant restored = restore_plant(a.plant);
  double plant_residual = norm_inf(original.A - restored.A);
  for (std::size_t i = 0; i < original.B.size(); ++i) {
    plant_residual = std::max(plant_residual, norm_inf(original.B[i] - restored.B[i]));
  }
  const double orthogonality = norm_inf(map.T.transpose() * map.T - MatrixXd::Identity(map.size(), map.size()));

  json j;
  j["name"] = config.name;
  j["T"] = to_json(map.T);
  j["bar_dims"] = map.bar_dims;
  j["Abar"] = list(a.plant.Abar);
  j["Btilde"] = list(a.plant.Btilde);
  j["Qbar"] = to_json(cost.Qbar);
  j["Pbar"] = to_json(cost.Pbar);
  j["Qtilde_a"] = to_json(cost.Qtilde);
  j["Ptilde_a"] = to_json(cost.Ptilde);
  j["orthogonality_residual"] = orthogonality;
  j["round_trip_residual"] = plant_residual;
  j["round_trip_ok"] = orthogonality == 0.0 && plant_residual <= 1e-12;
  return j.dump(2) + "\n";
}

std::string monte_carlo_report(const MonteCarloReport& r, const std::string& hash) {
  json losses = json::array();
  for (double l : r.per_draw_loss) losses.push_back(finite_or_null(l));
  json j = {{"strategy", r.strategy},  {"seed", r.seed},           {"config_hash", hash},
            {"draws", r.draws},        {"evaluated", r.evaluated}, {"excluded", r.excluded},
            {"loss_mean", r.loss_mean}, {"loss_worst", r.loss_worst}, {"per_draw_loss", losses}};
  return j.dump(2) + "\n";
}

std::string timing_csv(const TimingSummary& t, const std::string& strategy) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "strategy,worst_ms,average_ms\n%s,%.17g,%.17g\n", strategy.c_str(), t.worst_ms,
                t.average_ms);
  return buf;
}

}  // namespace dcmpc
