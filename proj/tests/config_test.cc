#include "dcmpc/config.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <sstream>

#include "dcmpc/errors.hpp"
#include "json.hpp"
#include "support.hpp"

namespace dcmpc {
namespace {

using json = nlohmann::json;
using testing::config_path;

json flagship_json() {
  std::ifstream in(config_path("academic3.json"));
  return json::parse(in);
}

// Parse error message for a mutated flagship document.
std::string parse_error(const std::function<void(json&)>& mutate) {
  json j = flagship_json();
  mutate(j);
  try {
    parse_config(j.dump());
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    return e.what();
  }
  return "";
}

GTEST_TEST(Config, FlagshipContents) {
  const auto c = load_config(config_path("academic3.json"));
  EXPECT_EQ(c.name, "academic3");
  EXPECT_EQ(c.subsystems.M, 3);
  for (const auto& row : c.subsystems.dims) EXPECT_EQ(row, std::vector<int>({2, 2, 2}));
  EXPECT_EQ(c.horizon, 8);
  EXPECT_TRUE(c.auto_terminal_weights());
  EXPECT_FALSE(c.auto_radius());
  EXPECT_EQ(c.rho, std::vector<double>({1, 0.5, 1}));
  // Q_2 = 2 Q_1 and Q_3 = Q_1 / 10.
  EXPECT_EQ(c.Q[1], 2.0 * c.Q[0]);
  EXPECT_LE((c.Q[2] - 0.1 * c.Q[0]).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(c.Q[0](0, 0), 10.0);
  EXPECT_EQ(c.Q[0](0, 2), 2.0);
  EXPECT_EQ(c.Q[0](0, 1), 0.0);
  EXPECT_EQ(c.Q[0](5, 0), 3.0);
  EXPECT_EQ(c.R[2](0, 0), 0.5);
  EXPECT_EQ(c.sim.x0.size(), 3u);
  EXPECT_EQ(c.sim.x0[0](0), -10.0);
  EXPECT_EQ(c.sim.seed, 7u);
  EXPECT_EQ(c.sim.strategy, StrategyKind::DistributedNoIter);
}

GTEST_TEST(Config, SerializationRoundTrip) {
  for (const char* name : {"academic3.json", "academic3_cooperative.json"}) {
    const auto c = load_config(config_path(name));
    const std::string text = serialize_config(c);
    const auto back = parse_config(text);
    EXPECT_TRUE(back == c) << name;
    EXPECT_EQ(serialize_config(back), text);
    EXPECT_EQ(config_hash(back), config_hash(c));
  }
}

GTEST_TEST(Config, RandomConfigsRoundTrip) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = testing::random_config(rng, testing::uniform_int(rng, 1, 4), 3, 6);
    c.sim.weights.assign(c.subsystems.M, 1.0 / c.subsystems.M);
    const auto back = parse_config(serialize_config(c));
    EXPECT_TRUE(back == c) << trial;
  }
}

GTEST_TEST(Config, HashDistinguishesConfigs) {
  const auto a = load_config(config_path("academic3.json"));
  auto b = a;
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 16u);
  b.horizon = 9;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_FALSE(a == b);
}

GTEST_TEST(Config, ErrorsNameTheField) {
  EXPECT_NE(parse_error([](json& j) { j["cost"]["Q"][0] = json::array({json::array({1, 2})}); }).find("cost.Q[0]"),
            std::string::npos);
  EXPECT_NE(parse_error([](json& j) { j["horizon"] = 0; }).find("horizon"), std::string::npos);
  EXPECT_NE(parse_error([](json& j) { j["horizon"] = "eight"; }).find("horizon"), std::string::npos);
  EXPECT_NE(parse_error([](json& j) { j["cost"]["rho"] = json::array({1, 2}); }).find("cost.rho"),
            std::string::npos);
  EXPECT_NE(parse_error([](json& j) { j["terminal"]["radius"] = json::array({1, -1, 1}); }).find("terminal.radius[1]"),
            std::string::npos);
  EXPECT_NE(parse_error([](json& j) { j["simulation"]["strategy"] = "jacobi"; }).find("simulation.strategy"),
            std::string::npos);
  EXPECT_NE(parse_error([](json& j) { j["cost"]["colour"] = 1; }).find("cost.colour"), std::string::npos);
  EXPECT_NE(parse_error([](json& j) { j.erase("horizon"); }).find("missing"), std::string::npos);
  EXPECT_NE(parse_error([](json& j) { j["subsystems"]["A"][1][0] = json::array({json::array({1, 2, 3})}); })
                .find("subsystems.A[1][0]"),
            std::string::npos);
}

GTEST_TEST(Config, SyntaxErrorsReportThePosition) {
  try {
    parse_config("{\n  \"name\": \"x\",\n  oops\n}");
    FAIL() << "accepted malformed JSON";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(load_config("/nonexistent/config.json"), Error);
}

GTEST_TEST(Config, AutoAndExplicitTerminalData) {
  json j = flagship_json();
  j["terminal"]["radius"] = "auto";
  auto c = parse_config(j.dump());
  EXPECT_TRUE(c.auto_radius());
  EXPECT_EQ(parse_config(serialize_config(c)).auto_radius(), true);

  j = flagship_json();
  json P = json::array();
  for (int i = 0; i < 3; ++i) {
    json m = json::array();
    for (int r = 0; r < 6; ++r) {
      json row = json::array();
      for (int k = 0; k < 6; ++k) row.push_back(r == k ? 50.0 : 0.0);
      m.push_back(row);
    }
    P.push_back(m);
  }
  j["cost"]["P"] = P;
  c = parse_config(j.dump());
  ASSERT_EQ(c.P.size(), 3u);
  EXPECT_EQ(c.P[1], 50.0 * MatrixXd::Identity(6, 6));
  const auto a = assemble(c);
  EXPECT_FALSE(a.selection.has_value());
}

GTEST_TEST(Config, AssembledFlagshipIsCertified) {
  const auto c = load_config(config_path("academic3.json"));
  const auto a = assemble(c);
  EXPECT_TRUE(a.certified());
  const VectorXd x0 = initial_state(c, a);
  VectorXd original(18);
  for (int i = 0; i < 3; ++i) original.segment(6 * i, 6) = c.sim.x0[i];
  EXPECT_EQ(a.plant.map.restore(x0), original);
  EXPECT_EQ(strategy_from(c.sim).kind, StrategyKind::DistributedNoIter);
}

GTEST_TEST(Config, DrawnInitialStateIsSeeded) {
  auto c = load_config(config_path("academic3.json"));
  c.sim.x0.clear();
  const auto a = assemble(c);
  const VectorXd x = initial_state(c, a);
  EXPECT_EQ(x, initial_state(c, a));
  EXPECT_LE(x.cwiseAbs().maxCoeff(), 8.0);
  c.sim.seed = 8;
  EXPECT_NE(x, initial_state(c, a));
}

}  // namespace
}  // namespace dcmpc
