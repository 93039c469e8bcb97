#include "dcmpc/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dcmpc/errors.hpp"
#include "dcmpc/simulation.hpp"
#include "json.hpp"

namespace dcmpc {
namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::Parse, path + ": " + what);
}

std::string child(const std::string& path, const std::string& key) { return path + "." + key; }
std::string child(const std::string& path, std::size_t k) { return path + "[" + std::to_string(k) + "]"; }

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
  if (!j.is_object()) fail(path, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) fail(child(path, item.key()), "unknown field");
  }
}

const json& require(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) fail(child(path, key), "missing field");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

const json& array(const json& j, const std::string& path, std::optional<std::size_t> size = {}) {
  if (!j.is_array()) fail(path, "expected an array");
  if (size && j.size() != *size) {
    fail(path, "expected " + std::to_string(*size) + " entries, got " + std::to_string(j.size()));
  }
  return j;
}

VectorXd vector(const json& j, const std::string& path, std::optional<int> size = {}) {
  array(j, path, size ? std::optional<std::size_t>(*size) : std::nullopt);
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = number(j[k], child(path, k));
  return v;
}

/// Row-major list of rows.  `cols` fixes the width of an empty matrix.
MatrixXd matrix(const json& j, const std::string& path, std::optional<int> rows = {},
                std::optional<int> cols = {}) {
  array(j, path);
  const auto r = static_cast<Eigen::Index>(j.size());
  if (rows && r != *rows) fail(path, "expected " + std::to_string(*rows) + " rows, got " + std::to_string(r));
  Eigen::Index c = r > 0 ? static_cast<Eigen::Index>(array(j[0], child(path, 0)).size()) : cols.value_or(0);
  if (cols && c != *cols) fail(path, "expected " + std::to_string(*cols) + " columns, got " + std::to_string(c));
  MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    const auto ri = child(path, static_cast<std::size_t>(i));
    array(j[i], ri, static_cast<std::size_t>(c));
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = number(j[i][k], child(ri, static_cast<std::size_t>(k)));
  }
  return m;
}

/// A matrix, or a number s meaning s * I of the given size.
MatrixXd square_or_scalar(const json& j, const std::string& path, int size) {
  if (j.is_number()) return number(j, path) * MatrixXd::Identity(size, size);
  return matrix(j, path, size, size);
}

/// A full matrix, or {"blocks": [[...]]} whose entries are matrices,
/// {"identity": s} or {"ones": s}; block (j, l) is n_j x n_l.
MatrixXd partitioned(const json& j, const std::string& path, const std::vector<int>& parts) {
  int n = 0;
  for (int d : parts) n += d;
  if (!j.is_object()) return matrix(j, path, n, n);
  only_keys(j, path, {"blocks"});
  const auto bp = child(path, "blocks");
  const json& rows = array(require(j, path, "blocks"), bp, parts.size());
  MatrixXd m(n, n);
  int ro = 0;
  for (std::size_t r = 0; r < parts.size(); ++r) {
    const auto rp = child(bp, r);
    const json& row = array(rows[r], rp, parts.size());
    int co = 0;
    for (std::size_t c = 0; c < parts.size(); ++c) {
      const auto ep = child(rp, c);
      const json& e = row[c];
      const int nr = parts[r], nc = parts[c];
      if (e.is_object()) {
        if (e.contains("identity")) {
          only_keys(e, ep, {"identity"});
          if (nr != nc) fail(ep, "identity block must be square");
          m.block(ro, co, nr, nc) = number(e["identity"], child(ep, "identity")) * MatrixXd::Identity(nr, nc);
        } else {
          only_keys(e, ep, {"ones"});
          m.block(ro, co, nr, nc).setConstant(number(require(e, ep, "ones"), child(ep, "ones")));
        }
      } else {
        m.block(ro, co, nr, nc) = matrix(e, ep, nr, nc);
      }
      co += nc;
    }
    ro += parts[r];
  }
  return m;
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

json to_json(const VectorXd& v) {
  json out = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(v(k));
  return out;
}

template <class T>
json to_json_list(const std::vector<T>& items) {
  json out = json::array();
  for (const auto& x : items) out.push_back(to_json(x));
  return out;
}

void parse_subsystems(const json& j, ProblemConfig& c) {
  const std::string path = "subsystems";
  only_keys(j, path, {"A", "B", "C", "input_dims"});
  const json& A = array(require(j, path, "A"), child(path, "A"));
  const std::size_t M = A.size();
  if (M == 0) fail(child(path, "A"), "at least one subsystem is required");
  const json& B = array(require(j, path, "B"), child(path, "B"), M);

  auto& s = c.subsystems;
  s.M = static_cast<int>(M);
  s.dims.assign(M, std::vector<int>(M, 0));
  s.A.assign(M, {});
  s.B.assign(M, {});
  for (std::size_t i = 0; i < M; ++i) {
    const auto ap = child(child(path, "A"), i);
    array(A[i], ap, M);
    for (std::size_t k = 0; k < M; ++k) {
      s.A[i].push_back(matrix(A[i][k], child(ap, k)));
      if (s.A[i][k].rows() != s.A[i][k].cols()) fail(child(ap, k), "block must be square");
      s.dims[i][k] = static_cast<int>(s.A[i][k].rows());
    }
  }

  if (j.contains("input_dims")) {
    const auto ip = child(path, "input_dims");
    array(j["input_dims"], ip, M);
    for (std::size_t k = 0; k < M; ++k) {
      s.input_dims.push_back(integer(j["input_dims"][k], child(ip, k)));
      if (s.input_dims.back() < 1) fail(child(ip, k), "input dimension must be positive");
    }
  } else {
    // Width of the first nonempty B block of every column.
    for (std::size_t k = 0; k < M; ++k) {
      int m = -1;
      for (std::size_t i = 0; i < M && m < 0; ++i) {
        const json& b = array(array(B[i], child(child(path, "B"), i), M)[k], child(child(child(path, "B"), i), k));
        if (!b.empty()) m = static_cast<int>(array(b[0], child(child(child(path, "B"), i), k)).size());
      }
      if (m < 1) fail(child(path, "input_dims"), "cannot infer m_" + std::to_string(k + 1) + "; give input_dims");
      s.input_dims.push_back(m);
    }
  }

  for (std::size_t i = 0; i < M; ++i) {
    const auto bp = child(child(path, "B"), i);
    array(B[i], bp, M);
    for (std::size_t k = 0; k < M; ++k) {
      s.B[i].push_back(matrix(B[i][k], child(bp, k), s.dims[i][k], s.input_dims[k]));
    }
  }

  if (j.contains("C")) {
    const auto cp = child(path, "C");
    array(j["C"], cp, M);
    s.C.assign(M, {});
    for (std::size_t i = 0; i < M; ++i) {
      array(j["C"][i], child(cp, i), M);
      for (std::size_t k = 0; k < M; ++k) {
        s.C[i].push_back(matrix(j["C"][i][k], child(child(cp, i), k), std::nullopt, s.dims[i][k]));
      }
    }
  }
}

std::vector<int> subsystem_state_dims(const ProblemConfig& c) {
  std::vector<int> n;
  for (const auto& row : c.subsystems.dims) {
    int s = 0;
    for (int d : row) s += d;
    n.push_back(s);
  }
  return n;
}

std::vector<int> agent_state_dims(const ProblemConfig& c) {
  const auto& d = c.subsystems.dims;
  std::vector<int> n(d.size(), 0);
  for (const auto& row : d) {
    for (std::size_t k = 0; k < row.size(); ++k) n[k] += row[k];
  }
  return n;
}

void parse_cost(const json& j, ProblemConfig& c) {
  const std::string path = "cost";
  only_keys(j, path, {"Q", "R", "rho", "P"});
  const std::size_t M = static_cast<std::size_t>(c.subsystems.M);
  const json& Q = array(require(j, path, "Q"), child(path, "Q"), M);
  const json& R = array(require(j, path, "R"), child(path, "R"), M);
  const json& rho = array(require(j, path, "rho"), child(path, "rho"), M);
  const auto n = subsystem_state_dims(c);
  for (std::size_t i = 0; i < M; ++i) {
    c.Q.push_back(partitioned(Q[i], child(child(path, "Q"), i), c.subsystems.dims[i]));
    c.R.push_back(square_or_scalar(R[i], child(child(path, "R"), i), c.subsystems.input_dims[i]));
    c.rho.push_back(number(rho[i], child(child(path, "rho"), i)));
  }
  if (!j.contains("P") || (j["P"].is_string() && j["P"] == "auto")) return;
  if (j["P"].is_string()) fail(child(path, "P"), "expected \"auto\" or a list of matrices");
  const json& P = array(j["P"], child(path, "P"), M);
  for (std::size_t i = 0; i < M; ++i) {
    c.P.push_back(partitioned(P[i], child(child(path, "P"), i), c.subsystems.dims[i]));
  }
}

void parse_terminal(const json& j, ProblemConfig& c) {
  const std::string path = "terminal";
  only_keys(j, path, {"radius"});
  if (!j.contains("radius")) return;
  const json& r = j["radius"];
  if (r.is_string()) {
    if (r != "auto") fail(child(path, "radius"), "expected \"auto\" or a list of radii");
    return;
  }
  const auto v = vector(r, child(path, "radius"), c.subsystems.M);
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!(v(k) > 0.0)) fail(child(child(path, "radius"), static_cast<std::size_t>(k)), "radius must be positive");
    c.radius.push_back(v(k));
  }
}

void parse_lqr(const json& j, ProblemConfig& c) {
  const std::string path = "lqr";
  only_keys(j, path, {"QL", "RL", "K"});
  const std::size_t M = static_cast<std::size_t>(c.subsystems.M);
  const auto nbar = agent_state_dims(c);
  if (j.contains("K")) {
    const json& K = array(j["K"], child(path, "K"), M);
    std::vector<MatrixXd> gains;
    for (std::size_t i = 0; i < M; ++i) {
      gains.push_back(matrix(K[i], child(child(path, "K"), i), c.subsystems.input_dims[i], nbar[i]));
    }
    c.gains = std::move(gains);
  }
  if (!c.gains || j.contains("QL") || j.contains("RL")) {
    const json& QL = array(require(j, path, "QL"), child(path, "QL"), M);
    const json& RL = array(require(j, path, "RL"), child(path, "RL"), M);
    for (std::size_t i = 0; i < M; ++i) {
      c.lqr.QL.push_back(square_or_scalar(QL[i], child(child(path, "QL"), i), nbar[i]));
      c.lqr.RL.push_back(square_or_scalar(RL[i], child(child(path, "RL"), i), c.subsystems.input_dims[i]));
    }
  }
}

void parse_solver(const json& j, QpSettings& s) {
  const std::string path = "solver";
  only_keys(j, path, {"abs_tol", "rel_tol", "max_iterations", "sigma", "relaxation", "adapt_interval",
                      "infeasibility_tol", "polish"});
  auto positive = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    out = number(j[key], child(path, key));
    if (!(out > 0.0)) fail(child(path, key), "must be positive");
  };
  positive("abs_tol", s.abs_tol);
  positive("rel_tol", s.rel_tol);
  positive("sigma", s.sigma);
  positive("relaxation", s.relaxation);
  positive("infeasibility_tol", s.infeasibility_tol);
  if (s.relaxation >= 2.0) fail(child(path, "relaxation"), "must lie in (0, 2)");
  if (j.contains("max_iterations")) s.max_iterations = integer(j["max_iterations"], child(path, "max_iterations"));
  if (j.contains("adapt_interval")) s.adapt_interval = integer(j["adapt_interval"], child(path, "adapt_interval"));
  if (s.max_iterations < 1) fail(child(path, "max_iterations"), "must be positive");
  if (s.adapt_interval < 1) fail(child(path, "adapt_interval"), "must be positive");
  if (j.contains("polish")) {
    if (!j["polish"].is_boolean()) fail(child(path, "polish"), "expected true or false");
    s.polish = j["polish"].get<bool>();
  }
}

void parse_simulation(const json& j, ProblemConfig& c) {
  const std::string path = "simulation";
  only_keys(j, path, {"x0", "seed", "bounds", "steps", "strategy", "iters", "weights", "warmup_steps", "draws"});
  auto& s = c.sim;
  const std::size_t M = static_cast<std::size_t>(c.subsystems.M);
  if (j.contains("x0")) {
    const auto n = subsystem_state_dims(c);
    const json& x0 = array(j["x0"], child(path, "x0"), M);
    for (std::size_t i = 0; i < M; ++i) s.x0.push_back(vector(x0[i], child(child(path, "x0"), i), n[i]));
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail(child(path, "seed"), "expected a nonnegative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("bounds")) {
    const auto b = vector(j["bounds"], child(path, "bounds"), 2);
    if (!(b(0) <= b(1))) fail(child(path, "bounds"), "lower bound exceeds upper bound");
    s.lower = b(0);
    s.upper = b(1);
  }
  if (j.contains("steps")) s.steps = integer(j["steps"], child(path, "steps"));
  if (s.steps < 1) fail(child(path, "steps"), "must be positive");
  if (j.contains("strategy")) {
    if (!j["strategy"].is_string()) fail(child(path, "strategy"), "expected a string");
    try {
      s.strategy = parse_strategy(j["strategy"].get<std::string>());
    } catch (const Error& e) {
      fail(child(path, "strategy"), e.what());
    }
  }
  if (j.contains("iters")) s.iterations = integer(j["iters"], child(path, "iters"));
  if (s.iterations < 0) fail(child(path, "iters"), "must be nonnegative");
  if (j.contains("weights")) {
    const auto w = vector(j["weights"], child(path, "weights"), c.subsystems.M);
    s.weights.assign(w.data(), w.data() + w.size());
  }
  if (j.contains("warmup_steps")) s.warmup_steps = integer(j["warmup_steps"], child(path, "warmup_steps"));
  if (s.warmup_steps < 0) fail(child(path, "warmup_steps"), "must be nonnegative");
  if (j.contains("draws")) s.draws = integer(j["draws"], child(path, "draws"));
  if (s.draws < 1) fail(child(path, "draws"), "must be positive");
}

std::string location(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

ProblemConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, "malformed JSON at " + location(text, e.byte) + ": " + e.what());
  }
  only_keys(j, "config", {"name", "subsystems", "cost", "horizon", "input_bounds", "terminal", "lqr",
                          "solver", "simulation"});
  ProblemConfig c;
  if (j.contains("name")) {
    if (!j["name"].is_string()) fail("name", "expected a string");
    c.name = j["name"].get<std::string>();
  }
  parse_subsystems(require(j, "config", "subsystems"), c);
  parse_cost(require(j, "config", "cost"), c);

  c.horizon = integer(require(j, "config", "horizon"), "horizon");
  if (c.horizon < 1) fail("horizon", "must be at least 1");

  const std::size_t M = static_cast<std::size_t>(c.subsystems.M);
  const json& ub = array(require(j, "config", "input_bounds"), "input_bounds", M);
  for (std::size_t i = 0; i < M; ++i) {
    const auto p = child("input_bounds", i);
    const int m = c.subsystems.input_dims[i];
    VectorXd b = ub[i].is_number() ? VectorXd::Constant(m, number(ub[i], p)) : vector(ub[i], p, m);
    if (!(b.array() > 0.0).all()) fail(p, "bounds must be positive");
    c.u_max.push_back(std::move(b));
  }

  if (j.contains("terminal")) parse_terminal(j["terminal"], c);
  parse_lqr(require(j, "config", "lqr"), c);
  if (j.contains("solver")) parse_solver(j["solver"], c.solver);
  if (j.contains("simulation")) parse_simulation(j["simulation"], c);
  return c;
}

ProblemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ProblemConfig& c) {
  json j;
  j["name"] = c.name;
  const auto& s = c.subsystems;
  json A = json::array(), B = json::array();
  for (int i = 0; i < s.M; ++i) {
    A.push_back(to_json_list(s.A[i]));
    B.push_back(to_json_list(s.B[i]));
  }
  j["subsystems"] = {{"A", A}, {"B", B}, {"input_dims", s.input_dims}};
  if (!s.C.empty()) {
    json C = json::array();
    for (const auto& row : s.C) C.push_back(to_json_list(row));
    j["subsystems"]["C"] = C;
  }
  j["cost"] = {{"Q", to_json_list(c.Q)}, {"R", to_json_list(c.R)}, {"rho", c.rho}};
  j["cost"]["P"] = c.P.empty() ? json("auto") : to_json_list(c.P);
  j["horizon"] = c.horizon;
  j["input_bounds"] = to_json_list(c.u_max);
  j["terminal"]["radius"] = c.radius.empty() ? json("auto") : json(c.radius);
  if (!c.lqr.QL.empty()) {
    j["lqr"]["QL"] = to_json_list(c.lqr.QL);
    j["lqr"]["RL"] = to_json_list(c.lqr.RL);
  }
  if (c.gains) j["lqr"]["K"] = to_json_list(*c.gains);
  const auto& q = c.solver;
  j["solver"] = {{"abs_tol", q.abs_tol},     {"rel_tol", q.rel_tol},
                 {"max_iterations", q.max_iterations}, {"sigma", q.sigma},
                 {"relaxation", q.relaxation}, {"adapt_interval", q.adapt_interval},
                 {"infeasibility_tol", q.infeasibility_tol}, {"polish", q.polish}};
  const auto& m = c.sim;
  json sim = {{"seed", m.seed},
              {"bounds", {m.lower, m.upper}},
              {"steps", m.steps},
              {"strategy", std::string(to_string(m.strategy))},
              {"iters", m.iterations},
              {"warmup_steps", m.warmup_steps},
              {"draws", m.draws}};
  if (!m.x0.empty()) sim["x0"] = to_json_list(m.x0);
  if (!m.weights.empty()) sim["weights"] = m.weights;
  j["simulation"] = sim;
  return j.dump(2) + "\n";
}

namespace {

template <class T>
bool same_list(const std::vector<T>& a, const std::vector<T>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k].rows() != b[k].rows() || a[k].cols() != b[k].cols() || a[k] != b[k]) return false;
  }
  return true;
}

}  // namespace

bool operator==(const ProblemConfig& a, const ProblemConfig& b) {
  const auto& sa = a.subsystems;
  const auto& sb = b.subsystems;
  if (a.name != b.name || sa.M != sb.M || sa.dims != sb.dims || sa.input_dims != sb.input_dims) return false;
  if (sa.C.size() != sb.C.size()) return false;
  for (int i = 0; i < sa.M; ++i) {
    if (!same_list(sa.A[i], sb.A[i]) || !same_list(sa.B[i], sb.B[i])) return false;
    if (!sa.C.empty() && !same_list(sa.C[i], sb.C[i])) return false;
  }
  if (!same_list(a.Q, b.Q) || !same_list(a.R, b.R) || !same_list(a.P, b.P) || a.rho != b.rho) return false;
  if (a.horizon != b.horizon || !same_list(a.u_max, b.u_max) || a.radius != b.radius) return false;
  if (!same_list(a.lqr.QL, b.lqr.QL) || !same_list(a.lqr.RL, b.lqr.RL)) return false;
  if (a.gains.has_value() != b.gains.has_value() || (a.gains && !same_list(*a.gains, *b.gains))) return false;
  const auto& qa = a.solver;
  const auto& qb = b.solver;
  if (qa.abs_tol != qb.abs_tol || qa.rel_tol != qb.rel_tol || qa.max_iterations != qb.max_iterations ||
      qa.sigma != qb.sigma || qa.relaxation != qb.relaxation || qa.adapt_interval != qb.adapt_interval ||
      qa.infeasibility_tol != qb.infeasibility_tol || qa.polish != qb.polish) {
    return false;
  }
  const auto& ma = a.sim;
  const auto& mb = b.sim;
  return same_list(ma.x0, mb.x0) && ma.seed == mb.seed && ma.lower == mb.lower && ma.upper == mb.upper &&
         ma.steps == mb.steps && ma.strategy == mb.strategy && ma.iterations == mb.iterations &&
         ma.weights == mb.weights && ma.warmup_steps == mb.warmup_steps && ma.draws == mb.draws;
}

std::string config_hash(const ProblemConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize_config(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool AssembledProblem::certified() const {
  return ingredients.cert.prop1.holds && ingredients.cert.inputs_admissible();
}

AssembledProblem assemble(const ProblemConfig& c) {
  AssembledProblem out;
  const CompositePlant composite = build_composite(c.subsystems);
  out.plant = transform_plant(composite, build_permutation(c.subsystems.dims));
  out.cost = CostSpec{c.Q, c.R, c.P, c.rho, c.horizon};

  const int M = c.subsystems.M;
  std::vector<double> radius = c.radius.empty() ? std::vector<double>(M, 1.0) : c.radius;
  out.ingredients = synthesize_ingredients(out.plant, out.cost, c.lqr, c.u_max, radius, c.gains);
  if (c.radius.empty()) {
    for (int i = 0; i < M; ++i) {
      radius[i] = admissible_radius(out.ingredients.K[i], c.u_max[i]);
      out.ingredients.cert.balls[i] =
          verify_ball_terminal(out.ingredients.AK[i], out.ingredients.K[i], radius[i], c.u_max[i]);
    }
    out.ingredients.ball_radius = radius;
  }

  if (c.P.empty()) {
    out.selection = select_terminal_weights(out.cost, out.plant, out.ingredients);
    out.cost.P = out.selection->P;
  }
  TransformedCost tc = transform_cost(out.cost, out.plant.map);
  certify(out.ingredients, tc.Pbar);
  out.problem = make_problem(out.plant, std::move(tc), c.horizon, c.u_max, radius, out.ingredients.K, c.solver);
  return out;
}

VectorXd initial_state(const ProblemConfig& c, const AssembledProblem& a) {
  const auto& map = a.plant.map;
  if (c.sim.x0.empty()) {
    UniformSource rng(c.sim.seed);
    VectorXd x(map.size());
    for (Eigen::Index k = 0; k < x.size(); ++k) x(k) = c.sim.lower + (c.sim.upper - c.sim.lower) * rng.next();
    return map.transform(x);
  }
  VectorXd x(map.size());
  Eigen::Index off = 0;
  for (const auto& xi : c.sim.x0) {
    x.segment(off, xi.size()) = xi;
    off += xi.size();
  }
  return map.transform(x);
}

StrategyConfig strategy_from(const SimulationParams& sim) {
  StrategyConfig s;
  s.kind = sim.strategy;
  s.iterations = sim.iterations;
  s.weights = sim.weights;
  return s;
}

}  // namespace dcmpc
