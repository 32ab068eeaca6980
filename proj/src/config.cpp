#include "mflqr/config.hpp"

#include <fstream>
#include <initializer_list>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mflqr/errors.hpp"

namespace mflqr {

namespace {

using nlohmann::json;

std::string child(const std::string& ptr, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') {
      escaped += "~0";
    } else if (c == '/') {
      escaped += "~1";
    } else {
      escaped += c;
    }
  }
  return ptr + "/" + escaped;
}

std::string child(const std::string& ptr, std::size_t index) {
  return ptr + "/" + std::to_string(index);
}

void expect_object(const json& j, const std::string& ptr) {
  if (!j.is_object()) throw ConfigError(ptr, "expected an object");
}

void reject_unknown(const json& j, const std::string& ptr,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) throw ConfigError(child(ptr, key), "unknown key '" + key + "'");
  }
}

const json& require(const json& j, const std::string& ptr, const char* key) {
  if (!j.contains(key)) {
    throw ConfigError(child(ptr, key), std::string("missing required key '") + key + "'");
  }
  return j.at(key);
}

double as_number(const json& j, const std::string& ptr) {
  if (!j.is_number()) throw ConfigError(ptr, "expected a number");
  return j.get<double>();
}

int as_positive_int(const json& j, const std::string& ptr) {
  if (!j.is_number_integer() || j.get<long long>() < 1 ||
      j.get<long long>() > std::numeric_limits<int>::max()) {
    throw ConfigError(ptr, "expected a positive integer");
  }
  return j.get<int>();
}

bool as_bool(const json& j, const std::string& ptr) {
  if (!j.is_boolean()) throw ConfigError(ptr, "expected true or false");
  return j.get<bool>();
}

// number -> 1x1, flat array -> column vector, nested arrays -> row-major.
MatrixXd as_matrix(const json& j, const std::string& ptr) {
  if (j.is_number()) return scalar(j.get<double>());
  if (!j.is_array() || j.empty()) throw ConfigError(ptr, "expected a number or a non-empty array");
  if (!j.front().is_array()) {
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = as_number(j[i], child(ptr, i));
    return v;
  }
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  if (cols == 0) throw ConfigError(child(ptr, std::size_t{0}), "empty row");
  MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = child(ptr, r);
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(rp, "ragged matrix row");
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = as_number(j[r][c], child(rp, c));
    }
  }
  return m;
}

MatrixSchedule as_schedule(const json& j, const std::string& ptr) {
  if (j.is_object()) {
    reject_unknown(j, ptr, {"sequence"});
    const std::string sp = child(ptr, "sequence");
    const json& seq = require(j, ptr, "sequence");
    if (!seq.is_array() || seq.empty()) throw ConfigError(sp, "expected a non-empty array of matrices");
    std::vector<MatrixXd> steps;
    for (std::size_t i = 0; i < seq.size(); ++i) steps.push_back(as_matrix(seq[i], child(sp, i)));
    return MatrixSchedule::sequence(std::move(steps));
  }
  return MatrixSchedule(as_matrix(j, ptr));
}

// Scalar -> broadcast to dx; flat array of length dx -> as is.
VectorXd as_vector(const json& j, const std::string& ptr, int dx) {
  if (j.is_number()) return VectorXd::Constant(dx, j.get<double>());
  const MatrixXd m = as_matrix(j, ptr);
  if (m.cols() != 1 || m.rows() != dx) {
    throw ConfigError(ptr, "expected a scalar or a vector of length " + std::to_string(dx));
  }
  return m.col(0);
}

// Scalar -> c I; flat array -> diagonal; nested -> full matrix.
MatrixXd as_covariance(const json& j, const std::string& ptr, int dx) {
  if (j.is_number()) return j.get<double>() * MatrixXd::Identity(dx, dx);
  const MatrixXd m = as_matrix(j, ptr);
  if (m.cols() == 1 && m.rows() == dx && dx > 1) return m.col(0).asDiagonal();
  if (m.rows() != dx || m.cols() != dx) {
    throw ConfigError(ptr, "covariance must be " + std::to_string(dx) + "x" + std::to_string(dx));
  }
  return m;
}

Distribution as_distribution(const json& j, const std::string& ptr, int dx,
                             bool zero_mean) {
  if (j.is_number() || j.is_array()) {
    if (zero_mean) throw ConfigError(ptr, "noise must be a distribution object");
    return Distribution::point(as_vector(j, ptr, dx));
  }
  expect_object(j, ptr);
  const json& kind_json = require(j, ptr, "kind");
  if (!kind_json.is_string()) throw ConfigError(child(ptr, "kind"), "expected a string");
  const std::string kind = kind_json.get<std::string>();
  if (kind == "zero") {
    reject_unknown(j, ptr, {"kind"});
    return Distribution::zero(dx);
  }
  if (kind == "gaussian") {
    if (zero_mean) {
      reject_unknown(j, ptr, {"kind", "cov"});
    } else {
      reject_unknown(j, ptr, {"kind", "cov", "mean"});
    }
    const MatrixXd cov = as_covariance(require(j, ptr, "cov"), child(ptr, "cov"), dx);
    const VectorXd mean = j.contains("mean") ? as_vector(j.at("mean"), child(ptr, "mean"), dx)
                                             : VectorXd::Zero(dx);
    return Distribution::gaussian(mean, cov);
  }
  if (kind == "uniform") {
    reject_unknown(j, ptr, {"kind", "low", "high"});
    VectorXd low = as_vector(require(j, ptr, "low"), child(ptr, "low"), dx);
    VectorXd high = as_vector(require(j, ptr, "high"), child(ptr, "high"), dx);
    if ((high - low).minCoeff() < 0.0) throw ConfigError(ptr, "uniform support needs low <= high");
    if (zero_mean && !(low + high).isZero(0.0)) {
      throw ConfigError(ptr, "noise must be zero-mean: use low = -high");
    }
    return Distribution::uniform(std::move(low), std::move(high));
  }
  throw ConfigError(child(ptr, "kind"), "unknown distribution kind '" + kind + "'");
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  const std::string top;
  expect_object(root, top);
  reject_unknown(root, top,
                 {"n", "horizon", "T", "beta", "seed", "num_runs", "leaderless",
                  "consensus", "oracle_n", "model", "cost", "output"});

  ExperimentConfig cfg;
  cfg.n = as_positive_int(require(root, top, "n"), "/n");

  std::string horizon = "finite";
  if (root.contains("horizon")) {
    const json& h = root.at("horizon");
    if (!h.is_string() || (h != "finite" && h != "infinite")) {
      throw ConfigError("/horizon", "expected \"finite\" or \"infinite\"");
    }
    horizon = h.get<std::string>();
  }
  const bool infinite = horizon == "infinite";
  if (infinite) {
    cfg.T = root.contains("T") ? as_positive_int(root.at("T"), "/T") : 80;
  } else {
    cfg.T = as_positive_int(require(root, top, "T"), "/T");
  }
  double beta = 1.0;
  if (root.contains("beta")) {
    beta = as_number(root.at("beta"), "/beta");
    if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("/beta", "beta must lie in (0, 1]");
    if (!infinite && beta != 1.0) {
      throw ConfigError("/beta", "discounting applies to the infinite horizon only");
    }
  }
  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("/seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (root.contains("num_runs")) cfg.num_runs = as_positive_int(root.at("num_runs"), "/num_runs");
  if (root.contains("leaderless")) cfg.leaderless = as_bool(root.at("leaderless"), "/leaderless");
  if (root.contains("consensus")) cfg.consensus = as_bool(root.at("consensus"), "/consensus");
  if (root.contains("oracle_n")) cfg.oracle_n = as_positive_int(root.at("oracle_n"), "/oracle_n");

  if (root.contains("output")) {
    const json& o = root.at("output");
    expect_object(o, "/output");
    reject_unknown(o, "/output", {"dir", "followers_csv", "trace_json"});
    if (o.contains("dir")) {
      if (!o.at("dir").is_string()) throw ConfigError("/output/dir", "expected a string");
      cfg.output_dir = o.at("dir").get<std::string>();
    }
    if (o.contains("followers_csv")) cfg.followers_csv = as_bool(o.at("followers_csv"), "/output/followers_csv");
    if (o.contains("trace_json")) cfg.trace_json = as_bool(o.at("trace_json"), "/output/trace_json");
  }

  // Model.
  const json& model = require(root, top, "model");
  expect_object(model, "/model");
  reject_unknown(model, "/model",
                 {"A0", "B0", "D0", "A", "B", "D", "E", "x0_init", "follower_init", "noise"});
  SystemModel& m = cfg.model;
  m.n = cfg.n;
  m.A = as_schedule(require(model, "/model", "A"), "/model/A");
  m.B = as_schedule(require(model, "/model", "B"), "/model/B");
  const int dx = static_cast<int>(m.A.rows());
  const int du = static_cast<int>(m.B.cols());
  m.A0 = as_schedule(require(model, "/model", "A0"), "/model/A0");
  m.D = as_schedule(require(model, "/model", "D"), "/model/D");
  m.E = as_schedule(require(model, "/model", "E"), "/model/E");
  if (cfg.leaderless) {
    m.B0 = model.contains("B0") ? as_schedule(model.at("B0"), "/model/B0")
                                : MatrixSchedule(MatrixXd::Zero(dx, du));
    m.D0 = model.contains("D0") ? as_schedule(model.at("D0"), "/model/D0")
                                : MatrixSchedule(MatrixXd::Zero(dx, dx));
  } else {
    m.B0 = as_schedule(require(model, "/model", "B0"), "/model/B0");
    m.D0 = as_schedule(require(model, "/model", "D0"), "/model/D0");
  }
  m.leader_init = model.contains("x0_init")
                      ? as_distribution(model.at("x0_init"), "/model/x0_init", dx, false)
                      : Distribution::point(VectorXd::Zero(dx));
  m.follower_init = model.contains("follower_init")
                        ? as_distribution(model.at("follower_init"), "/model/follower_init", dx, false)
                        : Distribution::point(VectorXd::Zero(dx));
  m.noise.leader = Distribution::zero(dx);
  m.noise.follower = Distribution::zero(dx);
  if (model.contains("noise")) {
    const json& noise = model.at("noise");
    expect_object(noise, "/model/noise");
    reject_unknown(noise, "/model/noise", {"leader", "follower"});
    if (noise.contains("leader")) {
      m.noise.leader = as_distribution(noise.at("leader"), "/model/noise/leader", dx, true);
    }
    if (noise.contains("follower")) {
      m.noise.follower = as_distribution(noise.at("follower"), "/model/noise/follower", dx, true);
    }
  }
  m.noise.seed = cfg.seed;

  // Cost.
  const json& cost = require(root, top, "cost");
  expect_object(cost, "/cost");
  reject_unknown(cost, "/cost", {"Q0", "R0", "Q", "P", "R", "H"});
  CostModel& c = cfg.cost;
  if (cfg.leaderless) {
    c.Q0 = cost.contains("Q0") ? as_schedule(cost.at("Q0"), "/cost/Q0")
                               : MatrixSchedule(MatrixXd::Zero(dx, dx));
    c.R0 = cost.contains("R0") ? as_schedule(cost.at("R0"), "/cost/R0")
                               : MatrixSchedule(MatrixXd::Zero(du, du));
  } else {
    c.Q0 = as_schedule(require(cost, "/cost", "Q0"), "/cost/Q0");
    c.R0 = as_schedule(require(cost, "/cost", "R0"), "/cost/R0");
  }
  c.Q = as_schedule(require(cost, "/cost", "Q"), "/cost/Q");
  c.P = as_schedule(require(cost, "/cost", "P"), "/cost/P");
  c.R = as_schedule(require(cost, "/cost", "R"), "/cost/R");
  c.H = as_schedule(require(cost, "/cost", "H"), "/cost/H");
  c.horizon = infinite ? HorizonKind::Infinite : HorizonKind::Finite;
  c.T = infinite ? 0 : cfg.T;
  c.beta = beta;

  try {
    dims(m, c);
  } catch (const DimensionMismatch& e) {
    throw ConfigError("/model", e.what());
  }
  if (cfg.leaderless && !is_leaderless(m, c)) {
    throw ConfigError("/leaderless", "leaderless mode needs B0 = D0 = Q0 = R0 = 0");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string example1_config_text(bool infinite) {
  const char* horizon = infinite ? R"("horizon": "infinite", "beta": 1.0, "T": 80)"
                                 : R"("horizon": "finite", "T": 80)";
  std::string text = R"({
  "n": 100,
  )";
  text += horizon;
  text += R"(,
  "seed": 0,
  "model": {
    "A0": 1, "B0": 0.3, "D0": 0.05,
    "A": 1, "B": 0.2, "D": 0.01, "E": 0.01,
    "x0_init": 30,
    "follower_init": {"kind": "uniform", "low": 0, "high": 20},
    "noise": {
      "leader": {"kind": "gaussian", "cov": 0.1},
      "follower": {"kind": "gaussian", "cov": 0.2}
    }
  },
  "cost": {"Q0": 1, "R0": 100, "Q": 0.1, "P": 50, "R": 50, "H": 1}
}
)";
  return text;
}

}  // namespace mflqr
