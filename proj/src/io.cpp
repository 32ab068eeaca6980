#include "mflqr/io.hpp"

#include <charconv>
#include <ostream>

namespace mflqr {

using nlohmann::json;

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

json to_json(const GainSchedule& g) {
  json out;
  out["stationary"] = g.is_stationary();
  out["leaderless"] = g.leaderless();
  out["dx"] = g.dx();
  out["du"] = g.du();
  json steps = json::array();
  const int count = g.is_stationary() ? 1 : g.horizon();
  for (int t = 1; t <= count; ++t) {
    json s;
    if (!g.is_stationary()) s["t"] = t;
    s["L_dev"] = to_json(g.dev(t));
    s["L_bar"] = to_json(g.bar(t));
    if (!g.leaderless()) {
      s["L11"] = to_json(g.L11(t));
      s["L12"] = to_json(g.L12(t));
    }
    s["L21"] = to_json(g.L21(t));
    s["L22"] = to_json(g.L22(t));
    steps.push_back(std::move(s));
  }
  out["steps"] = std::move(steps);
  return out;
}

json to_json(const ConsensusForm& form) {
  json out;
  out["n"] = form.n;
  out["stationary"] = form.stationary;
  out["leaderless"] = form.leaderless;
  json steps = json::array();
  for (std::size_t k = 0; k < form.steps.size(); ++k) {
    const ConsensusStep& s = form.steps[k];
    json j;
    if (!form.stationary) j["t"] = k + 1;
    if (!form.leaderless) {
      j["alpha"] = to_json(s.alpha);
      j["beta"] = to_json(s.beta);
    }
    j["gamma"] = to_json(s.gamma);
    j["mu"] = to_json(s.mu);
    j["lambda"] = to_json(s.lambda);
    steps.push_back(std::move(j));
  }
  out["steps"] = std::move(steps);
  return out;
}

json to_json(const ValidationReport& report) {
  json out;
  out["all_passed"] = report.all_passed();
  out["leaderless"] = report.leaderless;
  json checks = json::array();
  for (const Check& c : report.checks) {
    json j;
    j["name"] = c.name;
    j["passed"] = c.passed;
    if (c.witness) j["witness"] = *c.witness;
    if (c.pbh_eigenvalue) {
      j["eigenvalue"] = {c.pbh_eigenvalue->real(), c.pbh_eigenvalue->imag()};
    }
    if (c.t) j["t"] = c.t;
    if (!c.detail.empty()) j["detail"] = c.detail;
    checks.push_back(std::move(j));
  }
  out["checks"] = std::move(checks);
  out["notes"] = report.notes;
  return out;
}

json to_json(const SimulationTrace& trace) {
  json out;
  out["T"] = trace.T;
  out["n"] = trace.n;
  out["dx"] = trace.dx;
  out["du"] = trace.du;
  out["leaderless"] = trace.leaderless;
  json steps = json::array();
  for (int k = 0; k <= trace.T; ++k) {
    const auto i = static_cast<std::size_t>(k);
    json s;
    s["t"] = k + 1;
    s["x0"] = vec_json(trace.x0[i]);
    s["xbar"] = vec_json(trace.xbar[i]);
    s["X"] = to_json(trace.X[i]);
    if (k < trace.T) {
      s["u0"] = vec_json(trace.u0[i]);
      s["U"] = to_json(trace.U[i]);
      s["w0"] = vec_json(trace.w0[i]);
      s["W"] = to_json(trace.W[i]);
      s["mean_abs_dev"] = trace.mean_abs_dev[i];
      s["stage_cost"] = trace.stage_cost[i];
    }
    steps.push_back(std::move(s));
  }
  out["steps"] = std::move(steps);
  return out;
}

void write_trace_csv(std::ostream& out, const SimulationTrace& trace) {
  out << "t";
  for (int k = 1; k <= trace.dx; ++k) out << ",x0_" << k;
  for (int k = 1; k <= trace.du; ++k) out << ",u0_" << k;
  for (int k = 1; k <= trace.dx; ++k) out << ",xbar_" << k;
  out << ",mean_abs_dev,stage_cost\n";
  for (int t = 1; t <= trace.T; ++t) {
    const auto i = static_cast<std::size_t>(t - 1);
    out << t;
    for (int k = 0; k < trace.dx; ++k) out << ',' << format_double(trace.x0[i](k));
    for (int k = 0; k < trace.du; ++k) out << ',' << format_double(trace.u0[i](k));
    for (int k = 0; k < trace.dx; ++k) out << ',' << format_double(trace.xbar[i](k));
    out << ',' << format_double(trace.mean_abs_dev[i]) << ','
        << format_double(trace.stage_cost[i]) << '\n';
  }
}

void write_followers_csv(std::ostream& out, const SimulationTrace& trace) {
  out << "t";
  for (int k = 1; k <= trace.dx; ++k) out << ",x0_" << k;
  for (int k = 1; k <= trace.dx; ++k) out << ",xbar_" << k;
  for (int i = 1; i <= trace.n; ++i) {
    for (int k = 1; k <= trace.dx; ++k) out << ",x" << i << '_' << k;
  }
  out << '\n';
  for (int t = 1; t <= trace.T; ++t) {
    const auto s = static_cast<std::size_t>(t - 1);
    out << t;
    for (int k = 0; k < trace.dx; ++k) out << ',' << format_double(trace.x0[s](k));
    for (int k = 0; k < trace.dx; ++k) out << ',' << format_double(trace.xbar[s](k));
    for (int i = 0; i < trace.n; ++i) {
      for (int k = 0; k < trace.dx; ++k) out << ',' << format_double(trace.X[s](i, k));
    }
    out << '\n';
  }
}

}  // namespace mflqr
