#include "mflqr/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "mflqr/config.hpp"
#include "mflqr/errors.hpp"
#include "mflqr/gains.hpp"
#include "mflqr/io.hpp"
#include "mflqr/oracle.hpp"
#include "mflqr/riccati.hpp"
#include "mflqr/sim.hpp"

namespace mflqr {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr double kOracleTolerance = 1e-8;

enum class LogLevel { Quiet = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
  const char* env = std::getenv("MFLQR_LOG");
  if (!env) return LogLevel::Warn;
  const std::string v = env;
  if (v == "quiet" || v == "0") return LogLevel::Quiet;
  if (v == "info" || v == "2") return LogLevel::Info;
  if (v == "debug" || v == "3") return LogLevel::Debug;
  return LogLevel::Warn;
}

// Signals a failed validation; carries the exit code path.
struct ValidationFailed {
  ValidationReport report;
};

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err), level_(log_level()) {}

  void log(LogLevel lvl, const std::string& msg) const {
    if (lvl <= level_) err_ << "[mflqr] " << msg << '\n';
  }

  void diagnostic(const json& j) const { err_ << j.dump() << '\n'; }

  std::ostream& out() const { return out_; }

  ValidationReport validated(const ExperimentConfig& cfg) const {
    ValidationReport report = validate(cfg.model, cfg.cost);
    if (!report.all_passed()) throw ValidationFailed{report};
    return report;
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  LogLevel level_;
};

void print_report(std::ostream& out, const ValidationReport& report) {
  for (const Check& c : report.checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (c.witness) out << " witness=" << format_double(*c.witness);
    if (c.pbh_eigenvalue) {
      out << " eigenvalue=" << format_double(c.pbh_eigenvalue->real());
      if (c.pbh_eigenvalue->imag() != 0.0) out << (c.pbh_eigenvalue->imag() > 0 ? "+" : "") << format_double(c.pbh_eigenvalue->imag()) << "i";
    }
    if (c.t) out << " t=" << c.t;
    if (!c.detail.empty()) out << " (" << c.detail << ")";
    out << '\n';
  }
  for (const auto& note : report.notes) out << "note: " << note << '\n';
  out << (report.all_passed() ? "all checks passed" : "validation FAILED") << '\n';
}

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("/output/dir", "cannot write " + path.string());
  f << text;
}

int cmd_validate(const Runner& r, const ExperimentConfig& cfg) {
  const ValidationReport report = validate(cfg.model, cfg.cost);
  print_report(r.out(), report);
  if (!report.all_passed()) throw ValidationFailed{report};
  return kExitOk;
}

int cmd_gains(const Runner& r, const ExperimentConfig& cfg) {
  r.validated(cfg);
  const RiccatiSolution ric = solve(cfg.model, cfg.cost);
  const GainSchedule gains = compute_gains(ric, cfg.model, cfg.cost);
  json doc;
  doc["gains"] = to_json(gains);
  if (ric.is_stationary()) {
    doc["are"] = {
        {"deviation", {{"iterations", ric.dev_diagnostics().iterations},
                       {"residual", ric.dev_diagnostics().residual}}},
        {"augmented", {{"iterations", ric.aug_diagnostics().iterations},
                       {"residual", ric.aug_diagnostics().residual}}}};
  }
  if (cfg.consensus && !gains.is_stationary() && gains.horizon() < 2) {
    doc["consensus"] = {{"available", false},
                        {"reason", "horizon T = 1 has only the zero terminal gain"}};
  } else if (cfg.consensus) {
    // Finite schedules end with zero gains at t = T; the form covers 1..T-1.
    std::optional<int> last;
    if (!gains.is_stationary()) last = gains.horizon() - 1;
    try {
      doc["consensus"] = to_json(consensus_coefficients(gains, cfg.n, last));
    } catch (const SingularGain& e) {
      doc["consensus"] = {{"available", false}, {"reason", e.what()}};
      r.log(LogLevel::Info, std::string("consensus form unavailable: ") + e.what());
    }
  }
  const fs::path path = prepare_dir(cfg.output_dir) / "gains.json";
  write_text(path, doc.dump(2) + "\n");
  r.out() << "wrote " << path.string() << '\n';
  return kExitOk;
}

struct RunSummary {
  double cost_direct = 0.0;
  double cost_decomposed = 0.0;
  double terminal_mad = 0.0;
  double initial_mad = 0.0;
};

RunSummary summarize(const SimulationTrace& trace, const CostModel& cost) {
  RunSummary s;
  s.cost_direct = evaluate_cost_direct(trace, cost);
  s.cost_decomposed = evaluate_cost_decomposed(trace, cost);
  s.initial_mad = trace.mean_abs_dev.front();
  s.terminal_mad = trace.mean_abs_dev.back();
  return s;
}

void print_summary(std::ostream& out, const std::string& label, std::uint64_t seed,
                   const RunSummary& s) {
  const double rel = std::abs(s.cost_direct - s.cost_decomposed) /
                     std::max(1.0, std::abs(s.cost_direct));
  out << label << " seed=" << seed << " cost_direct=" << format_double(s.cost_direct)
      << " cost_decomposed=" << format_double(s.cost_decomposed)
      << " rel_diff=" << format_double(rel)
      << " initial_mean_abs_dev=" << format_double(s.initial_mad)
      << " terminal_mean_abs_dev=" << format_double(s.terminal_mad) << '\n';
}

int cmd_simulate(const Runner& r, const ExperimentConfig& cfg) {
  r.validated(cfg);
  const RiccatiSolution ric = solve(cfg.model, cfg.cost);
  const GainSchedule gains = compute_gains(ric, cfg.model, cfg.cost);
  const fs::path dir = prepare_dir(cfg.output_dir);
  for (int run = 0; run < cfg.num_runs; ++run) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(run);
    const SimulationTrace trace = simulate(cfg.model, cfg.cost, gains, cfg.T, seed);
    const std::string stem = cfg.num_runs > 1 ? "trace_run" + std::to_string(run) : "trace";
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    write_text(dir / (stem + ".csv"), csv.str());
    if (cfg.followers_csv) {
      std::ostringstream wide;
      write_followers_csv(wide, trace);
      write_text(dir / (stem + "_followers.csv"), wide.str());
    }
    if (cfg.trace_json) write_text(dir / (stem + ".json"), to_json(trace).dump() + "\n");
    print_summary(r.out(), "run=" + std::to_string(run), seed, summarize(trace, cfg.cost));
  }
  return kExitOk;
}

int cmd_oracle_check(const Runner& r, const ExperimentConfig& cfg, int n_small) {
  r.validated(cfg);
  CostModel cost = cfg.cost;
  // Fail on the largest size before spending time on the smaller ones.
  oracle::build_centralized(cfg.model, cost, n_small);
  double worst = 0.0;
  for (int n = 1; n <= n_small; ++n) {
    SystemModel model = cfg.model;
    model.n = n;
    const GainSchedule gains = compute_gains(solve(model, cost), model, cost);
    const oracle::CentralizedProblem cp = oracle::build_centralized(model, cost, n);
    const double dev = oracle::compare(oracle::solve_centralized(cp),
                                       oracle::assemble_meanfield_as_centralized(gains, n));
    r.out() << "n=" << n << " max_gain_deviation=" << format_double(dev) << '\n';
    worst = std::max(worst, dev);
  }
  r.out() << "max_gain_deviation=" << format_double(worst) << '\n';
  if (!(worst < kOracleTolerance)) {
    r.diagnostic({{"error", "OracleMismatch"},
                  {"exit", kExitNumerical},
                  {"max_gain_deviation", worst},
                  {"tolerance", kOracleTolerance}});
    return kExitNumerical;
  }
  return kExitOk;
}

int cmd_reproduce(const Runner& r, bool infinite, std::uint64_t seed,
                  const std::string& out_dir) {
  ExperimentConfig cfg = parse_config(example1_config_text(infinite));
  cfg.seed = seed;
  r.validated(cfg);
  const RiccatiSolution ric = solve(cfg.model, cfg.cost);
  const GainSchedule gains = compute_gains(ric, cfg.model, cfg.cost);
  const fs::path dir = prepare_dir(out_dir);
  const std::string base = infinite ? "example1_infinite" : "example1_finite";

  for (const bool noiseless : {false, true}) {
    SystemModel model = cfg.model;
    if (noiseless) {
      model.noise.leader = Distribution::zero(1);
      model.noise.follower = Distribution::zero(1);
    }
    const SimulationTrace trace = simulate(model, cfg.cost, gains, cfg.T, seed);
    const std::string stem = base + (noiseless ? "_noiseless" : "");
    std::ostringstream wide, narrow;
    write_followers_csv(wide, trace);
    write_trace_csv(narrow, trace);
    write_text(dir / (stem + "_followers.csv"), wide.str());
    write_text(dir / (stem + "_trace.csv"), narrow.str());
    print_summary(r.out(), stem, seed, summarize(trace, cfg.cost));
  }
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Optimal distributed control for leader-follower networks"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int oracle_n = 0;
  bool infinite = false;

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", config_path, "experiment JSON");
    if (needs_config) opt->required();
    sub->add_option("--seed", seed, "override the configured seed");
    sub->add_option("--out", out_dir, "output directory");
  };
  auto* validate_cmd = app.add_subcommand("validate", "check the model assumptions");
  add_common(validate_cmd, true);
  auto* gains_cmd = app.add_subcommand("gains", "write the optimal gain schedule");
  add_common(gains_cmd, true);
  auto* simulate_cmd = app.add_subcommand("simulate", "simulate the closed loop");
  add_common(simulate_cmd, true);
  auto* oracle_cmd = app.add_subcommand("oracle-check", "compare against the centralized LQR");
  add_common(oracle_cmd, true);
  oracle_cmd->add_option("--n", oracle_n, "largest follower count to check");
  auto* repro_cmd = app.add_subcommand("reproduce-example1", "run the bundled 100-follower example");
  add_common(repro_cmd, false);
  repro_cmd->add_flag("--infinite", infinite, "stationary gains, beta = 1");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "UsageError"}, {"exit", kExitConfig}, {"message", e.what()}}.dump()
        << '\n';
    return kExitConfig;
  }

  Runner runner(out, err);
  const auto started = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    if (repro_cmd->parsed()) {
      code = cmd_reproduce(runner, infinite, repro_cmd->count("--seed") ? seed : 0,
                           out_dir.empty() ? "out" : out_dir);
    } else {
      ExperimentConfig cfg = load_config(config_path);
      CLI::App* sub = app.get_subcommands().front();
      if (sub->count("--seed")) {
        cfg.seed = seed;
        cfg.model.noise.seed = seed;
      }
      if (!out_dir.empty()) cfg.output_dir = out_dir;
      if (validate_cmd->parsed()) {
        code = cmd_validate(runner, cfg);
      } else if (gains_cmd->parsed()) {
        code = cmd_gains(runner, cfg);
      } else if (simulate_cmd->parsed()) {
        code = cmd_simulate(runner, cfg);
      } else {
        code = cmd_oracle_check(runner, cfg, oracle_n > 0 ? oracle_n : cfg.oracle_n);
      }
    }
  } catch (const ValidationFailed& v) {
    const Check* c = v.report.first_failure();
    json d{{"error", "ValidationFailed"}, {"exit", kExitValidation}};
    if (c) {
      d["check"] = c->name;
      if (c->witness) d["witness"] = *c->witness;
      if (c->t) d["t"] = c->t;
      d["detail"] = c->detail;
    }
    runner.diagnostic(d);
    return kExitValidation;
  } catch (const ConfigError& e) {
    runner.diagnostic({{"error", e.kind()}, {"exit", kExitConfig}, {"pointer", e.pointer()},
                       {"message", e.what()}});
    return kExitConfig;
  } catch (const DimensionMismatch& e) {
    runner.diagnostic({{"error", e.kind()}, {"exit", kExitConfig}, {"message", e.what()}});
    return kExitConfig;
  } catch (const Diverged& e) {
    runner.diagnostic({{"error", e.kind()}, {"exit", kExitNumerical}, {"t", e.time()},
                       {"message", e.what()}});
    return kExitNumerical;
  } catch (const NotConverged& e) {
    runner.diagnostic({{"error", e.kind()}, {"exit", kExitNumerical},
                       {"iterations", e.iterations()}, {"residual", e.residual()},
                       {"message", e.what()}});
    return kExitNumerical;
  } catch (const Error& e) {
    runner.diagnostic({{"error", e.kind()}, {"exit", kExitNumerical}, {"message", e.what()}});
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    runner.diagnostic({{"error", "OutputError"}, {"exit", kExitConfig}, {"message", e.what()}});
    return kExitConfig;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  runner.log(LogLevel::Debug, "finished in " + format_double(secs) + " s");
  return code;
}

}  // namespace mflqr
