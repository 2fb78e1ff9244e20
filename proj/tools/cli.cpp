#include "cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rvlab/asymptotics.hpp"
#include "rvlab/csv_io.hpp"
#include "rvlab/gaussian_moments.hpp"
#include "rvlab/mc_lab.hpp"
#include "rvlab/realized.hpp"
#include "rvlab/report.hpp"
#include "rvlab/simulator.hpp"
#include "rvlab/version.hpp"

namespace rvlab {
namespace {

class UsageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("RVLAB_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw UsageError(std::string("RVLAB_SEED is not an unsigned integer: ") + s);
  return static_cast<std::uint64_t>(v);
}

std::string fmt(double x) { return format_sig(x); }

// ---------------------------------------------------------------------------

struct ConstantsArgs {
  std::vector<double> r{0.5, 1.0, 1.5, 2.0, 3.0, 4.0};
  std::vector<int> omega{1, 2, 3, 4};
  std::vector<std::string> bipower{"1:1"};
};

int run_constants(const ConstantsArgs& a, std::ostream& out) {
  out << "r,mu_r,v_r\n";
  for (double r : a.r) {
    out << fmt(r) << "," << fmt(abs_moment(r)) << ",";
    out << (r > 0.0 ? fmt(power_variance_constant(r)) : std::string("nan")) << "\n";
  }
  out << "\ntheta," << fmt(theta_constant()) << "\n";
  out << "\nI,omega2_I\n";
  for (int i : a.omega) out << i << "," << fmt(multipower_variance_constant(i)) << "\n";
  out << "\nr,s,bipower_variance\n";
  for (const auto& pair : a.bipower) {
    const auto colon = pair.find(':');
    if (colon == std::string::npos) throw UsageError("--bipower expects r:s, got '" + pair + "'");
    const double r = std::stod(pair.substr(0, colon));
    const double s = std::stod(pair.substr(colon + 1));
    out << fmt(r) << "," << fmt(s) << "," << fmt(bipower_variance_constant(r, s)) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SeriesArgs {
  std::string csv;
  std::size_t n = 0;
  std::vector<std::string> columns;
  bool log_prices = false;
  double t = 1.0;
  std::size_t component = 0;
};

ReturnSeries load_returns(const SeriesArgs& a, std::ostream& err) {
  PriceCsvSchema schema;
  schema.price_columns = a.columns;
  if (a.log_prices) schema.log_prices = true;
  if (schema.price_columns.empty()) {
    // Simulated paths carry spot variance columns that are not prices.
    for (const auto& h : read_csv_header(a.csv)) {
      if (h != schema.time_column && h.rfind("spot_var", 0) != 0) schema.price_columns.push_back(h);
    }
  }
  IngestResult in = ingest_csv(a.csv, schema);
  for (const auto& w : in.warnings) err << "warning: " << w << "\n";
  ReturnSeries ret = returns_from_path(in.path, a.n);
  if (ret.sparse()) {
    err << "warning: " << in.path.size() << " observations for n = " << a.n
        << " intervals; some returns are zero\n";
  }
  return ret;
}

struct MeasuresArgs {
  SeriesArgs series;
  std::string stat = "rv";
  double r = 2.0;
  double s = 1.0;
  std::vector<double> powers;
  std::optional<double> ci;
};

int run_measures(const MeasuresArgs& a, std::ostream& out, std::ostream& err) {
  const Statistic stat = statistic_from_string(a.stat);
  const ReturnSeries ret = load_returns(a.series, err);
  const std::size_t j = a.series.component;
  const double t = a.series.t;
  if (j >= ret.dim()) throw UsageError("--component out of range");
  auto print_ci = [&](const CltResult& c) {
    out << "ci " << fmt(c.level) << " " << fmt(c.ci_lo) << " " << fmt(c.ci_hi) << " se " << fmt(c.standard_error())
        << "\n";
    if (c.degenerate) err << "warning: estimated asymptotic variance is zero\n";
  };
  switch (stat) {
    case Statistic::RealizedVariance:
    case Statistic::PowerVariation: {
      const double r = stat == Statistic::RealizedVariance ? 2.0 : a.r;
      out << fmt(realized_power_variation(ret, j, r, t)) << "\n";
      if (a.ci) print_ci(ci_power_variation(ret, j, r, t, *a.ci));
      return kExitOk;
    }
    case Statistic::Bipower:
      out << fmt(realized_bipower(ret, j, a.r, a.s, t)) << "\n";
      if (a.ci) print_ci(ci_bipower(ret, j, a.r, a.s, t, *a.ci));
      return kExitOk;
    case Statistic::Covariation: {
      const Eigen::MatrixXd rc = realized_covariation(ret, t);
      std::optional<CltMatrixResult> ci;
      if (a.ci) ci = ci_covariation(ret, t, *a.ci);
      for (Eigen::Index r = 0; r < rc.rows(); ++r) {
        for (Eigen::Index c = 0; c < rc.cols(); ++c) out << (c ? "," : "") << fmt(rc(r, c));
        out << "\n";
      }
      if (ci) {
        for (Eigen::Index r = 0; r < rc.rows(); ++r)
          for (Eigen::Index c = r; c < rc.cols(); ++c)
            out << "ci " << fmt(ci->level) << " [" << r << "," << c << "] " << fmt(ci->ci_lo(r, c)) << " "
                << fmt(ci->ci_hi(r, c)) << "\n";
      }
      return kExitOk;
    }
    default:
      break;
  }
  if (a.ci) throw UsageError("--ci is available for rv, power, bipower and covariation");
  switch (stat) {
    case Statistic::Multipower:
      if (a.powers.empty()) throw UsageError("multipower needs --powers");
      out << fmt(realized_multipower(ret, j, a.powers, t)) << "\n";
      break;
    case Statistic::QuarticityRV: out << fmt(quarticity_rv(ret, j, t)) << "\n"; break;
    case Statistic::QuarticityTripower: out << fmt(quarticity_tripower(ret, j, t)) << "\n"; break;
    case Statistic::QuarticityQuadpower: out << fmt(quarticity_quadpower(ret, j, t)) << "\n"; break;
    case Statistic::JointBipowerRV:
      out << fmt(realized_bipower(ret, j, 1.0, 1.0, t)) << "," << fmt(realized_variance(ret, j, t)) << "\n";
      break;
    case Statistic::DetRank: out << fmt(det_rank_statistic(ret, t)) << "\n"; break;
    default: break;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string model = "constant";
  double sigma = 1.0, drift = 0.0;
  MeanRevertingVolLeverage heston;
  OUJumpVol ou;
  std::optional<double> price_jump_lambda;
  double price_jump_sd = 0.1;
  bool single_jump = false;
  std::size_t dim = 1;
  double correlation = 0.0;
  std::size_t n_fine = 23400;
  std::optional<std::uint64_t> seed;
  std::uint64_t stream = 0;
  std::string out;
};

ModelSpec model_from_args(const SimulateArgs& a) {
  ModelSpec m;
  if (a.model == "constant") {
    m.vol = ConstantVol{a.drift, a.sigma};
  } else if (a.model == "heston") {
    MeanRevertingVolLeverage h = a.heston;
    h.drift = a.drift;
    m.vol = h;
  } else if (a.model == "ou-jump") {
    OUJumpVol o = a.ou;
    o.drift = a.drift;
    m.vol = o;
  } else {
    throw UsageError("--model must be constant, heston or ou-jump");
  }
  if (a.price_jump_lambda || a.single_jump) {
    m.price_jumps = PriceJumpOverlay{a.price_jump_lambda.value_or(0.0), a.price_jump_sd, a.single_jump};
  }
  m.dim = a.dim;
  if (a.dim > 1) {
    const auto d = static_cast<Eigen::Index>(a.dim);
    m.correlation = Eigen::MatrixXd::Constant(d, d, a.correlation);
    m.correlation.diagonal().setOnes();
  }
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return m;
}

std::string path_to_csv(const SimPath& p, std::uint64_t seed) {
  Json cfg{{"model", model_to_json(p.model)}, {"n_fine", p.n_fine}, {"seed", seed}, {"stream", p.stream}};
  std::ostringstream os;
  os << "# " << kToolName << " " << kVersion << "\n";
  os << "# config: " << cfg.dump() << "\n";
  os << "# seed: " << seed << "\n";
  os << "# log_prices: true\n";
  os << "time";
  const bool multi = p.dim > 1;
  for (std::size_t c = 0; c < p.dim; ++c) os << ",y" << (multi ? std::to_string(c) : "");
  for (std::size_t c = 0; c < p.dim; ++c) os << ",spot_var" << (multi ? std::to_string(c) : "");
  os << "\n";
  char buf[40];
  for (std::size_t k = 0; k <= p.n_fine; ++k) {
    std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(k) / static_cast<double>(p.n_fine));
    os << buf;
    for (std::size_t c = 0; c < p.dim; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", p.level(k, c));
      os << buf;
    }
    for (std::size_t c = 0; c < p.dim; ++c) {
      std::snprintf(buf, sizeof(buf), ",%.17g", p.variance(k, c));
      os << buf;
    }
    os << "\n";
  }
  return os.str();
}

int run_simulate(const SimulateArgs& a, std::ostream& out) {
  const ModelSpec m = model_from_args(a);
  const std::uint64_t seed = a.seed ? *a.seed : env_seed().value_or(1);
  if (a.n_fine < 100) throw UsageError("--n-fine must be >= 100");
  const SimPath p = simulate(m, a.n_fine, seed, a.stream);
  const std::string csv = path_to_csv(p, seed);
  if (a.out.empty() || a.out == "-") {
    out << csv;
  } else {
    write_file_atomic(a.out, csv);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct ExperimentArgs {
  std::string config;
  std::string out;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

int run_experiment_cmd(ExperimentKind kind, const ExperimentArgs& a, std::ostream& out) {
  std::ifstream in(a.config);
  if (!in) throw UsageError("cannot open config file " + a.config);
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config " + a.config + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  if (a.seed) {
    j["seed"] = *a.seed;
  } else if (!j.contains("seed")) {
    if (auto s = env_seed()) j["seed"] = *s;
  }
  if (a.workers) j["workers"] = *a.workers;
  j["kind"] = to_string(kind);
  ExperimentConfig config;
  try {
    config = config_from_json(j);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const ExperimentReport report = run_experiment(config);

  std::filesystem::path prefix = a.out;
  if (prefix.empty()) prefix = std::filesystem::path(a.config).stem();
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  write_file_atomic(prefix.string() + ".json", report_to_json(report).dump(2) + "\n");
  write_file_atomic(prefix.string() + ".csv", report_to_csv(report));

  out << config.estimator.name() << " on " << config.model.name() << ": " << report.rows.size()
      << " rows, " << format_sig(report.wall_seconds, 4) << " s\n";
  if (report.slope) out << "slope " << fmt(*report.slope) << " se " << fmt(report.slope_se.value_or(0.0)) << "\n";
  for (const auto& g : report.gates) out << (g.passed ? "PASS " : "FAIL ") << g.name << ": " << g.detail << "\n";
  out << "wrote " << prefix.string() << ".json and " << prefix.string() << ".csv\n";
  return report.passed ? kExitOk : kExitGateFailed;
}

// ---------------------------------------------------------------------------

struct JumpArgs {
  SeriesArgs series;
  double alpha = 0.05;
};

int run_jumptest(const JumpArgs& a, std::ostream& out, std::ostream& err) {
  const ReturnSeries ret = load_returns(a.series, err);
  if (a.series.component >= ret.dim()) throw UsageError("--component out of range");
  const JumpTestResult r = jump_test(ret, a.series.component, a.series.t);
  out << "n," << r.n << "\n";
  out << "rv," << fmt(r.rv) << "\n";
  out << "bpv_scaled," << fmt(r.bpv_scaled) << "\n";
  out << "iq," << fmt(r.iq_hat) << "\n";
  out << "stat_ratio," << fmt(r.stat_ratio) << "\n";
  out << "p_ratio," << fmt(r.p_ratio) << "\n";
  out << "p_ratio_two_sided," << fmt(r.p_ratio_two_sided) << "\n";
  out << "stat_linear," << fmt(r.stat_linear) << "\n";
  out << "p_linear," << fmt(r.p_linear) << "\n";
  out << "p_linear_two_sided," << fmt(r.p_linear_two_sided) << "\n";
  out << "reject_at_" << fmt(a.alpha) << "," << (r.p_ratio < a.alpha ? "yes" : "no") << "\n";
  out << "note," << r.note << "\n";
  if (r.degenerate) err << "warning: estimated quarticity is zero; statistics undefined\n";
  return kExitOk;
}

void add_series_options(CLI::App* cmd, SeriesArgs& s) {
  cmd->add_option("--csv", s.csv, "Price CSV (time column plus one column per asset)")->required();
  cmd->add_option("--n", s.n, "Number of equispaced returns on [0, 1]")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--columns", s.columns, "Price columns to use (default: all but time)");
  cmd->add_flag("--log-prices", s.log_prices, "Values are already log prices");
  cmd->add_option("--t", s.t, "Evaluate at time t in (0, 1]");
  cmd->add_option("--component", s.component, "Asset index for univariate statistics");
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Realized power, bipower and multipower variation toolkit", kToolName};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  ConstantsArgs constants;
  auto* c_cmd = app.add_subcommand("constants", "Print the Gaussian constants");
  c_cmd->add_option("--r", constants.r, "Powers r for mu_r and v_r");
  c_cmd->add_option("--omega", constants.omega, "Term counts I for omega_I^2");
  c_cmd->add_option("--bipower", constants.bipower, "Pairs r:s for the bipower variance constant");

  MeasuresArgs measures;
  auto* m_cmd = app.add_subcommand("measures", "Compute a realized measure from a price CSV");
  add_series_options(m_cmd, measures.series);
  m_cmd->add_option("--stat", measures.stat,
                    "rv, power, bipower, multipower, quarticity-rv, quarticity-tripower, "
                    "quarticity-quadpower, covariation, joint-bipower-rv, det");
  m_cmd->add_option("--r", measures.r, "Power r");
  m_cmd->add_option("--s", measures.s, "Second bipower power s");
  m_cmd->add_option("--powers", measures.powers, "Multipower powers");
  m_cmd->add_option("--ci", measures.ci, "Confidence level for a feasible interval")->check(CLI::Range(0.0, 1.0));

  SimulateArgs sim;
  auto* s_cmd = app.add_subcommand("simulate", "Simulate a log-price path and write it as CSV");
  s_cmd->add_option("--model", sim.model, "constant, heston or ou-jump");
  s_cmd->add_option("--sigma", sim.sigma, "Constant volatility");
  s_cmd->add_option("--drift", sim.drift, "Drift");
  s_cmd->add_option("--kappa", sim.heston.kappa, "Heston mean reversion");
  s_cmd->add_option("--theta", sim.heston.theta, "Heston long-run variance");
  s_cmd->add_option("--xi", sim.heston.xi, "Heston vol of variance");
  s_cmd->add_option("--rho", sim.heston.rho, "Heston leverage correlation");
  s_cmd->add_option("--v0", sim.heston.v0, "Initial variance (heston)");
  s_cmd->add_option("--lambda", sim.ou.lambda, "Variance jump intensity (ou-jump)");
  s_cmd->add_option("--jump-mean", sim.ou.jump_mean, "Mean variance jump (ou-jump)");
  s_cmd->add_option("--decay", sim.ou.decay, "Variance decay rate (ou-jump)");
  s_cmd->add_option("--price-jump-lambda", sim.price_jump_lambda, "Add Poisson price jumps at this intensity");
  s_cmd->add_option("--price-jump-sd", sim.price_jump_sd, "Price jump standard deviation");
  s_cmd->add_flag("--single-jump", sim.single_jump, "Add exactly one price jump");
  s_cmd->add_option("--dim", sim.dim, "Number of assets");
  s_cmd->add_option("--correlation", sim.correlation, "Pairwise correlation of price shocks");
  s_cmd->add_option("--n-fine", sim.n_fine, "Number of Euler steps on [0, 1]");
  s_cmd->add_option("--seed", sim.seed, "Seed (default: RVLAB_SEED or 1)");
  s_cmd->add_option("--stream", sim.stream, "Stream index");
  s_cmd->add_option("--out", sim.out, "Output file (default: stdout)");

  ExperimentArgs exp_args;
  std::vector<std::pair<CLI::App*, ExperimentKind>> exp_cmds;
  for (const auto& [name, kind, help] :
       {std::tuple{"lln", ExperimentKind::Lln, "Monte Carlo consistency experiment"},
        std::tuple{"clt", ExperimentKind::Clt, "Monte Carlo central limit experiment"},
        std::tuple{"jumptest-mc", ExperimentKind::Jump, "Monte Carlo size and power of the jump test"}}) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", exp_args.config, "Experiment config (JSON)")->required();
    cmd->add_option("--out", exp_args.out, "Output path prefix for .json and .csv");
    cmd->add_option("--workers", exp_args.workers, "Worker threads");
    cmd->add_option("--seed", exp_args.seed, "Override the config seed");
    exp_cmds.emplace_back(cmd, kind);
  }

  JumpArgs jump;
  auto* j_cmd = app.add_subcommand("jumptest", "Test a price series for jumps");
  add_series_options(j_cmd, jump.series);
  j_cmd->add_option("--alpha", jump.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolName << " " << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return kExitUsage;
  }

  try {
    if (c_cmd->parsed()) return run_constants(constants, out);
    if (m_cmd->parsed()) return run_measures(measures, out, err);
    if (s_cmd->parsed()) return run_simulate(sim, out);
    if (j_cmd->parsed()) return run_jumptest(jump, out, err);
    for (const auto& [cmd, kind] : exp_cmds) {
      if (cmd->parsed()) return run_experiment_cmd(kind, exp_args, out);
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    err << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace rvlab
