// Acceptance suite: one PASS/FAIL line per criterion.
//
//   acceptance --out DIR [--workers N] [--second-workers M] [--seed S]
//              [--dump-configs DIR]
//
// The suite runs twice (workers N, then M) into DIR/run1 and DIR/run2; the
// last criterion compares the two sets of report files with the run blocks
// removed.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "rvlab/gaussian_moments.hpp"
#include "rvlab/mc_lab.hpp"
#include "rvlab/report.hpp"
#include "rvlab/version.hpp"

using namespace rvlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int id;
  std::string title;
  bool passed;
  std::string detail;
};

struct Options {
  fs::path out = "acceptance_reports";
  std::size_t workers = 1;
  std::size_t second_workers = 2;
  std::uint64_t seed = 20240601;
  std::optional<fs::path> dump_configs;
};

std::string fmt(double x) { return format_sig(x, 6); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void save(const fs::path& dir, const ExperimentReport& r) {
  write_file_atomic(dir / (r.config.label + ".json"), report_to_json(r).dump(2) + "\n");
  write_file_atomic(dir / (r.config.label + ".csv"), report_to_csv(r));
}

std::string failed_gates(const ExperimentReport& r, const std::string& prefix = "") {
  std::string s;
  for (const auto& g : r.gates) {
    if (!g.passed && g.name.rfind(prefix, 0) == 0) s += (s.empty() ? "" : "; ") + g.detail;
  }
  return s;
}

bool gates_pass(const ExperimentReport& r, const std::vector<std::string>& names) {
  for (const auto& g : r.gates) {
    for (const auto& n : names) {
      if (g.name == n && !g.passed) return false;
    }
  }
  return true;
}

std::string gate_details(const ExperimentReport& r, const std::vector<std::string>& names) {
  std::string s;
  for (const auto& g : r.gates) {
    for (const auto& n : names) {
      if (g.name == n) s += std::string(s.empty() ? "" : "; ") + (g.passed ? "" : "FAILED ") + g.detail;
    }
  }
  return s;
}

ModelSpec bm() { return ModelSpec{}; }

ModelSpec heston() {
  ModelSpec m;
  m.vol = MeanRevertingVolLeverage{5.0, 1.0, 1.0, -0.7, 1.0, 0.0};
  return m;
}

// ---------------------------------------------------------------------------
// Experiment configurations.

std::vector<ExperimentConfig> lln_configs(std::uint64_t seed) {
  std::vector<ExperimentConfig> out;
  const std::vector<std::pair<std::string, ModelSpec>> models{{"bm", bm()}, {"heston", heston()}};
  struct Est {
    std::string tag;
    EstimatorSpec spec;
  };
  std::vector<Est> estimators;
  {
    EstimatorSpec s;
    s.statistic = Statistic::RealizedVariance;
    estimators.push_back({"rv", s});
    s = {};
    s.statistic = Statistic::Bipower;
    s.r = s.s = 1.0;
    s.normalized = true;
    estimators.push_back({"bpv11", s});
    s = {};
    s.statistic = Statistic::PowerVariation;
    s.r = 1.0;
    s.normalized = true;
    estimators.push_back({"pv1", s});
    s = {};
    s.statistic = Statistic::PowerVariation;
    s.r = 2.0;
    estimators.push_back({"pv2", s});
    s = {};
    s.statistic = Statistic::Multipower;
    s.powers = {1.0, 1.0, 1.0, 1.0};
    s.normalized = true;
    estimators.push_back({"mpv1111", s});
  }
  std::uint64_t k = 0;
  for (const auto& [mtag, model] : models) {
    for (const auto& e : estimators) {
      ExperimentConfig c;
      c.label = "c4_lln_" + e.tag + "_" + mtag;
      c.kind = ExperimentKind::Lln;
      c.model = model;
      c.estimator = e.spec;
      c.n_list = {50, 100, 200, 400, 800, 1600, 3200, 6400};
      c.replications = 1000;
      c.seed = seed + 100 + k++;
      c.gates.slope = Range{-0.6, -0.4};
      out.push_back(c);
    }
  }
  return out;
}

ExperimentConfig clt_base(const std::string& label, std::uint64_t seed) {
  ExperimentConfig c;
  c.label = label;
  c.kind = ExperimentKind::Clt;
  c.n_list = {1000};
  c.replications = 5000;
  c.seed = seed;
  c.mode = ModeSelection::Both;
  c.gates.z_mean_abs_max = 0.05;
  c.gates.z_variance = Range{0.90, 1.10};
  c.gates.ks_max = 0.03;
  c.gates.coverage95 = Range{0.935, 0.965};
  c.gates.feasible_coverage95 = Range{0.925, 0.97};
  return c;
}

std::vector<ExperimentConfig> clt_configs(std::uint64_t seed) {
  ExperimentConfig rv = clt_base("c5_clt_rv_bm", seed + 200);
  rv.model = bm();
  rv.estimator.statistic = Statistic::RealizedVariance;

  ExperimentConfig bpv = clt_base("c5_clt_bpv11_heston", seed + 201);
  bpv.model = heston();
  bpv.estimator.statistic = Statistic::Bipower;
  bpv.estimator.r = bpv.estimator.s = 1.0;
  return {rv, bpv};
}

ExperimentConfig covariation_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.label = "c7_clt_covariation_bm2";
  c.kind = ExperimentKind::Clt;
  c.model.dim = 2;
  c.model.correlation = Eigen::MatrixXd::Identity(2, 2);
  c.model.correlation(0, 1) = c.model.correlation(1, 0) = 0.5;
  c.estimator.statistic = Statistic::Covariation;
  c.n_list = {1000};
  c.replications = 5000;
  c.seed = seed + 300;
  c.mode = ModeSelection::Oracle;
  c.gates.covariance_rel_tol = 0.10;
  return c;
}

ExperimentConfig joint_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.label = "c8_clt_joint_bpv_rv_bm";
  c.kind = ExperimentKind::Clt;
  c.estimator.statistic = Statistic::JointBipowerRV;
  c.n_list = {1000};
  c.replications = 5000;
  c.seed = seed + 400;
  c.mode = ModeSelection::Oracle;
  c.gates.covariance_rel_tol = 0.10;
  return c;
}

ExperimentConfig jump_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.label = "c9_jumptest_bm";
  c.kind = ExperimentKind::Jump;
  c.n_list = {1000};
  c.replications = 5000;
  c.seed = seed + 500;
  c.jump_sd_root_n = 5.0;
  c.gates.size5 = Range{0.035, 0.065};
  c.gates.power_minus_size5_min = 0.20;
  return c;
}

ExperimentConfig det_config(std::uint64_t seed) {
  ExperimentConfig c;
  c.label = "c10_det_bm2";
  c.kind = ExperimentKind::Lln;
  c.model.dim = 2;
  c.estimator.statistic = Statistic::DetRank;
  c.n_list = {2000};
  c.replications = 500;
  c.seed = seed + 600;
  c.gates.mean_rel_tol = 0.05;
  return c;
}

// ---------------------------------------------------------------------------
// Criteria.

Outcome criterion_constants() {
  const double mu1 = abs_moment(1.0);
  const double theta = theta_constant();
  const double pi = std::numbers::pi;
  std::vector<std::pair<std::string, bool>> checks{
      {"mu_1", std::abs(mu1 - std::sqrt(2.0 / pi)) <= 1e-12},
      {"theta", std::abs(theta - (pi * pi / 4 + pi - 5)) <= 1e-12},
      {"v_2", power_variance_constant(2.0) == 2.0},
      {"omega_1", multipower_variance_constant(1) == 2.0},
      {"bipower(1,1)", std::abs(bipower_variance_constant(1.0, 1.0) - std::pow(mu1, 4) * (2 + theta)) <= 1e-12},
  };
  bool ok = true;
  std::string detail;
  for (const auto& [name, pass] : checks) {
    ok = ok && pass;
    detail += (detail.empty() ? "" : ", ") + name + (pass ? " ok" : " MISMATCH");
  }
  return {1, "constants", ok, detail};
}

Outcome criterion_oracles(const fs::path& dir, std::uint64_t seed, std::size_t workers) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<OracleQuery> queries;
  for (double r : {0.5, 1.0, 4.0 / 3.0, 2.0, 3.0, 4.0}) queries.push_back({OracleKind::AbsMoment, r, 1.0, 1});
  for (double r : {0.5, 1.0, 2.0}) queries.push_back({OracleKind::PowerVariance, r, 1.0, 1});
  queries.push_back({OracleKind::BipowerConstant, 1.0, 1.0, 1});
  queries.push_back({OracleKind::BipowerConstant, 0.5, 1.5, 1});
  for (int i = 1; i <= 4; ++i) queries.push_back({OracleKind::Omega, 1.0, 1.0, i});

  Json rows = Json::array();
  bool ok = true;
  double worst = 0.0;
  std::string worst_name;
  std::uint64_t k = 0;
  for (const auto& q : queries) {
    const auto est = moment_oracle(q, 10'000'000, seed + k++, workers);
    const double closed = closed_form(q);
    const double dev = std::abs(est.estimate - closed) / est.std_error;
    ok = ok && dev <= 4.0;
    if (dev > worst) {
      worst = dev;
      worst_name = q.name();
    }
    rows.push_back(Json{{"constant", q.name()},
                        {"closed_form", closed},
                        {"monte_carlo", est.estimate},
                        {"std_error", est.std_error},
                        {"deviation_se", dev}});
  }
  const double elapsed = seconds_since(t0);
  write_file_atomic(dir / "c2_oracles.json",
                    Json{{"tool", std::string(kToolName)}, {"seed", seed}, {"draws", 10000000}, {"rows", rows}}.dump(2) + "\n");
  const bool fast = elapsed < 60.0;
  std::ostringstream os;
  os << queries.size() << " constants, worst " << worst_name << " at " << fmt(worst) << " SE, " << fmt(elapsed)
     << " s";
  return {2, "closed forms vs moment oracle", ok && fast, os.str() + (fast ? "" : " (over 60 s)")};
}

Outcome criterion_quadrature() {
  double worst = 0.0;
  for (double r : {0.7, 1.0, 1.5, 2.4}) {
    for (double s : {0.5, 1.0, 3.0}) {
      const auto f = GHFunction::custom(
          1, [r](std::span<const double> y) { return std::pow(std::abs(y[0]), r); }, Parity::Even, r);
      worst = std::max(worst, std::abs(rho(f, SpotCov::scalar(s))(0, 0) - abs_moment(r) * std::pow(s, r)));
    }
  }
  return {3, "quadrature fidelity", worst <= 1e-8, "max |error| " + format_sig(worst, 3) + " over 12 (r, sigma)"};
}

}  // namespace

struct SuiteResult {
  std::vector<Outcome> outcomes;
};

SuiteResult run_suite(const fs::path& dir, const Options& opt, std::size_t workers) {
  fs::create_directories(dir);
  SuiteResult res;
  auto& out = res.outcomes;
  auto log = [](const std::string& s) { std::cerr << "  .. " << s << std::endl; };

  out.push_back(criterion_constants());
  out.push_back(criterion_oracles(dir, opt.seed, workers));
  out.push_back(criterion_quadrature());

  {
    bool ok = true;
    std::string detail;
    for (auto c : lln_configs(opt.seed)) {
      c.workers = workers;
      const auto r = run_lln(c);
      log(c.label + " slope " + fmt(r.slope.value_or(NAN)) + " (" + fmt(r.wall_seconds) + " s)");
      save(dir, r);
      ok = ok && r.passed;
      detail += (detail.empty() ? "" : ", ") + c.label.substr(7) + " " + fmt(r.slope.value_or(NAN));
    }
    out.push_back({4, "LLN slopes in [-0.6, -0.4]", ok, detail});
  }

  {
    bool ok5 = true, ok6 = true;
    std::string d5, d6;
    for (auto c : clt_configs(opt.seed)) {
      c.workers = workers;
      const auto r = run_clt(c);
      log(c.label + " (" + fmt(r.wall_seconds) + " s)");
      save(dir, r);
      const auto& z = *r.rows[0].components[0].oracle;
      const auto& f = *r.rows[0].components[0].feasible;
      const std::vector<std::string> oracle_gates{"oracle_z_mean", "oracle_z_variance", "oracle_ks",
                                                  "oracle_coverage95", "excluded_fraction"};
      ok5 = ok5 && gates_pass(r, oracle_gates);
      ok6 = ok6 && gates_pass(r, {"feasible_coverage95", "excluded_fraction"});
      std::ostringstream a, b;
      a << c.label.substr(7) << ": mean " << fmt(z.mean) << " var " << fmt(z.variance) << " KS " << fmt(z.ks)
        << " cov95 " << fmt(z.coverage95);
      b << c.label.substr(7) << ": cov95 " << fmt(f.coverage95);
      d5 += (d5.empty() ? "" : "; ") + a.str();
      d6 += (d6.empty() ? "" : "; ") + b.str();
      if (!gates_pass(r, oracle_gates)) d5 += " [" + failed_gates(r) + "]";
    }
    out.push_back({5, "CLT oracle normality", ok5, d5});
    out.push_back({6, "CLT feasible coverage", ok6, d6});
  }

  for (auto make : {covariation_config, joint_config}) {
    auto c = make(opt.seed);
    c.workers = workers;
    const auto r = run_clt(c);
    log(c.label + " (" + fmt(r.wall_seconds) + " s)");
    save(dir, r);
    const auto& emp = r.rows[0].error_covariance;
    const auto& th = r.rows[0].theory_covariance;
    double worst = 0.0;
    for (Eigen::Index a = 0; a < emp.rows(); ++a)
      for (Eigen::Index b = 0; b < emp.cols(); ++b)
        worst = std::max(worst, std::abs(emp(a, b) - th(a, b)) / std::abs(th(a, b)));
    const bool covariation = c.estimator.statistic == Statistic::Covariation;
    out.push_back({covariation ? 7 : 8,
                   covariation ? "covariation CLT covariance" : "joint bipower/RV covariance", r.passed,
                   "worst relative entry error " + fmt(worst) +
                       (r.passed ? "" : " [" + failed_gates(r) + "]")});
  }

  {
    auto c = jump_config(opt.seed);
    c.workers = workers;
    const auto r = run_jump_experiment(c);
    log(c.label + " (" + fmt(r.wall_seconds) + " s)");
    save(dir, r);
    const auto& row = r.rows[0];
    out.push_back({9, "jump test size and power", r.passed,
                   "size5 " + fmt(row.size5) + ", power5 " + fmt(row.power5) +
                       (r.passed ? "" : " [" + failed_gates(r) + "]")});
  }

  {
    auto c = det_config(opt.seed);
    c.workers = workers;
    const auto r = run_lln(c);
    log(c.label + " (" + fmt(r.wall_seconds) + " s)");
    save(dir, r);
    out.push_back({10, "determinant statistic", r.passed,
                   "mean " + fmt(r.rows[0].components[0].mean_estimate) + " vs target " +
                       fmt(r.rows[0].components[0].mean_target)});
  }
  return res;
}

int main(int argc, char** argv) {
  Options opt;
  if (const char* s = std::getenv("RVLAB_SEED")) opt.seed = std::strtoull(s, nullptr, 10);
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << a << "\n";
        std::exit(1);
      }
      return argv[++i];
    };
    if (a == "--out") opt.out = next();
    else if (a == "--workers") opt.workers = std::stoul(next());
    else if (a == "--second-workers") opt.second_workers = std::stoul(next());
    else if (a == "--seed") opt.seed = std::stoull(next());
    else if (a == "--dump-configs") opt.dump_configs = next();
    else {
      std::cerr << "usage: acceptance --out DIR [--workers N] [--second-workers M] [--seed S] [--dump-configs DIR]\n";
      return 1;
    }
  }

  if (opt.dump_configs) {
    fs::create_directories(*opt.dump_configs);
    std::vector<ExperimentConfig> all = lln_configs(opt.seed);
    for (const auto& c : clt_configs(opt.seed)) all.push_back(c);
    all.push_back(covariation_config(opt.seed));
    all.push_back(joint_config(opt.seed));
    all.push_back(jump_config(opt.seed));
    all.push_back(det_config(opt.seed));
    for (const auto& c : all) {
      Json j = config_to_json(c);
      write_file_atomic(*opt.dump_configs / (c.label + ".json"), j.dump(2) + "\n");
    }
    std::cout << "wrote " << all.size() << " configs to " << opt.dump_configs->string() << "\n";
    return 0;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const fs::path run1 = opt.out / "run1", run2 = opt.out / "run2";
  std::cerr << "suite pass 1 (workers " << opt.workers << ")\n";
  const SuiteResult first = run_suite(run1, opt, opt.workers);
  std::cerr << "suite pass 2 (workers " << opt.second_workers << ")\n";
  const SuiteResult second = run_suite(run2, opt, opt.second_workers);

  std::vector<Outcome> outcomes = first.outcomes;
  {
    std::size_t files = 0, same = 0;
    std::string differing;
    for (const auto& entry : fs::directory_iterator(run1)) {
      const fs::path other = run2 / entry.path().filename();
      ++files;
      std::ifstream a(entry.path()), b(other);
      std::stringstream sa, sb;
      sa << a.rdbuf();
      sb << b.rdbuf();
      std::string ta = sa.str(), tb = sb.str();
      if (entry.path().extension() == ".json") {
        ta = strip_run_info(Json::parse(ta)).dump(2);
        tb = fs::exists(other) ? strip_run_info(Json::parse(tb)).dump(2) : std::string();
      } else {
        ta = strip_run_info(ta);
        tb = strip_run_info(tb);
      }
      if (fs::exists(other) && ta == tb) ++same;
      else differing += " " + entry.path().filename().string();
    }
    bool outcomes_match = first.outcomes.size() == second.outcomes.size();
    for (std::size_t i = 0; outcomes_match && i < first.outcomes.size(); ++i) {
      outcomes_match = first.outcomes[i].passed == second.outcomes[i].passed;
    }
    std::ostringstream os;
    os << same << "/" << files << " report files identical (workers " << opt.workers << " vs "
       << opt.second_workers << ")" << (differing.empty() ? "" : "; differ:" + differing);
    outcomes.push_back({11, "determinism", files > 0 && same == files && outcomes_match, os.str()});
  }

  bool all = true;
  for (const auto& o : outcomes) {
    all = all && o.passed;
    std::cout << (o.passed ? "PASS" : "FAIL") << "  criterion " << o.id << " (" << o.title << "): " << o.detail
              << "\n";
  }
  std::cout << (all ? "all criteria passed" : "some criteria FAILED") << " in " << fmt(seconds_since(t0))
            << " s; reports in " << opt.out.string() << "\n";
  return all ? 0 : 1;
}
