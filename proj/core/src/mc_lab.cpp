#include "rvlab/mc_lab.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <ctime>
#include <exception>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "rvlab/asymptotics.hpp"
#include "rvlab/gaussian_moments.hpp"
#include "rvlab/rng.hpp"

namespace rvlab {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Runs body(i) for i in [0, count).  Index assignment is static, and each
/// body writes only its own slot, so results do not depend on `workers`.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& body) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += workers) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// One component of one replication at one n.
struct Sample {
  double estimate = 0.0;
  double target = 0.0;
  double avar_oracle = kNaN;
  double avar_feasible = kNaN;
};

struct RepAtN {
  std::vector<Sample> samples;
  /// Row-major m x m integrated A for this path (CLT runs).
  std::vector<double> theory;
  // Jump experiments: one-sided p-values under null and alternative.
  double p_ratio_null = kNaN, p_ratio_alt = kNaN;
  double p_linear_null = kNaN, p_linear_alt = kNaN;
};

/// Estimator plus everything needed to score it against the simulated truth.
class Evaluator {
 public:
  Evaluator(const EstimatorSpec& spec, std::size_t dim, double t) : spec_(spec), dim_(dim), t_(t) {
    const std::size_t j = spec.component;
    if (j >= dim && spec.statistic != Statistic::Covariation && spec.statistic != Statistic::DetRank) {
      throw std::invalid_argument("estimator component out of range for model dimension");
    }
    switch (spec.statistic) {
      case Statistic::RealizedVariance:
        names_ = {"rv"};
        break;
      case Statistic::PowerVariation:
        names_ = {"pv"};
        scale_ = abs_moment(spec.r);
        break;
      case Statistic::Bipower:
        names_ = {"bpv"};
        scale_ = abs_moment(spec.r) * abs_moment(spec.s);
        break;
      case Statistic::Multipower: {
        if (spec.powers.empty()) throw std::invalid_argument("multipower estimator needs powers");
        names_ = {"mpv"};
        scale_ = 1.0;
        for (double p : spec.powers) scale_ *= abs_moment(p);
        mpv_const_ = multipower_asymptotic_variance(spec.powers);
        break;
      }
      case Statistic::QuarticityRV:
        names_ = {"iq_rv"};
        quart_const_ = power_variance_constant(4.0) / 9.0;
        break;
      case Statistic::QuarticityTripower: {
        names_ = {"iq_tripower"};
        const std::vector<double> p(3, 4.0 / 3.0);
        quart_const_ = multipower_asymptotic_variance(p) / std::pow(abs_moment(4.0 / 3.0), 6);
        break;
      }
      case Statistic::QuarticityQuadpower: {
        names_ = {"iq_quadpower"};
        const std::vector<double> p(4, 1.0);
        quart_const_ = multipower_asymptotic_variance(p) / std::pow(abs_moment(1.0), 8);
        break;
      }
      case Statistic::Covariation:
        if (dim < 2) throw std::invalid_argument("covariation experiments need dim >= 2");
        for (std::size_t a = 0; a < dim; ++a)
          for (std::size_t b = a; b < dim; ++b) {
            names_.push_back("rc_" + std::to_string(a) + std::to_string(b));
            pairs_.emplace_back(a, b);
          }
        break;
      case Statistic::JointBipowerRV: {
        names_ = {"bpv", "rv"};
        const auto g = GHFunction::diagonal({GHFunction::abs_power(1, 0, 1.0), GHFunction::one(1)});
        const auto h =
            GHFunction::column({GHFunction::abs_power(1, 0, 1.0), GHFunction::signed_square(1, 0)});
        joint_const_ = clt_covariance_general(g, h, SpotCov::scalar(1.0)).as_matrix();
        break;
      }
      case Statistic::DetRank:
        names_ = {"det"};
        break;
    }
  }

  const std::vector<std::string>& names() const { return names_; }
  bool has_avar() const { return spec_.statistic != Statistic::DetRank; }

  void evaluate(const SimPath& path, const ReturnSeries& ret, bool feasible, RepAtN& out) const {
    const std::size_t j = spec_.component;
    const double t = t_;
    auto ip = [&](double p) { return integrated_power(path, p, t, j); };
    auto ip_hat = [&](double p) {
      const double q = p / 4.0;
      const double powers[] = {q, q, q, q};
      return realized_multipower(ret, j, powers, t) / std::pow(abs_moment(q), 4);
    };
    const double norm = spec_.normalized ? scale_ : 1.0;
    Sample s;
    switch (spec_.statistic) {
      case Statistic::RealizedVariance: {
        s.estimate = realized_variance(ret, j, t);
        s.target = ip(2.0);
        s.avar_oracle = 2.0 * ip(4.0);
        if (feasible) s.avar_feasible = ci_power_variation(ret, j, 2.0, t, 0.95).avar_hat;
        break;
      }
      case Statistic::PowerVariation: {
        const double r = spec_.r;
        s.estimate = realized_power_variation(ret, j, r, t) / norm;
        s.target = scale_ * ip(r) / norm;
        s.avar_oracle = power_variance_constant(r) * ip(2.0 * r) / (norm * norm);
        if (feasible) s.avar_feasible = ci_power_variation(ret, j, r, t, 0.95).avar_hat / (norm * norm);
        break;
      }
      case Statistic::Bipower: {
        const double r = spec_.r, q = spec_.s;
        s.estimate = realized_bipower(ret, j, r, q, t) / norm;
        s.target = scale_ * ip(r + q) / norm;
        s.avar_oracle = bipower_variance_constant(r, q) * ip(2.0 * (r + q)) / (norm * norm);
        if (feasible) s.avar_feasible = ci_bipower(ret, j, r, q, t, 0.95).avar_hat / (norm * norm);
        break;
      }
      case Statistic::Multipower: {
        const double total = std::accumulate(spec_.powers.begin(), spec_.powers.end(), 0.0);
        s.estimate = realized_multipower(ret, j, spec_.powers, t) / norm;
        s.target = scale_ * ip(total) / norm;
        s.avar_oracle = mpv_const_ * ip(2.0 * total) / (norm * norm);
        if (feasible) s.avar_feasible = mpv_const_ * ip_hat(2.0 * total) / (norm * norm);
        break;
      }
      case Statistic::QuarticityRV:
      case Statistic::QuarticityTripower:
      case Statistic::QuarticityQuadpower: {
        if (spec_.statistic == Statistic::QuarticityRV) s.estimate = quarticity_rv(ret, j, t);
        else if (spec_.statistic == Statistic::QuarticityTripower) s.estimate = quarticity_tripower(ret, j, t);
        else s.estimate = quarticity_quadpower(ret, j, t);
        s.target = ip(4.0);
        s.avar_oracle = quart_const_ * ip(8.0);
        if (feasible) s.avar_feasible = quart_const_ * ip_hat(8.0);
        break;
      }
      case Statistic::Covariation: {
        const Eigen::MatrixXd rc = realized_covariation(ret, t);
        const Eigen::MatrixXd truth = integrated_covariance(path, t);
        const CovarianceArray avar = integrated_covariation_avar(path, t);
        std::optional<CltMatrixResult> fz;
        if (feasible) fz = ci_covariation(ret, t, 0.95);
        const std::size_t m = pairs_.size();
        out.theory.assign(m * m, 0.0);
        for (std::size_t a = 0; a < m; ++a) {
          const auto [ja, ka] = pairs_[a];
          Sample c;
          c.estimate = rc(static_cast<Eigen::Index>(ja), static_cast<Eigen::Index>(ka));
          c.target = truth(static_cast<Eigen::Index>(ja), static_cast<Eigen::Index>(ka));
          c.avar_oracle = avar(ja, ka, ja, ka);
          if (fz) c.avar_feasible = fz->avar_hat(static_cast<Eigen::Index>(ja), static_cast<Eigen::Index>(ka));
          out.samples.push_back(c);
          for (std::size_t b = 0; b < m; ++b) {
            const auto [jb, kb] = pairs_[b];
            out.theory[a * m + b] = avar(ja, ka, jb, kb);
          }
        }
        return;
      }
      case Statistic::JointBipowerRV: {
        const double mu1 = abs_moment(1.0);
        const double quart = ip(4.0);
        Sample b, r;
        b.estimate = realized_bipower(ret, j, 1.0, 1.0, t);
        b.target = mu1 * mu1 * ip(2.0);
        r.estimate = realized_variance(ret, j, t);
        r.target = ip(2.0);
        b.avar_oracle = joint_const_(0, 0) * quart;
        r.avar_oracle = joint_const_(1, 1) * quart;
        if (feasible) {
          const double iq = quarticity_quadpower(ret, j, t);
          b.avar_feasible = joint_const_(0, 0) * iq;
          r.avar_feasible = joint_const_(1, 1) * iq;
        }
        out.samples = {b, r};
        out.theory = {joint_const_(0, 0) * quart, joint_const_(0, 1) * quart,
                      joint_const_(1, 0) * quart, joint_const_(1, 1) * quart};
        return;
      }
      case Statistic::DetRank: {
        s.estimate = det_rank_statistic(ret, t);
        s.target = integrated_det(path, t);
        break;
      }
    }
    out.samples = {s};
    out.theory = {s.avar_oracle};
  }

 private:
  EstimatorSpec spec_;
  std::size_t dim_;
  double t_;
  std::vector<std::string> names_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  double scale_ = 1.0;
  double mpv_const_ = 0.0;
  double quart_const_ = 0.0;
  Eigen::MatrixXd joint_const_;
};

double quantile_level_crit(double level) { return normal_critical_value(level); }

ModelSpec alternative_for(const ExperimentConfig& config, std::size_t n) {
  if (config.alternative) return *config.alternative;
  ModelSpec alt = config.model;
  PriceJumpOverlay overlay;
  overlay.single = true;
  overlay.lambda = 0.0;
  overlay.jump_sd = config.jump_sd_root_n / std::sqrt(static_cast<double>(n));
  alt.price_jumps = overlay;
  return alt;
}

void add_gate(ExperimentReport& report, std::string name, bool ok, std::string detail) {
  report.gates.push_back({std::move(name), ok, std::move(detail)});
  if (!ok) report.passed = false;
}

std::string fmt_range(const Range& r) {
  std::ostringstream os;
  os << "[" << r.first << ", " << r.second << "]";
  return os.str();
}

bool in_range(double v, const Range& r) { return v >= r.first && v <= r.second; }

void evaluate_common_gates(ExperimentReport& report) {
  const auto& g = report.config.gates;
  const std::size_t reps = report.config.replications;
  for (const auto& row : report.rows) {
    const double frac = static_cast<double>(row.excluded) / static_cast<double>(reps);
    if (row.excluded > 0 || report.config.kind == ExperimentKind::Clt) {
      std::ostringstream os;
      os << "n=" << row.n << " excluded " << row.excluded << "/" << reps;
      add_gate(report, "excluded_fraction", frac <= g.max_excluded_fraction, os.str());
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::RealizedVariance: return "rv";
    case Statistic::PowerVariation: return "power";
    case Statistic::Bipower: return "bipower";
    case Statistic::Multipower: return "multipower";
    case Statistic::QuarticityRV: return "quarticity-rv";
    case Statistic::QuarticityTripower: return "quarticity-tripower";
    case Statistic::QuarticityQuadpower: return "quarticity-quadpower";
    case Statistic::Covariation: return "covariation";
    case Statistic::JointBipowerRV: return "joint-bipower-rv";
    case Statistic::DetRank: return "det";
  }
  return "rv";
}

Statistic statistic_from_string(const std::string& s) {
  for (auto st : {Statistic::RealizedVariance, Statistic::PowerVariation, Statistic::Bipower,
                  Statistic::Multipower, Statistic::QuarticityRV, Statistic::QuarticityTripower,
                  Statistic::QuarticityQuadpower, Statistic::Covariation, Statistic::JointBipowerRV,
                  Statistic::DetRank}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown statistic '" + s + "'");
}

std::string EstimatorSpec::name() const {
  std::ostringstream os;
  os << to_string(statistic);
  switch (statistic) {
    case Statistic::PowerVariation: os << "(r=" << r << ")"; break;
    case Statistic::Bipower: os << "(r=" << r << ",s=" << s << ")"; break;
    case Statistic::Multipower: {
      os << "(";
      for (std::size_t i = 0; i < powers.size(); ++i) os << (i ? "," : "") << powers[i];
      os << ")";
      break;
    }
    default: break;
  }
  if (normalized) os << "/const";
  return os.str();
}

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Lln: return "lln";
    case ExperimentKind::Clt: return "clt";
    case ExperimentKind::Jump: return "jump";
  }
  return "lln";
}

std::string to_string(ModeSelection m) {
  switch (m) {
    case ModeSelection::Oracle: return "oracle";
    case ModeSelection::Feasible: return "feasible";
    case ModeSelection::Both: return "both";
  }
  return "oracle";
}

std::size_t ExperimentConfig::n_fine() const {
  return fine_ratio * *std::max_element(n_list.begin(), n_list.end());
}

void ExperimentConfig::validate() const {
  model.validate();
  if (alternative) alternative->validate();
  if (n_list.empty()) throw std::invalid_argument("experiment: n_list is empty");
  if (!std::is_sorted(n_list.begin(), n_list.end())) {
    throw std::invalid_argument("experiment: n_list must be sorted ascending");
  }
  if (fine_ratio < 1) throw std::invalid_argument("experiment: fine_ratio must be >= 1");
  const std::size_t nf = n_fine();
  if (nf < 100) throw std::invalid_argument("experiment: fine grid must have >= 100 steps");
  for (std::size_t n : n_list) {
    if (n < 2 || nf % n != 0) {
      throw std::invalid_argument("experiment: n = " + std::to_string(n) +
                                  " must be >= 2 and divide n_fine = " + std::to_string(nf));
    }
  }
  if (kind != ExperimentKind::Lln && replications < 100) {
    throw std::invalid_argument("experiment: distributional experiments need >= 100 replications");
  }
  if (replications < 2) throw std::invalid_argument("experiment: need >= 2 replications");
  if (!(t > 0.0 && t <= 1.0)) throw std::invalid_argument("experiment: t must lie in (0, 1]");
  if (kind == ExperimentKind::Clt && estimator.statistic == Statistic::DetRank) {
    throw std::invalid_argument("experiment: the det statistic has no closed-form CLT variance");
  }
  if (kind == ExperimentKind::Jump && !alternative && !(jump_sd_root_n > 0.0)) {
    throw std::invalid_argument("experiment: jump experiments need an alternative model or jump_sd_root_n");
  }
  if (kind == ExperimentKind::Jump && n_list.front() < 10) {
    throw std::invalid_argument("experiment: jump test needs n >= 10");
  }
}

ZDiagnostics summarize_z(std::vector<double> z) {
  ZDiagnostics d;
  d.count = z.size();
  if (z.empty()) return d;
  const double m = static_cast<double>(z.size());
  CompensatedSum s1;
  for (double v : z) s1.add(v);
  d.mean = s1.value() / m;
  CompensatedSum s2, s3, s4;
  for (double v : z) {
    const double e = v - d.mean;
    s2.add(e * e);
    s3.add(e * e * e);
    s4.add(e * e * e * e);
  }
  const double m2 = s2.value() / m;
  d.variance = z.size() > 1 ? s2.value() / (m - 1.0) : 0.0;
  d.skewness = m2 > 0.0 ? (s3.value() / m) / std::pow(m2, 1.5) : 0.0;
  d.kurtosis = m2 > 0.0 ? (s4.value() / m) / (m2 * m2) : 0.0;

  const double c90 = quantile_level_crit(0.90);
  const double c95 = quantile_level_crit(0.95);
  const double c99 = quantile_level_crit(0.99);
  std::size_t k90 = 0, k95 = 0, k99 = 0;
  for (double v : z) {
    const double a = std::abs(v);
    k90 += a <= c90;
    k95 += a <= c95;
    k99 += a <= c99;
  }
  d.coverage90 = static_cast<double>(k90) / m;
  d.coverage95 = static_cast<double>(k95) / m;
  d.coverage99 = static_cast<double>(k99) / m;

  std::sort(z.begin(), z.end());
  double ks = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double f = normal_cdf(z[i]);
    ks = std::max({ks, static_cast<double>(i + 1) / m - f, f - static_cast<double>(i) / m});
  }
  d.ks = ks;
  return d;
}

std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: need >= 2 points");
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double b = sxy / sxx;
  const double a = my - b * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - a - b * x[i];
    sse += e * e;
  }
  const double se = x.size() > 2 ? std::sqrt(sse / (m - 2.0) / sxx) : 0.0;
  return {b, se};
}

// ---------------------------------------------------------------------------

namespace {

struct RawRun {
  std::vector<std::string> names;
  /// reps[rep][n_index]
  std::vector<std::vector<RepAtN>> reps;
};

RawRun simulate_replications(const ExperimentConfig& config, bool feasible) {
  const Evaluator eval(config.estimator, config.model.dim, config.t);
  RawRun raw;
  raw.names = eval.names();
  raw.reps.resize(config.replications);
  const std::size_t nf = config.n_fine();
  const bool jump = config.kind == ExperimentKind::Jump;
  parallel_for(config.replications, config.workers, [&](std::size_t rep) {
    auto& slots = raw.reps[rep];
    slots.resize(config.n_list.size());
    const SimPath path = simulate(config.model, nf, config.seed, rep);
    for (std::size_t q = 0; q < config.n_list.size(); ++q) {
      const std::size_t n = config.n_list[q];
      const ReturnSeries ret = subsample(path, n);
      if (jump) {
        const JumpTestResult null_result = jump_test(ret, config.estimator.component, config.t);
        slots[q].p_ratio_null = null_result.p_ratio;
        slots[q].p_linear_null = null_result.p_linear;
        const ModelSpec alt = alternative_for(config, n);
        const SimPath alt_path = simulate(alt, nf, config.seed, (std::uint64_t{1} << 32) | rep);
        const JumpTestResult alt_result =
            jump_test(subsample(alt_path, n), config.estimator.component, config.t);
        slots[q].p_ratio_alt = alt_result.p_ratio;
        slots[q].p_linear_alt = alt_result.p_linear;
      } else {
        eval.evaluate(path, ret, feasible, slots[q]);
      }
    }
  });
  return raw;
}

ExperimentReport start_report(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  report.generated_at = utc_timestamp();
  return report;
}

void finish_report(ExperimentReport& report, std::chrono::steady_clock::time_point start) {
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Bias/RMSE/means per component; z diagnostics when requested.
ReportRow build_row(const RawRun& raw, std::size_t q, std::size_t n, bool oracle, bool feasible) {
  ReportRow row;
  row.n = n;
  const std::size_t m = raw.names.size();
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<std::vector<double>> z_oracle(m), z_feasible(m);
  std::vector<CompensatedSum> est(m), tgt(m), err(m), err2(m);
  std::vector<std::vector<double>> scaled_errors;
  Eigen::MatrixXd theory = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::size_t used = 0;

  for (const auto& rep : raw.reps) {
    const RepAtN& s = rep[q];
    bool degenerate = false;
    if (feasible) {
      for (const auto& c : s.samples) {
        if (!(c.avar_feasible > 0.0) || !std::isfinite(c.avar_feasible)) degenerate = true;
      }
    }
    if (oracle) {
      for (const auto& c : s.samples) {
        if (!(c.avar_oracle > 0.0) || !std::isfinite(c.avar_oracle)) degenerate = true;
      }
    }
    if (degenerate) {
      ++row.excluded;
      continue;
    }
    ++used;
    std::vector<double> e(m);
    for (std::size_t a = 0; a < m; ++a) {
      const Sample& c = s.samples[a];
      est[a].add(c.estimate);
      tgt[a].add(c.target);
      err[a].add(c.estimate - c.target);
      err2[a].add((c.estimate - c.target) * (c.estimate - c.target));
      e[a] = root_n * (c.estimate - c.target);
      if (oracle) z_oracle[a].push_back(oracle_standardize(c.estimate, c.target, c.avar_oracle, n));
      if (feasible) z_feasible[a].push_back(oracle_standardize(c.estimate, c.target, c.avar_feasible, n));
    }
    scaled_errors.push_back(std::move(e));
    if (s.theory.size() == m * m) {
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b)
          theory(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += s.theory[a * m + b];
    }
  }

  const double u = static_cast<double>(std::max<std::size_t>(used, 1));
  for (std::size_t a = 0; a < m; ++a) {
    ComponentRow c;
    c.name = raw.names[a];
    c.mean_estimate = est[a].value() / u;
    c.mean_target = tgt[a].value() / u;
    c.bias = err[a].value() / u;
    c.rmse = std::sqrt(err2[a].value() / u);
    if (oracle) c.oracle = summarize_z(z_oracle[a]);
    if (feasible) c.feasible = summarize_z(z_feasible[a]);
    row.components.push_back(std::move(c));
  }

  const auto mi = static_cast<Eigen::Index>(m);
  row.error_covariance = Eigen::MatrixXd::Zero(mi, mi);
  if (used > 1) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(mi);
    for (const auto& e : scaled_errors)
      for (Eigen::Index a = 0; a < mi; ++a) mean(a) += e[static_cast<std::size_t>(a)];
    mean /= u;
    for (const auto& e : scaled_errors)
      for (Eigen::Index a = 0; a < mi; ++a)
        for (Eigen::Index b = 0; b < mi; ++b)
          row.error_covariance(a, b) +=
              (e[static_cast<std::size_t>(a)] - mean(a)) * (e[static_cast<std::size_t>(b)] - mean(b));
    row.error_covariance /= (u - 1.0);
  }
  row.theory_covariance = theory / u;
  return row;
}

}  // namespace

ExperimentReport run_lln(const ExperimentConfig& config_in) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config = config_in;
  config.kind = ExperimentKind::Lln;
  ExperimentReport report = start_report(config);
  const RawRun raw = simulate_replications(config, false);
  for (std::size_t q = 0; q < config.n_list.size(); ++q) {
    report.rows.push_back(build_row(raw, q, config.n_list[q], false, false));
  }
  if (config.n_list.size() >= 2) {
    std::vector<double> x, y;
    for (const auto& row : report.rows) {
      x.push_back(std::log(static_cast<double>(row.n)));
      y.push_back(std::log(row.components.front().rmse));
    }
    const auto [b, se] = fit_slope(x, y);
    report.slope = b;
    report.slope_se = se;
  }
  const auto& g = config.gates;
  if (g.slope) {
    std::ostringstream os;
    os << "slope " << (report.slope ? *report.slope : kNaN) << " in " << fmt_range(*g.slope);
    add_gate(report, "lln_slope", report.slope && in_range(*report.slope, *g.slope), os.str());
  }
  if (g.mean_rel_tol) {
    const auto& c = report.rows.back().components.front();
    const double rel = std::abs(c.mean_estimate / c.mean_target - 1.0);
    std::ostringstream os;
    os << "n=" << report.rows.back().n << " |mean/target-1| = " << rel << " <= " << *g.mean_rel_tol;
    add_gate(report, "lln_mean", rel <= *g.mean_rel_tol, os.str());
  }
  finish_report(report, start);
  return report;
}

ExperimentReport run_clt(const ExperimentConfig& config_in) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config = config_in;
  config.kind = ExperimentKind::Clt;
  ExperimentReport report = start_report(config);
  const bool oracle = config.mode != ModeSelection::Feasible;
  const bool feasible = config.mode != ModeSelection::Oracle;
  const RawRun raw = simulate_replications(config, feasible);
  for (std::size_t q = 0; q < config.n_list.size(); ++q) {
    report.rows.push_back(build_row(raw, q, config.n_list[q], oracle, feasible));
  }
  evaluate_common_gates(report);

  // Distributional gates apply at the largest n.
  const auto& g = config.gates;
  const ReportRow& last = report.rows.back();
  for (const auto& c : last.components) {
    const std::string tag = c.name + " n=" + std::to_string(last.n);
    if (c.oracle) {
      const auto& z = *c.oracle;
      if (g.z_mean_abs_max) {
        std::ostringstream os;
        os << tag << " |z mean| = " << std::abs(z.mean) << " <= " << *g.z_mean_abs_max;
        add_gate(report, "oracle_z_mean", std::abs(z.mean) <= *g.z_mean_abs_max, os.str());
      }
      if (g.z_variance) {
        std::ostringstream os;
        os << tag << " z variance = " << z.variance << " in " << fmt_range(*g.z_variance);
        add_gate(report, "oracle_z_variance", in_range(z.variance, *g.z_variance), os.str());
      }
      if (g.ks_max) {
        std::ostringstream os;
        os << tag << " KS = " << z.ks << " < " << *g.ks_max;
        add_gate(report, "oracle_ks", z.ks < *g.ks_max, os.str());
      }
      if (g.coverage95) {
        std::ostringstream os;
        os << tag << " coverage95 = " << z.coverage95 << " in " << fmt_range(*g.coverage95);
        add_gate(report, "oracle_coverage95", in_range(z.coverage95, *g.coverage95), os.str());
      }
    }
    if (c.feasible && g.feasible_coverage95) {
      std::ostringstream os;
      os << tag << " feasible coverage95 = " << c.feasible->coverage95 << " in "
         << fmt_range(*g.feasible_coverage95);
      add_gate(report, "feasible_coverage95", in_range(c.feasible->coverage95, *g.feasible_coverage95),
               os.str());
    }
  }
  if (g.covariance_rel_tol) {
    const auto& emp = last.error_covariance;
    const auto& th = last.theory_covariance;
    for (Eigen::Index a = 0; a < emp.rows(); ++a) {
      for (Eigen::Index b = a; b < emp.cols(); ++b) {
        const double ref = th(a, b) != 0.0 ? std::abs(th(a, b)) : std::sqrt(th(a, a) * th(b, b));
        const double dev = std::abs(emp(a, b) - th(a, b));
        std::ostringstream os;
        os << "n=" << last.n << " cov[" << last.components[static_cast<std::size_t>(a)].name << ","
           << last.components[static_cast<std::size_t>(b)].name << "] empirical " << emp(a, b)
           << " vs theory " << th(a, b) << " (rel " << dev / ref << " <= " << *g.covariance_rel_tol << ")";
        add_gate(report, "error_covariance", dev <= *g.covariance_rel_tol * ref, os.str());
      }
    }
  }
  finish_report(report, start);
  return report;
}

ExperimentReport run_jump_experiment(const ExperimentConfig& config_in) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config = config_in;
  config.kind = ExperimentKind::Jump;
  ExperimentReport report = start_report(config);
  const RawRun raw = simulate_replications(config, false);
  for (std::size_t q = 0; q < config.n_list.size(); ++q) {
    ReportRow row;
    row.n = config.n_list[q];
    std::size_t used = 0;
    std::size_t s1 = 0, s5 = 0, s10 = 0, p1 = 0, p5 = 0, p10 = 0, sl5 = 0, pl5 = 0;
    for (const auto& rep : raw.reps) {
      const RepAtN& s = rep[q];
      if (std::isnan(s.p_ratio_null) || std::isnan(s.p_ratio_alt)) {
        ++row.excluded;
        continue;
      }
      ++used;
      s1 += s.p_ratio_null < 0.01;
      s5 += s.p_ratio_null < 0.05;
      s10 += s.p_ratio_null < 0.10;
      p1 += s.p_ratio_alt < 0.01;
      p5 += s.p_ratio_alt < 0.05;
      p10 += s.p_ratio_alt < 0.10;
      sl5 += s.p_linear_null < 0.05;
      pl5 += s.p_linear_alt < 0.05;
    }
    const double u = static_cast<double>(std::max<std::size_t>(used, 1));
    row.size1 = s1 / u;
    row.size5 = s5 / u;
    row.size10 = s10 / u;
    row.power1 = p1 / u;
    row.power5 = p5 / u;
    row.power10 = p10 / u;
    row.size5_linear = sl5 / u;
    row.power5_linear = pl5 / u;
    report.rows.push_back(row);
  }
  evaluate_common_gates(report);
  const auto& g = config.gates;
  const ReportRow& last = report.rows.back();
  if (g.size5) {
    std::ostringstream os;
    os << "n=" << last.n << " size at 5% = " << last.size5 << " in " << fmt_range(*g.size5);
    add_gate(report, "jump_size5", in_range(last.size5, *g.size5), os.str());
  }
  if (g.power_minus_size5_min) {
    std::ostringstream os;
    os << "n=" << last.n << " power - size at 5% = " << last.power5 - last.size5
       << " >= " << *g.power_minus_size5_min;
    add_gate(report, "jump_power", last.power5 - last.size5 >= *g.power_minus_size5_min, os.str());
  }
  finish_report(report, start);
  return report;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::Lln: return run_lln(config);
    case ExperimentKind::Clt: return run_clt(config);
    case ExperimentKind::Jump: return run_jump_experiment(config);
  }
  return run_lln(config);
}

// ---------------------------------------------------------------------------
// Moment oracles

std::string OracleQuery::name() const {
  std::ostringstream os;
  switch (kind) {
    case OracleKind::AbsMoment: os << "mu(" << r << ")"; break;
    case OracleKind::PowerVariance: os << "v(" << r << ")"; break;
    case OracleKind::BipowerConstant: os << "bipower(" << r << "," << s << ")"; break;
    case OracleKind::Omega: os << "omega2(" << terms << ")"; break;
  }
  return os.str();
}

double closed_form(const OracleQuery& query) {
  switch (query.kind) {
    case OracleKind::AbsMoment: return abs_moment(query.r);
    case OracleKind::PowerVariance: return power_variance_constant(query.r);
    case OracleKind::BipowerConstant: return bipower_variance_constant(query.r, query.s);
    case OracleKind::Omega: return multipower_variance_constant(query.terms);
  }
  return kNaN;
}

namespace {

// Sufficient statistics for a smooth function of up to three means.
struct MomentBlock {
  std::array<double, 3> sum{};
  std::array<double, 9> cross{};
  std::size_t count = 0;
};

}  // namespace

OracleEstimate moment_oracle(const OracleQuery& query, std::size_t draws, std::uint64_t seed,
                             std::size_t workers) {
  if (draws < 100000) throw std::invalid_argument("moment_oracle: need >= 1e5 draws");
  std::size_t normals_needed = 1;
  std::size_t width = 1;  // number of averaged quantities
  switch (query.kind) {
    case OracleKind::AbsMoment:
      if (!(query.r > -1.0)) throw std::domain_error("moment_oracle: r must be > -1");
      break;
    case OracleKind::PowerVariance:
      if (!(query.r > 0.0)) throw std::domain_error("moment_oracle: r must be > 0");
      width = 2;
      break;
    case OracleKind::BipowerConstant:
      if (!(query.r > 0.0) || !(query.s > 0.0)) throw std::domain_error("moment_oracle: r, s must be > 0");
      normals_needed = 3;
      width = 3;
      break;
    case OracleKind::Omega:
      if (query.terms < 1) throw std::domain_error("moment_oracle: I must be >= 1");
      normals_needed = 2 * static_cast<std::size_t>(query.terms) - 1;
      width = 3;
      break;
  }

  constexpr std::size_t kBlock = std::size_t{1} << 16;
  const std::size_t blocks = (draws + kBlock - 1) / kBlock;
  std::vector<MomentBlock> results(blocks);
  const std::size_t pairs = (normals_needed + 1) / 2;

  parallel_for(blocks, workers, [&](std::size_t b) {
    const CounterRng rng(seed, b);
    const std::size_t begin = b * kBlock;
    const std::size_t end = std::min(draws, begin + kBlock);
    std::vector<double> u(2 * pairs);
    std::array<double, 3> w{};
    std::array<CompensatedSum, 3> sum;
    std::array<CompensatedSum, 9> cross;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t p = 0; p < pairs; ++p) {
        const auto z = rng.normal_pair(static_cast<std::uint32_t>(i - begin), static_cast<std::uint32_t>(p));
        u[2 * p] = std::abs(z[0]);
        u[2 * p + 1] = std::abs(z[1]);
      }
      switch (query.kind) {
        case OracleKind::AbsMoment:
          w[0] = std::pow(u[0], query.r);
          break;
        case OracleKind::PowerVariance: {
          const double x = std::pow(u[0], query.r);
          w[0] = x * x;
          w[1] = x;
          break;
        }
        case OracleKind::BipowerConstant: {
          const double p0 = std::pow(u[0], query.r) * std::pow(u[1], query.s);
          const double p1 = std::pow(u[1], query.r) * std::pow(u[2], query.s);
          w[0] = p0 * p0;
          w[1] = p0 * p1;
          w[2] = p0;
          break;
        }
        case OracleKind::Omega: {
          const auto terms = static_cast<std::size_t>(query.terms);
          const double e = 2.0 / query.terms;
          double powered[64];
          for (std::size_t k = 0; k < normals_needed; ++k) powered[k] = std::pow(u[k], e);
          auto window = [&](std::size_t lag) {
            double prod = 1.0;
            for (std::size_t k = 0; k < terms; ++k) prod *= powered[k + lag];
            return prod;
          };
          const double p0 = window(0);
          double lagged = 0.0;
          for (std::size_t lag = 1; lag < terms; ++lag) lagged += p0 * window(lag);
          w[0] = p0 * p0;
          w[1] = lagged;
          w[2] = p0;
          break;
        }
      }
      for (std::size_t a = 0; a < width; ++a) {
        sum[a].add(w[a]);
        for (std::size_t c = 0; c < width; ++c) cross[a * 3 + c].add(w[a] * w[c]);
      }
    }
    MomentBlock& out = results[b];
    out.count = end - begin;
    for (std::size_t a = 0; a < 3; ++a) out.sum[a] = sum[a].value();
    for (std::size_t a = 0; a < 9; ++a) out.cross[a] = cross[a].value();
  });

  std::array<CompensatedSum, 3> sum;
  std::array<CompensatedSum, 9> cross;
  std::size_t count = 0;
  for (const auto& blk : results) {
    for (std::size_t a = 0; a < 3; ++a) sum[a].add(blk.sum[a]);
    for (std::size_t a = 0; a < 9; ++a) cross[a].add(blk.cross[a]);
    count += blk.count;
  }
  const double m = static_cast<double>(count);
  Eigen::Vector3d mean;
  Eigen::Matrix3d cov;
  for (std::size_t a = 0; a < 3; ++a) mean(static_cast<Eigen::Index>(a)) = sum[a].value() / m;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t c = 0; c < 3; ++c)
      cov(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c)) =
          (cross[a * 3 + c].value() - m * mean(static_cast<Eigen::Index>(a)) * mean(static_cast<Eigen::Index>(c))) /
          (m - 1.0);

  // estimate = f(mean), delta-method standard error with gradient grad.
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  OracleEstimate out;
  out.draws = count;
  switch (query.kind) {
    case OracleKind::AbsMoment:
      out.estimate = mean(0);
      grad(0) = 1.0;
      break;
    case OracleKind::PowerVariance:
      out.estimate = mean(0) - mean(1) * mean(1);
      grad << 1.0, -2.0 * mean(1), 0.0;
      break;
    case OracleKind::BipowerConstant:
      out.estimate = mean(0) + 2.0 * mean(1) - 3.0 * mean(2) * mean(2);
      grad << 1.0, 2.0, -6.0 * mean(2);
      break;
    case OracleKind::Omega: {
      const double k = 2.0 * query.terms - 1.0;
      out.estimate = mean(0) + 2.0 * mean(1) - k * mean(2) * mean(2);
      grad << 1.0, 2.0, -2.0 * k * mean(2);
      break;
    }
  }
  out.std_error = std::sqrt(std::max(0.0, grad.dot(cov * grad)) / m);
  return out;
}

}  // namespace rvlab
