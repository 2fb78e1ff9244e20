#include "rvlab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rvlab/version.hpp"

namespace rvlab {
namespace {

[[noreturn]] void bad(const std::string& what) { throw std::invalid_argument("config: " + what); }

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) bad(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) bad("unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    bad("'" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const Json& j, const std::string& where) {
  if (!j.is_array()) bad(where + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::MatrixXd m(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != rows) bad(where + " must be square");
    for (Eigen::Index c = 0; c < rows; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Json range_json(const std::optional<Range>& r) {
  return r ? Json::array({r->first, r->second}) : Json();
}

void read_range(const Json& j, const char* key, std::optional<Range>& out) {
  if (!j.contains(key)) return;
  const Json& v = j.at(key);
  if (!v.is_array() || v.size() != 2) bad("gate '" + std::string(key) + "' must be [lo, hi]");
  out = Range{v[0].get<double>(), v[1].get<double>()};
}

void read_opt(const Json& j, const char* key, std::optional<double>& out) {
  if (j.contains(key)) out = j.at(key).get<double>();
}

Json z_json(const ZDiagnostics& z) {
  return Json{{"count", z.count},       {"mean", z.mean},           {"variance", z.variance},
              {"skewness", z.skewness}, {"kurtosis", z.kurtosis},   {"ks", z.ks},
              {"coverage90", z.coverage90}, {"coverage95", z.coverage95}, {"coverage99", z.coverage99}};
}

ExperimentKind kind_from_string(const std::string& s) {
  if (s == "lln") return ExperimentKind::Lln;
  if (s == "clt") return ExperimentKind::Clt;
  if (s == "jump") return ExperimentKind::Jump;
  bad("unknown kind '" + s + "'");
}

ModeSelection mode_from_string(const std::string& s) {
  if (s == "oracle") return ModeSelection::Oracle;
  if (s == "feasible") return ModeSelection::Feasible;
  if (s == "both") return ModeSelection::Both;
  bad("unknown mode '" + s + "'");
}

}  // namespace

std::string format_sig(double x, int digits) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

Json model_to_json(const ModelSpec& model) {
  Json j;
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ConstantVol>) {
          j["type"] = "constant";
          j["sigma"] = v.sigma;
          j["drift"] = v.drift;
        } else if constexpr (std::is_same_v<T, MeanRevertingVolLeverage>) {
          j["type"] = "heston";
          j["kappa"] = v.kappa;
          j["theta"] = v.theta;
          j["xi"] = v.xi;
          j["rho"] = v.rho;
          j["v0"] = v.v0;
          j["drift"] = v.drift;
        } else {
          j["type"] = "ou-jump";
          j["lambda"] = v.lambda;
          j["jump_mean"] = v.jump_mean;
          j["decay"] = v.decay;
          j["v0"] = v.v0;
          j["drift"] = v.drift;
        }
      },
      model.vol);
  j["dim"] = model.dim;
  if (model.correlation.size() > 0) j["correlation"] = matrix_to_json(model.correlation);
  if (model.price_jumps) {
    j["price_jumps"] = Json{{"lambda", model.price_jumps->lambda},
                            {"jump_sd", model.price_jumps->jump_sd},
                            {"single", model.price_jumps->single}};
  }
  return j;
}

ModelSpec model_from_json(const Json& j) {
  if (!j.is_object()) bad("model must be an object");
  std::string type = "constant";
  read(j, "type", type, "model");
  ModelSpec m;
  if (type == "constant") {
    check_keys(j, "model", {"type", "sigma", "drift", "dim", "correlation", "price_jumps"});
    ConstantVol v;
    read(j, "sigma", v.sigma, "model");
    read(j, "drift", v.drift, "model");
    m.vol = v;
  } else if (type == "heston") {
    check_keys(j, "model",
               {"type", "kappa", "theta", "xi", "rho", "v0", "drift", "dim", "correlation", "price_jumps"});
    MeanRevertingVolLeverage v;
    read(j, "kappa", v.kappa, "model");
    read(j, "theta", v.theta, "model");
    read(j, "xi", v.xi, "model");
    read(j, "rho", v.rho, "model");
    read(j, "v0", v.v0, "model");
    read(j, "drift", v.drift, "model");
    m.vol = v;
  } else if (type == "ou-jump") {
    check_keys(j, "model",
               {"type", "lambda", "jump_mean", "decay", "v0", "drift", "dim", "correlation", "price_jumps"});
    OUJumpVol v;
    read(j, "lambda", v.lambda, "model");
    read(j, "jump_mean", v.jump_mean, "model");
    read(j, "decay", v.decay, "model");
    read(j, "v0", v.v0, "model");
    read(j, "drift", v.drift, "model");
    m.vol = v;
  } else {
    bad("unknown model type '" + type + "' (expected constant, heston or ou-jump)");
  }
  read(j, "dim", m.dim, "model");
  if (j.contains("correlation")) m.correlation = matrix_from_json(j.at("correlation"), "model.correlation");
  if (j.contains("price_jumps")) {
    const Json& pj = j.at("price_jumps");
    check_keys(pj, "model.price_jumps", {"lambda", "jump_sd", "single"});
    PriceJumpOverlay o;
    read(pj, "lambda", o.lambda, "model.price_jumps");
    read(pj, "jump_sd", o.jump_sd, "model.price_jumps");
    read(pj, "single", o.single, "model.price_jumps");
    m.price_jumps = o;
  }
  m.validate();
  return m;
}

Json config_to_json(const ExperimentConfig& c) {
  Json j;
  j["label"] = c.label;
  j["kind"] = to_string(c.kind);
  j["model"] = model_to_json(c.model);
  if (c.alternative) j["alternative"] = model_to_json(*c.alternative);
  if (c.kind == ExperimentKind::Jump) j["jump_sd_root_n"] = c.jump_sd_root_n;
  Json est;
  est["statistic"] = to_string(c.estimator.statistic);
  est["r"] = c.estimator.r;
  est["s"] = c.estimator.s;
  est["powers"] = c.estimator.powers;
  est["component"] = c.estimator.component;
  est["normalized"] = c.estimator.normalized;
  j["estimator"] = est;
  j["n_list"] = c.n_list;
  j["replications"] = c.replications;
  j["seed"] = c.seed;
  j["mode"] = to_string(c.mode);
  j["fine_ratio"] = c.fine_ratio;
  j["t"] = c.t;
  Json g = Json::object();
  const Gates& gt = c.gates;
  if (gt.slope) g["slope"] = range_json(gt.slope);
  if (gt.z_mean_abs_max) g["z_mean_abs_max"] = *gt.z_mean_abs_max;
  if (gt.z_variance) g["z_variance"] = range_json(gt.z_variance);
  if (gt.ks_max) g["ks_max"] = *gt.ks_max;
  if (gt.coverage95) g["coverage95"] = range_json(gt.coverage95);
  if (gt.feasible_coverage95) g["feasible_coverage95"] = range_json(gt.feasible_coverage95);
  if (gt.covariance_rel_tol) g["covariance_rel_tol"] = *gt.covariance_rel_tol;
  if (gt.mean_rel_tol) g["mean_rel_tol"] = *gt.mean_rel_tol;
  if (gt.size5) g["size5"] = range_json(gt.size5);
  if (gt.power_minus_size5_min) g["power_minus_size5_min"] = *gt.power_minus_size5_min;
  g["max_excluded_fraction"] = gt.max_excluded_fraction;
  j["gates"] = g;
  return j;
}

ExperimentConfig config_from_json(const Json& j) {
  check_keys(j, "top level",
             {"label", "kind", "model", "alternative", "jump_sd_root_n", "estimator", "n_list",
              "replications", "seed", "mode", "workers", "fine_ratio", "t", "gates"});
  ExperimentConfig c;
  read(j, "label", c.label, "top level");
  if (j.contains("kind")) c.kind = kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  if (j.contains("alternative")) c.alternative = model_from_json(j.at("alternative"));
  read(j, "jump_sd_root_n", c.jump_sd_root_n, "top level");
  if (j.contains("estimator")) {
    const Json& e = j.at("estimator");
    check_keys(e, "estimator", {"statistic", "r", "s", "powers", "component", "normalized"});
    if (e.contains("statistic")) {
      try {
        c.estimator.statistic = statistic_from_string(e.at("statistic").get<std::string>());
      } catch (const std::invalid_argument& ex) {
        bad(ex.what());
      }
    }
    read(e, "r", c.estimator.r, "estimator");
    read(e, "s", c.estimator.s, "estimator");
    read(e, "powers", c.estimator.powers, "estimator");
    read(e, "component", c.estimator.component, "estimator");
    read(e, "normalized", c.estimator.normalized, "estimator");
  }
  read(j, "n_list", c.n_list, "top level");
  read(j, "replications", c.replications, "top level");
  read(j, "seed", c.seed, "top level");
  if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
  read(j, "workers", c.workers, "top level");
  read(j, "fine_ratio", c.fine_ratio, "top level");
  read(j, "t", c.t, "top level");
  if (j.contains("gates")) {
    const Json& g = j.at("gates");
    check_keys(g, "gates",
               {"slope", "z_mean_abs_max", "z_variance", "ks_max", "coverage95", "feasible_coverage95",
                "covariance_rel_tol", "mean_rel_tol", "size5", "power_minus_size5_min",
                "max_excluded_fraction"});
    try {
      read_range(g, "slope", c.gates.slope);
      read_opt(g, "z_mean_abs_max", c.gates.z_mean_abs_max);
      read_range(g, "z_variance", c.gates.z_variance);
      read_opt(g, "ks_max", c.gates.ks_max);
      read_range(g, "coverage95", c.gates.coverage95);
      read_range(g, "feasible_coverage95", c.gates.feasible_coverage95);
      read_opt(g, "covariance_rel_tol", c.gates.covariance_rel_tol);
      read_opt(g, "mean_rel_tol", c.gates.mean_rel_tol);
      read_range(g, "size5", c.gates.size5);
      read_opt(g, "power_minus_size5_min", c.gates.power_minus_size5_min);
      if (g.contains("max_excluded_fraction")) {
        c.gates.max_excluded_fraction = g.at("max_excluded_fraction").get<double>();
      }
    } catch (const nlohmann::json::exception&) {
      bad("gate values must be numbers or [lo, hi] pairs");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

Json report_to_json(const ExperimentReport& r) {
  Json j;
  j["tool"] = kToolName;
  j["version"] = kVersion;
  j["seed"] = r.config.seed;
  j["config"] = config_to_json(r.config);
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    Json jr;
    jr["n"] = row.n;
    jr["excluded"] = row.excluded;
    if (r.config.kind == ExperimentKind::Jump) {
      jr["size"] = Json{{"1%", row.size1}, {"5%", row.size5}, {"10%", row.size10}};
      jr["power"] = Json{{"1%", row.power1}, {"5%", row.power5}, {"10%", row.power10}};
      jr["linear"] = Json{{"size5", row.size5_linear}, {"power5", row.power5_linear}};
    } else {
      Json comps = Json::array();
      for (const auto& c : row.components) {
        Json jc{{"name", c.name},   {"mean_estimate", c.mean_estimate}, {"mean_target", c.mean_target},
                {"bias", c.bias},   {"rmse", c.rmse}};
        if (c.oracle) jc["oracle"] = z_json(*c.oracle);
        if (c.feasible) jc["feasible"] = z_json(*c.feasible);
        comps.push_back(std::move(jc));
      }
      jr["components"] = std::move(comps);
      if (r.config.kind == ExperimentKind::Clt) {
        jr["error_covariance"] = matrix_to_json(row.error_covariance);
        jr["theory_covariance"] = matrix_to_json(row.theory_covariance);
      }
    }
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  if (r.slope) {
    j["slope"] = *r.slope;
    j["slope_se"] = r.slope_se ? Json(*r.slope_se) : Json();
  }
  Json gates = Json::array();
  for (const auto& g : r.gates) gates.push_back(Json{{"name", g.name}, {"passed", g.passed}, {"detail", g.detail}});
  j["gates"] = std::move(gates);
  j["passed"] = r.passed;
  j["run"] = Json{{"generated_at", r.generated_at},
                  {"wall_seconds", r.wall_seconds},
                  {"workers", r.config.workers}};
  return j;
}

std::string report_to_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "# " << kToolName << " " << kVersion << "\n";
  os << "# config: " << config_to_json(r.config).dump() << "\n";
  os << "# seed: " << r.config.seed << "\n";
  if (r.slope) {
    os << "# slope: " << format_sig(*r.slope) << " se " << format_sig(r.slope_se.value_or(0.0)) << "\n";
  }
  os << "# passed: " << (r.passed ? "true" : "false") << "\n";
  os << "# run: generated_at=" << r.generated_at << " wall_seconds=" << format_sig(r.wall_seconds)
     << " workers=" << r.config.workers << "\n";
  if (r.config.kind == ExperimentKind::Jump) {
    os << "n,excluded,size1,size5,size10,power1,power5,power10,size5_linear,power5_linear\n";
    for (const auto& row : r.rows) {
      os << row.n << "," << row.excluded << "," << format_sig(row.size1) << "," << format_sig(row.size5) << ","
         << format_sig(row.size10) << "," << format_sig(row.power1) << "," << format_sig(row.power5) << ","
         << format_sig(row.power10) << "," << format_sig(row.size5_linear) << ","
         << format_sig(row.power5_linear) << "\n";
    }
    return os.str();
  }
  os << "n,component,excluded,mean_estimate,mean_target,bias,rmse";
  const char* zcols[] = {"z_mean", "z_variance", "z_skewness", "z_kurtosis", "ks",
                         "coverage90", "coverage95", "coverage99"};
  for (const char* prefix : {"oracle_", "feasible_"})
    for (const char* col : zcols) os << "," << prefix << col;
  os << "\n";
  auto zfields = [&](const std::optional<ZDiagnostics>& z) {
    if (!z) {
      for (std::size_t i = 0; i < 8; ++i) os << ",";
      return;
    }
    for (double v : {z->mean, z->variance, z->skewness, z->kurtosis, z->ks, z->coverage90, z->coverage95,
                     z->coverage99})
      os << "," << format_sig(v);
  };
  for (const auto& row : r.rows) {
    for (const auto& c : row.components) {
      os << row.n << "," << c.name << "," << row.excluded << "," << format_sig(c.mean_estimate) << ","
         << format_sig(c.mean_target) << "," << format_sig(c.bias) << "," << format_sig(c.rmse);
      zfields(c.oracle);
      zfields(c.feasible);
      os << "\n";
    }
  }
  return os.str();
}

Json strip_run_info(Json j) {
  j.erase("run");
  return j;
}

std::string strip_run_info(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# run:", 0) == 0) continue;
    out << line << "\n";
  }
  return out.str();
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rvlab
