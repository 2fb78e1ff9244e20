#include "rvlab/asymptotics.hpp"

#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace rvlab {
namespace {

void require_level(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("confidence level must lie in (0, 1)");
  }
}

CltResult finish(double estimate, double avar, std::size_t n, double level) {
  CltResult out;
  out.estimate = estimate;
  out.avar_hat = std::max(avar, 0.0);
  out.level = level;
  out.n = n;
  out.mode = InferenceMode::Feasible;
  out.degenerate = !(out.avar_hat > 0.0);
  const double half = normal_critical_value(level) * out.standard_error();
  out.ci_lo = estimate - half;
  out.ci_hi = estimate + half;
  return out;
}

}  // namespace

std::string to_string(InferenceMode m) {
  return m == InferenceMode::Oracle ? "oracle" : "feasible";
}

double normal_critical_value(double level) {
  require_level(level);
  const boost::math::normal_distribution<double> normal;
  return boost::math::quantile(normal, 0.5 * (1.0 + level));
}

double normal_cdf(double x) {
  if (std::isnan(x)) return std::numeric_limits<double>::quiet_NaN();
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double CltResult::standard_error() const {
  if (n == 0) return 0.0;
  return std::sqrt(avar_hat / static_cast<double>(n));
}

CltResult ci_power_variation(const ReturnSeries& ret, std::size_t j, double r, double t,
                             double level) {
  require_level(level);
  if (!(r > 0.0)) throw std::invalid_argument("ci_power_variation: r must be > 0");
  const double estimate = realized_power_variation(ret, j, r, t);
  const double integrated = realized_power_variation(ret, j, 2.0 * r, t) / abs_moment(2.0 * r);
  return finish(estimate, power_variance_constant(r) * integrated, ret.n(), level);
}

CltResult ci_bipower(const ReturnSeries& ret, std::size_t j, double r, double s, double t,
                     double level) {
  require_level(level);
  if (!(r > 0.0) || !(s > 0.0)) throw std::invalid_argument("ci_bipower: r, s must be > 0");
  const double estimate = realized_bipower(ret, j, r, s, t);
  const double p = 0.5 * (r + s);
  const double powers[] = {p, p, p, p};
  const double integrated = realized_multipower(ret, j, powers, t) / std::pow(abs_moment(p), 4);
  return finish(estimate, bipower_variance_constant(r, s) * integrated, ret.n(), level);
}

CltMatrixResult ci_covariation(const ReturnSeries& ret, double t, double level) {
  require_level(level);
  const std::size_t d = ret.dim();
  CltMatrixResult out;
  out.level = level;
  out.n = ret.n();
  if (d == 1) {
    const CltResult scalar = ci_power_variation(ret, 0, 2.0, t, level);
    out.estimate = Eigen::MatrixXd::Constant(1, 1, scalar.estimate);
    out.avar_hat = Eigen::MatrixXd::Constant(1, 1, scalar.avar_hat);
    out.avar_full = CovarianceArray(1, 1);
    out.avar_full(0, 0, 0, 0) = scalar.avar_hat;
    out.ci_lo = Eigen::MatrixXd::Constant(1, 1, scalar.ci_lo);
    out.ci_hi = Eigen::MatrixXd::Constant(1, 1, scalar.ci_hi);
    out.degenerate = scalar.degenerate;
    return out;
  }

  out.estimate = realized_covariation(ret, t);
  const std::size_t n = ret.n();
  const std::size_t upper = std::min(grid_index(n, t), n - 1);
  CovarianceArray avar(d, d);
  std::vector<CompensatedSum> sums(d * d * d * d);
  for (std::size_t i = 0; i < upper; ++i) {
    const auto a = ret.row(i);
    const auto b = ret.row(i + 1);
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k)
        for (std::size_t jp = 0; jp < d; ++jp)
          for (std::size_t kp = 0; kp < d; ++kp)
            sums[((j * d + k) * d + jp) * d + kp].add(a[j] * a[jp] * b[k] * b[kp] +
                                                      a[j] * a[kp] * b[k] * b[jp]);
  }
  const double nd = static_cast<double>(n);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < d; ++k)
      for (std::size_t jp = 0; jp < d; ++jp)
        for (std::size_t kp = 0; kp < d; ++kp)
          avar(j, k, jp, kp) = nd * sums[((j * d + k) * d + jp) * d + kp].value();

  const double z = normal_critical_value(level);
  out.avar_hat.resize(d, d);
  out.ci_lo.resize(d, d);
  out.ci_hi.resize(d, d);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t k = 0; k < d; ++k) {
      const auto ej = static_cast<Eigen::Index>(j), ek = static_cast<Eigen::Index>(k);
      const double v = std::max(avar(j, k, j, k), 0.0);
      out.avar_hat(ej, ek) = v;
      if (!(v > 0.0)) out.degenerate = true;
      const double half = z * std::sqrt(v / nd);
      out.ci_lo(ej, ek) = out.estimate(ej, ek) - half;
      out.ci_hi(ej, ek) = out.estimate(ej, ek) + half;
    }
  }
  out.avar_full = std::move(avar);
  return out;
}

JumpTestResult jump_test(const ReturnSeries& ret, std::size_t j, double t) {
  if (ret.n() < 10) throw std::invalid_argument("jump_test: need n >= 10 returns");
  JumpTestResult out;
  out.n = ret.n();
  out.rv = realized_variance(ret, j, t);
  if (!(out.rv > 0.0)) throw std::domain_error("jump_test: realized variance is zero");
  const double mu1 = abs_moment(1.0);
  out.bpv_scaled = realized_bipower(ret, j, 1.0, 1.0, t) / (mu1 * mu1);
  out.iq_hat = quarticity_quadpower(ret, j, t);

  const double theta = theta_constant();
  const double root_n = std::sqrt(static_cast<double>(ret.n()));
  if (!(out.iq_hat > 0.0)) {
    out.degenerate = true;
    out.stat_linear = out.stat_ratio = std::numeric_limits<double>::quiet_NaN();
    out.p_linear = out.p_ratio = out.p_linear_two_sided = out.p_ratio_two_sided =
        std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.stat_linear = root_n * (out.bpv_scaled - out.rv) / std::sqrt(theta * out.iq_hat);
  out.stat_ratio =
      root_n * (out.bpv_scaled / out.rv - 1.0) / std::sqrt(theta * out.iq_hat / (out.rv * out.rv));
  out.p_linear = normal_cdf(out.stat_linear);
  out.p_ratio = normal_cdf(out.stat_ratio);
  out.p_linear_two_sided = 2.0 * normal_cdf(-std::abs(out.stat_linear));
  out.p_ratio_two_sided = 2.0 * normal_cdf(-std::abs(out.stat_ratio));
  return out;
}

double oracle_standardize(double estimate, double target, double avar_true, std::size_t n) {
  if (!(avar_true > 0.0)) throw std::domain_error("oracle_standardize: avar_true must be > 0");
  if (n == 0) throw std::invalid_argument("oracle_standardize: n must be >= 1");
  return std::sqrt(static_cast<double>(n)) * (estimate - target) / std::sqrt(avar_true);
}

}  // namespace rvlab
