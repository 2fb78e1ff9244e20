#include "rvlab/gaussian_moments.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace rvlab {
namespace {

constexpr double kMaxCondition = 1e12;

void require_dim(std::size_t fdim, const SpotCov& cov) {
  if (fdim != cov.dim()) {
    throw std::invalid_argument("function input dimension " + std::to_string(fdim) +
                                " does not match covariance dimension " +
                                std::to_string(cov.dim()));
  }
}

void require_well_conditioned(const SpotCov& cov) {
  if (cov.dim() > 1 && cov.condition_number() > kMaxCondition) {
    throw std::domain_error("spot covariance is near-singular (condition number > 1e12)");
  }
}

// E prod_i X_{idx[i]} for X ~ N(0, S): sum over perfect matchings.
double isserlis(std::vector<std::size_t>& idx, const Eigen::MatrixXd& s) {
  if (idx.empty()) return 1.0;
  if (idx.size() % 2 == 1) return 0.0;
  const std::size_t first = idx.back();
  idx.pop_back();
  double total = 0.0;
  for (std::size_t m = 0; m < idx.size(); ++m) {
    const double c = s(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(idx[m]));
    if (c != 0.0) {
      std::swap(idx[m], idx.back());
      const std::size_t partner = idx.back();
      idx.pop_back();
      total += c * isserlis(idx, s);
      idx.push_back(partner);
      std::swap(idx[m], idx.back());
    }
  }
  idx.push_back(first);
  return total;
}

// Closed form when available; NaN signals "needs numerical integration".
double monomial_closed_form(const Monomial& m, const Eigen::MatrixXd& s) {
  if (m.coef == 0.0) return 0.0;
  std::vector<std::size_t> involved;
  bool any_abs = false;
  for (std::size_t k = 0; k < m.dim(); ++k) {
    if (m.abs_pow[k] != 0.0 || m.int_pow[k] != 0) involved.push_back(k);
    if (m.abs_pow[k] != 0.0) any_abs = true;
  }
  if (involved.empty()) return m.coef;
  if (involved.size() == 1) {
    const std::size_t k = involved.front();
    if (m.int_pow[k] % 2 != 0) return 0.0;
    const double p = m.abs_pow[k] + m.int_pow[k];
    const double var = s(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    return m.coef * abs_moment(p) * std::pow(var, 0.5 * p);
  }
  if (!any_abs) {
    std::vector<std::size_t> idx;
    for (std::size_t k : involved) idx.insert(idx.end(), static_cast<std::size_t>(m.int_pow[k]), k);
    return m.coef * isserlis(idx, s);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

double numeric_expectation(const Entry& f, const SpotCov& cov, const QuadratureOptions& opts) {
  if (cov.dim() == 1) {
    const double sd = std::sqrt(cov.covariance()(0, 0));
    return gaussian_expectation_1d([&](double x) { return f(std::span<const double>(&x, 1)); },
                                   sd, opts)
        .value;
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(cov.covariance());
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("spot covariance is not positive definite");
  }
  const Eigen::MatrixXd factor = llt.matrixL();
  return gaussian_expectation_nd([&](std::span<const double> y) { return f(y); }, factor, opts)
      .value;
}

}  // namespace

// ---------------------------------------------------------------------------
// SpotCov

SpotCov::SpotCov(Eigen::MatrixXd sigma, Eigen::MatrixXd cov)
    : sigma_(std::move(sigma)), cov_(std::move(cov)) {}

SpotCov SpotCov::from_sigma(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() == 0 || sigma.cols() == 0) throw std::invalid_argument("SpotCov: empty sigma");
  if (!sigma.allFinite()) throw std::invalid_argument("SpotCov: sigma has non-finite entries");
  Eigen::MatrixXd cov = sigma * sigma.transpose();
  cov = 0.5 * (cov + cov.transpose());
  return SpotCov(sigma, std::move(cov));
}

SpotCov SpotCov::from_covariance(const Eigen::MatrixXd& covariance) {
  if (covariance.rows() == 0 || covariance.rows() != covariance.cols()) {
    throw std::invalid_argument("SpotCov: covariance must be a non-empty square matrix");
  }
  if (!covariance.allFinite()) throw std::invalid_argument("SpotCov: non-finite covariance");
  const double scale = std::max(1.0, covariance.cwiseAbs().maxCoeff());
  if ((covariance - covariance.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("SpotCov: covariance is not symmetric");
  }
  const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  Eigen::VectorXd values = eig.eigenvalues();
  if (values.minCoeff() < -1e-12 * scale) {
    throw std::invalid_argument("SpotCov: covariance is not positive semi-definite");
  }
  values = values.cwiseMax(0.0).cwiseSqrt();
  Eigen::MatrixXd root = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
  root = 0.5 * (root + root.transpose());
  return SpotCov(std::move(root), sym);
}

SpotCov SpotCov::scalar(double sigma) {
  if (!std::isfinite(sigma)) throw std::invalid_argument("SpotCov: non-finite sigma");
  return SpotCov(Eigen::MatrixXd::Constant(1, 1, sigma), Eigen::MatrixXd::Constant(1, 1, sigma * sigma));
}

double SpotCov::condition_number() const {
  if (dim() == 1) return cov_(0, 0) > 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// ---------------------------------------------------------------------------
// Constants

double abs_moment(double r) {
  if (!std::isfinite(r) || r <= -1.0) {
    throw std::domain_error("abs_moment: r must be > -1 (got " + std::to_string(r) + ")");
  }
  // Even integers: (r-1)!!, exactly.
  if (r >= 0.0 && r <= 300.0 && r == std::floor(r) && static_cast<long>(r) % 2 == 0) {
    double v = 1.0;
    for (long k = static_cast<long>(r) - 1; k > 1; k -= 2) v *= static_cast<double>(k);
    return v;
  }
  const double a = 0.5 * (r + 1.0);
  if (a < 170.0) return std::pow(2.0, 0.5 * r) * std::tgamma(a) / std::sqrt(std::numbers::pi);
  return std::exp(0.5 * r * std::numbers::ln2 + std::lgamma(a) - 0.5 * std::log(std::numbers::pi));
}

double theta_constant() {
  constexpr double pi = std::numbers::pi;
  return pi * pi / 4.0 + pi - 5.0;
}

double power_variance_constant(double r) {
  if (!(r > 0.0)) throw std::domain_error("power_variance_constant: r must be > 0");
  const double mu = abs_moment(r);
  return abs_moment(2.0 * r) - mu * mu;
}

double bipower_variance_constant(double r, double s) {
  if (!(r > 0.0) || !(s > 0.0)) throw std::domain_error("bipower_variance_constant: r, s must be > 0");
  const double mr = abs_moment(r);
  const double ms = abs_moment(s);
  return abs_moment(2.0 * r) * abs_moment(2.0 * s) + 2.0 * abs_moment(r + s) * mr * ms -
         3.0 * mr * mr * ms * ms;
}

double multipower_variance_constant(int terms) {
  if (terms < 1) throw std::domain_error("multipower_variance_constant: I must be >= 1");
  const double p = 2.0 / terms;
  const double m2 = abs_moment(2.0 * p);
  const double m1 = abs_moment(p);
  const double mean_sq = std::pow(m1, 2 * terms);
  double total = std::pow(m2, terms) - mean_sq;
  // Lag-j windows share I-j factors.
  for (int lag = 1; lag < terms; ++lag) {
    total += 2.0 * (std::pow(m2, terms - lag) * std::pow(m1, 2 * lag) - mean_sq);
  }
  return total;
}

double multipower_asymptotic_variance(std::span<const double> powers) {
  if (powers.empty()) throw std::domain_error("multipower_asymptotic_variance: empty powers");
  for (double p : powers) {
    if (!(p > 0.0)) throw std::domain_error("multipower_asymptotic_variance: powers must be > 0");
  }
  const std::size_t terms = powers.size();
  double mean = 1.0;
  for (double p : powers) mean *= abs_moment(p);
  double total = 0.0;
  for (std::size_t lag = 0; lag < terms; ++lag) {
    // Window A covers u_0..u_{I-1}, window B covers u_lag..u_{lag+I-1}.
    double joint = 1.0;
    for (std::size_t q = 0; q < terms + lag; ++q) {
      double e = 0.0;
      if (q < terms) e += powers[q];
      if (q >= lag && q - lag < terms) e += powers[q - lag];
      joint *= abs_moment(e);
    }
    total += (lag == 0 ? 1.0 : 2.0) * (joint - mean * mean);
  }
  return total;
}

// ---------------------------------------------------------------------------
// rho functionals

double expectation(const Entry& f, const SpotCov& cov, const QuadratureOptions& opts) {
  if (f.is_monomial()) {
    require_dim(f.monomial().dim(), cov);
    const double closed = monomial_closed_form(f.monomial(), cov.covariance());
    if (!std::isnan(closed)) return closed;
  }
  return numeric_expectation(f, cov, opts);
}

Eigen::MatrixXd rho(const GHFunction& f, const SpotCov& cov, const QuadratureOptions& opts) {
  require_dim(f.input_dim(), cov);
  require_well_conditioned(cov);
  Eigen::MatrixXd out(f.rows(), f.cols());
  for (std::size_t j = 0; j < f.rows(); ++j) {
    for (std::size_t k = 0; k < f.cols(); ++k) {
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          expectation(f.entry(j, k), cov, opts);
    }
  }
  return out;
}

Eigen::MatrixXd rho_product(const GHFunction& g, const GHFunction& h, const SpotCov& cov,
                            const QuadratureOptions& opts) {
  require_conformable(g, h);
  require_dim(g.input_dim(), cov);
  require_well_conditioned(cov);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(g.rows(), h.cols());
  for (std::size_t j = 0; j < g.rows(); ++j) {
    for (std::size_t k = 0; k < h.cols(); ++k) {
      double sum = 0.0;
      for (std::size_t l = 0; l < g.cols(); ++l) {
        const Entry& a = g.entry(j, l);
        const Entry& b = h.entry(l, k);
        if (a.is_zero() || b.is_zero()) continue;
        sum += expectation(a * b, cov, opts);
      }
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = sum;
    }
  }
  return out;
}

double clt_variance_scalar(const GHFunction& g, const GHFunction& h, const SpotCov& cov,
                           const QuadratureOptions& opts) {
  if (!g.is_scalar() || !h.is_scalar()) {
    throw std::invalid_argument("clt_variance_scalar: g and h must both be 1x1");
  }
  require_conformable(g, h);
  require_dim(g.input_dim(), cov);
  require_well_conditioned(cov);
  const Entry& ge = g.entry(0, 0);
  const Entry& he = h.entry(0, 0);
  const double rg = expectation(ge, cov, opts);
  const double rh = expectation(he, cov, opts);
  const double rgg = expectation(ge * ge, cov, opts);
  const double rhh = expectation(he * he, cov, opts);
  const double rgh = expectation(ge * he, cov, opts);
  const double m = rg * rh;
  return rgg * rhh + 2.0 * m * rgh - 3.0 * m * m;
}

// ---------------------------------------------------------------------------
// CovarianceArray

CovarianceArray::CovarianceArray(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), values_(rows * cols * rows * cols, 0.0) {}

double& CovarianceArray::operator()(std::size_t j, std::size_t k, std::size_t jp, std::size_t kp) {
  return values_[((j * cols_ + k) * rows_ + jp) * cols_ + kp];
}

double CovarianceArray::operator()(std::size_t j, std::size_t k, std::size_t jp,
                                   std::size_t kp) const {
  return values_[((j * cols_ + k) * rows_ + jp) * cols_ + kp];
}

Eigen::MatrixXd CovarianceArray::as_matrix() const {
  const auto m = static_cast<Eigen::Index>(rows_ * cols_);
  Eigen::MatrixXd out(m, m);
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) out(a, b) = values_[static_cast<std::size_t>(a * m + b)];
  }
  return out;
}

CovarianceArray clt_covariance_general(const GHFunction& g, const GHFunction& h,
                                       const SpotCov& cov, const QuadratureOptions& opts) {
  require_conformable(g, h);
  require_dim(g.input_dim(), cov);
  require_well_conditioned(cov);
  const std::size_t d1 = g.rows(), d2 = g.cols(), d3 = h.cols();

  auto ex = [&](const Entry& e) { return e.is_zero() ? 0.0 : expectation(e, cov, opts); };
  auto ex2 = [&](const Entry& a, const Entry& b) {
    return (a.is_zero() || b.is_zero()) ? 0.0 : expectation(a * b, cov, opts);
  };

  // First moments.
  std::vector<double> rg(d1 * d2), rh(d2 * d3);
  for (std::size_t j = 0; j < d1; ++j)
    for (std::size_t l = 0; l < d2; ++l) rg[j * d2 + l] = ex(g.entry(j, l));
  for (std::size_t l = 0; l < d2; ++l)
    for (std::size_t k = 0; k < d3; ++k) rh[l * d3 + k] = ex(h.entry(l, k));

  // Second moments, indexed by flattened entry positions.
  const std::size_t ng = d1 * d2, nh = d2 * d3;
  std::vector<double> rgg(ng * ng), rhh(nh * nh), rgh(ng * nh);
  for (std::size_t a = 0; a < ng; ++a)
    for (std::size_t b = a; b < ng; ++b)
      rgg[a * ng + b] = rgg[b * ng + a] =
          ex2(g.entry(a / d2, a % d2), g.entry(b / d2, b % d2));
  for (std::size_t a = 0; a < nh; ++a)
    for (std::size_t b = a; b < nh; ++b)
      rhh[a * nh + b] = rhh[b * nh + a] =
          ex2(h.entry(a / d3, a % d3), h.entry(b / d3, b % d3));
  for (std::size_t a = 0; a < ng; ++a)
    for (std::size_t b = 0; b < nh; ++b)
      rgh[a * nh + b] = ex2(g.entry(a / d2, a % d2), h.entry(b / d3, b % d3));

  CovarianceArray out(d1, d3);
  for (std::size_t j = 0; j < d1; ++j) {
    for (std::size_t k = 0; k < d3; ++k) {
      for (std::size_t jp = 0; jp < d1; ++jp) {
        for (std::size_t kp = 0; kp < d3; ++kp) {
          double sum = 0.0;
          for (std::size_t l = 0; l < d2; ++l) {
            for (std::size_t lp = 0; lp < d2; ++lp) {
              const std::size_t g1 = j * d2 + l, g2 = jp * d2 + lp;
              const std::size_t h1 = l * d3 + k, h2 = lp * d3 + kp;
              sum += rgg[g1 * ng + g2] * rhh[h1 * nh + h2] +
                     rg[g1] * rh[h2] * rgh[g2 * nh + h1] +
                     rg[g2] * rh[h1] * rgh[g1 * nh + h2] -
                     3.0 * rg[g1] * rg[g2] * rh[h1] * rh[h2];
            }
          }
          out(j, k, jp, kp) = sum;
        }
      }
    }
  }
  return out;
}

}  // namespace rvlab
