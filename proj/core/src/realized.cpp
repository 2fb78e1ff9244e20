#include "rvlab/realized.hpp"

#include "rvlab/gaussian_moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rvlab {
namespace {

inline double abs_pow(double x, double r) {
  const double a = std::abs(x);
  if (r == 1.0) return a;
  if (r == 2.0) return a * a;
  if (r == 4.0) return (a * a) * (a * a);
  return std::pow(a, r);
}

void require_component(const ReturnSeries& ret, std::size_t j) {
  if (j >= ret.dim()) {
    throw std::invalid_argument("component " + std::to_string(j) + " out of range for dimension " +
                                std::to_string(ret.dim()));
  }
}

void require_positive_power(double r, const char* who) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument(std::string(who) + ": powers must be finite and > 0");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

LogPricePath::LogPricePath(std::vector<double> times, std::vector<double> values, std::size_t dim)
    : times_(std::move(times)), values_(std::move(values)), dim_(dim) {
  if (dim_ == 0) throw std::invalid_argument("LogPricePath: dimension must be >= 1");
  if (times_.size() < 2) throw std::invalid_argument("LogPricePath: need at least 2 observations");
  if (values_.size() != times_.size() * dim_) {
    throw std::invalid_argument("LogPricePath: values size does not match times x dim");
  }
  if (times_.front() < 0.0 || times_.back() > 1.0) {
    throw std::invalid_argument("LogPricePath: times must lie in [0, 1]");
  }
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) {
      throw std::invalid_argument("LogPricePath: times must be strictly increasing (index " +
                                  std::to_string(i) + ")");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw std::invalid_argument("LogPricePath: non-finite value");
  }
}

ReturnSeries::ReturnSeries(std::size_t n, std::size_t dim, std::vector<double> deltas)
    : n_(n), dim_(dim), deltas_(std::move(deltas)) {
  if (n_ == 0 || dim_ == 0) throw std::invalid_argument("ReturnSeries: n and dim must be >= 1");
  if (deltas_.size() != n_ * dim_) throw std::invalid_argument("ReturnSeries: size != n x dim");
  for (double v : deltas_) {
    if (!std::isfinite(v)) throw std::invalid_argument("ReturnSeries: non-finite return");
  }
}

std::vector<double> ReturnSeries::component(std::size_t j) const {
  std::vector<double> out(n_);
  for (std::size_t i = 0; i < n_; ++i) out[i] = (*this)(i, j);
  return out;
}

std::size_t grid_index(std::size_t n, double t) {
  if (!(t > 0.0) || t > 1.0 + 1e-12) {
    throw std::invalid_argument("evaluation time t must lie in (0, 1]");
  }
  const double x = static_cast<double>(n) * t;
  const auto k = static_cast<std::size_t>(std::floor(x + 1e-9));
  return std::min(k, n);
}

ReturnSeries returns_from_path(const LogPricePath& path, std::size_t n) {
  if (n < 2) throw std::invalid_argument("returns_from_path: n must be >= 2");
  const std::size_t d = path.dim();
  const auto& times = path.times();
  std::vector<double> level(d), prev(d), deltas(n * d);
  std::size_t obs = 0;
  auto sample = [&](double tau) {
    while (obs + 1 < times.size() && times[obs + 1] <= tau + 1e-12) ++obs;
    for (std::size_t j = 0; j < d; ++j) level[j] = path.value(obs, j);
  };
  sample(0.0);
  prev = level;
  for (std::size_t i = 1; i <= n; ++i) {
    sample(static_cast<double>(i) / static_cast<double>(n));
    for (std::size_t j = 0; j < d; ++j) deltas[(i - 1) * d + j] = level[j] - prev[j];
    prev = level;
  }
  ReturnSeries out(n, d, std::move(deltas));
  out.set_sparse(path.size() - 1 < n);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct BipowerAccumulator {
  const ReturnSeries& ret;
  const GHFunction& g;
  const GHFunction& h;
  double root_n;
  std::vector<double> x, xn;
  std::vector<CompensatedSum> sums;

  BipowerAccumulator(const ReturnSeries& r, const GHFunction& gf, const GHFunction& hf)
      : ret(r), g(gf), h(hf), root_n(std::sqrt(static_cast<double>(r.n()))),
        x(r.dim()), xn(r.dim(), 0.0), sums(gf.rows() * hf.cols()) {}

  void add(std::size_t i) {
    for (std::size_t k = 0; k < ret.dim(); ++k) x[k] = root_n * ret(i, k);
    if (i + 1 < ret.n()) {
      for (std::size_t k = 0; k < ret.dim(); ++k) xn[k] = root_n * ret(i + 1, k);
    } else {
      std::fill(xn.begin(), xn.end(), 0.0);
    }
    const Eigen::MatrixXd prod = g(x) * h(xn);
    for (std::size_t a = 0; a < g.rows(); ++a) {
      for (std::size_t b = 0; b < h.cols(); ++b) {
        sums[a * h.cols() + b].add(prod(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
      }
    }
  }

  Eigen::MatrixXd value() const {
    Eigen::MatrixXd out(g.rows(), h.cols());
    const double inv_n = 1.0 / static_cast<double>(ret.n());
    for (std::size_t a = 0; a < g.rows(); ++a) {
      for (std::size_t b = 0; b < h.cols(); ++b) {
        out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
            inv_n * sums[a * h.cols() + b].value();
      }
    }
    return out;
  }
};

void require_shapes(const ReturnSeries& ret, const GHFunction& g, const GHFunction& h) {
  require_conformable(g, h);
  if (g.input_dim() != ret.dim()) {
    throw std::invalid_argument("g/h input dimension does not match the return series");
  }
}

std::size_t bipower_upper(const ReturnSeries& ret, const GHFunction& h, std::size_t k) {
  return h.is_constant() ? k : std::min(k, ret.n() - 1);
}

}  // namespace

Eigen::MatrixXd generalized_bipower(const ReturnSeries& ret, const GHFunction& g,
                                    const GHFunction& h, double t) {
  require_shapes(ret, g, h);
  const std::size_t upper = bipower_upper(ret, h, grid_index(ret.n(), t));
  BipowerAccumulator acc(ret, g, h);
  for (std::size_t i = 0; i < upper; ++i) acc.add(i);
  return acc.value();
}

RealizedProcess generalized_bipower_process(const ReturnSeries& ret, const GHFunction& g,
                                            const GHFunction& h) {
  require_shapes(ret, g, h);
  RealizedProcess out;
  out.n = ret.n();
  out.grid.reserve(ret.n());
  out.values.reserve(ret.n());
  BipowerAccumulator acc(ret, g, h);
  std::size_t added = 0;
  for (std::size_t k = 1; k <= ret.n(); ++k) {
    const std::size_t upper = bipower_upper(ret, h, k);
    while (added < upper) acc.add(added++);
    out.grid.push_back(static_cast<double>(k) / static_cast<double>(ret.n()));
    out.values.push_back(acc.value());
  }
  return out;
}

double realized_variance(const ReturnSeries& ret, std::size_t j, double t) {
  require_component(ret, j);
  const std::size_t upper = grid_index(ret.n(), t);
  CompensatedSum sum;
  for (std::size_t i = 0; i < upper; ++i) sum.add(ret(i, j) * ret(i, j));
  return sum.value();
}

Eigen::MatrixXd realized_covariation(const ReturnSeries& ret, double t) {
  const std::size_t upper = grid_index(ret.n(), t);
  const std::size_t d = ret.dim();
  std::vector<CompensatedSum> sums(d * d);
  for (std::size_t i = 0; i < upper; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) sums[a * d + b].add(ret(i, a) * ret(i, b));
    }
  }
  Eigen::MatrixXd out(d, d);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      out(ia, ib) = out(ib, ia) = sums[a * d + b].value();
    }
  }
  return out;
}

double realized_power_variation(const ReturnSeries& ret, std::size_t j, double r, double t) {
  require_component(ret, j);
  require_positive_power(r, "realized_power_variation");
  const std::size_t upper = grid_index(ret.n(), t);
  CompensatedSum sum;
  for (std::size_t i = 0; i < upper; ++i) sum.add(abs_pow(ret(i, j), r));
  return std::pow(static_cast<double>(ret.n()), -1.0 + 0.5 * r) * sum.value();
}

double realized_bipower(const ReturnSeries& ret, std::size_t j, double r, double s, double t) {
  const double powers[] = {r, s};
  return realized_multipower(ret, j, powers, t);
}

double realized_multipower(const ReturnSeries& ret, std::size_t j, std::span<const double> powers,
                           double t) {
  require_component(ret, j);
  if (powers.empty()) throw std::invalid_argument("realized_multipower: empty powers list");
  double total_power = 0.0;
  for (double p : powers) {
    require_positive_power(p, "realized_multipower");
    total_power += p;
  }
  const std::size_t n = ret.n();
  const std::size_t terms = powers.size();
  const std::size_t k = grid_index(n, t);
  const std::size_t upper = terms > n ? 0 : std::min(k, n - terms + 1);

  // Each window factor is a power of one return; tabulate them once.
  std::vector<std::vector<double>> table(terms);
  const std::size_t span_end = std::min(n, upper + terms - 1);
  for (std::size_t m = 0; m < terms; ++m) {
    bool seen = false;
    for (std::size_t q = 0; q < m; ++q) {
      if (powers[q] == powers[m]) {
        table[m] = table[q];
        seen = true;
        break;
      }
    }
    if (seen) continue;
    table[m].resize(span_end);
    for (std::size_t i = 0; i < span_end; ++i) table[m][i] = abs_pow(ret(i, j), powers[m]);
  }
  CompensatedSum sum;
  for (std::size_t i = 0; i < upper; ++i) {
    double prod = table[0][i];
    for (std::size_t m = 1; m < terms; ++m) prod *= table[m][i + m];
    sum.add(prod);
  }
  return std::pow(static_cast<double>(n), -1.0 + 0.5 * total_power) * sum.value();
}

double quarticity_rv(const ReturnSeries& ret, std::size_t j, double t) {
  return realized_power_variation(ret, j, 4.0, t) / 3.0;
}

double quarticity_tripower(const ReturnSeries& ret, std::size_t j, double t) {
  constexpr double p = 4.0 / 3.0;
  const double powers[] = {p, p, p};
  const double mu = abs_moment(p);
  return realized_multipower(ret, j, powers, t) / (mu * mu * mu);
}

double quarticity_quadpower(const ReturnSeries& ret, std::size_t j, double t) {
  const double powers[] = {1.0, 1.0, 1.0, 1.0};
  const double mu1 = abs_moment(1.0);
  return realized_multipower(ret, j, powers, t) / std::pow(mu1, 4);
}

double det_rank_statistic(const ReturnSeries& ret, double t) {
  const std::size_t n = ret.n();
  const std::size_t d = ret.dim();
  const std::size_t k = grid_index(n, t);
  const std::size_t upper = d > n ? 0 : std::min(k, n - d + 1);
  double factorial = 1.0;
  for (std::size_t m = 2; m <= d; ++m) factorial *= static_cast<double>(m);
  const double scale = std::pow(static_cast<double>(n), static_cast<double>(d) - 1.0) / factorial;

  CompensatedSum sum;
  Eigen::MatrixXd zeta(d, d);
  for (std::size_t i = 0; i < upper; ++i) {
    zeta.setZero();
    for (std::size_t m = 0; m < d; ++m) {
      const Eigen::Map<const Eigen::VectorXd> v(ret.row(i + m).data(), static_cast<Eigen::Index>(d));
      zeta.noalias() += v * v.transpose();
    }
    sum.add(d == 1 ? zeta(0, 0) : zeta.determinant());
  }
  return scale * sum.value();
}

}  // namespace rvlab
