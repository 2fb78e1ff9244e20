#include "rvlab/gh_function.hpp"

#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rvlab {
namespace {

Parity combine(Parity a, Parity b) {
  if (a == Parity::None || b == Parity::None) return Parity::None;
  return a == b ? Parity::Even : Parity::Odd;
}

Monomial unit_monomial(std::size_t dim) {
  Monomial m;
  m.coef = 1.0;
  m.abs_pow.assign(dim, 0.0);
  m.int_pow.assign(dim, 0);
  return m;
}

void require_component(std::size_t dim, std::size_t component) {
  if (dim == 0) throw std::invalid_argument("GHFunction: input dimension must be >= 1");
  if (component >= dim) {
    throw std::invalid_argument("GHFunction: component " + std::to_string(component) +
                                " out of range for dimension " + std::to_string(dim));
  }
}

}  // namespace

std::string to_string(Parity p) {
  switch (p) {
    case Parity::Even: return "even";
    case Parity::Odd: return "odd";
    case Parity::None: return "none";
  }
  return "none";
}

std::string to_string(GHKind k) {
  switch (k) {
    case GHKind::One: return "one";
    case GHKind::AbsPower: return "abs_power";
    case GHKind::SignedSquare: return "signed_square";
    case GHKind::OuterProduct: return "outer_product";
    case GHKind::Identity: return "identity";
    case GHKind::Diagonal: return "diagonal";
    case GHKind::Column: return "column";
    case GHKind::Custom: return "custom";
  }
  return "custom";
}

// ---------------------------------------------------------------------------
// Monomial

Monomial Monomial::constant(std::size_t dim, double value) {
  Monomial m = unit_monomial(dim);
  m.coef = value;
  return m;
}

double Monomial::operator()(std::span<const double> y) const {
  if (coef == 0.0) return 0.0;
  double v = coef;
  for (std::size_t k = 0; k < abs_pow.size(); ++k) {
    if (abs_pow[k] != 0.0) v *= std::pow(std::abs(y[k]), abs_pow[k]);
    for (int p = 0; p < int_pow[k]; ++p) v *= y[k];
  }
  return v;
}

bool Monomial::is_constant() const {
  if (coef == 0.0) return true;
  for (std::size_t k = 0; k < abs_pow.size(); ++k) {
    if (abs_pow[k] != 0.0 || int_pow[k] != 0) return false;
  }
  return true;
}

Parity Monomial::parity() const {
  const int odd = std::accumulate(int_pow.begin(), int_pow.end(), 0);
  return (odd % 2 == 0 || coef == 0.0) ? Parity::Even : Parity::Odd;
}

double Monomial::growth() const {
  double g = 0.0;
  for (std::size_t k = 0; k < abs_pow.size(); ++k) g += abs_pow[k] + int_pow[k];
  return g;
}

Monomial Monomial::operator*(const Monomial& other) const {
  if (dim() != other.dim()) throw std::invalid_argument("Monomial: dimension mismatch");
  Monomial m = *this;
  m.coef *= other.coef;
  for (std::size_t k = 0; k < m.abs_pow.size(); ++k) {
    m.abs_pow[k] += other.abs_pow[k];
    m.int_pow[k] += other.int_pow[k];
  }
  return m;
}

// ---------------------------------------------------------------------------
// Entry

double Entry::operator()(std::span<const double> y) const {
  if (is_monomial()) return monomial()(y);
  return custom().fn(y);
}

bool Entry::is_zero() const { return is_monomial() && monomial().is_zero(); }

bool Entry::is_constant() const { return is_monomial() && monomial().is_constant(); }

Parity Entry::parity() const { return is_monomial() ? monomial().parity() : custom().parity; }

double Entry::growth() const { return is_monomial() ? monomial().growth() : custom().growth; }

Entry Entry::operator*(const Entry& other) const {
  if (is_monomial() && other.is_monomial()) return Entry(monomial() * other.monomial());
  if (is_zero() || other.is_zero()) {
    const std::size_t dim = is_monomial() ? monomial().dim() : other.monomial().dim();
    return Entry(Monomial::constant(dim, 0.0));
  }
  CustomEntry c;
  c.parity = combine(parity(), other.parity());
  c.growth = growth() + other.growth();
  c.fn = [a = *this, b = other](std::span<const double> y) { return a(y) * b(y); };
  return Entry(std::move(c));
}

// ---------------------------------------------------------------------------
// GHFunction

GHFunction::GHFunction(GHKind kind, std::size_t dim, std::size_t rows, std::size_t cols,
                       std::vector<Entry> entries, std::string label)
    : kind_(kind),
      dim_(dim),
      rows_(rows),
      cols_(cols),
      entries_(std::move(entries)),
      label_(std::move(label)) {}

GHFunction GHFunction::one(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("GHFunction: input dimension must be >= 1");
  return GHFunction(GHKind::One, dim, 1, 1, {Entry(Monomial::constant(dim, 1.0))}, "1");
}

GHFunction GHFunction::abs_power(std::size_t dim, std::size_t component, double r) {
  require_component(dim, component);
  if (!(r > 0.0) || !std::isfinite(r)) {
    throw std::invalid_argument("GHFunction::abs_power: r must be a finite value > 0");
  }
  Monomial m = unit_monomial(dim);
  m.abs_pow[component] = r;
  std::ostringstream label;
  label << "|y" << component << "|^" << r;
  return GHFunction(GHKind::AbsPower, dim, 1, 1, {Entry(std::move(m))}, label.str());
}

GHFunction GHFunction::signed_square(std::size_t dim, std::size_t component) {
  require_component(dim, component);
  Monomial m = unit_monomial(dim);
  m.int_pow[component] = 2;
  return GHFunction(GHKind::SignedSquare, dim, 1, 1, {Entry(std::move(m))},
                    "y" + std::to_string(component) + "^2");
}

GHFunction GHFunction::outer_product(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("GHFunction: input dimension must be >= 1");
  std::vector<Entry> entries;
  entries.reserve(dim * dim);
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < dim; ++k) {
      Monomial m = unit_monomial(dim);
      m.int_pow[j] += 1;
      m.int_pow[k] += 1;
      entries.emplace_back(std::move(m));
    }
  }
  return GHFunction(GHKind::OuterProduct, dim, dim, dim, std::move(entries), "yy'");
}

GHFunction GHFunction::identity(std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("GHFunction: input dimension must be >= 1");
  std::vector<Entry> entries;
  entries.reserve(dim * dim);
  for (std::size_t j = 0; j < dim; ++j) {
    for (std::size_t k = 0; k < dim; ++k) {
      entries.emplace_back(Monomial::constant(dim, j == k ? 1.0 : 0.0));
    }
  }
  return GHFunction(GHKind::Identity, dim, dim, dim, std::move(entries), "I");
}

namespace {

std::size_t common_dim(const std::vector<GHFunction>& parts, const char* who) {
  if (parts.empty()) throw std::invalid_argument(std::string(who) + ": no parts given");
  const std::size_t dim = parts.front().input_dim();
  for (const auto& p : parts) {
    if (!p.is_scalar()) throw std::invalid_argument(std::string(who) + ": parts must be scalar");
    if (p.input_dim() != dim) {
      throw std::invalid_argument(std::string(who) + ": parts have different input dimensions");
    }
  }
  return dim;
}

}  // namespace

GHFunction GHFunction::diagonal(const std::vector<GHFunction>& parts) {
  const std::size_t dim = common_dim(parts, "GHFunction::diagonal");
  const std::size_t m = parts.size();
  std::vector<Entry> entries;
  entries.reserve(m * m);
  std::string label = "diag(";
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      entries.push_back(j == k ? parts[j].entry(0, 0) : Entry(Monomial::constant(dim, 0.0)));
    }
    label += (j ? "," : "") + parts[j].describe();
  }
  return GHFunction(GHKind::Diagonal, dim, m, m, std::move(entries), label + ")");
}

GHFunction GHFunction::column(const std::vector<GHFunction>& parts) {
  const std::size_t dim = common_dim(parts, "GHFunction::column");
  std::vector<Entry> entries;
  entries.reserve(parts.size());
  std::string label = "col(";
  for (std::size_t j = 0; j < parts.size(); ++j) {
    entries.push_back(parts[j].entry(0, 0));
    label += (j ? "," : "") + parts[j].describe();
  }
  return GHFunction(GHKind::Column, dim, parts.size(), 1, std::move(entries), label + ")");
}

GHFunction GHFunction::custom(std::size_t dim, ScalarFn fn, Parity parity, double growth) {
  if (dim == 0) throw std::invalid_argument("GHFunction: input dimension must be >= 1");
  if (!fn) throw std::invalid_argument("GHFunction::custom: empty callable");
  if (!(growth >= 0.0)) throw std::invalid_argument("GHFunction::custom: growth exponent must be >= 0");
  CustomEntry c{std::move(fn), parity, growth};
  return GHFunction(GHKind::Custom, dim, 1, 1, {Entry(std::move(c))}, "custom");
}

Eigen::MatrixXd GHFunction::operator()(std::span<const double> y) const {
  if (y.size() != dim_) throw std::invalid_argument("GHFunction: argument has wrong dimension");
  Eigen::MatrixXd out(rows_, cols_);
  for (std::size_t j = 0; j < rows_; ++j) {
    for (std::size_t k = 0; k < cols_; ++k) out(j, k) = entry(j, k)(y);
  }
  return out;
}

bool GHFunction::is_constant() const {
  for (const auto& e : entries_) {
    if (!e.is_constant()) return false;
  }
  return true;
}

Parity GHFunction::parity() const {
  Parity p = Parity::Even;
  bool first = true;
  for (const auto& e : entries_) {
    if (e.is_zero()) continue;
    const Parity q = e.parity();
    if (q == Parity::None) return Parity::None;
    if (first) {
      p = q;
      first = false;
    } else if (p != q) {
      return Parity::None;
    }
  }
  return p;
}

double GHFunction::growth() const {
  double g = 0.0;
  for (const auto& e : entries_) g = std::max(g, e.growth());
  return g;
}

std::string GHFunction::describe() const { return label_; }

void require_conformable(const GHFunction& g, const GHFunction& h) {
  if (g.input_dim() != h.input_dim()) {
    throw std::invalid_argument("g and h take arguments of different dimension (" +
                                std::to_string(g.input_dim()) + " vs " +
                                std::to_string(h.input_dim()) + ")");
  }
  if (g.cols() != h.rows()) {
    throw std::invalid_argument("g (" + std::to_string(g.rows()) + "x" + std::to_string(g.cols()) +
                                ") and h (" + std::to_string(h.rows()) + "x" +
                                std::to_string(h.cols()) + ") are not conformable");
  }
}

}  // namespace rvlab
