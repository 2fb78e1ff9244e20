#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace rvlab {

/// Behaviour under y -> -y.
enum class Parity { Even, Odd, None };

std::string to_string(Parity p);

/// coef * prod_k |y_k|^abs_pow[k] * y_k^int_pow[k].  All built-in entries are
/// of this form, which is what lets Gaussian expectations be done in closed
/// form.
struct Monomial {
  double coef = 0.0;
  std::vector<double> abs_pow;
  std::vector<int> int_pow;

  static Monomial constant(std::size_t dim, double value);

  std::size_t dim() const { return abs_pow.size(); }
  double operator()(std::span<const double> y) const;
  bool is_zero() const { return coef == 0.0; }
  bool is_constant() const;
  Parity parity() const;
  double growth() const;
  Monomial operator*(const Monomial& other) const;
};

using ScalarFn = std::function<double(std::span<const double>)>;

/// User-supplied scalar entry.  Parity and polynomial growth exponent are
/// declared by the caller and trusted.
struct CustomEntry {
  ScalarFn fn;
  Parity parity = Parity::None;
  double growth = 0.0;
};

/// One scalar entry g^{jl}(y) of a matrix-valued test function.
class Entry {
 public:
  Entry() = default;
  Entry(Monomial m) : rep_(std::move(m)) {}
  Entry(CustomEntry c) : rep_(std::move(c)) {}

  bool is_monomial() const { return std::holds_alternative<Monomial>(rep_); }
  const Monomial& monomial() const { return std::get<Monomial>(rep_); }
  const CustomEntry& custom() const { return std::get<CustomEntry>(rep_); }

  double operator()(std::span<const double> y) const;
  bool is_zero() const;
  bool is_constant() const;
  Parity parity() const;
  double growth() const;

  Entry operator*(const Entry& other) const;

 private:
  std::variant<Monomial, CustomEntry> rep_;
};

enum class GHKind { One, AbsPower, SignedSquare, OuterProduct, Identity, Diagonal, Column, Custom };

std::string to_string(GHKind k);

/// Matrix-valued function y in R^d -> R^{rows x cols}, used as either factor
/// of the generalized bipower product g(sqrt(n) dY_i) h(sqrt(n) dY_{i+1}).
class GHFunction {
 public:
  /// The constant 1 (1x1).
  static GHFunction one(std::size_t dim);
  /// |y_j|^r, r > 0 (1x1).
  static GHFunction abs_power(std::size_t dim, std::size_t component, double r);
  /// (y_j)^2 (1x1).
  static GHFunction signed_square(std::size_t dim, std::size_t component);
  /// y y' (d x d).
  static GHFunction outer_product(std::size_t dim);
  /// The d x d identity matrix (constant).
  static GHFunction identity(std::size_t dim);
  /// Scalar parts placed on the diagonal of a square matrix.
  static GHFunction diagonal(const std::vector<GHFunction>& parts);
  /// Scalar parts stacked into a column vector.
  static GHFunction column(const std::vector<GHFunction>& parts);
  static GHFunction custom(std::size_t dim, ScalarFn fn, Parity parity, double growth);

  GHKind kind() const { return kind_; }
  std::size_t input_dim() const { return dim_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

  const Entry& entry(std::size_t row, std::size_t col) const { return entries_[row * cols_ + col]; }

  Eigen::MatrixXd operator()(std::span<const double> y) const;
  /// True when no entry depends on its argument.
  bool is_constant() const;
  Parity parity() const;
  double growth() const;

  std::string describe() const;

 private:
  GHFunction(GHKind kind, std::size_t dim, std::size_t rows, std::size_t cols,
             std::vector<Entry> entries, std::string label);

  GHKind kind_;
  std::size_t dim_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<Entry> entries_;
  std::string label_;
};

/// Throws std::invalid_argument unless g(y) h(y') is a well-formed product.
void require_conformable(const GHFunction& g, const GHFunction& h);

}  // namespace rvlab
