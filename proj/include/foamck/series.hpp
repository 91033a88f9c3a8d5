#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "foamck/box.hpp"
#include "foamck/expr.hpp"

namespace foamck {

/// Monomials x^alpha with |alpha| <= order in graded order, plus the index
/// tables needed by truncated products. Shared and cached per (dim, order).
class MonomialBasis {
 public:
  static std::shared_ptr<const MonomialBasis> get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  std::size_t size() const { return alphas_.size(); }
  const MultiIndex& alpha(std::size_t i) const { return alphas_[i]; }
  int degree(std::size_t i) const { return degrees_[i]; }
  /// Position of alpha, or -1 when alpha is out of range.
  long index(std::span<const int> alpha) const;
  /// First index of the monomials of total degree d.
  std::size_t degree_start(int d) const { return starts_[static_cast<std::size_t>(d)]; }

  struct ProductEntry {
    std::uint32_t j;
    std::uint32_t k;
  };
  /// For monomial i, every j with deg(i)+deg(j) <= order and k = index(alpha_i + alpha_j).
  std::span<const ProductEntry> products(std::size_t i) const {
    return {product_.data() + product_start_[i], product_start_[i + 1] - product_start_[i]};
  }

  MonomialBasis(int dim, int order);

 private:
  int dim_;
  int order_;
  std::vector<MultiIndex> alphas_;
  std::vector<int> degrees_;
  std::vector<std::size_t> starts_;
  std::vector<long> lookup_;
  std::vector<ProductEntry> product_;
  std::vector<std::size_t> product_start_;
};

/// Truncated multivariate Taylor polynomial sum_alpha c_alpha (x - center)^alpha.
template <class T>
class Series {
 public:
  using value_type = T;

  Series() = default;
  Series(int dim, int order, std::vector<T> center);

  static Series constant(int dim, int order, std::vector<T> center, T value);
  /// The coordinate function x_axis expanded at center.
  static Series variable(int dim, int order, std::vector<T> center, int axis);

  int dim() const { return basis_ ? basis_->dim() : 0; }
  int order() const { return basis_ ? basis_->order() : -1; }
  std::size_t size() const { return coef_.size(); }
  const MonomialBasis& basis() const { return *basis_; }
  const std::vector<T>& center() const { return center_; }
  const std::vector<T>& coefficients() const { return coef_; }

  T coef(std::size_t i) const { return coef_[i]; }
  T& coef(std::size_t i) { return coef_[i]; }
  /// Coefficient of alpha, zero when |alpha| exceeds the order.
  T at(std::span<const int> alpha) const;
  void set(std::span<const int> alpha, T value);

  Series add(const Series& o) const;
  Series sub(const Series& o) const;
  Series mul(const Series& o) const;
  Series scale(T s) const;
  Series negate() const { return scale(T(-1)); }
  Series add_constant(T c) const;
  Series truncate(int order) const;
  /// Partial derivative; the order drops by one.
  Series derivative(int axis) const;
  Series derivative(const MultiIndex& p) const;
  /// Same polynomial expanded at center + shift.
  Series recenter(std::span<const T> shift) const;

  Series exp() const;
  Series sin() const;
  Series cos() const;
  Series reciprocal() const;
  Series pow_int(int n) const;
  /// f(a) where f is a one-variable series centred at a's constant term.
  Series compose_scalar(const Series& f) const;

  T evaluate(std::span<const T> x) const;

  /// Validity box set by radius estimation, used for extrapolation warnings.
  std::optional<Box> validity;

 private:
  void require_compatible(const Series& o) const;
  Series compose_coefficients(const std::vector<T>& c) const;

  std::shared_ptr<const MonomialBasis> basis_;
  std::vector<T> center_;
  std::vector<T> coef_;
};

using TruncatedSeries = Series<double>;
using ComplexSeries = Series<std::complex<double>>;

extern template class Series<double>;
extern template class Series<std::complex<double>>;

/// Values supplied to Taylor expansion of an expression.
template <class T>
struct TaylorEnv {
  int dim = 1;
  int order = 0;
  std::vector<T> center;
  /// Series for jet symbols; required when the expression contains any.
  std::function<Series<T>(const Node&)> jet;
};

/// Taylor polynomial of an analytic expression at env.center. Rejects the
/// cutoff nodes (bump, step, window) since they are not analytic.
template <class T>
Series<T> taylor_eval(const Expr& e, const TaylorEnv<T>& env);

extern template Series<double> taylor_eval(const Expr&, const TaylorEnv<double>&);
extern template Series<std::complex<double>> taylor_eval(const Expr&, const TaylorEnv<std::complex<double>>&);

/// Convert to an expression node (real series only).
Expr to_expr(const TruncatedSeries& s);
TruncatedSeries real_part(const ComplexSeries& s);
double max_imag(const ComplexSeries& s);
ComplexSeries complexify(const TruncatedSeries& s);

/// CSV rows "a0,a1,...,coef".
void write_csv(std::ostream& os, const TruncatedSeries& s);

}  // namespace foamck
