#include "foamck/series.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "foamck/error.hpp"

namespace foamck {

namespace {

void enumerate_degree(int dim, int remaining, int axis, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (axis == dim - 1) {
    cur[static_cast<std::size_t>(axis)] = remaining;
    out.push_back(cur);
    return;
  }
  for (int a = remaining; a >= 0; --a) {
    cur[static_cast<std::size_t>(axis)] = a;
    enumerate_degree(dim, remaining - a, axis + 1, cur, out);
  }
}

}  // namespace

MonomialBasis::MonomialBasis(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1) throw PreconditionError("series dimension must be at least 1");
  if (order < 0) throw PreconditionError("series order must be nonnegative");
  double cells = std::pow(order + 1.0, dim);
  if (cells > 4.0e6) throw PreconditionError("series basis too large for dense lookup");

  MultiIndex cur(static_cast<std::size_t>(dim), 0);
  for (int d = 0; d <= order; ++d) {
    starts_.push_back(alphas_.size());
    enumerate_degree(dim, d, 0, cur, alphas_);
  }
  starts_.push_back(alphas_.size());
  for (const auto& a : alphas_) degrees_.push_back(order_of(a));

  lookup_.assign(static_cast<std::size_t>(cells), -1);
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    std::size_t key = 0;
    std::size_t stride = 1;
    for (int v : alphas_[i]) {
      key += static_cast<std::size_t>(v) * stride;
      stride *= static_cast<std::size_t>(order + 1);
    }
    lookup_[key] = static_cast<long>(i);
  }

  product_start_.push_back(0);
  MultiIndex sum(static_cast<std::size_t>(dim));
  for (std::size_t i = 0; i < alphas_.size(); ++i) {
    const std::size_t jend = starts_[static_cast<std::size_t>(order - degrees_[i] + 1)];
    for (std::size_t j = 0; j < jend; ++j) {
      for (std::size_t a = 0; a < sum.size(); ++a) sum[a] = alphas_[i][a] + alphas_[j][a];
      product_.push_back({static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(index(sum))});
    }
    product_start_.push_back(product_.size());
  }
}

long MonomialBasis::index(std::span<const int> alpha) const {
  if (alpha.size() != static_cast<std::size_t>(dim_)) return -1;
  std::size_t key = 0;
  std::size_t stride = 1;
  int total = 0;
  for (int v : alpha) {
    if (v < 0) return -1;
    total += v;
    if (total > order_) return -1;
    key += static_cast<std::size_t>(v) * stride;
    stride *= static_cast<std::size_t>(order_ + 1);
  }
  return lookup_[key];
}

std::shared_ptr<const MonomialBasis> MonomialBasis::get(int dim, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialBasis>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{dim, order}];
  if (!slot) slot = std::make_shared<const MonomialBasis>(dim, order);
  return slot;
}

template <class T>
Series<T>::Series(int dim, int order, std::vector<T> center)
    : basis_(MonomialBasis::get(dim, order)), center_(std::move(center)) {
  if (center_.size() != static_cast<std::size_t>(dim)) throw PreconditionError("series center has wrong dimension");
  coef_.assign(basis_->size(), T(0));
}

template <class T>
Series<T> Series<T>::constant(int dim, int order, std::vector<T> center, T value) {
  Series s(dim, order, std::move(center));
  s.coef_[0] = value;
  return s;
}

template <class T>
Series<T> Series<T>::variable(int dim, int order, std::vector<T> center, int axis) {
  Series s(dim, order, std::move(center));
  s.coef_[0] = s.center_[static_cast<std::size_t>(axis)];
  if (order >= 1) {
    MultiIndex e(static_cast<std::size_t>(dim), 0);
    e[static_cast<std::size_t>(axis)] = 1;
    s.coef_[static_cast<std::size_t>(s.basis_->index(e))] = T(1);
  }
  return s;
}

template <class T>
T Series<T>::at(std::span<const int> alpha) const {
  const long i = basis_->index(alpha);
  return i < 0 ? T(0) : coef_[static_cast<std::size_t>(i)];
}

template <class T>
void Series<T>::set(std::span<const int> alpha, T value) {
  const long i = basis_->index(alpha);
  if (i < 0) throw PreconditionError("multi-index outside the truncation order");
  coef_[static_cast<std::size_t>(i)] = value;
}

template <class T>
void Series<T>::require_compatible(const Series& o) const {
  if (dim() != o.dim()) throw MismatchError("series dimension mismatch");
  if (center_ != o.center_) throw MismatchError("series centers differ");
}

template <class T>
Series<T> Series<T>::truncate(int order) const {
  if (order >= this->order()) return *this;
  Series out(dim(), std::max(order, 0), center_);
  for (std::size_t i = 0; i < out.coef_.size(); ++i) out.coef_[i] = coef_[i];
  out.validity = validity;
  return out;
}

template <class T>
Series<T> Series<T>::add(const Series& o) const {
  require_compatible(o);
  Series out = truncate(std::min(order(), o.order()));
  for (std::size_t i = 0; i < out.coef_.size(); ++i) out.coef_[i] += o.coef_[i];
  return out;
}

template <class T>
Series<T> Series<T>::sub(const Series& o) const {
  require_compatible(o);
  Series out = truncate(std::min(order(), o.order()));
  for (std::size_t i = 0; i < out.coef_.size(); ++i) out.coef_[i] -= o.coef_[i];
  return out;
}

template <class T>
Series<T> Series<T>::mul(const Series& o) const {
  require_compatible(o);
  const int n = std::min(order(), o.order());
  Series out(dim(), n, center_);
  const auto& basis = *out.basis_;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const T a = coef_[i];
    if (a == T(0)) continue;
    for (const auto& pe : basis.products(i)) out.coef_[pe.k] += a * o.coef_[pe.j];
  }
  return out;
}

template <class T>
Series<T> Series<T>::scale(T s) const {
  Series out = *this;
  for (auto& c : out.coef_) c *= s;
  return out;
}

template <class T>
Series<T> Series<T>::add_constant(T c) const {
  Series out = *this;
  out.coef_[0] += c;
  return out;
}

template <class T>
Series<T> Series<T>::derivative(int axis) const {
  if (axis < 0 || axis >= dim()) throw PreconditionError("derivative axis out of range");
  if (order() == 0) return Series(dim(), 0, center_);
  Series out(dim(), order() - 1, center_);
  MultiIndex up;
  for (std::size_t i = 0; i < out.coef_.size(); ++i) {
    up = out.basis_->alpha(i);
    up[static_cast<std::size_t>(axis)] += 1;
    out.coef_[i] = at(up) * T(static_cast<double>(up[static_cast<std::size_t>(axis)]));
  }
  return out;
}

template <class T>
Series<T> Series<T>::derivative(const MultiIndex& p) const {
  Series out = *this;
  for (std::size_t a = 0; a < p.size(); ++a) {
    for (int k = 0; k < p[a]; ++k) out = out.derivative(static_cast<int>(a));
  }
  return out;
}

template <class T>
Series<T> Series<T>::recenter(std::span<const T> shift) const {
  if (shift.size() != center_.size()) throw PreconditionError("shift has wrong dimension");
  const int n = order();
  std::vector<std::vector<double>> binom(static_cast<std::size_t>(n + 1));
  for (int a = 0; a <= n; ++a) {
    binom[static_cast<std::size_t>(a)].assign(static_cast<std::size_t>(a + 1), 1.0);
    for (int k = 1; k < a; ++k) {
      binom[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] =
          binom[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(k - 1)] +
          binom[static_cast<std::size_t>(a - 1)][static_cast<std::size_t>(k)];
    }
  }

  std::vector<T> cur = coef_;
  MultiIndex beta;
  for (std::size_t ax = 0; ax < shift.size(); ++ax) {
    const T s = shift[ax];
    if (s == T(0)) continue;
    std::vector<T> spow(static_cast<std::size_t>(n + 1), T(1));
    for (int k = 1; k <= n; ++k) spow[static_cast<std::size_t>(k)] = spow[static_cast<std::size_t>(k - 1)] * s;
    std::vector<T> next(cur.size(), T(0));
    for (std::size_t i = 0; i < cur.size(); ++i) {
      if (cur[i] == T(0)) continue;
      beta = basis_->alpha(i);
      const int a = beta[ax];
      for (int k = 0; k <= a; ++k) {
        beta[ax] = a - k;
        const auto j = static_cast<std::size_t>(basis_->index(beta));
        next[j] += cur[i] * T(binom[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)]) *
                   spow[static_cast<std::size_t>(k)];
      }
    }
    cur = std::move(next);
  }

  std::vector<T> c = center_;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += shift[i];
  Series out(dim(), n, std::move(c));
  out.coef_ = std::move(cur);
  return out;
}

template <class T>
Series<T> Series<T>::compose_coefficients(const std::vector<T>& c) const {
  // Horner in the non-constant part: f(a0 + r) = sum_k c_k r^k.
  Series r = *this;
  r.coef_[0] = T(0);
  r.validity.reset();
  const int n = std::min(order(), static_cast<int>(c.size()) - 1);
  Series acc = Series::constant(dim(), order(), center_, c[static_cast<std::size_t>(n)]);
  for (int k = n - 1; k >= 0; --k) {
    acc = acc.mul(r);
    acc.coef_[0] += c[static_cast<std::size_t>(k)];
  }
  return acc;
}

template <class T>
Series<T> Series<T>::exp() const {
  const T e0 = std::exp(coef_[0]);
  std::vector<T> c(static_cast<std::size_t>(order() + 1));
  double fact = 1.0;
  for (int k = 0; k <= order(); ++k) {
    if (k > 0) fact *= k;
    c[static_cast<std::size_t>(k)] = e0 / T(fact);
  }
  return compose_coefficients(c);
}

template <class T>
Series<T> Series<T>::sin() const {
  const T s = std::sin(coef_[0]);
  const T co = std::cos(coef_[0]);
  const T cycle[4] = {s, co, -s, -co};
  std::vector<T> c(static_cast<std::size_t>(order() + 1));
  double fact = 1.0;
  for (int k = 0; k <= order(); ++k) {
    if (k > 0) fact *= k;
    c[static_cast<std::size_t>(k)] = cycle[k % 4] / T(fact);
  }
  return compose_coefficients(c);
}

template <class T>
Series<T> Series<T>::cos() const {
  const T s = std::sin(coef_[0]);
  const T co = std::cos(coef_[0]);
  const T cycle[4] = {co, -s, -co, s};
  std::vector<T> c(static_cast<std::size_t>(order() + 1));
  double fact = 1.0;
  for (int k = 0; k <= order(); ++k) {
    if (k > 0) fact *= k;
    c[static_cast<std::size_t>(k)] = cycle[k % 4] / T(fact);
  }
  return compose_coefficients(c);
}

template <class T>
Series<T> Series<T>::reciprocal() const {
  const T a0 = coef_[0];
  if (a0 == T(0)) throw PreconditionError("reciprocal of a series with zero constant term");
  std::vector<T> c(static_cast<std::size_t>(order() + 1));
  T p = T(1) / a0;
  for (int k = 0; k <= order(); ++k) {
    c[static_cast<std::size_t>(k)] = p;
    p *= T(-1) / a0;
  }
  return compose_coefficients(c);
}

template <class T>
Series<T> Series<T>::pow_int(int n) const {
  if (n < 0) return reciprocal().pow_int(-n);
  Series result = Series::constant(dim(), order(), center_, T(1));
  Series base = *this;
  base.validity.reset();
  while (n > 0) {
    if (n & 1) result = result.mul(base);
    n >>= 1;
    if (n > 0) base = base.mul(base);
  }
  return result;
}

template <class T>
Series<T> Series<T>::compose_scalar(const Series& f) const {
  if (f.dim() != 1) throw MismatchError("compose_scalar needs a one-variable outer series");
  if (f.center_[0] != coef_[0]) throw MismatchError("outer series must be centred at the inner constant term");
  return compose_coefficients(f.coef_);
}

template <class T>
T Series<T>::evaluate(std::span<const T> x) const {
  if (x.size() != center_.size()) throw PreconditionError("evaluation point has wrong dimension");
  const int n = order();
  const std::size_t stride = static_cast<std::size_t>(n + 1);
  std::vector<T> powers(center_.size() * stride);
  for (std::size_t i = 0; i < center_.size(); ++i) {
    const T d = x[i] - center_[i];
    T p = T(1);
    for (int k = 0; k <= n; ++k) {
      powers[i * stride + static_cast<std::size_t>(k)] = p;
      p *= d;
    }
  }
  // Sum from high degree down so small terms accumulate first.
  T s = T(0);
  for (std::size_t i = coef_.size(); i-- > 0;) {
    if (coef_[i] == T(0)) continue;
    T v = coef_[i];
    const auto& a = basis_->alpha(i);
    for (std::size_t ax = 0; ax < a.size(); ++ax) v *= powers[ax * stride + static_cast<std::size_t>(a[ax])];
    s += v;
  }
  return s;
}

template class Series<double>;
template class Series<std::complex<double>>;

// ---------------------------------------------------------------------------

namespace {

template <class T>
struct TaylorEvaluator {
  const TaylorEnv<T>& env;
  std::unordered_map<const Node*, Series<T>> memo;

  Series<T> constant(T v) const { return Series<T>::constant(env.dim, env.order, env.center, v); }

  Series<T> run(const Expr& e) {
    if (auto it = memo.find(e.get()); it != memo.end()) return it->second;
    Series<T> out = compute(*e);
    memo.emplace(e.get(), out);
    return out;
  }

  Series<T> compute(const Node& n) {
    switch (n.op) {
      case Op::Const:
        return constant(T(n.value));
      case Op::Var:
        if (n.axis >= env.dim) throw PreconditionError("expression uses an axis beyond the series dimension");
        return Series<T>::variable(env.dim, env.order, env.center, n.axis);
      case Op::Sum: {
        Series<T> s = run(n.args[0]);
        for (std::size_t i = 1; i < n.args.size(); ++i) s = s.add(run(n.args[i]));
        return s;
      }
      case Op::Neg:
        return run(n.args[0]).negate();
      case Op::Mul:
        return run(n.args[0]).mul(run(n.args[1]));
      case Op::Div:
        return run(n.args[0]).mul(run(n.args[1]).reciprocal());
      case Op::Pow:
        return run(n.args[0]).pow_int(n.exponent);
      case Op::Exp:
        return run(n.args[0]).exp();
      case Op::Sin:
        return run(n.args[0]).sin();
      case Op::Cos:
        return run(n.args[0]).cos();
      case Op::Poly: {
        Series<T> s = constant(T(0));
        std::vector<std::vector<Series<T>>> powers(n.center.size());
        for (std::size_t i = 0; i < n.center.size(); ++i) {
          if (static_cast<int>(i) >= env.dim) throw PreconditionError("polynomial uses an axis beyond the series dimension");
          powers[i].push_back(constant(T(1)));
        }
        for (const auto& t : n.terms) {
          Series<T> term = constant(T(t.coef));
          for (std::size_t i = 0; i < t.alpha.size(); ++i) {
            auto& pw = powers[i];
            while (static_cast<int>(pw.size()) <= t.alpha[i]) {
              Series<T> d = Series<T>::variable(env.dim, env.order, env.center, static_cast<int>(i))
                                .add_constant(T(-n.center[i]));
              pw.push_back(pw.back().mul(d));
            }
            if (t.alpha[i] > 0) term = term.mul(pw[static_cast<std::size_t>(t.alpha[i])]);
          }
          s = s.add(term);
        }
        return s;
      }
      case Op::Jet:
        if (!env.jet) throw PreconditionError("jet symbol without a jet provider");
        return env.jet(n);
      case Op::Bump:
      case Op::Step:
      case Op::Window:
        throw PreconditionError("cutoff nodes are not analytic and have no Taylor expansion");
    }
    throw PreconditionError("unknown node");
  }
};

}  // namespace

template <class T>
Series<T> taylor_eval(const Expr& e, const TaylorEnv<T>& env) {
  TaylorEvaluator<T> ev{env, {}};
  return ev.run(e);
}

template Series<double> taylor_eval(const Expr&, const TaylorEnv<double>&);
template Series<std::complex<double>> taylor_eval(const Expr&, const TaylorEnv<std::complex<double>>&);

Expr to_expr(const TruncatedSeries& s) {
  std::vector<PolyTerm> terms;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.coef(i) != 0.0) terms.push_back({s.basis().alpha(i), s.coef(i)});
  }
  return poly(s.center(), std::move(terms));
}

TruncatedSeries real_part(const ComplexSeries& s) {
  std::vector<double> c;
  for (const auto& v : s.center()) c.push_back(v.real());
  TruncatedSeries out(s.dim(), s.order(), std::move(c));
  for (std::size_t i = 0; i < s.size(); ++i) out.coef(i) = s.coef(i).real();
  return out;
}

double max_imag(const ComplexSeries& s) {
  double m = 0.0;
  for (const auto& v : s.coefficients()) m = std::max(m, std::abs(v.imag()));
  return m;
}

ComplexSeries complexify(const TruncatedSeries& s) {
  std::vector<std::complex<double>> c(s.center().begin(), s.center().end());
  ComplexSeries out(s.dim(), s.order(), std::move(c));
  for (std::size_t i = 0; i < s.size(); ++i) out.coef(i) = s.coef(i);
  out.validity = s.validity;
  return out;
}

void write_csv(std::ostream& os, const TruncatedSeries& s) {
  for (int a = 0; a < s.dim(); ++a) os << 'a' << a << ',';
  os << "coef\n";
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (int v : s.basis().alpha(i)) os << v << ',';
    os << format_double(s.coef(i)) << '\n';
  }
}

}  // namespace foamck
