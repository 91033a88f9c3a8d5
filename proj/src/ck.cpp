#include "foamck/ck.hpp"

#include <cmath>
#include <map>
#include <string>
#include <tuple>

#include "foamck/error.hpp"

namespace foamck {

namespace {

constexpr double kOverflowGuard = 1e250;

void check_jets(const Node& n, const PdeSystem& pde) {
  if (n.op == Op::Jet) {
    const int m = pde.order;
    const std::string sym = to_string(std::make_shared<Node>(n));
    if (n.component >= pde.components) throw PreconditionError(sym + ": component index out of range");
    if (static_cast<int>(n.jet_q.size()) != pde.dim - 1) {
      throw PreconditionError(sym + ": y-multi-index must have " + std::to_string(pde.dim - 1) + " entries");
    }
    if (n.jet_p >= m) throw PreconditionError(sym + ": needs 0 <= p < m with m = " + std::to_string(m));
    if (n.jet_p + order_of(n.jet_q) > m) {
      throw PreconditionError(sym + ": needs p + |q| <= m with m = " + std::to_string(m));
    }
  }
  if (n.op == Op::Var && n.axis >= pde.dim) {
    throw PreconditionError("variable y" + std::to_string(n.axis) + " exceeds the dimension");
  }
  for (const auto& a : n.args) check_jets(*a, pde);
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

template <class T>
bool finite(T v) {
  if constexpr (std::is_same_v<T, double>) {
    return std::isfinite(v);
  } else {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  }
}

}  // namespace

void validate_pde(const PdeSystem& pde) {
  if (pde.dim < 1) throw PreconditionError("dimension must be at least 1");
  if (pde.order < 1) throw PreconditionError("order m must be at least 1");
  if (pde.components < 1) throw PreconditionError("need at least one component");
  if (pde.domain.dim() != static_cast<std::size_t>(pde.dim)) throw PreconditionError("domain dimension differs from dim");
  if (static_cast<int>(pde.rhs.size()) != pde.components) throw PreconditionError("need one right-hand side per component");
  const auto& t = pde.domain.axis(0);
  if (pde.t0 < t.lo || pde.t0 > t.hi) throw PreconditionError("t0 lies outside the closed t-range of the domain");
  for (const auto& g : pde.rhs) {
    if (!g) throw PreconditionError("missing right-hand side");
    if (!is_analytic(g)) throw PreconditionError("right-hand side must be analytic (no cutoff nodes)");
    check_jets(*g, pde);
  }
}

void validate_data(const PdeSystem& pde, const InitialData& data) {
  if (static_cast<int>(data.g.size()) != pde.components) throw PreconditionError("need initial data for every component");
  for (const auto& gk : data.g) {
    if (static_cast<int>(gk.size()) != pde.order) throw PreconditionError("need exactly m initial functions per component");
    for (const auto& g : gk) {
      if (!g) throw PreconditionError("missing initial function");
      if (contains_jet(g)) throw PreconditionError("initial data may not contain jet symbols");
      if (depends_on(g, 0)) throw PreconditionError("initial data must not depend on t");
      if (!is_analytic(g)) throw PreconditionError("initial data must be analytic");
      if (max_axis(g) >= pde.dim) throw PreconditionError("initial data uses an axis beyond the dimension");
    }
  }
}

template <class T>
SeriesVec<T> ck_complete(const PdeSystem& pde, SeriesVec<T> u) {
  const int m = pde.order;
  const int n = pde.dim;
  if (static_cast<int>(u.size()) != pde.components) throw PreconditionError("series count differs from components");
  const int order = u.front().order();
  if (order < m) throw PreconditionError("truncation order must be at least m");
  const int work = order - m;
  const auto& center = u.front().center();
  const auto& basis = u.front().basis();

  // Clear the part the recursion owns.
  for (auto& s : u) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (basis.alpha(i)[0] >= m) s.coef(i) = T(0);
    }
  }

  MultiIndex target(static_cast<std::size_t>(n));
  for (int j = 0; j <= work; ++j) {
    std::map<std::tuple<int, int, MultiIndex>, Series<T>> jets;
    TaylorEnv<T> env{n, work, center, {}};
    env.jet = [&](const Node& node) -> Series<T> {
      auto key = std::make_tuple(node.component, node.jet_p, node.jet_q);
      if (auto it = jets.find(key); it != jets.end()) return it->second;
      MultiIndex p(static_cast<std::size_t>(n), 0);
      p[0] = node.jet_p;
      for (std::size_t a = 0; a < node.jet_q.size(); ++a) p[a + 1] = node.jet_q[a];
      Series<T> d = u[static_cast<std::size_t>(node.component)].derivative(p).truncate(work);
      jets.emplace(key, d);
      return d;
    };
    const double scale = factorial(j) / factorial(j + m);
    for (int k = 0; k < pde.components; ++k) {
      Series<T> r = taylor_eval(pde.rhs[static_cast<std::size_t>(k)], env);
      auto& uk = u[static_cast<std::size_t>(k)];
      const auto& rb = r.basis();
      for (std::size_t i = 0; i < r.size(); ++i) {
        const auto& a = rb.alpha(i);
        if (a[0] != j) continue;
        target = a;
        target[0] = j + m;
        const T c = r.coef(i) * T(scale);
        if (!finite(c) || std::abs(c) > kOverflowGuard) {
          throw RadiusCollapse(j + m, "coefficient overflow in the recursion");
        }
        uk.set(target, c);
      }
    }
  }
  return u;
}

SeriesVec<double> ck_solve_local(const PdeSystem& pde, const InitialData& data, const Point& center, int order) {
  validate_pde(pde);
  validate_data(pde, data);
  if (center.size() != static_cast<std::size_t>(pde.dim)) throw PreconditionError("center has wrong dimension");
  if (center[0] != pde.t0) throw PreconditionError("center must lie on the initial hypersurface t = t0");
  if (order < pde.order) throw PreconditionError("truncation order must be at least m");

  SeriesVec<double> u;
  for (int k = 0; k < pde.components; ++k) {
    TruncatedSeries s(pde.dim, order, center);
    for (int p = 0; p < pde.order; ++p) {
      TaylorEnv<double> env{pde.dim, order - p, center, {}};
      TruncatedSeries g = taylor_eval(data.g[static_cast<std::size_t>(k)][static_cast<std::size_t>(p)], env);
      const double inv = 1.0 / factorial(p);
      for (std::size_t i = 0; i < g.size(); ++i) {
        MultiIndex a = g.basis().alpha(i);
        if (a[0] != 0) continue;
        a[0] = p;
        s.set(a, g.coef(i) * inv);
      }
    }
    u.push_back(std::move(s));
  }
  return ck_complete(pde, std::move(u));
}

template <class T>
SeriesVec<T> continue_solution(const PdeSystem& pde, const SeriesVec<T>& s, std::span<const T> shift) {
  SeriesVec<T> moved;
  moved.reserve(s.size());
  for (const auto& c : s) moved.push_back(c.recenter(shift));
  return ck_complete(pde, std::move(moved));
}

namespace {

template <class T>
std::vector<std::pair<int, double>> upper_diagonal(const Series<T>& s, int axis, int lo = -1, int hi = -1) {
  const int order = s.order();
  if (lo < 0) lo = (order + 1) / 2;
  if (hi < 0 || hi > order) hi = order;
  MultiIndex e(static_cast<std::size_t>(s.dim()), 0);
  std::vector<std::pair<int, double>> nonzero;
  for (int k = lo; k <= hi; ++k) {
    if (k == 0) continue;
    e[static_cast<std::size_t>(axis)] = k;
    const double a = std::abs(s.at(e));
    if (a > 0.0) nonzero.emplace_back(k, a);
  }
  return nonzero;
}

}  // namespace

template <class T>
double axis_radius(const Series<T>& s, int axis) {
  const auto nonzero = upper_diagonal(s, axis);
  if (nonzero.empty()) return kInf;
  // Root test on the two highest nonzero orders; the smaller one wins so an
  // accidentally tiny coefficient cannot inflate the estimate.
  double r = kInf;
  for (std::size_t i = nonzero.size() >= 2 ? nonzero.size() - 2 : 0; i < nonzero.size(); ++i) {
    r = std::min(r, std::pow(nonzero[i].second, -1.0 / nonzero[i].first));
  }
  return r;
}

template <class T>
double axis_radius_band(const Series<T>& s, int axis, int lo, int hi) {
  const auto nonzero = upper_diagonal(s, axis, std::max(lo, 1), hi);
  if (nonzero.empty()) return kInf;
  double r = kInf;
  for (std::size_t i = nonzero.size() >= 2 ? nonzero.size() - 2 : 0; i < nonzero.size(); ++i) {
    r = std::min(r, std::pow(nonzero[i].second, -1.0 / nonzero[i].first));
  }
  return r;
}

template <class T>
double pole_distance(const Series<T>& s, int axis) {
  const auto nonzero = upper_diagonal(s, axis);
  if (nonzero.empty()) return kInf;
  if (nonzero.size() == 1) return std::pow(nonzero[0].second, -1.0 / nonzero[0].first);
  const auto [k2, a2] = nonzero.back();
  const auto [k1, a1] = nonzero[nonzero.size() - 2];
  return std::pow(a1 / a2, 1.0 / (k2 - k1));
}

template <class T>
RadiusEstimate estimate_radius(const Series<T>& s, const DomainBox& domain, double sigma) {
  if (!(sigma > 0.0 && sigma < 1.0)) throw PreconditionError("safety factor must lie in (0, 1)");
  RadiusEstimate out;
  out.low_order = s.order() < 4;
  std::vector<Interval> axes;
  for (int a = 0; a < s.dim(); ++a) {
    const double r = axis_radius(s, a);
    out.raw.push_back(r);
    double c;
    if constexpr (std::is_same_v<T, double>) {
      c = s.center()[static_cast<std::size_t>(a)];
    } else {
      c = s.center()[static_cast<std::size_t>(a)].real();
    }
    const auto& d = domain.axis(static_cast<std::size_t>(a));
    axes.push_back({std::max(d.lo, c - sigma * r), std::min(d.hi, c + sigma * r)});
  }
  out.box = Box(std::move(axes));
  return out;
}

SeriesValue evaluate_series(const TruncatedSeries& s, std::span<const double> x) {
  SeriesValue v;
  v.value = s.evaluate(x);
  v.extrapolated = s.validity.has_value() && !s.validity->contains(x);
  return v;
}

template SeriesVec<double> ck_complete(const PdeSystem&, SeriesVec<double>);
template SeriesVec<std::complex<double>> ck_complete(const PdeSystem&, SeriesVec<std::complex<double>>);
template SeriesVec<double> continue_solution(const PdeSystem&, const SeriesVec<double>&, std::span<const double>);
template SeriesVec<std::complex<double>> continue_solution(const PdeSystem&,
                                                           const SeriesVec<std::complex<double>>&,
                                                           std::span<const std::complex<double>>);
template RadiusEstimate estimate_radius(const Series<double>&, const DomainBox&, double);
template RadiusEstimate estimate_radius(const Series<std::complex<double>>&, const DomainBox&, double);
template double axis_radius(const Series<double>&, int);
template double axis_radius(const Series<std::complex<double>>&, int);
template double pole_distance(const Series<double>&, int);
template double pole_distance(const Series<std::complex<double>>&, int);
template double axis_radius_band(const Series<double>&, int, int, int);
template double axis_radius_band(const Series<std::complex<double>>&, int, int, int);

}  // namespace foamck
