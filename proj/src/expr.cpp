#include "foamck/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "foamck/error.hpp"

namespace foamck {

namespace {

constexpr std::size_t kMaxSupportBoxes = 4096;

using BoxList = std::vector<Box>;
using Support = std::optional<BoxList>;

std::shared_ptr<Node> make(Op op) {
  auto n = std::make_shared<Node>();
  n->op = op;
  return n;
}

Box hull_all(const BoxList& boxes) {
  Box h = boxes.front();
  for (std::size_t i = 1; i < boxes.size(); ++i) h = Box::hull(h, boxes[i]);
  return h;
}

Support support_intersection(const Support& a, const Support& b) {
  if (!a) return b;
  if (!b) return a;
  BoxList out;
  for (const auto& x : *a) {
    for (const auto& y : *b) {
      if (auto z = Box::intersect(x, y)) out.push_back(std::move(*z));
    }
  }
  if (out.size() > kMaxSupportBoxes) return BoxList{hull_all(out)};
  return out;
}

Support support_union(const std::vector<Expr>& args) {
  BoxList out;
  for (const auto& a : args) {
    if (!a->support) return std::nullopt;
    out.insert(out.end(), a->support->begin(), a->support->end());
  }
  return out;
}

Box half_space(int axis, double lo, double hi) {
  std::vector<Interval> axes(static_cast<std::size_t>(axis) + 1);
  axes[static_cast<std::size_t>(axis)] = {lo, hi};
  return Box(std::move(axes));
}

Box ball_box(const Point& c, double r) { return Box::around(c, r); }

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw PreconditionError(std::string(what) + " must be finite");
}

Expr unary(Op op, Expr a) {
  auto n = make(op);
  n->args = {std::move(a)};
  return n;
}

}  // namespace

Expr constant(double v) {
  require_finite(v, "constant");
  auto n = make(Op::Const);
  n->value = v;
  if (v == 0.0) n->support = BoxList{};
  return n;
}

Expr zero() {
  static const Expr z = constant(0.0);
  return z;
}

Expr one() {
  static const Expr o = constant(1.0);
  return o;
}

Expr var(int axis) {
  if (axis < 0) throw PreconditionError("variable axis must be nonnegative");
  auto n = make(Op::Var);
  n->axis = axis;
  return n;
}

bool is_constant(const Expr& e, double* value) {
  if (e->op != Op::Const) return false;
  if (value) *value = e->value;
  return true;
}

bool is_zero(const Expr& e) { return e->op == Op::Const && e->value == 0.0; }

static bool is_one(const Expr& e) { return e->op == Op::Const && e->value == 1.0; }

Expr sum(std::vector<Expr> terms) {
  std::vector<Expr> flat;
  double c = 0.0;
  bool has_const = false;
  auto absorb = [&](const Expr& t) {
    if (t->op == Op::Const) {
      c += t->value;
      has_const = true;
    } else {
      flat.push_back(t);
    }
  };
  for (auto& t : terms) {
    if (t->op == Op::Sum) {
      for (const auto& u : t->args) absorb(u);
    } else {
      absorb(t);
    }
  }
  if (has_const && c != 0.0) flat.push_back(constant(c));
  if (flat.empty()) return zero();
  if (flat.size() == 1) return flat.front();
  auto n = make(Op::Sum);
  n->support = support_union(flat);
  n->args = std::move(flat);
  return n;
}

Expr neg(Expr a) {
  if (a->op == Op::Const) return constant(-a->value);
  if (a->op == Op::Neg) return a->args[0];
  auto n = make(Op::Neg);
  n->support = a->support;
  n->args = {std::move(a)};
  return n;
}

Expr mul(Expr a, Expr b) {
  if (is_zero(a) || is_zero(b)) return zero();
  if (is_one(a)) return b;
  if (is_one(b)) return a;
  if (a->op == Op::Const && b->op == Op::Const) return constant(a->value * b->value);
  auto n = make(Op::Mul);
  n->support = support_intersection(a->support, b->support);
  n->args = {std::move(a), std::move(b)};
  return n;
}

Expr div(Expr a, Expr b) {
  if (is_zero(b)) throw PreconditionError("division by the zero expression");
  if (is_zero(a)) return zero();
  if (is_one(b)) return a;
  if (a->op == Op::Const && b->op == Op::Const) return constant(a->value / b->value);
  auto n = make(Op::Div);
  n->support = a->support;
  n->args = {std::move(a), std::move(b)};
  return n;
}

Expr pow(Expr a, int k) {
  if (k == 0) return one();
  if (k == 1) return a;
  if (a->op == Op::Const) return constant(std::pow(a->value, k));
  auto n = make(Op::Pow);
  n->exponent = k;
  if (k > 0) n->support = a->support;
  n->args = {std::move(a)};
  return n;
}

Expr exp(Expr a) {
  if (a->op == Op::Const) return constant(std::exp(a->value));
  return unary(Op::Exp, std::move(a));
}

Expr sin(Expr a) {
  if (a->op == Op::Const) return constant(std::sin(a->value));
  auto s = a->support;
  auto n = make(Op::Sin);
  n->support = std::move(s);
  n->args = {std::move(a)};
  return n;
}

Expr cos(Expr a) {
  if (a->op == Op::Const) return constant(std::cos(a->value));
  return unary(Op::Cos, std::move(a));
}

Expr bump(Point center, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw PreconditionError("bump radius must be positive");
  if (center.empty()) throw PreconditionError("bump center must have at least one coordinate");
  for (double c : center) require_finite(c, "bump center");
  auto n = make(Op::Bump);
  n->support = BoxList{ball_box(center, radius)};
  n->center = std::move(center);
  n->radius = radius;
  return n;
}

Expr bump(Point center, double radius, const DomainBox& domain) {
  if (center.size() > domain.dim()) throw PreconditionError("bump center has more axes than the domain");
  for (std::size_t i = 0; i < center.size(); ++i) {
    const auto& iv = domain.axis(i);
    if (!(center[i] - radius > iv.lo && center[i] + radius < iv.hi)) {
      throw PreconditionError("bump ball must lie inside the domain");
    }
  }
  return bump(std::move(center), radius);
}

Expr step(int axis, double lo, double hi, bool rising) {
  if (axis < 0) throw PreconditionError("step axis must be nonnegative");
  require_finite(lo, "step bound");
  require_finite(hi, "step bound");
  if (!(lo < hi)) throw PreconditionError("step transition needs lo < hi");
  auto n = make(Op::Step);
  n->axis = axis;
  n->lo = lo;
  n->hi = hi;
  n->rising = rising;
  n->support = BoxList{rising ? half_space(axis, lo, kInf) : half_space(axis, -kInf, hi)};
  return n;
}

Expr ball_window(Point center, double radius, Expr inner) {
  if (!(radius > 0.0)) throw PreconditionError("window radius must be positive");
  if (is_zero(inner)) return zero();
  auto n = make(Op::Window);
  n->region = Region::Ball;
  n->support = support_intersection(BoxList{ball_box(center, radius)}, inner->support);
  n->center = std::move(center);
  n->radius = radius;
  n->args = {std::move(inner)};
  return n;
}

Expr slab_window(int axis, double lo, double hi, Expr inner) {
  if (!(lo < hi)) throw PreconditionError("window slab needs lo < hi");
  if (is_zero(inner)) return zero();
  auto n = make(Op::Window);
  n->region = Region::Slab;
  n->axis = axis;
  n->lo = lo;
  n->hi = hi;
  n->support = support_intersection(BoxList{half_space(axis, lo, hi)}, inner->support);
  n->args = {std::move(inner)};
  return n;
}

Expr poly(Point center, std::vector<PolyTerm> terms) {
  std::erase_if(terms, [](const PolyTerm& t) { return t.coef == 0.0; });
  if (terms.empty()) return zero();
  for (const auto& t : terms) {
    require_finite(t.coef, "polynomial coefficient");
    if (t.alpha.size() != center.size()) throw PreconditionError("polynomial exponent length differs from center");
    for (int a : t.alpha) {
      if (a < 0) throw PreconditionError("polynomial exponents must be nonnegative");
    }
  }
  bool is_const = std::all_of(terms.begin(), terms.end(), [](const PolyTerm& t) { return order_of(t.alpha) == 0; });
  if (is_const) {
    double c = 0.0;
    for (const auto& t : terms) c += t.coef;
    return constant(c);
  }
  auto n = make(Op::Poly);
  n->center = std::move(center);
  n->terms = std::move(terms);
  return n;
}

Expr jet(int component, int p, MultiIndex q) {
  if (component < 0 || p < 0) throw PreconditionError("jet indices must be nonnegative");
  for (int v : q) {
    if (v < 0) throw PreconditionError("jet indices must be nonnegative");
  }
  auto n = make(Op::Jet);
  n->component = component;
  n->jet_p = p;
  n->jet_q = std::move(q);
  return n;
}

Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return sum({a, neg(b)}); }
Expr operator-(const Expr& a) { return neg(a); }
Expr operator*(const Expr& a, const Expr& b) { return mul(a, b); }
Expr operator/(const Expr& a, const Expr& b) { return div(a, b); }
Expr operator*(double c, const Expr& b) { return mul(constant(c), b); }

namespace {

template <class Pred>
bool any_node(const Expr& e, Pred pred) {
  if (pred(*e)) return true;
  for (const auto& a : e->args) {
    if (any_node(a, pred)) return true;
  }
  return false;
}

}  // namespace

bool contains_jet(const Expr& e) {
  return any_node(e, [](const Node& n) { return n.op == Op::Jet; });
}

bool is_analytic(const Expr& e) {
  return !any_node(e, [](const Node& n) {
    return n.op == Op::Bump || n.op == Op::Step || n.op == Op::Window;
  });
}

int max_axis(const Expr& e) {
  int m = -1;
  any_node(e, [&](const Node& n) {
    if (n.op == Op::Var || n.op == Op::Step || (n.op == Op::Window && n.region == Region::Slab)) {
      m = std::max(m, n.axis);
    }
    if (n.op == Op::Bump || n.op == Op::Poly || (n.op == Op::Window && n.region == Region::Ball)) {
      m = std::max(m, static_cast<int>(n.center.size()) - 1);
    }
    return false;
  });
  return m;
}

bool depends_on(const Expr& e, int axis) {
  return any_node(e, [axis](const Node& n) {
    switch (n.op) {
      case Op::Var:
      case Op::Step:
        return n.axis == axis;
      case Op::Window:
        if (n.region == Region::Slab) return n.axis == axis;
        return axis < static_cast<int>(n.center.size());
      case Op::Bump:
        return axis < static_cast<int>(n.center.size());
      case Op::Poly:
        return std::any_of(n.terms.begin(), n.terms.end(), [axis](const PolyTerm& t) {
          return axis < static_cast<int>(t.alpha.size()) && t.alpha[static_cast<std::size_t>(axis)] > 0;
        });
      case Op::Jet:
        return true;
      default:
        return false;
    }
  });
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  const Node& x = *a;
  const Node& y = *b;
  if (x.op != y.op || x.args.size() != y.args.size()) return false;
  switch (x.op) {
    case Op::Const:
      if (x.value != y.value) return false;
      break;
    case Op::Var:
      if (x.axis != y.axis) return false;
      break;
    case Op::Pow:
      if (x.exponent != y.exponent) return false;
      break;
    case Op::Bump:
      if (x.center != y.center || x.radius != y.radius) return false;
      break;
    case Op::Step:
      if (x.axis != y.axis || x.lo != y.lo || x.hi != y.hi || x.rising != y.rising) return false;
      break;
    case Op::Window:
      if (x.region != y.region) return false;
      if (x.region == Region::Ball && (x.center != y.center || x.radius != y.radius)) return false;
      if (x.region == Region::Slab && (x.axis != y.axis || x.lo != y.lo || x.hi != y.hi)) return false;
      break;
    case Op::Poly:
      if (x.center != y.center || x.terms != y.terms) return false;
      break;
    case Op::Jet:
      if (x.component != y.component || x.jet_p != y.jet_p || x.jet_q != y.jet_q) return false;
      break;
    default:
      break;
  }
  for (std::size_t i = 0; i < x.args.size(); ++i) {
    if (!structurally_equal(x.args[i], y.args[i])) return false;
  }
  return true;
}

std::size_t node_count(const Expr& e) {
  std::size_t n = 1;
  for (const auto& a : e->args) n += node_count(a);
  return n;
}

const std::optional<std::vector<Box>>& support_boxes(const Expr& e) { return e->support; }

std::optional<Box> support_box(const Expr& e) {
  if (!e->support) return std::nullopt;
  if (e->support->empty()) return Box(std::vector<Interval>{{0.0, -1.0}});
  return hull_all(*e->support);
}

bool outside_support(const Expr& e, std::span<const double> x) {
  if (!e->support) return false;
  return std::none_of(e->support->begin(), e->support->end(),
                      [&](const Box& b) { return b.contains(x); });
}

bool support_misses(const Expr& e, const Box& b) {
  if (!e->support) return false;
  return std::none_of(e->support->begin(), e->support->end(),
                      [&](const Box& s) { return s.intersects(b); });
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

// exp(-1/s) with s = 1 - |x-c|^2/R^2, valid on the open ball.
Expr bump_profile(const Point& c, double r) {
  std::vector<Expr> squares;
  for (std::size_t i = 0; i < c.size(); ++i) {
    Expr u = mul(constant(1.0 / r), sum({var(static_cast<int>(i)), constant(-c[i])}));
    squares.push_back(pow(u, 2));
  }
  Expr s = sum({one(), neg(sum(std::move(squares)))});
  return exp(neg(div(one(), s)));
}

// f(u)/(f(u)+f(1-u)) with u the affine coordinate of [lo, hi], valid on (lo, hi).
Expr step_profile(int axis, double lo, double hi) {
  const double w = hi - lo;
  Expr u = sum({mul(constant(1.0 / w), var(axis)), constant(-lo / w)});
  Expr fu = exp(neg(div(one(), u)));
  Expr fv = exp(neg(div(one(), sum({one(), neg(u)}))));
  return div(fu, sum({fu, fv}));
}

}  // namespace

Expr Differentiator::derive(const Expr& e, int axis) {
  const Key key{e.get(), axis};
  if (auto it = memo_.find(key); it != memo_.end()) return it->second.second;

  Expr out;
  const Node& n = *e;
  switch (n.op) {
    case Op::Const:
      out = zero();
      break;
    case Op::Var:
      out = n.axis == axis ? one() : zero();
      break;
    case Op::Sum: {
      std::vector<Expr> parts;
      parts.reserve(n.args.size());
      for (const auto& a : n.args) parts.push_back(derive(a, axis));
      out = sum(std::move(parts));
      break;
    }
    case Op::Neg:
      out = neg(derive(n.args[0], axis));
      break;
    case Op::Mul: {
      const Expr& a = n.args[0];
      const Expr& b = n.args[1];
      out = sum({mul(derive(a, axis), b), mul(a, derive(b, axis))});
      break;
    }
    case Op::Div: {
      const Expr& a = n.args[0];
      const Expr& b = n.args[1];
      Expr da = derive(a, axis);
      Expr db = derive(b, axis);
      if (is_zero(db)) {
        out = div(da, b);
      } else {
        out = div(sum({mul(da, b), neg(mul(a, db))}), pow(b, 2));
      }
      break;
    }
    case Op::Pow: {
      const Expr& a = n.args[0];
      out = mul(mul(constant(n.exponent), pow(a, n.exponent - 1)), derive(a, axis));
      break;
    }
    case Op::Exp:
      out = mul(e, derive(n.args[0], axis));
      break;
    case Op::Sin:
      out = mul(cos(n.args[0]), derive(n.args[0], axis));
      break;
    case Op::Cos:
      out = mul(neg(sin(n.args[0])), derive(n.args[0], axis));
      break;
    case Op::Bump:
      if (axis >= static_cast<int>(n.center.size())) {
        out = zero();
      } else {
        out = ball_window(n.center, n.radius, derive(bump_profile(n.center, n.radius), axis));
      }
      break;
    case Op::Step:
      if (axis != n.axis) {
        out = zero();
      } else {
        Expr d = derive(step_profile(n.axis, n.lo, n.hi), axis);
        out = slab_window(n.axis, n.lo, n.hi, n.rising ? d : neg(d));
      }
      break;
    case Op::Window: {
      Expr d = derive(n.args[0], axis);
      out = n.region == Region::Ball ? ball_window(n.center, n.radius, d)
                                     : slab_window(n.axis, n.lo, n.hi, d);
      break;
    }
    case Op::Poly: {
      std::vector<PolyTerm> terms;
      const auto ax = static_cast<std::size_t>(axis);
      for (const auto& t : n.terms) {
        if (ax >= t.alpha.size() || t.alpha[ax] == 0) continue;
        PolyTerm d = t;
        d.coef *= t.alpha[ax];
        d.alpha[ax] -= 1;
        terms.push_back(std::move(d));
      }
      out = poly(n.center, std::move(terms));
      break;
    }
    case Op::Jet:
      throw PreconditionError("jet symbols cannot be differentiated symbolically");
  }
  memo_.emplace(key, std::make_pair(e, out));
  return out;
}

Expr Differentiator::derive(const Expr& e, const MultiIndex& p) {
  Expr out = e;
  for (std::size_t axis = 0; axis < p.size(); ++axis) {
    if (p[axis] < 0) throw PreconditionError("derivative order must be nonnegative");
    for (int k = 0; k < p[axis]; ++k) out = derive(out, static_cast<int>(axis));
  }
  return out;
}

Expr differentiate(const Expr& e, int axis) {
  Differentiator d;
  return d.derive(e, axis);
}

Expr differentiate(const Expr& e, const MultiIndex& p) {
  Differentiator d;
  return d.derive(e, p);
}

// ---------------------------------------------------------------------------
// Evaluation

double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}

namespace {

struct Evaluator {
  std::span<const double> x;
  const JetResolver& jets;
  EvalStatus status = EvalStatus::Ok;

  double coord(int axis) const {
    const auto i = static_cast<std::size_t>(axis);
    if (i >= x.size()) throw PreconditionError("evaluation point has too few coordinates");
    return x[i];
  }

  double run(const Node& n) {
    switch (n.op) {
      case Op::Const:
        return n.value;
      case Op::Var:
        return coord(n.axis);
      case Op::Sum: {
        double s = 0.0;
        for (const auto& a : n.args) {
          if (a->support && std::none_of(a->support->begin(), a->support->end(),
                                         [&](const Box& b) { return b.contains(x); })) {
            continue;
          }
          s += run(*a);
        }
        return s;
      }
      case Op::Neg:
        return -run(*n.args[0]);
      case Op::Mul: {
        const double a = run(*n.args[0]);
        if (a == 0.0) return 0.0;
        return a * run(*n.args[1]);
      }
      case Op::Div:
        return run(*n.args[0]) / run(*n.args[1]);
      case Op::Pow: {
        const double a = run(*n.args[0]);
        return n.exponent > 0 ? std::pow(a, n.exponent) : 1.0 / std::pow(a, -n.exponent);
      }
      case Op::Exp:
        return std::exp(run(*n.args[0]));
      case Op::Sin:
        return std::sin(run(*n.args[0]));
      case Op::Cos:
        return std::cos(run(*n.args[0]));
      case Op::Bump: {
        double r2 = 0.0;
        for (std::size_t i = 0; i < n.center.size(); ++i) {
          const double d = (coord(static_cast<int>(i)) - n.center[i]) / n.radius;
          r2 += d * d;
        }
        if (r2 >= 1.0) return 0.0;
        const double v = std::exp(-1.0 / (1.0 - r2));
        if (v == 0.0 && r2 > 0.5) mark(EvalStatus::SupportBoundary);
        return v;
      }
      case Op::Step: {
        const double u = (coord(n.axis) - n.lo) / (n.hi - n.lo);
        return n.rising ? smooth_step(u) : smooth_step(1.0 - u);
      }
      case Op::Window: {
        if (!inside_region(n)) return 0.0;
        const double v = run(*n.args[0]);
        if (!std::isfinite(v)) {
          mark(EvalStatus::SupportBoundary);
          return 0.0;
        }
        return v;
      }
      case Op::Poly:
        return eval_poly(n);
      case Op::Jet:
        if (!jets) throw PreconditionError("jet symbol evaluated without a jet resolver");
        return jets(n);
    }
    return 0.0;
  }

  void mark(EvalStatus s) {
    if (status == EvalStatus::Ok) status = s;
  }

  bool inside_region(const Node& n) const {
    if (n.region == Region::Slab) {
      const double v = coord(n.axis);
      return v > n.lo && v < n.hi;
    }
    double r2 = 0.0;
    for (std::size_t i = 0; i < n.center.size(); ++i) {
      const double d = (coord(static_cast<int>(i)) - n.center[i]) / n.radius;
      r2 += d * d;
    }
    return r2 < 1.0;
  }

  double eval_poly(const Node& n) const {
    const std::size_t dim = n.center.size();
    int deg = 0;
    for (const auto& t : n.terms) {
      for (int a : t.alpha) deg = std::max(deg, a);
    }
    std::vector<double> powers(dim * static_cast<std::size_t>(deg + 1));
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = coord(static_cast<int>(i)) - n.center[i];
      double p = 1.0;
      for (int k = 0; k <= deg; ++k) {
        powers[i * static_cast<std::size_t>(deg + 1) + static_cast<std::size_t>(k)] = p;
        p *= d;
      }
    }
    double s = 0.0;
    for (const auto& t : n.terms) {
      double v = t.coef;
      for (std::size_t i = 0; i < dim; ++i) {
        v *= powers[i * static_cast<std::size_t>(deg + 1) + static_cast<std::size_t>(t.alpha[i])];
      }
      s += v;
    }
    return s;
  }
};

}  // namespace

EvalResult evaluate_checked(const Expr& e, std::span<const double> x, const JetResolver& jets) {
  Evaluator ev{x, jets};
  EvalResult r;
  r.value = ev.run(*e);
  r.status = ev.status;
  if (!std::isfinite(r.value)) r.status = EvalStatus::NonFinite;
  return r;
}

double evaluate(const Expr& e, std::span<const double> x, const JetResolver& jets) {
  Evaluator ev{x, jets};
  return ev.run(*e);
}

// ---------------------------------------------------------------------------
// Printing

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

void print_number(std::string& out, double v) {
  if (std::signbit(v)) {
    out += "(-";
    out += format_double(-v);
    out += ')';
  } else {
    out += format_double(v);
  }
}

void print_tuple(std::string& out, const Point& c) {
  out += '(';
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (i) out += ", ";
    print_number(out, c[i]);
  }
  out += ')';
}

void print_ints(std::string& out, const MultiIndex& q) {
  out += '(';
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(q[i]);
  }
  out += ')';
}

void print(std::string& out, const Node& n) {
  switch (n.op) {
    case Op::Const:
      print_number(out, n.value);
      return;
    case Op::Var:
      if (n.axis == 0) {
        out += 't';
      } else {
        out += 'y';
        out += std::to_string(n.axis);
      }
      return;
    case Op::Sum:
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += " + ";
        print(out, *n.args[i]);
      }
      out += ')';
      return;
    case Op::Neg:
      out += "(-";
      print(out, *n.args[0]);
      out += ')';
      return;
    case Op::Mul:
    case Op::Div:
      out += '(';
      print(out, *n.args[0]);
      out += n.op == Op::Mul ? " * " : " / ";
      print(out, *n.args[1]);
      out += ')';
      return;
    case Op::Pow:
      out += '(';
      print(out, *n.args[0]);
      out += " ^ ";
      if (n.exponent < 0) {
        out += "(-" + std::to_string(-n.exponent) + ")";
      } else {
        out += std::to_string(n.exponent);
      }
      out += ')';
      return;
    case Op::Exp:
    case Op::Sin:
    case Op::Cos:
      out += n.op == Op::Exp ? "exp(" : n.op == Op::Sin ? "sin(" : "cos(";
      print(out, *n.args[0]);
      out += ')';
      return;
    case Op::Bump:
      out += "bump(";
      print_tuple(out, n.center);
      out += ", ";
      print_number(out, n.radius);
      out += ')';
      return;
    case Op::Step:
      out += n.rising ? "rise(" : "fall(";
      out += std::to_string(n.axis) + ", ";
      print_number(out, n.lo);
      out += ", ";
      print_number(out, n.hi);
      out += ')';
      return;
    case Op::Window:
      if (n.region == Region::Ball) {
        out += "ball(";
        print_tuple(out, n.center);
        out += ", ";
        print_number(out, n.radius);
      } else {
        out += "slab(" + std::to_string(n.axis) + ", ";
        print_number(out, n.lo);
        out += ", ";
        print_number(out, n.hi);
      }
      out += ", ";
      print(out, *n.args[0]);
      out += ')';
      return;
    case Op::Poly:
      out += "poly(";
      print_tuple(out, n.center);
      out += ", [";
      for (std::size_t i = 0; i < n.terms.size(); ++i) {
        if (i) out += ", ";
        print_ints(out, n.terms[i].alpha);
        out += ':';
        print_number(out, n.terms[i].coef);
      }
      out += "])";
      return;
    case Op::Jet:
      out += 'J';
      if (n.component != 0) out += '.' + std::to_string(n.component);
      out += '[' + std::to_string(n.jet_p) + ',';
      print_ints(out, n.jet_q);
      out += ']';
      return;
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::string out;
  print(out, *e);
  return out;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, const ParseOptions& opts) : s_(text), opts_(opts) {}

  Expr parse_all() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\r' || s_[pos_] == '\n')) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < s_.size() && s_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= s_.size()) fail(std::string("expected '") + c + "' before end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expr parse_sum() {
    std::vector<Expr> terms{parse_product()};
    for (;;) {
      if (accept('+')) {
        terms.push_back(parse_product());
      } else if (accept('-')) {
        terms.push_back(neg(parse_product()));
      } else {
        break;
      }
    }
    return terms.size() == 1 ? terms.front() : sum(std::move(terms));
  }

  Expr parse_product() {
    Expr e = parse_unary();
    for (;;) {
      if (accept('*')) {
        e = mul(e, parse_unary());
      } else if (peek('/')) {
        const std::size_t at = pos_;
        ++pos_;
        Expr d = parse_unary();
        if (is_zero(d)) {
          pos_ = at;
          fail("division by zero");
        }
        e = div(e, d);
      } else {
        return e;
      }
    }
  }

  Expr parse_unary() {
    if (accept('-')) return neg(parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (accept('^')) return pow(base, parse_exponent());
    return base;
  }

  int parse_exponent() {
    bool paren = accept('(');
    bool negative = accept('-');
    if (!negative) accept('+');
    int k = parse_int();
    if (paren) expect(')');
    return negative ? -k : k;
  }

  int parse_int() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected an integer");
    int v = 0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc{}) {
      pos_ = start;
      fail("integer out of range");
    }
    return v;
  }

  double parse_number() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]))) {
        pos_ = p;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    auto res = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (res.ec != std::errc{} || res.ptr != s_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return v;
  }

  std::string parse_ident() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    return std::string(s_.substr(start, pos_ - start));
  }

  double parse_constant() {
    const std::size_t at = (skip_ws(), pos_);
    Expr e = parse_sum();
    double v = 0.0;
    if (!is_constant(e, &v)) {
      pos_ = at;
      fail("expected a constant");
    }
    return v;
  }

  Point parse_tuple() {
    Point out;
    if (!accept('(')) {
      out.push_back(parse_constant());
      return out;
    }
    if (accept(')')) return out;
    do {
      out.push_back(parse_constant());
    } while (accept(','));
    expect(')');
    return out;
  }

  MultiIndex parse_int_tuple() {
    MultiIndex out;
    if (!accept('(')) {
      out.push_back(parse_int());
      return out;
    }
    if (accept(')')) return out;
    do {
      out.push_back(parse_int());
    } while (accept(','));
    expect(')');
    return out;
  }

  Expr parse_call_arg() {
    expect('(');
    Expr e = parse_sum();
    expect(')');
    return e;
  }

  Expr parse_primary() {
    skip_ws();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return constant(parse_number());
    if (!std::isalpha(static_cast<unsigned char>(c))) fail(std::string("unexpected '") + c + "'");

    const std::size_t at = pos_;
    const std::string id = parse_ident();
    if (id == "t") return var(0);
    if (id.size() == 2 && id[0] == 'y' && id[1] >= '1' && id[1] <= '9') return var(id[1] - '0');
    if (id == "pi") return constant(3.141592653589793);
    if (id == "sin") return sin(parse_call_arg());
    if (id == "cos") return cos(parse_call_arg());
    if (id == "exp") return exp(parse_call_arg());
    if (id == "bump") {
      expect('(');
      Point c = parse_tuple();
      expect(',');
      const double r = parse_constant();
      expect(')');
      return guarded(at, [&] { return bump(std::move(c), r); });
    }
    if (id == "rise" || id == "fall") {
      expect('(');
      const int axis = parse_int();
      expect(',');
      const double lo = parse_constant();
      expect(',');
      const double hi = parse_constant();
      expect(')');
      return guarded(at, [&] { return step(axis, lo, hi, id == "rise"); });
    }
    if (id == "ball") {
      expect('(');
      Point c = parse_tuple();
      expect(',');
      const double r = parse_constant();
      expect(',');
      Expr inner = parse_sum();
      expect(')');
      return guarded(at, [&] { return ball_window(std::move(c), r, inner); });
    }
    if (id == "slab") {
      expect('(');
      const int axis = parse_int();
      expect(',');
      const double lo = parse_constant();
      expect(',');
      const double hi = parse_constant();
      expect(',');
      Expr inner = parse_sum();
      expect(')');
      return guarded(at, [&] { return slab_window(axis, lo, hi, inner); });
    }
    if (id == "poly") {
      expect('(');
      Point c = parse_tuple();
      expect(',');
      expect('[');
      std::vector<PolyTerm> terms;
      if (!accept(']')) {
        do {
          PolyTerm t;
          t.alpha = parse_int_tuple();
          expect(':');
          t.coef = parse_constant();
          terms.push_back(std::move(t));
        } while (accept(','));
        expect(']');
      }
      expect(')');
      return guarded(at, [&] { return poly(std::move(c), std::move(terms)); });
    }
    if (id == "J") {
      if (!opts_.allow_jets) {
        pos_ = at;
        fail("jet symbol J is only valid in a PDE right-hand side");
      }
      int component = 0;
      if (accept('.')) component = parse_int();
      expect('[');
      const int p = parse_int();
      expect(',');
      MultiIndex q = parse_int_tuple();
      expect(']');
      return jet(component, p, std::move(q));
    }
    pos_ = at;
    fail("unknown identifier '" + id + "'");
  }

  template <class F>
  Expr guarded(std::size_t at, F&& build) {
    try {
      return build();
    } catch (const PreconditionError& e) {
      pos_ = at;
      fail(e.what());
    }
  }

  std::string_view s_;
  ParseOptions opts_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse_expr(std::string_view text, const ParseOptions& options) {
  Parser p(text, options);
  return p.parse_all();
}

}  // namespace foamck
