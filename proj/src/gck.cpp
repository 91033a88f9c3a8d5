#include "foamck/gck.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <set>

#include "foamck/error.hpp"

namespace foamck {

// ---------------------------------------------------------------------------
// Config

void GckConfig::validate(const DomainBox& domain) const {
  if (order < 1) throw PreconditionError("truncation order must be positive");
  if (!(tile > 0.0)) throw PreconditionError("tile size must be positive");
  if (!(sigma > 0.0 && sigma < 1.0)) throw PreconditionError("safety factor must lie in (0, 1)");
  if (!(h > 0.0)) throw PreconditionError("resolution h must be positive");
  if (!(h < domain.min_length())) throw PreconditionError("resolution h must be smaller than every axis length");
  if (!(eps >= 0.0)) throw PreconditionError("measure budget must be nonnegative");
  if (!(max_step > 0.0)) throw PreconditionError("max_step must be positive");
  if (levels < 0 || levels > 40) throw PreconditionError("levels must lie in [0, 40]");
  if (!(d0 > 0.0)) throw PreconditionError("d0 must be positive");
  if (!(blend > 0.0 && blend < 0.5)) throw PreconditionError("blend must lie in (0, 0.5)");
  if (max_steps == 0) throw PreconditionError("max_steps must be positive");
}

namespace {

double parse_number(const std::string& key, const std::string& text) {
  try {
    double v = 0.0;
    if (is_constant(parse_expr(text), &v)) return v;
  } catch (const ParseError&) {
  }
  throw PreconditionError("config " + key + ": expected a number, got '" + text + "'");
}

int parse_int(const std::string& key, const std::string& text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw PreconditionError("config " + key + ": expected an integer");
  return static_cast<int>(v);
}

}  // namespace

void GckConfig::apply(const std::map<std::string, std::string>& kv) {
  for (const auto& [k, v] : kv) {
    if (k == "order" || k == "N") order = parse_int(k, v);
    else if (k == "tile") tile = parse_number(k, v);
    else if (k == "sigma") sigma = parse_number(k, v);
    else if (k == "h") h = parse_number(k, v);
    else if (k == "eps") eps = parse_number(k, v);
    else if (k == "max_step") max_step = parse_number(k, v);
    else if (k == "levels") levels = parse_int(k, v);
    else if (k == "d0") d0 = parse_number(k, v);
    else if (k == "blend") blend = parse_number(k, v);
    else if (k == "max_steps") {
      const int n = parse_int(k, v);
      if (n <= 0) throw PreconditionError("config max_steps must be positive");
      max_steps = static_cast<std::size_t>(n);
    } else {
      throw PreconditionError("unknown config key '" + k + "'");
    }
  }
}

// ---------------------------------------------------------------------------
// Column march

namespace {

constexpr int kMaxCrossings = 8;

struct RawTile {
  double a = 0.0;
  double b = 0.0;
  int dir = 1;
  SeriesVec<double> series;
};

struct ColumnRun {
  std::vector<RawTile> tiles;
  std::vector<BlowupEvent> events;
  std::string seed_error;
  std::string error;
};

double t_radius(const SeriesVec<double>& s) {
  double r = kInf;
  for (const auto& c : s) r = std::min(r, axis_radius(c, 0));
  return r;
}

double t_pole(const SeriesVec<double>& s) {
  double r = kInf;
  for (const auto& c : s) r = std::min(r, pole_distance(c, 0));
  return r;
}

// Pure-y degrees above about N/2 pick up truncation noise once the series has
// been continued in t, so the y radius comes from the middle band.
double y_radius(const SeriesVec<double>& s) {
  double r = kInf;
  for (const auto& c : s) {
    const int n = c.order();
    for (int a = 1; a < c.dim(); ++a) r = std::min(r, axis_radius_band(c, a, std::max(2, n / 4), std::max(2, n / 2)));
  }
  return r;
}

class ColumnMarcher {
 public:
  ColumnMarcher(const PdeSystem& pde, const GckConfig& cfg, std::size_t id, double ey, ColumnRun& out)
      : pde_(pde), cfg_(cfg), id_(id), ey_(ey), budget_(cfg.sigma / 2.0), out_(out) {}

  void run(const InitialData& data, const Point& seed_point) {
    SeriesVec<double> seed;
    try {
      seed = ck_solve_local(pde_, data, seed_point, cfg_.order);
    } catch (const RadiusCollapse& e) {
      out_.seed_error = e.what();
      return;
    }
    if (ey_ / y_radius(seed) > budget_ / 2.0) {
      out_.seed_error = "y radius at the seed is too small for the column width";
      return;
    }
    const auto& t = pde_.domain.axis(0);
    if (pde_.t0 < t.hi) primary(seed, pde_.t0, +1, t.hi, 0);
    if (pde_.t0 > t.lo) primary(seed, pde_.t0, -1, t.lo, 0);
  }

 private:
  struct End {
    bool blew_up = false;
    double t = 0.0;
    double t_hat = 0.0;
    std::string reason;
    SeriesVec<double> last;
  };

  End march(SeriesVec<double> s, double t, int dir, double t_end) {
    const auto& dom = pde_.domain.axis(0);
    End end;
    for (std::size_t it = 0;; ++it) {
      if (dir * (t_end - t) <= 0.0) return end;
      const double rt = t_radius(s);
      auto blowup = [&](std::string why) {
        const double pole = t_pole(s);
        end.blew_up = true;
        end.t = t;
        end.t_hat = t + dir * (std::isfinite(pole) && pole > 0.0 ? pole : rt);
        end.reason = std::move(why);
        end.last = s;
        return end;
      };
      if (it >= cfg_.max_steps) return blowup("step budget exhausted");
      const double a = ey_ / y_radius(s);
      if (a > budget_ / 2.0) return blowup("y radius below column extent");
      double step = std::min((budget_ - a) * rt / (1.0 + cfg_.blend), cfg_.max_step);
      const double remaining = std::abs(t_end - t);
      const bool last = step >= remaining;
      if (last) step = remaining;
      else if (step < cfg_.h / 8.0) return blowup("t radius below h/8");
      const double next = last ? t_end : t + dir * step;

      const double lo = std::max(std::min(t, next), dom.lo);
      const double hi = std::min(std::max(t, next), dom.hi);
      if (hi > lo) out_.tiles.push_back({lo, hi, dir, s});
      if (last) return end;

      std::vector<double> shift(static_cast<std::size_t>(pde_.dim), 0.0);
      shift[0] = dir * step;
      try {
        s = continue_solution(pde_, s, std::span<const double>(shift));
      } catch (const RadiusCollapse&) {
        return blowup("radius collapse");
      }
      t = next;
    }
  }

  void primary(const SeriesVec<double>& s, double t, int dir, double t_end, int depth) {
    End e = march(s, t, dir, t_end);
    if (!e.blew_up) return;
    const auto& dom = pde_.domain.axis(0);
    BlowupEvent ev{id_, e.t, e.t_hat, e.reason, false, 0.0};
    if (!(e.t_hat > dom.lo && e.t_hat < dom.hi)) {
      out_.events.push_back(ev);
      return;
    }
    if (depth >= kMaxCrossings) {
      ev.reason += "; crossing limit reached";
      ev.required_width = std::abs(t_end - e.t_hat);
      out_.events.push_back(ev);
      return;
    }
    const double rho = std::abs(e.t_hat - e.t);
    // Where the singular curve is flat in y the y radius grows slowly past
    // the pole, so land further out until the y check passes with margin.
    std::optional<SeriesVec<double>> far;
    double reach = 0.0;
    for (double k : {2.0, 3.0, 4.0, 6.0, 8.0}) {
      auto z = detour(e.last, e.t_hat, rho, dir, k);
      if (!z) break;
      far = std::move(z);
      reach = k * rho;
      if (ey_ / y_radius(*far) <= budget_ / 4.0) break;
    }
    if (!far) {
      ev.reason += "; continuation around the blow-up failed";
      ev.required_width = std::abs(t_end - e.t_hat);
      out_.events.push_back(ev);
      return;
    }
    ev.crossed = true;
    const double t_far = e.t_hat + dir * reach;
    End back = march(*far, t_far, -dir, e.t_hat);
    if (back.blew_up) ev.required_width = std::abs(back.t_hat - e.t_hat);
    out_.events.push_back(ev);
    if (dir * (t_end - t_far) > 0.0) primary(*far, t_far, dir, t_end, depth + 1);
  }

  /// Half circle in the upper half plane from t_hat - dir*rho to
  /// t_hat + dir*k*rho, k >= 1, staying at least rho away from t_hat.
  std::optional<SeriesVec<double>> detour(const SeriesVec<double>& s, double t_hat, double rho, int dir, double k) {
    using C = std::complex<double>;
    if (!(rho > 0.0)) return std::nullopt;
    SeriesVec<C> z;
    for (const auto& c : s) z.push_back(complexify(c));
    const double pi = std::numbers::pi;
    const double cc = t_hat + 0.5 * (k - 1.0) * dir * rho;
    const double R = 0.5 * (k + 1.0) * rho;
    double theta = dir > 0 ? pi : 0.0;
    const double theta_end = dir > 0 ? 0.0 : pi;
    for (int it = 0; it < 400 && theta != theta_end; ++it) {
      double rt = kInf;
      for (const auto& c : z) rt = std::min(rt, axis_radius(c, 0));
      if (!(rt > 0.25 * rho)) return std::nullopt;
      const double chord = budget_ * rt;
      const double dtheta = chord >= 2.0 * R ? pi : 2.0 * std::asin(chord / (2.0 * R));
      const double next = dir > 0 ? std::max(theta_end, theta - dtheta) : std::min(theta_end, theta + dtheta);
      const C target = next == theta_end ? C(cc + dir * R, 0.0) : cc + R * C(std::cos(next), std::sin(next));
      std::vector<C> shift(static_cast<std::size_t>(pde_.dim), C(0.0));
      shift[0] = target - z.front().center()[0];
      try {
        z = continue_solution(pde_, z, std::span<const C>(shift));
      } catch (const RadiusCollapse&) {
        return std::nullopt;
      }
      theta = next;
    }
    if (theta != theta_end) return std::nullopt;
    SeriesVec<double> out;
    for (const auto& c : z) {
      // A branch point leaves an O(1) imaginary part behind; quadrature
      // error around the half circle stays near 1e-5 of the weighted norm.
      double w = 0.25 * axis_radius(c, 0);
      for (int a = 1; a < c.dim(); ++a) w = std::min(w, 0.25 * axis_radius(c, a));
      if (!std::isfinite(w)) w = 1.0;
      double re = 0.0;
      double im = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        const double scale = std::pow(w, c.basis().degree(i));
        re += std::abs(c.coef(i)) * scale;
        im += std::abs(c.coef(i).imag()) * scale;
      }
      if (im > 1e-3 * re) return std::nullopt;
      std::vector<double> center;
      for (const auto& v : c.center()) center.push_back(v.real());
      center[0] = cc + dir * R;
      TruncatedSeries r(c.dim(), c.order(), std::move(center));
      for (std::size_t i = 0; i < c.size(); ++i) r.coef(i) = c.coef(i).real();
      out.push_back(std::move(r));
    }
    return out;
  }

  const PdeSystem& pde_;
  const GckConfig& cfg_;
  std::size_t id_;
  double ey_;
  double budget_;
  ColumnRun& out_;
};

struct ColumnGrid {
  std::vector<std::size_t> counts;  // per y axis
  std::vector<double> widths;
  std::vector<Box> boxes;
  std::vector<std::vector<std::size_t>> coords;
  double delta_y = 0.0;
  double half_extent = 0.0;

  std::optional<std::size_t> neighbor(std::size_t c, std::size_t axis) const {
    auto k = coords[c];
    if (k[axis] + 1 >= counts[axis]) return std::nullopt;
    ++k[axis];
    std::size_t flat = 0;
    for (std::size_t j = 0; j < k.size(); ++j) flat = flat * counts[j] + k[j];
    return flat;
  }
};

ColumnGrid make_columns(const DomainBox& domain, double tile) {
  ColumnGrid g;
  const std::size_t ny = domain.dim() - 1;
  std::size_t total = 1;
  double min_w = kInf;
  double max_w = 0.0;
  for (std::size_t j = 0; j < ny; ++j) {
    const auto& iv = domain.axis(j + 1);
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(iv.length() / tile - 1e-9)));
    g.counts.push_back(n);
    g.widths.push_back(iv.length() / static_cast<double>(n));
    min_w = std::min(min_w, g.widths.back());
    max_w = std::max(max_w, g.widths.back());
    total *= n;
  }
  g.delta_y = ny ? 0.125 * min_w : 0.0;
  g.half_extent = ny ? max_w / 2.0 + g.delta_y : 0.0;
  for (std::size_t c = 0; c < total; ++c) {
    std::vector<std::size_t> k(ny);
    std::size_t rest = c;
    for (std::size_t j = ny; j-- > 0;) {
      k[j] = rest % g.counts[j];
      rest /= g.counts[j];
    }
    std::vector<Interval> axes{domain.axis(0)};
    for (std::size_t j = 0; j < ny; ++j) {
      const auto& iv = domain.axis(j + 1);
      const double lo = iv.lo + g.widths[j] * static_cast<double>(k[j]);
      const double hi = k[j] + 1 == g.counts[j] ? iv.hi : iv.lo + g.widths[j] * static_cast<double>(k[j] + 1);
      axes.push_back({lo, hi});
    }
    g.boxes.emplace_back(std::move(axes));
    g.coords.push_back(std::move(k));
  }
  return g;
}

struct SolidRun {
  double lo = 0.0;
  double hi = 0.0;
};

Box shrunk_column(const Box& col, const DomainBox& domain, double dy) {
  std::vector<Interval> axes{col.axis(0)};
  for (std::size_t j = 1; j < col.size(); ++j) {
    const auto& iv = col.axis(j);
    const auto& d = domain.axis(j);
    axes.push_back({iv.lo > d.lo ? iv.lo + dy : iv.lo, iv.hi < d.hi ? iv.hi - dy : iv.hi});
  }
  return Box(std::move(axes));
}

std::optional<Box> clip_for_level(Box b, const DomainBox& domain, const SingularitySet& sigma, double d) {
  std::vector<Interval> axes = b.axes();
  for (std::size_t j = 0; j < axes.size(); ++j) {
    axes[j].lo = std::max(axes[j].lo, domain.axis(j).lo + d);
    axes[j].hi = std::min(axes[j].hi, domain.axis(j).hi - d);
  }
  for (const auto& p : sigma.primitives()) {
    bool y_near = true;
    for (std::size_t j = 1; j < axes.size() && y_near; ++j) {
      const auto& iv = p.box.axis(j);
      y_near = iv.lo - d <= axes[j].hi && iv.hi + d >= axes[j].lo;
    }
    if (!y_near) continue;
    const auto& pt = p.box.axis(0);
    if (0.5 * (pt.lo + pt.hi) >= 0.5 * (axes[0].lo + axes[0].hi)) axes[0].hi = std::min(axes[0].hi, pt.lo - d);
    else axes[0].lo = std::max(axes[0].lo, pt.hi + d);
  }
  for (const auto& iv : axes) {
    if (!(iv.lo < iv.hi)) return std::nullopt;
  }
  return Box(std::move(axes));
}

bool meets_any(const Box& b, const std::vector<Box>& boxes) {
  return std::any_of(boxes.begin(), boxes.end(), [&](const Box& k) { return b.intersects(k); });
}

}  // namespace

// ---------------------------------------------------------------------------
// Measure budget

SingularitySet shrink_measure(const SingularitySet& sigma, double eps, double h) {
  if (!(eps >= 0.0)) throw PreconditionError("measure budget must be nonnegative");
  if (!(h > 0.0)) throw PreconditionError("resolution h must be positive");
  SingularitySet out(sigma.ambient(), sigma.set_class());
  out.epsilon = eps;
  const std::size_t dim = sigma.ambient().dim();
  std::size_t k = 0;
  for (const auto& p : sigma.finite_part()) {
    if (!p.slab) {
      if (!p.box.degenerate()) throw PreconditionError("shrink_measure needs slabs or degenerate primitives");
      out.add(p);
      continue;
    }
    const auto axis = static_cast<std::size_t>(p.slab->axis);
    double cross = 1.0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (j == axis) continue;
      const auto& iv = p.box.bound(j);
      const auto& d = sigma.ambient().axis(j);
      cross *= std::max(0.0, std::min(iv.hi, d.hi) - std::max(iv.lo, d.lo));
    }
    const double width = std::min(eps / std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(k + 1, 1000))) /
                                      std::max(1.0, cross),
                                  h / 4.0);
    if (p.slab->required_width > width + h) {
      throw BudgetViolation("slab " + std::to_string(k) + " at " + format_double(p.slab->center) + " needs width " +
                            format_double(p.slab->required_width) + " but the budget allows " + format_double(width) +
                            " at resolution h = " + format_double(h) + ": the blow-up region has interior");
    }
    ++k;
    std::vector<Interval> axes = p.box.axes();
    axes[axis] = {p.slab->center - width / 2.0, p.slab->center + width / 2.0};
    out.add(SingPrimitive::make_slab(Box(std::move(axes)), *p.slab));
  }
  if (sigma.enumerator()) out.set_enumerator(sigma.enumerator(), sigma.budget());
  return out;
}

// ---------------------------------------------------------------------------
// Construction

GlobalSolution construct_global_solution(const PdeSystem& pde, const InitialData& data, const GckConfig& config) {
  validate_pde(pde);
  validate_data(pde, data);
  config.validate(pde.domain);
  if (config.order < pde.order) throw PreconditionError("truncation order must be at least m");

  const DomainBox& domain = pde.domain;
  const ColumnGrid grid = make_columns(domain, config.tile);
  const std::size_t ncol = grid.boxes.size();
  std::vector<ColumnRun> runs(ncol);

  auto run_column = [&](std::size_t c) {
    try {
      Point seed{pde.t0};
      for (std::size_t j = 1; j < grid.boxes[c].size(); ++j) {
        const auto& iv = grid.boxes[c].axis(j);
        seed.push_back(0.5 * (iv.lo + iv.hi));
      }
      ColumnMarcher(pde, config, c, grid.half_extent, runs[c]).run(data, seed);
    } catch (const std::exception& e) {
      runs[c].error = e.what();
    }
  };
  const auto n = static_cast<long long>(ncol);
  if (config.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long c = 0; c < n; ++c) run_column(static_cast<std::size_t>(c));
  } else {
    for (long long c = 0; c < n; ++c) run_column(static_cast<std::size_t>(c));
  }

  std::size_t failed = 0;
  std::string first_failure;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (!runs[c].error.empty()) throw Error("column " + std::to_string(c) + ": " + runs[c].error);
    if (!runs[c].seed_error.empty()) {
      if (failed++ == 0) first_failure = "column " + std::to_string(c) + ": " + runs[c].seed_error;
    }
  }
  if (failed == ncol) throw NoSeed("no tile admits a convergent seed (" + first_failure + ")");
  if (failed > 0) {
    throw BudgetViolation(std::to_string(failed) + " column(s) cannot be seeded, so the singular region has interior at "
                          "resolution h (" + first_failure + ")");
  }

  GlobalSolution sol;
  sol.pde = pde;
  sol.config = config;
  sol.columns = grid.boxes;
  const double dy = grid.delta_y;
  const auto& tdom = domain.axis(0);

  // Tiles with edge kinds, column by column in t order.
  std::vector<std::vector<SolidRun>> solid(ncol);
  for (std::size_t c = 0; c < ncol; ++c) {
    auto& raw = runs[c].tiles;
    std::sort(raw.begin(), raw.end(), [](const RawTile& x, const RawTile& y) { return x.a < y.a; });
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const RawTile& r = raw[i];
      if (i > 0 && raw[i - 1].b > r.a) throw Error("overlapping tiles in column " + std::to_string(c));
      Tile tile;
      tile.column = c;
      tile.direction = r.dir;
      tile.series = r.series;
      const double len = r.b - r.a;
      if (r.a <= tdom.lo) {
        tile.lo_kind = EdgeKind::Domain;
      } else if (i > 0 && raw[i - 1].b == r.a) {
        tile.lo_kind = EdgeKind::Partnered;
        tile.lo_delta = config.blend * std::min(len, raw[i - 1].b - raw[i - 1].a);
      } else {
        tile.lo_kind = EdgeKind::Gap;
        tile.lo_delta = config.blend * len;
      }
      if (r.b >= tdom.hi) {
        tile.hi_kind = EdgeKind::Domain;
      } else if (i + 1 < raw.size() && raw[i + 1].a == r.b) {
        tile.hi_kind = EdgeKind::Partnered;
        tile.hi_delta = config.blend * std::min(len, raw[i + 1].b - raw[i + 1].a);
      } else {
        tile.hi_kind = EdgeKind::Gap;
        tile.hi_delta = config.blend * len;
      }

      std::vector<Interval> core{{r.a, r.b}};
      std::vector<Interval> supp{{tile.lo_kind == EdgeKind::Domain ? -kInf : r.a - tile.lo_delta,
                                  tile.hi_kind == EdgeKind::Domain ? kInf : r.b + tile.hi_delta}};
      Expr weight = one();
      if (tile.lo_kind != EdgeKind::Domain) weight = mul(weight, step(0, r.a - tile.lo_delta, r.a + tile.lo_delta, true));
      if (tile.hi_kind != EdgeKind::Domain) weight = mul(weight, step(0, r.b - tile.hi_delta, r.b + tile.hi_delta, false));
      for (std::size_t j = 1; j < grid.boxes[c].size(); ++j) {
        const auto& iv = grid.boxes[c].axis(j);
        const auto& d = domain.axis(j);
        core.push_back(iv);
        Interval s{-kInf, kInf};
        const int axis = static_cast<int>(j);
        if (iv.lo > d.lo) {
          weight = mul(weight, step(axis, iv.lo - dy, iv.lo + dy, true));
          s.lo = iv.lo - dy;
        }
        if (iv.hi < d.hi) {
          weight = mul(weight, step(axis, iv.hi - dy, iv.hi + dy, false));
          s.hi = iv.hi + dy;
        }
        supp.push_back(s);
      }
      tile.core = Box(std::move(core));
      tile.support = Box(std::move(supp));
      for (const auto& s : tile.series) {
        const Expr p = to_expr(s);
        tile.terms.push_back(is_zero(p) ? zero() : mul(weight, p));
      }

      // Solid runs: consecutive partnered tiles, gap ends pulled in by their blend.
      const double run_lo = tile.lo_kind == EdgeKind::Gap ? r.a + tile.lo_delta : r.a;
      const double run_hi = tile.hi_kind == EdgeKind::Gap ? r.b - tile.hi_delta : r.b;
      if (tile.lo_kind == EdgeKind::Partnered && !solid[c].empty()) solid[c].back().hi = run_hi;
      else solid[c].push_back({run_lo, run_hi});
      sol.tiles.push_back(std::move(tile));
    }
    for (auto& ev : runs[c].events) sol.events.push_back(ev);
  }

  // Singular set: one slab per blow-up inside the domain.
  SingularitySet raw_sigma(domain, SetClass::NowhereDense);
  for (const auto& ev : sol.events) {
    if (!(ev.t_hat > tdom.lo && ev.t_hat < tdom.hi)) continue;
    std::vector<Interval> axes = sol.columns[ev.column].axes();
    axes[0] = {ev.t_hat, ev.t_hat};
    raw_sigma.add(SingPrimitive::make_slab(Box(std::move(axes)), SlabInfo{0, ev.t_hat, ev.required_width}));
  }
  sol.sigma = shrink_measure(raw_sigma, config.eps, config.h);
  sol.measure = measure_bound(sol.sigma);
  DenseCheckOptions dopts;
  dopts.parallel = config.parallel;
  sol.dense = is_complement_dense_at(sol.sigma, config.h, dopts).outcome;

  // Exhaustion boxes: column cores on solid runs plus bridges across column faces.
  std::vector<Box> full;
  for (std::size_t c = 0; c < ncol; ++c) {
    const Box inner = shrunk_column(sol.columns[c], domain, dy);
    for (const auto& r : solid[c]) {
      if (!(r.lo < r.hi)) continue;
      std::vector<Interval> axes = inner.axes();
      axes[0] = {r.lo, r.hi};
      full.emplace_back(std::move(axes));
    }
    for (std::size_t j = 0; j + 1 < sol.columns[c].size(); ++j) {
      const auto nb = grid.neighbor(c, j);
      if (!nb) continue;
      const double face = sol.columns[c].axis(j + 1).hi;
      for (const auto& r : solid[c]) {
        for (const auto& s : solid[*nb]) {
          const double lo = std::max(r.lo, s.lo);
          const double hi = std::min(r.hi, s.hi);
          if (!(lo < hi)) continue;
          std::vector<Interval> axes = inner.axes();
          axes[0] = {lo, hi};
          axes[j + 1] = {face - dy, face + dy};
          full.emplace_back(std::move(axes));
        }
      }
    }
  }
  const int levels = config.levels;
  for (int mu = 0; mu <= levels; ++mu) {
    const double d = config.d0 * std::ldexp(1.0, -mu);
    std::vector<Box> k;
    for (const auto& b : full) {
      if (auto clipped = clip_for_level(b, domain, sol.sigma, d)) k.push_back(std::move(*clipped));
    }
    sol.distances.push_back(d);
    sol.exhaustion.push_back(std::move(k));
  }
  sol.top_level = levels + 1;

  for (auto& t : sol.tiles) {
    t.level = sol.top_level;
    for (int mu = 0; mu <= levels; ++mu) {
      if (meets_any(t.support, sol.exhaustion[static_cast<std::size_t>(mu)])) {
        t.level = mu;
        break;
      }
    }
  }

  sol.psi_cache.assign(static_cast<std::size_t>(pde.components), {});
  for (int k = 0; k < pde.components; ++k) {
    for (int nu = 0; nu <= sol.top_level; ++nu) {
      std::vector<Expr> parts;
      for (const auto& t : sol.tiles) {
        const Expr& term = t.terms[static_cast<std::size_t>(k)];
        if (t.level <= nu && !is_zero(term)) parts.push_back(term);
      }
      sol.psi_cache[static_cast<std::size_t>(k)].push_back(sum(std::move(parts)));
    }
  }

  for (int mu = 0; mu <= levels; ++mu) {
    StabilizationRow row;
    row.mu = mu;
    row.distance = sol.distances[static_cast<std::size_t>(mu)];
    const auto& kmu = sol.exhaustion[static_cast<std::size_t>(mu)];
    row.boxes = kmu.size();
    for (const auto& t : sol.tiles) {
      const bool nonzero = std::any_of(t.terms.begin(), t.terms.end(), [](const Expr& e) { return !is_zero(e); });
      if (nonzero && meets_any(t.support, kmu)) row.index = std::max(row.index, t.level);
    }
    row.exact = true;
    for (int k = 0; k < pde.components && row.exact; ++k) {
      const Expr top = sol.restrict_to(k, sol.top_level, mu);
      for (int nu = row.index; nu < sol.top_level && row.exact; ++nu) {
        row.exact = structurally_equal(sol.restrict_to(k, nu, mu), top);
      }
    }
    sol.stabilization.push_back(row);
  }

  // Nets over N and the tag ladder.
  sol.representation = constant_family(sol.sigma);
  const PosetPtr poset = sol.representation.poset;
  for (int k = 0; k < pde.components; ++k) {
    auto cache = std::make_shared<const std::vector<Expr>>(sol.psi_cache[static_cast<std::size_t>(k)]);
    sol.psi.emplace_back(poset,
                         [cache](const Index& l) {
                           const auto nu = std::min<std::int64_t>(l.key[0], static_cast<std::int64_t>(cache->size()) - 1);
                           return (*cache)[static_cast<std::size_t>(nu)];
                         },
                         "psi" + (pde.components > 1 ? "." + std::to_string(k) : std::string{}));
  }
  IdealMember member{sol.sigma, sol.representation};
  sol.a_nd = make_gen(sol.psi.front(), family_ideal(IdealKind::I, SetClass::NowhereDense, {member}, poset));
  sol.a_baire = retag(sol.a_nd, family_ideal(IdealKind::I, SetClass::BaireI, {member}, poset));
  sol.b_baire = retag(sol.a_baire, family_ideal(IdealKind::J, SetClass::BaireI, {member}, poset));
  return sol;
}

Expr GlobalSolution::psi_term(int component, int nu) const {
  const auto& c = psi_cache.at(static_cast<std::size_t>(component));
  return c[static_cast<std::size_t>(std::clamp(nu, 0, top_level))];
}

Expr GlobalSolution::restrict_to(int component, int nu, int mu) const {
  const auto& kmu = exhaustion.at(static_cast<std::size_t>(mu));
  std::vector<Expr> parts;
  for (const auto& t : tiles) {
    const Expr& term = t.terms[static_cast<std::size_t>(component)];
    if (t.level <= nu && !is_zero(term) && meets_any(t.support, kmu)) parts.push_back(term);
  }
  return sum(std::move(parts));
}

int GlobalSolution::level_of(std::span<const double> x) const {
  for (std::size_t mu = 0; mu < exhaustion.size(); ++mu) {
    for (const auto& b : exhaustion[mu]) {
      if (b.contains(x)) return static_cast<int>(mu);
    }
  }
  return -1;
}

double GlobalSolution::evaluate(int component, int nu, std::span<const double> x) const {
  double v = 0.0;
  for (const auto& t : tiles) {
    if (t.level <= nu && t.support.contains(x)) v += foamck::evaluate(t.terms[static_cast<std::size_t>(component)], x);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Residuals

namespace {

/// Multi-indices needed for the residual of every component.
struct JetPlan {
  std::vector<std::pair<int, MultiIndex>> entries;

  std::size_t index(int component, const MultiIndex& a) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first == component && entries[i].second == a) return i;
    }
    entries.emplace_back(component, a);
    return entries.size() - 1;
  }
  std::size_t find(int component, const MultiIndex& a) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].first == component && entries[i].second == a) return i;
    }
    throw Error("jet missing from plan");
  }
};

MultiIndex jet_alpha(const Node& n, int dim) {
  MultiIndex a(static_cast<std::size_t>(dim), 0);
  a[0] = n.jet_p;
  for (std::size_t j = 0; j < n.jet_q.size() && j + 1 < a.size(); ++j) a[j + 1] = n.jet_q[j];
  return a;
}

void collect_jets(const Node& n, int dim, JetPlan& plan) {
  if (n.op == Op::Jet) plan.index(n.component, jet_alpha(n, dim));
  for (const auto& a : n.args) collect_jets(*a, dim, plan);
}

JetPlan make_plan(const PdeSystem& pde) {
  JetPlan plan;
  for (int k = 0; k < pde.components; ++k) {
    MultiIndex lhs(static_cast<std::size_t>(pde.dim), 0);
    lhs[0] = pde.order;
    plan.index(k, lhs);
  }
  for (const auto& g : pde.rhs) collect_jets(*g, pde.dim, plan);
  return plan;
}

/// Derivative expressions per tile and plan entry, built on demand.
class DerivTable {
 public:
  DerivTable(const GlobalSolution& sol, JetPlan plan) : sol_(sol), plan_(std::move(plan)) {}

  void build_all() {
    table_.assign(sol_.tiles.size(), {});
    for (std::size_t t = 0; t < sol_.tiles.size(); ++t) fill(t);
  }

  const Expr& get(std::size_t tile, std::size_t entry) {
    if (table_.size() != sol_.tiles.size()) table_.assign(sol_.tiles.size(), {});
    if (table_[tile].empty()) fill(tile);
    return table_[tile][entry];
  }

  const JetPlan& plan() const { return plan_; }

 private:
  void fill(std::size_t t) {
    Differentiator d;
    for (const auto& [k, a] : plan_.entries) table_[t].push_back(d.derive(sol_.tiles[t].terms[static_cast<std::size_t>(k)], a));
  }

  const GlobalSolution& sol_;
  JetPlan plan_;
  std::vector<std::vector<Expr>> table_;
};

double residual_with(const GlobalSolution& sol, DerivTable& table, int component, int nu, std::span<const double> x) {
  std::vector<std::size_t> active;
  for (std::size_t t = 0; t < sol.tiles.size(); ++t) {
    if (sol.tiles[t].level <= nu && sol.tiles[t].support.contains(x)) active.push_back(t);
  }
  auto jet_value = [&](std::size_t entry) {
    double v = 0.0;
    for (auto t : active) v += evaluate(table.get(t, entry), x);
    return v;
  };
  MultiIndex lhs(static_cast<std::size_t>(sol.pde.dim), 0);
  lhs[0] = sol.pde.order;
  const double left = jet_value(table.plan().find(component, lhs));
  const double right = evaluate(sol.pde.rhs[static_cast<std::size_t>(component)], x, [&](const Node& n) {
    return jet_value(table.plan().find(n.component, jet_alpha(n, sol.pde.dim)));
  });
  return left - right;
}

}  // namespace

double residual_at(const GlobalSolution& sol, int component, int nu, std::span<const double> x) {
  DerivTable table(sol, make_plan(sol.pde));
  return residual_with(sol, table, component, nu, x);
}

std::vector<Point> sample_grid(const DomainBox& domain, std::size_t per_axis) {
  if (per_axis == 0) throw PreconditionError("grid needs at least one point per axis");
  const std::size_t dim = domain.dim();
  std::size_t total = 1;
  for (std::size_t j = 0; j < dim; ++j) total *= per_axis;
  std::vector<Point> out;
  out.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    Point x(dim);
    std::size_t rest = i;
    for (std::size_t j = dim; j-- > 0;) {
      const auto& iv = domain.axis(j);
      x[j] = iv.lo + (static_cast<double>(rest % per_axis) + 0.5) * iv.length() / static_cast<double>(per_axis);
      rest /= per_axis;
    }
    out.push_back(std::move(x));
  }
  return out;
}

ResidualReport verify_residual(const GlobalSolution& sol, const std::vector<Point>& grid, double tol, bool parallel,
                               int max_level) {
  if (!(tol > 0.0)) throw PreconditionError("tolerance must be positive");
  DerivTable table(sol, make_plan(sol.pde));
  table.build_all();

  struct PointResult {
    int level = -1;
    std::string skip;
    double residual = 0.0;
    bool constant = true;
    std::vector<std::size_t> tiles;
    std::vector<std::size_t> cores;
  };
  std::vector<PointResult> res(grid.size());
  const double h = sol.config.h;

  auto work = [&](std::size_t i) {
    const Point& x = grid[i];
    PointResult& r = res[i];
    if (!sol.pde.domain.contains(x)) {
      r.skip = "outside the domain";
      return;
    }
    if (sol.sigma.distance_inf(x) < h) {
      r.skip = "within h of the singular set";
      return;
    }
    r.level = sol.level_of(x);
    if (r.level < 0) {
      r.skip = "outside the exhaustion";
      return;
    }
    if (max_level >= 0 && r.level > max_level) {
      r.skip = "outside K_" + std::to_string(max_level);
      r.level = -1;
      return;
    }
    const int stab = sol.stabilization[static_cast<std::size_t>(r.level)].index;
    for (int k = 0; k < sol.pde.components; ++k) {
      const double top = residual_with(sol, table, k, sol.top_level, x);
      const double early = residual_with(sol, table, k, stab, x);
      if (!(top == early || (std::isnan(top) && std::isnan(early)))) r.constant = false;
      r.residual = std::max(r.residual, std::isfinite(top) ? std::abs(top) : kInf);
    }
    for (std::size_t t = 0; t < sol.tiles.size(); ++t) {
      if (r.residual > tol && sol.tiles[t].support.contains(x)) r.tiles.push_back(t);
      if (sol.tiles[t].core.contains(x)) r.cores.push_back(t);
    }
  };
  const auto n = static_cast<long long>(grid.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < n; ++i) work(static_cast<std::size_t>(i));
  } else {
    for (long long i = 0; i < n; ++i) work(static_cast<std::size_t>(i));
  }

  ResidualReport rep;
  rep.tol = tol;
  const auto nl = sol.exhaustion.size();
  rep.sup_by_level.assign(nl, 0.0);
  rep.points_by_level.assign(nl, 0);
  rep.tile_sup.assign(sol.tiles.size(), -1.0);
  std::set<std::size_t> failing;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto& r = res[i];
    if (!r.skip.empty()) {
      rep.skipped.push_back({grid[i], r.skip});
      continue;
    }
    for (auto mu = static_cast<std::size_t>(r.level); mu < nl; ++mu) {
      rep.sup_by_level[mu] = std::max(rep.sup_by_level[mu], r.residual);
      ++rep.points_by_level[mu];
    }
    rep.max_residual = std::max(rep.max_residual, r.residual);
    if (!r.constant) rep.constant_past_stabilization = false;
    failing.insert(r.tiles.begin(), r.tiles.end());
    for (std::size_t t : r.cores) rep.tile_sup[t] = std::max(rep.tile_sup[t], r.residual);
  }
  rep.failing_tiles.assign(failing.begin(), failing.end());
  rep.ok = rep.constant_past_stabilization && rep.max_residual <= tol;
  return rep;
}

OracleReport oracle_error(const GlobalSolution& sol, const std::vector<Point>& grid, int mu) {
  if (sol.pde.oracle.empty()) throw PreconditionError("the system has no oracle");
  OracleReport rep;
  for (const auto& x : grid) {
    if (!sol.pde.domain.contains(x) || sol.sigma.distance_inf(x) < sol.config.h) continue;
    const int level = sol.level_of(x);
    if (level < 0 || (mu >= 0 && level > mu)) continue;
    ++rep.points;
    for (int k = 0; k < sol.pde.components; ++k) {
      const double want = evaluate(sol.pde.oracle[static_cast<std::size_t>(k)], x);
      const double got = sol.evaluate(k, sol.top_level, x);
      rep.max_error = std::max(rep.max_error, std::abs(got - want));
    }
  }
  return rep;
}

}  // namespace foamck
