#include "foamck/sets.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>

#include "foamck/error.hpp"
#include "foamck/expr.hpp"

namespace foamck {

std::string class_name(SetClass c) {
  switch (c) {
    case SetClass::NowhereDense:
      return "ND";
    case SetClass::BaireI:
      return "BAIRE_I";
    case SetClass::DenseComplement:
      return "DENSE";
  }
  return "?";
}

SetClass parse_class(const std::string& s) {
  if (s == "ND") return SetClass::NowhereDense;
  if (s == "BAIRE_I") return SetClass::BaireI;
  if (s == "DENSE") return SetClass::DenseComplement;
  throw PreconditionError("unknown set class '" + s + "'");
}

// ---------------------------------------------------------------------------

SingPrimitive SingPrimitive::point(std::span<const double> x) {
  std::vector<Interval> axes;
  for (double v : x) {
    if (!std::isfinite(v)) throw PreconditionError("point coordinates must be finite");
    axes.push_back({v, v});
  }
  return SingPrimitive{Box(std::move(axes)), std::nullopt};
}

SingPrimitive SingPrimitive::make_box(Box b) {
  for (const auto& iv : b.axes()) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw PreconditionError("primitive box needs finite bounds with lo <= hi");
    }
  }
  if (!b.degenerate()) throw PreconditionError("primitive box must be degenerate in at least one axis");
  return SingPrimitive{std::move(b), std::nullopt};
}

SingPrimitive SingPrimitive::make_slab(Box b, SlabInfo info) {
  for (const auto& iv : b.axes()) {
    if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi) {
      throw PreconditionError("slab needs finite bounds with lo <= hi");
    }
  }
  if (info.axis < 0 || static_cast<std::size_t>(info.axis) >= b.size()) throw PreconditionError("slab axis out of range");
  return SingPrimitive{std::move(b), info};
}

bool SingPrimitive::is_point() const {
  return std::all_of(box.axes().begin(), box.axes().end(), [](const Interval& iv) { return iv.lo == iv.hi; });
}

Point SingPrimitive::as_point() const {
  if (!is_point()) throw PreconditionError("primitive is not a point");
  Point p;
  for (const auto& iv : box.axes()) p.push_back(iv.lo);
  return p;
}

// ---------------------------------------------------------------------------
// Enumerators

namespace {

/// Shared lazy cache for enumerators that generate in order.
class CachedEnumerator : public Enumerator {
 public:
  std::optional<SingPrimitive> at(std::size_t k) const override {
    std::lock_guard<std::mutex> lock(mu_);
    while (cache_.size() <= k && !done_) done_ = !extend(cache_);
    if (k < cache_.size()) return cache_[k];
    return std::nullopt;
  }

 protected:
  /// Append the next batch; return false when the family is exhausted.
  virtual bool extend(std::vector<SingPrimitive>& out) const = 0;

 private:
  mutable std::mutex mu_;
  mutable std::vector<SingPrimitive> cache_;
  mutable bool done_ = false;
};

class AdicEnumerator final : public CachedEnumerator {
 public:
  AdicEnumerator(DomainBox ambient, int base) : ambient_(std::move(ambient)), base_(base) {}

  std::optional<std::size_t> count() const override { return std::nullopt; }
  std::string spec() const override { return base_ == 2 ? "dyadic" : "adic " + std::to_string(base_); }

 protected:
  bool extend(std::vector<SingPrimitive>& out) const override {
    for (;;) {
      if (level_ > kMaxLevel) return false;
      const int level = level_++;
      const double scale = std::pow(static_cast<double>(base_), level);
      // Per axis: (value, new at this level).
      std::vector<std::vector<std::pair<double, bool>>> coords;
      for (const auto& iv : ambient_.axes()) {
        std::vector<std::pair<double, bool>> c;
        const auto jlo = static_cast<long long>(std::floor(iv.lo * scale)) + 1;
        const auto jhi = static_cast<long long>(std::ceil(iv.hi * scale)) - 1;
        if (jhi - jlo > 1'000'000) return false;
        for (long long j = jlo; j <= jhi; ++j) {
          const double v = static_cast<double>(j) / scale;
          if (!(v > iv.lo && v < iv.hi)) continue;
          c.emplace_back(v, level == 0 || j % base_ != 0);
        }
        coords.push_back(std::move(c));
      }
      const std::size_t before = out.size();
      Point p(coords.size());
      emit(coords, 0, false, p, out);
      if (out.size() > before) return true;
    }
  }

 private:
  static constexpr int kMaxLevel = 40;

  void emit(const std::vector<std::vector<std::pair<double, bool>>>& coords, std::size_t axis, bool fresh, Point& p,
            std::vector<SingPrimitive>& out) const {
    if (axis == coords.size()) {
      if (fresh) out.push_back(SingPrimitive::point(p));
      return;
    }
    for (const auto& [v, is_new] : coords[axis]) {
      p[axis] = v;
      emit(coords, axis + 1, fresh || is_new, p, out);
    }
  }

  DomainBox ambient_;
  int base_;
  mutable int level_ = 0;
};

class ListEnumerator final : public Enumerator {
 public:
  ListEnumerator(std::vector<SingPrimitive> items, std::string spec) : items_(std::move(items)), spec_(std::move(spec)) {}
  std::optional<SingPrimitive> at(std::size_t k) const override {
    if (k < items_.size()) return items_[k];
    return std::nullopt;
  }
  std::optional<std::size_t> count() const override { return items_.size(); }
  std::string spec() const override { return spec_; }

 private:
  std::vector<SingPrimitive> items_;
  std::string spec_;
};

class InterleaveEnumerator final : public CachedEnumerator {
 public:
  explicit InterleaveEnumerator(std::vector<EnumPtr> parts) : parts_(std::move(parts)) {}

  std::optional<std::size_t> count() const override {
    std::size_t total = 0;
    for (const auto& p : parts_) {
      auto c = p->count();
      if (!c) return std::nullopt;
      total += *c;
    }
    return total;
  }
  std::string spec() const override {
    std::string s;
    for (std::size_t i = 0; i < parts_.size(); ++i) s += (i ? " | " : "") + parts_[i]->spec();
    return s;
  }
  const std::vector<EnumPtr>& parts() const { return parts_; }

 protected:
  bool extend(std::vector<SingPrimitive>& out) const override {
    bool any = false;
    for (const auto& p : parts_) {
      if (auto v = p->at(round_)) {
        out.push_back(std::move(*v));
        any = true;
      }
    }
    ++round_;
    return any;
  }

 private:
  std::vector<EnumPtr> parts_;
  mutable std::size_t round_ = 0;
};

long long gcd_ll(long long a, long long b) { return std::gcd(a, b); }

}  // namespace

EnumPtr adic_points(const DomainBox& ambient, int base) {
  if (base < 2) throw PreconditionError("lattice base must be at least 2");
  return std::make_shared<AdicEnumerator>(ambient, base);
}

EnumPtr rational_points(const DomainBox& ambient, int max_den) {
  if (ambient.dim() != 1) throw PreconditionError("rational enumeration is one-dimensional");
  if (max_den < 1) throw PreconditionError("maximum denominator must be positive");
  const auto& iv = ambient.axis(0);
  std::vector<SingPrimitive> items;
  for (long long q = 1; q <= max_den; ++q) {
    const auto plo = static_cast<long long>(std::floor(iv.lo * static_cast<double>(q)));
    const auto phi = static_cast<long long>(std::ceil(iv.hi * static_cast<double>(q)));
    for (long long p = plo; p <= phi; ++p) {
      if (gcd_ll(std::llabs(p), q) != 1) continue;
      const double v = static_cast<double>(p) / static_cast<double>(q);
      if (!(v > iv.lo && v < iv.hi)) continue;
      const double pt[1] = {v};
      items.push_back(SingPrimitive::point(pt));
    }
  }
  return std::make_shared<ListEnumerator>(std::move(items), "rational " + std::to_string(max_den));
}

EnumPtr grid_points(const DomainBox& ambient, double spacing) {
  if (!(spacing > 0.0)) throw PreconditionError("grid spacing must be positive");
  std::vector<std::vector<double>> coords;
  double total = 1.0;
  for (const auto& iv : ambient.axes()) {
    std::vector<double> c;
    for (long long k = 1;; ++k) {
      const double v = iv.lo + static_cast<double>(k) * spacing;
      if (!(v < iv.hi)) break;
      c.push_back(v);
    }
    total *= static_cast<double>(c.size());
    coords.push_back(std::move(c));
  }
  if (total > 5e6) throw PreconditionError("grid enumeration too large");
  std::vector<SingPrimitive> items;
  Point p(coords.size());
  std::vector<std::size_t> idx(coords.size(), 0);
  if (total > 0) {
    for (;;) {
      for (std::size_t a = 0; a < coords.size(); ++a) p[a] = coords[a][idx[a]];
      items.push_back(SingPrimitive::point(p));
      std::size_t a = coords.size();
      while (a > 0) {
        --a;
        if (++idx[a] < coords[a].size()) break;
        idx[a] = 0;
        if (a == 0) {
          a = coords.size() + 1;
          break;
        }
      }
      if (a == coords.size() + 1) break;
    }
  }
  return std::make_shared<ListEnumerator>(std::move(items), "grid " + format_double(spacing));
}

EnumPtr interleave(std::vector<EnumPtr> parts) {
  if (parts.empty()) throw PreconditionError("interleave needs at least one family");
  if (parts.size() == 1) return parts.front();
  return std::make_shared<InterleaveEnumerator>(std::move(parts));
}

// ---------------------------------------------------------------------------

SingularitySet SingularitySet::retagged(SetClass cls) const {
  SingularitySet out = *this;
  out.class_ = cls;
  return out;
}

void SingularitySet::add(SingPrimitive p) {
  if (p.box.size() != ambient_.dim()) throw PreconditionError("primitive dimension differs from the ambient box");
  finite_.push_back(std::move(p));
  rebuild();
}

void SingularitySet::set_enumerator(EnumPtr e, std::size_t budget) {
  if (e && class_ == SetClass::NowhereDense && !e->count()) {
    throw PreconditionError("nowhere dense sets must be finite unions of primitives");
  }
  enum_ = std::move(e);
  budget_ = enum_ ? budget : 0;
  rebuild();
}

void SingularitySet::rebuild() {
  all_ = finite_;
  truncated_ = false;
  if (!enum_) return;
  for (std::size_t k = 0; k < budget_; ++k) {
    auto p = enum_->at(k);
    if (!p) return;
    all_.push_back(std::move(*p));
  }
  truncated_ = enum_->at(budget_).has_value();
}

bool SingularitySet::contains(std::span<const double> x) const {
  return std::any_of(all_.begin(), all_.end(), [&](const SingPrimitive& p) { return p.contains(x); });
}

double SingularitySet::distance_inf(std::span<const double> x) const {
  double d = kInf;
  for (const auto& p : all_) d = std::min(d, p.box.distance_inf(x));
  return d;
}

std::vector<Point> SingularitySet::points() const {
  std::vector<Point> out;
  out.reserve(all_.size());
  for (const auto& p : all_) out.push_back(p.as_point());
  return out;
}

bool same_set(const SingularitySet& a, const SingularitySet& b) {
  if (!(a.ambient() == b.ambient())) return false;
  if (a.primitives().size() != b.primitives().size() || a.truncated() != b.truncated()) return false;
  for (std::size_t i = 0; i < a.primitives().size(); ++i) {
    if (!(a.primitives()[i].box == b.primitives()[i].box)) return false;
  }
  const std::string sa = a.enumerator() ? a.enumerator()->spec() : "";
  const std::string sb = b.enumerator() ? b.enumerator()->spec() : "";
  return sa == sb;
}

// ---------------------------------------------------------------------------
// Dense complement check

namespace {

double halton(std::size_t k, int base) {
  double f = 1.0;
  double r = 0.0;
  while (k > 0) {
    f /= base;
    r += f * static_cast<double>(k % static_cast<std::size_t>(base));
    k /= static_cast<std::size_t>(base);
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

struct CellGrid {
  std::vector<std::size_t> counts;
  std::vector<double> widths;
  std::size_t total = 1;

  CellGrid(const DomainBox& d, double h) {
    for (const auto& iv : d.axes()) {
      const double len = iv.length();
      const auto c = static_cast<std::size_t>(std::max(1.0, std::ceil(len / h - 1e-9)));
      counts.push_back(c);
      widths.push_back(len / static_cast<double>(c));
      total *= c;
    }
  }

  std::vector<std::size_t> unravel(std::size_t cell) const {
    std::vector<std::size_t> idx(counts.size());
    for (std::size_t a = counts.size(); a-- > 0;) {
      idx[a] = cell % counts[a];
      cell /= counts[a];
    }
    return idx;
  }
};

// Candidate samples inside one cell, in a fixed order.
std::vector<Point> cell_candidates(const DomainBox& d, const CellGrid& g, const std::vector<std::size_t>& idx,
                                   const DenseCheckOptions& opts) {
  const std::size_t n = idx.size();
  std::vector<Point> out;
  if (opts.mode == SampleMode::Jittered) {
    Point c(n);
    for (std::size_t a = 0; a < n; ++a) c[a] = d.axis(a).lo + (static_cast<double>(idx[a]) + 0.5) * g.widths[a];
    out.push_back(c);
    for (int k = 1; k < opts.samples_per_cell; ++k) {
      Point p(n);
      for (std::size_t a = 0; a < n; ++a) {
        p[a] = d.axis(a).lo + (static_cast<double>(idx[a]) + halton(static_cast<std::size_t>(k), kPrimes[a % 10])) * g.widths[a];
      }
      out.push_back(p);
    }
    return out;
  }
  for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
    Point p(n);
    for (std::size_t a = 0; a < n; ++a) {
      const std::size_t k = idx[a] + ((corner >> a) & 1u);
      p[a] = d.axis(a).lo + static_cast<double>(k) * g.widths[a];
    }
    if (d.contains(p)) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

DenseCheck is_complement_dense_at(const SingularitySet& s, double h, const DenseCheckOptions& opts) {
  const DomainBox& d = s.ambient();
  if (!(h > 0.0) || h >= d.min_length()) throw PreconditionError("resolution h must be positive and below every axis length");
  CellGrid g(d, h);
  DenseCheck out;
  out.cells_per_axis = g.counts;

  const std::size_t per_cell = opts.mode == SampleMode::Jittered ? static_cast<std::size_t>(std::max(1, opts.samples_per_cell))
                                                                 : (std::size_t{1} << d.dim());
  if (static_cast<double>(g.total) * static_cast<double>(per_cell) > static_cast<double>(opts.sample_budget)) {
    out.outcome = DenseOutcome::Inconclusive;
    return out;
  }
  if (opts.keep_witnesses) out.witnesses.assign(g.total, Point{});

  const auto total = static_cast<long long>(g.total);
  std::atomic<long long> first_bad{total};
  std::atomic<std::size_t> used{0};

  auto check_cell = [&](long long cell) {
    const auto idx = g.unravel(static_cast<std::size_t>(cell));
    std::size_t tried = 0;
    bool found = false;
    for (auto& p : cell_candidates(d, g, idx, opts)) {
      ++tried;
      if (!s.contains(p)) {
        if (opts.keep_witnesses) out.witnesses[static_cast<std::size_t>(cell)] = std::move(p);
        found = true;
        break;
      }
    }
    used += tried;
    if (!found) {
      long long cur = first_bad.load();
      while (cell < cur && !first_bad.compare_exchange_weak(cur, cell)) {
      }
    }
  };

  if (opts.parallel) {
#pragma omp parallel for schedule(dynamic, 64)
    for (long long cell = 0; cell < total; ++cell) check_cell(cell);
  } else {
    for (long long cell = 0; cell < total; ++cell) check_cell(cell);
  }

  out.samples_used = used.load();
  if (first_bad.load() < total) {
    out.outcome = DenseOutcome::NotDense;
    const auto idx = g.unravel(static_cast<std::size_t>(first_bad.load()));
    std::vector<Interval> axes;
    for (std::size_t a = 0; a < idx.size(); ++a) {
      const double lo = d.axis(a).lo + static_cast<double>(idx[a]) * g.widths[a];
      axes.push_back({lo, lo + g.widths[a]});
    }
    out.failing_cell = Box(std::move(axes));
    out.witnesses.clear();
  } else {
    out.outcome = DenseOutcome::Dense;
  }
  return out;
}

SingularitySet union_sets(const SingularitySet& a, const SingularitySet& b, double h, const DenseCheckOptions& opts) {
  if (!(a.ambient() == b.ambient())) throw MismatchError("union needs the same ambient box");
  SingularitySet out(a.ambient(), std::max(a.set_class(), b.set_class()));
  for (const auto& p : a.finite_part()) out.add(p);
  for (const auto& p : b.finite_part()) out.add(p);
  if (a.enumerator() && b.enumerator()) {
    out.set_enumerator(interleave({a.enumerator(), b.enumerator()}), a.budget() + b.budget());
  } else if (a.enumerator()) {
    out.set_enumerator(a.enumerator(), a.budget());
  } else if (b.enumerator()) {
    out.set_enumerator(b.enumerator(), b.budget());
  }
  if (is_complement_dense_at(out, h, opts).outcome == DenseOutcome::NotDense) {
    throw ComplementNotDense("union has no dense complement at resolution " + format_double(h));
  }
  return out;
}

MeasureBound measure_bound(const SingularitySet& s) {
  MeasureBound m;
  for (const auto& p : s.primitives()) m.bound += p.box.volume(s.ambient().dim());
  m.partial = s.truncated();
  return m;
}

// ---------------------------------------------------------------------------
// Limsup representations

LimsupVerdict limsup_contains(const LimsupFamily& f, std::span<const double> x, std::size_t budget) {
  LimsupVerdict v;
  const auto size = f.poset->size();
  const std::size_t t = size ? std::min(budget, *size) : budget;
  if (t == 0) return v;
  const bool exhaustive = size && *size <= budget;

  std::vector<Index> elems;
  elems.reserve(t);
  for (std::size_t k = 0; k < t; ++k) elems.push_back(f.poset->element(k));

  std::map<Index, bool> hit;
  auto in_sigma = [&](const Index& mu) {
    if (auto it = hit.find(mu); it != hit.end()) return it->second;
    const auto prims = f.sigma(mu);
    const bool r = std::any_of(prims.begin(), prims.end(), [&](const SingPrimitive& p) { return p.contains(x); });
    hit.emplace(mu, r);
    return r;
  };

  const std::size_t probes = exhaustive ? t : std::max<std::size_t>(1, t / 2);
  for (std::size_t i = 0; i < probes; ++i) {
    const Index& lambda = elems[i];
    bool reached = false;
    for (const auto& e : elems) {
      if ((f.poset->leq(lambda, e) && in_sigma(e)) || in_sigma(f.poset->join(lambda, e))) {
        reached = true;
        break;
      }
    }
    if (!reached) {
      v.outcome = LimsupOutcome::Out;
      v.lambda = lambda;
      return v;
    }
  }
  v.outcome = (exhaustive || t >= 2) ? LimsupOutcome::In : LimsupOutcome::Inconclusive;
  return v;
}

LimsupFamily constant_family(const SingularitySet& s) {
  auto prims = std::make_shared<const std::vector<SingPrimitive>>(s.primitives());
  return LimsupFamily{std::make_shared<NaturalPoset>(),
                      [prims](const Index&) { return *prims; }, "constant"};
}

LimsupFamily finite_subset_representation(const SingularitySet& s) {
  auto pts = std::make_shared<const std::vector<Point>>(s.points());
  if (pts->empty()) throw PreconditionError("finite-subset representation of an empty set");
  auto poset = std::make_shared<FiniteSubsetPoset>(pts->size());
  return LimsupFamily{poset,
                      [pts](const Index& a) {
                        std::vector<SingPrimitive> out;
                        out.reserve(a.key.size());
                        for (auto i : a.key) out.push_back(SingPrimitive::point((*pts)[static_cast<std::size_t>(i)]));
                        return out;
                      },
                      "finite-subsets"};
}

// ---------------------------------------------------------------------------
// Text form

namespace {

void write_numbers(std::string& out, std::span<const double> v) {
  for (double x : v) {
    out += ' ';
    out += format_double(x);
  }
}

void write_box(std::string& out, const Box& b) {
  for (const auto& iv : b.axes()) {
    out += ' ' + format_double(iv.lo) + ' ' + format_double(iv.hi);
  }
}

void collect_specs(const EnumPtr& e, std::vector<std::string>& out) {
  if (auto il = std::dynamic_pointer_cast<const InterleaveEnumerator>(e)) {
    for (const auto& p : il->parts()) collect_specs(p, out);
  } else {
    out.push_back(e->spec());
  }
}

double token_number(const std::string& tok, std::size_t line) {
  try {
    Expr e = parse_expr(tok);
    double v = 0.0;
    if (!is_constant(e, &v)) throw ParseError("expected a number, got '" + tok + "'", 0, line);
    return v;
  } catch (const ParseError& err) {
    throw ParseError("bad number '" + tok + "'", 0, line);
  }
}

}  // namespace

std::string to_text(const SingularitySet& s) {
  std::string out = "sigma " + class_name(s.set_class());
  write_box(out, s.ambient().closure());
  out += '\n';
  if (s.epsilon) out += "epsilon " + format_double(*s.epsilon) + '\n';
  for (const auto& p : s.finite_part()) {
    if (p.slab) {
      out += "slab " + std::to_string(p.slab->axis) + ' ' + format_double(p.slab->center) + ' ' +
             format_double(p.slab->required_width);
      write_box(out, p.box);
    } else if (p.is_point()) {
      out += "point";
      write_numbers(out, p.as_point());
    } else {
      out += "box";
      write_box(out, p.box);
    }
    out += '\n';
  }
  if (s.enumerator()) {
    std::vector<std::string> specs;
    collect_specs(s.enumerator(), specs);
    for (const auto& sp : specs) out += "enum " + sp + '\n';
    out += "budget " + std::to_string(s.budget()) + '\n';
  }
  return out;
}

SingularitySet parse_sigma(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  std::optional<SingularitySet> s;
  std::vector<std::pair<std::vector<std::string>, std::size_t>> enums;
  std::optional<std::size_t> budget;

  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    const std::string& kw = tok[0];
    if (!s) {
      if (kw != "sigma" || tok.size() < 4 || tok.size() % 2 != 0) {
        throw ParseError("expected header 'sigma CLASS l1 u1 ...'", 0, lineno);
      }
      std::vector<Interval> axes;
      for (std::size_t i = 2; i + 1 < tok.size(); i += 2) {
        axes.push_back({token_number(tok[i], lineno), token_number(tok[i + 1], lineno)});
      }
      try {
        s.emplace(DomainBox(std::move(axes)), parse_class(tok[1]));
      } catch (const PreconditionError& e) {
        throw ParseError(e.what(), 0, lineno);
      }
      continue;
    }
    const std::size_t n = s->ambient().dim();
    try {
      if (kw == "point") {
        if (tok.size() != n + 1) throw ParseError("point needs " + std::to_string(n) + " coordinates", 0, lineno);
        Point p;
        for (std::size_t i = 1; i < tok.size(); ++i) p.push_back(token_number(tok[i], lineno));
        s->add(SingPrimitive::point(p));
      } else if (kw == "box") {
        if (tok.size() != 2 * n + 1) throw ParseError("box needs " + std::to_string(2 * n) + " bounds", 0, lineno);
        std::vector<Interval> axes;
        for (std::size_t i = 1; i + 1 < tok.size(); i += 2) {
          axes.push_back({token_number(tok[i], lineno), token_number(tok[i + 1], lineno)});
        }
        s->add(SingPrimitive::make_box(Box(std::move(axes))));
      } else if (kw == "slab") {
        if (tok.size() != 2 * n + 4) throw ParseError("slab needs axis, center, width and " + std::to_string(2 * n) + " bounds", 0, lineno);
        SlabInfo info{std::stoi(tok[1]), token_number(tok[2], lineno), token_number(tok[3], lineno)};
        std::vector<Interval> axes;
        for (std::size_t i = 4; i + 1 < tok.size(); i += 2) {
          axes.push_back({token_number(tok[i], lineno), token_number(tok[i + 1], lineno)});
        }
        s->add(SingPrimitive::make_slab(Box(std::move(axes)), info));
      } else if (kw == "enum") {
        if (tok.size() < 2) throw ParseError("enum needs a family name", 0, lineno);
        enums.emplace_back(std::vector<std::string>(tok.begin() + 1, tok.end()), lineno);
      } else if (kw == "budget") {
        if (tok.size() != 2) throw ParseError("budget needs one integer", 0, lineno);
        budget = static_cast<std::size_t>(std::stoull(tok[1]));
      } else if (kw == "epsilon") {
        if (tok.size() != 2) throw ParseError("epsilon needs one number", 0, lineno);
        s->epsilon = token_number(tok[1], lineno);
      } else {
        throw ParseError("unknown keyword '" + kw + "'", 0, lineno);
      }
    } catch (const PreconditionError& e) {
      throw ParseError(e.what(), 0, lineno);
    } catch (const std::invalid_argument&) {
      throw ParseError("malformed integer", 0, lineno);
    } catch (const std::out_of_range&) {
      throw ParseError("integer out of range", 0, lineno);
    }
  }
  if (!s) throw ParseError("missing 'sigma' header", 0, lineno == 0 ? 1 : lineno);

  if (!enums.empty()) {
    std::vector<EnumPtr> parts;
    std::size_t total = 0;
    for (const auto& [t, line] : enums) {
      const std::string& name = t[0];
      std::size_t extra = 1;
      try {
        if (name == "dyadic") {
          parts.push_back(adic_points(s->ambient(), 2));
        } else if (name == "adic" && t.size() >= 2) {
          parts.push_back(adic_points(s->ambient(), std::stoi(t[1])));
          extra = 2;
        } else if (name == "rational" && t.size() >= 2) {
          parts.push_back(rational_points(s->ambient(), std::stoi(t[1])));
          extra = 2;
        } else if (name == "grid" && t.size() >= 2) {
          parts.push_back(grid_points(s->ambient(), token_number(t[1], line)));
          extra = 2;
        } else {
          throw ParseError("unknown enumeration '" + name + "'", 0, line);
        }
        if (t.size() > extra) total += static_cast<std::size_t>(std::stoull(t[extra]));
      } catch (const PreconditionError& e) {
        throw ParseError(e.what(), 0, line);
      } catch (const std::logic_error&) {
        throw ParseError("malformed enumeration parameters", 0, line);
      }
    }
    const std::size_t b = budget ? *budget : (total > 0 ? total : SingularitySet::kDefaultBudget);
    try {
      s->set_enumerator(interleave(std::move(parts)), b);
    } catch (const PreconditionError& e) {
      throw ParseError(e.what(), 0, enums.front().second);
    }
  }
  return std::move(*s);
}

SingularitySet load_sigma(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_sigma(ss.str());
}

}  // namespace foamck
