#include "foamck/nets.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "foamck/error.hpp"
#include "foamck/series.hpp"

namespace foamck {

Net::Net(PosetPtr poset, TermFn term, std::string label) : state_(std::make_shared<State>()) {
  if (!poset) throw PreconditionError("net needs a poset");
  state_->poset = std::move(poset);
  state_->term = std::move(term);
  state_->label = std::move(label);
}

Expr Net::term(const Index& lambda) const {
  {
    std::lock_guard<std::mutex> lock(state_->mu);
    if (auto it = state_->memo.find(lambda); it != state_->memo.end()) return it->second;
  }
  Expr e = state_->term(lambda);
  std::lock_guard<std::mutex> lock(state_->mu);
  // Idempotent fill: a racing first access keeps whichever landed first.
  return state_->memo.emplace(lambda, std::move(e)).first->second;
}

namespace {

void require_same_poset(const Net& a, const Net& b) {
  if (a.poset() != b.poset()) throw MismatchError("nets live on different posets");
}

std::vector<Expr> summands(const Expr& e) {
  if (e->op == Op::Sum) return e->args;
  return {e};
}

}  // namespace

Expr subtract(const Expr& a, const Expr& b) {
  if (structurally_equal(a, b)) return zero();
  std::vector<Expr> left = summands(a);
  std::vector<Expr> right = summands(b);
  for (auto it = right.begin(); it != right.end();) {
    auto match = std::find_if(left.begin(), left.end(), [&](const Expr& l) { return structurally_equal(l, *it); });
    if (match != left.end()) {
      left.erase(match);
      it = right.erase(it);
    } else {
      ++it;
    }
  }
  std::vector<Expr> parts = std::move(left);
  for (auto& r : right) parts.push_back(neg(r));
  return sum(std::move(parts));
}

Net diagonal_embed(const Expr& psi, PosetPtr poset) {
  return Net(std::move(poset), [psi](const Index&) { return psi; }, "u(" + to_string(psi) + ")");
}

Net net_add(const Net& a, const Net& b) {
  require_same_poset(a, b);
  return Net(a.poset(), [a, b](const Index& l) { return sum({a.term(l), b.term(l)}); },
             "(" + a.label() + " + " + b.label() + ")");
}

Net net_sub(const Net& a, const Net& b) {
  require_same_poset(a, b);
  return Net(a.poset(), [a, b](const Index& l) { return subtract(a.term(l), b.term(l)); },
             "(" + a.label() + " - " + b.label() + ")");
}

Net net_mul(const Net& a, const Net& b) {
  require_same_poset(a, b);
  return Net(a.poset(), [a, b](const Index& l) { return mul(a.term(l), b.term(l)); },
             "(" + a.label() + " * " + b.label() + ")");
}

Net net_scale(const Net& a, double c) {
  return Net(a.poset(), [a, c](const Index& l) { return mul(constant(c), a.term(l)); },
             "(" + format_double(c) + " * " + a.label() + ")");
}

Net net_derive(const Net& a, const MultiIndex& p) {
  std::string lbl = "D";
  for (int v : p) lbl += std::to_string(v);
  return Net(a.poset(), [a, p](const Index& l) { return differentiate(a.term(l), p); }, lbl + " " + a.label());
}

std::string outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Verified:
      return "verified-at-scale";
    case Outcome::Refuted:
      return "refuted";
    case Outcome::Inconclusive:
      return "inconclusive";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Checker core

namespace {

enum class TermStatus : std::uint8_t { Certified, NumericZero, Violated, Unknown };

struct TermResult {
  TermStatus status = TermStatus::Unknown;
  MultiIndex p;
  double value = 0.0;
  std::optional<Box> delta;
  std::string reason;
};

std::vector<MultiIndex> orders_up_to(int dim, int max_order) {
  auto basis = MonomialBasis::get(dim, max_order);
  std::vector<MultiIndex> out;
  for (std::size_t i = 0; i < basis->size(); ++i) out.push_back(basis->alpha(i));
  return out;
}

/// Derivatives D^p w_mu for all |p| <= P, shared across samples.
class DerivativeCache {
 public:
  DerivativeCache(const Net& w, std::vector<MultiIndex> orders) : w_(w), orders_(std::move(orders)) {}

  std::shared_ptr<const std::vector<Expr>> get(const Index& mu) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = cache_.find(mu); it != cache_.end()) return it->second;
    }
    auto out = std::make_shared<std::vector<Expr>>();
    Differentiator d;
    const Expr base = w_.term(mu);
    for (const auto& p : orders_) out->push_back(d.derive(base, p));
    std::lock_guard<std::mutex> lock(mu_);
    return cache_.emplace(mu, std::move(out)).first->second;
  }

  const std::vector<MultiIndex>& orders() const { return orders_; }

 private:
  Net w_;
  std::vector<MultiIndex> orders_;
  std::mutex mu_;
  std::map<Index, std::shared_ptr<const std::vector<Expr>>> cache_;
};

/// Numeric scan of D^p w_mu(x); Violated on the first value above tol.
TermResult numeric_scan(DerivativeCache& cache, const Index& mu, const Point& x, double tol) {
  const auto derivs = cache.get(mu);
  for (std::size_t i = 0; i < derivs->size(); ++i) {
    const double v = evaluate((*derivs)[i], x);
    if (!(std::abs(v) <= tol)) {
      TermResult r;
      r.status = TermStatus::Violated;
      r.p = cache.orders()[i];
      r.value = v;
      r.reason = "nonzero derivative";
      return r;
    }
  }
  TermResult r;
  r.status = TermStatus::NumericZero;
  return r;
}

using TermCheck = std::function<TermResult(const Index& mu, const Point& x)>;

struct SampleResult {
  Outcome outcome = Outcome::Inconclusive;
  std::optional<Certificate> cert;
  std::optional<Witness> witness;
  std::size_t examined = 0;
};

SampleResult check_sample(const IndexPoset& poset, const std::vector<Index>& elems, bool exhaustive, const Point& x,
                          const TermCheck& check, const CheckOptions& opts) {
  SampleResult res;
  std::map<Index, TermResult> memo;
  auto status_of = [&](const Index& mu) -> const TermResult& {
    if (auto it = memo.find(mu); it != memo.end()) return it->second;
    ++res.examined;
    return memo.emplace(mu, check(mu, x)).first->second;
  };

  const std::size_t t = elems.size();
  bool all_violated = true;
  std::optional<Witness> first_witness;

  // Later elements of the generating sequence sit higher in the order, so
  // probe them first; a member is usually certified by the last one.
  for (std::size_t i = t; i-- > 0;) {
    const Index& lambda = elems[i];
    std::set<Index> succ;
    for (const auto& e : elems) {
      if (poset.leq(lambda, e)) succ.insert(e);
      succ.insert(poset.join(lambda, e));
    }
    bool ok = true;
    bool violated = false;
    bool numeric = false;
    Certificate cert{x, lambda, {}, false};
    for (const auto& mu : succ) {
      const TermResult& r = status_of(mu);
      switch (r.status) {
        case TermStatus::Certified:
          if (r.delta) cert.deltas.emplace_back(mu, *r.delta);
          break;
        case TermStatus::NumericZero:
          if (opts.certificate_only) ok = false;
          numeric = true;
          break;
        case TermStatus::Violated:
          ok = false;
          if (!violated && !first_witness) first_witness = Witness{x, mu, r.p, r.value, r.reason};
          violated = true;
          break;
        case TermStatus::Unknown:
          ok = false;
          break;
      }
      if (violated) break;
    }
    if (ok) {
      cert.numeric = numeric;
      res.outcome = Outcome::Verified;
      res.cert = std::move(cert);
      return res;
    }
    if (!violated) all_violated = false;
  }
  if (all_violated && (exhaustive || t >= 2)) {
    res.outcome = Outcome::Refuted;
    res.witness = first_witness;
  }
  return res;
}

MembershipVerdict run_checker(const Net& w, const std::vector<Point>& samples, const TermCheck& check,
                              const CheckOptions& opts, std::string ideal) {
  const IndexPoset& poset = *w.poset();
  const auto size = poset.size();
  const std::size_t t = size ? std::min(opts.tail, *size) : opts.tail;
  const bool exhaustive = size && *size <= opts.tail;
  std::vector<Index> elems;
  for (std::size_t k = 0; k < t; ++k) elems.push_back(poset.element(k));

  std::vector<SampleResult> results(samples.size());
  const auto n = static_cast<long long>(samples.size());
  if (opts.parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < n; ++i) {
      results[static_cast<std::size_t>(i)] =
          check_sample(poset, elems, exhaustive, samples[static_cast<std::size_t>(i)], check, opts);
    }
  } else {
    for (long long i = 0; i < n; ++i) {
      results[static_cast<std::size_t>(i)] =
          check_sample(poset, elems, exhaustive, samples[static_cast<std::size_t>(i)], check, opts);
    }
  }

  MembershipVerdict v;
  v.ideal = std::move(ideal);
  v.budgets.samples = samples.size();
  v.budgets.max_order = opts.max_order;
  v.budgets.tail = t;
  bool refuted = false;
  bool inconclusive = t == 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto& r = results[i];
    v.budgets.terms_examined += r.examined;
    switch (r.outcome) {
      case Outcome::Verified:
        v.certificates.push_back(std::move(*r.cert));
        break;
      case Outcome::Refuted:
        if (!refuted) v.witness = r.witness;
        refuted = true;
        break;
      case Outcome::Inconclusive:
        inconclusive = true;
        v.inconclusive_samples.push_back(samples[i]);
        break;
    }
  }
  v.outcome = refuted ? Outcome::Refuted : inconclusive ? Outcome::Inconclusive : Outcome::Verified;
  return v;
}

void require_outside(const SingularitySet& sigma, const std::vector<Point>& samples) {
  for (const auto& x : samples) {
    if (x.size() != sigma.ambient().dim()) throw PreconditionError("sample has wrong dimension");
    if (!sigma.ambient().contains(x)) throw PreconditionError("sample " + format_point(x) + " lies outside the domain");
    if (sigma.contains(x)) throw PreconditionError("sample " + format_point(x) + " lies in the singularity set");
  }
}

double distance_to_boxes(const std::vector<Box>& boxes, const Point& x) {
  double d = kInf;
  for (const auto& b : boxes) d = std::min(d, b.distance_inf(x));
  return d;
}

}  // namespace

MembershipVerdict check_J_membership(const Net& w, const SingularitySet& sigma, const std::vector<Point>& samples,
                                     const CheckOptions& opts) {
  if (opts.max_order < 0) throw PreconditionError("derivative cap must be nonnegative");
  require_outside(sigma, samples);
  auto cache = std::make_shared<DerivativeCache>(w, orders_up_to(static_cast<int>(sigma.ambient().dim()), opts.max_order));
  TermCheck check = [&w, cache, tol = opts.zero_tol](const Index& mu, const Point& x) {
    if (outside_support(w.term(mu), x)) return TermResult{TermStatus::Certified, {}, 0.0, std::nullopt, {}};
    return numeric_scan(*cache, mu, x, tol);
  };
  return run_checker(w, samples, check, opts, "J_single(" + class_name(sigma.set_class()) + ")");
}

MembershipVerdict check_I_membership(const Net& w, const SingularitySet& sigma, const LimsupFamily& rep,
                                     const std::vector<Point>& samples, const CheckOptions& opts) {
  require_outside(sigma, samples);
  if (rep.poset != w.poset()) throw MismatchError("representation and net use different posets");

  // Spot-check that rep looks like a representation of sigma.
  const std::size_t spot_budget = std::max<std::size_t>(opts.tail, 16);
  const auto& prims = sigma.primitives();
  for (std::size_t i = 0; i < std::min<std::size_t>(4, prims.size()); ++i) {
    if (!prims[i].is_point()) continue;
    const Point p = prims[i].as_point();
    if (limsup_contains(rep, p, spot_budget).outcome == LimsupOutcome::Out) {
      throw PreconditionError("representation misses point " + format_point(p) + " of the singularity set");
    }
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(4, samples.size()); ++i) {
    if (limsup_contains(rep, samples[i], spot_budget).outcome == LimsupOutcome::In) {
      throw PreconditionError("representation contains sample " + format_point(samples[i]) + " outside the set");
    }
  }

  auto cache = std::make_shared<DerivativeCache>(w, orders_up_to(static_cast<int>(sigma.ambient().dim()), opts.max_order));
  const DomainBox domain = sigma.ambient();
  TermCheck check = [&w, &rep, cache, domain, tol = opts.zero_tol](const Index& mu, const Point& x) {
    std::vector<Box> sig;
    for (const auto& p : rep.sigma(mu)) sig.push_back(p.box);
    const double r_sigma = distance_to_boxes(sig, x);
    if (r_sigma <= 0.0) {
      TermResult r;
      r.status = TermStatus::Violated;
      r.reason = "sample lies in Sigma_mu";
      return r;
    }
    const Expr term = w.term(mu);
    const auto& supp = support_boxes(term);
    const double r_w = supp ? distance_to_boxes(*supp, x) : 0.0;
    const double r = std::min({r_sigma, r_w, domain.boundary_distance(x)});
    if (r > 0.0) {
      TermResult res;
      res.status = TermStatus::Certified;
      res.delta = Box::around(x, r);
      return res;
    }
    TermResult res = numeric_scan(*cache, mu, x, tol);
    if (res.status == TermStatus::NumericZero) res.status = TermStatus::Unknown;
    return res;
  };
  return run_checker(w, samples, check, opts, "I_single(" + class_name(sigma.set_class()) + ")");
}

bool replay_witness(const Net& w, const Witness& wit, double zero_tol) {
  if (wit.p.empty()) return wit.reason == "sample lies in Sigma_mu";
  const double v = evaluate(differentiate(w.term(wit.mu), wit.p), wit.x);
  return !(std::abs(v) <= zero_tol);
}

// ---------------------------------------------------------------------------
// Ideal tags

std::string IdealSpec::label() const {
  return std::string(kind == IdealKind::J ? "J" : "I") + (family ? "_family(" : "_single(") + class_name(set_class) + ")";
}

IdealSpec single_ideal(IdealKind kind, const SingularitySet& sigma, PosetPtr poset, std::optional<LimsupFamily> rep) {
  if (kind == IdealKind::I && !rep) throw PreconditionError("I ideals need a limsup representation");
  IdealSpec s;
  s.kind = kind;
  s.family = false;
  s.set_class = sigma.set_class();
  s.members.push_back({sigma, std::move(rep)});
  s.poset = std::move(poset);
  return s;
}

IdealSpec family_ideal(IdealKind kind, SetClass cls, std::vector<IdealMember> members, PosetPtr poset) {
  if (members.empty()) throw PreconditionError("a family ideal needs at least one member set");
  for (const auto& m : members) {
    if (m.sigma.set_class() > cls) throw PreconditionError("member set class exceeds the family class");
    if (kind == IdealKind::I && !m.rep) throw PreconditionError("I ideals need a limsup representation per member");
  }
  IdealSpec s;
  s.kind = kind;
  s.family = true;
  s.set_class = cls;
  s.members = std::move(members);
  s.poset = std::move(poset);
  return s;
}

MembershipVerdict check_membership(const Net& w, const IdealSpec& ideal, const std::vector<Point>& samples,
                                   const CheckOptions& opts) {
  if (ideal.poset != w.poset()) throw MismatchError("tag poset differs from the net poset");
  std::optional<MembershipVerdict> first_refuted;
  std::optional<MembershipVerdict> inconclusive;
  for (const auto& m : ideal.members) {
    MembershipVerdict v = ideal.kind == IdealKind::J ? check_J_membership(w, m.sigma, samples, opts)
                                                     : check_I_membership(w, m.sigma, *m.rep, samples, opts);
    v.ideal = ideal.label();
    if (v.outcome == Outcome::Verified) return v;
    if (v.outcome == Outcome::Refuted && !first_refuted) first_refuted = std::move(v);
    else if (v.outcome == Outcome::Inconclusive && !inconclusive) inconclusive = std::move(v);
  }
  if (inconclusive) return *inconclusive;
  return *first_refuted;
}

GenFunction make_gen(Net net, IdealSpec tag) {
  if (net.poset() != tag.poset) throw MismatchError("tag poset differs from the net poset");
  return GenFunction{std::move(net), std::move(tag)};
}

std::optional<std::string> retag_obstruction(const IdealSpec& from, const IdealSpec& to) {
  if (from.poset != to.poset) return "posets differ";
  if (from.kind == IdealKind::J && to.kind == IdealKind::I) return "a J ideal is not contained in an I ideal";
  if (from.family && !to.family) return "a family ideal is not contained in a single-set ideal";
  if (to.set_class < from.set_class) return "target class " + class_name(to.set_class) + " is smaller than " +
                                            class_name(from.set_class);
  for (const auto& m : from.members) {
    const bool found = std::any_of(to.members.begin(), to.members.end(),
                                   [&](const IdealMember& t) { return same_set(m.sigma, t.sigma); });
    if (!found) return "a source singularity set is missing from the target";
  }
  return std::nullopt;
}

GenFunction retag(const GenFunction& u, const IdealSpec& target) {
  if (auto why = retag_obstruction(u.tag, target)) {
    throw PreconditionError("illegal retag " + u.tag.label() + " -> " + target.label() + ": " + *why);
  }
  return GenFunction{u.net, target};
}

GenFunction derive(const GenFunction& u, const MultiIndex& p) { return GenFunction{net_derive(u.net, p), u.tag}; }

MembershipVerdict equal_modulo_ideal(const GenFunction& u, const GenFunction& v, const std::vector<Point>& samples,
                                     const CheckOptions& opts) {
  if (u.net.poset() != v.net.poset()) throw MismatchError("values live on different posets");
  if (u.tag.label() != v.tag.label() || u.tag.members.size() != v.tag.members.size()) {
    throw MismatchError("tags differ: " + u.tag.label() + " vs " + v.tag.label());
  }
  for (std::size_t i = 0; i < u.tag.members.size(); ++i) {
    if (!same_set(u.tag.members[i].sigma, v.tag.members[i].sigma)) throw MismatchError("tags use different sets");
  }
  return check_membership(net_sub(u.net, v.net), u.tag, samples, opts);
}

// ---------------------------------------------------------------------------
// Bump nets around enumerated points

double RadiusSchedule::at(std::int64_t level) const {
  if (level < 0) throw PreconditionError("radius level must be nonnegative");
  if (kind == Kind::Geometric) return r0 * std::pow(ratio, static_cast<double>(level));
  const auto n = static_cast<std::int64_t>(radii.size());
  if (level < n) return radii[static_cast<std::size_t>(level)];
  return radii.back() * std::pow(0.5, static_cast<double>(level - n + 1));
}

void RadiusSchedule::validate() const {
  if (kind == Kind::Geometric) {
    if (!(r0 > 0.0) || !(ratio > 0.0 && ratio < 1.0)) {
      throw PreconditionError("radius schedule must be strictly decreasing: need r0 > 0 and ratio in (0, 1)");
    }
    return;
  }
  if (radii.empty()) throw PreconditionError("explicit radius schedule is empty");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0)) throw PreconditionError("radii must be positive");
    if (i > 0 && !(radii[i] < radii[i - 1])) throw PreconditionError("radius schedule must be strictly decreasing");
  }
}

ExampleOne example_one_net(const SingularitySet& sigma, const RadiusSchedule& schedule) {
  schedule.validate();
  ExampleOne ex;
  ex.points = sigma.points();
  if (ex.points.empty()) throw PreconditionError("example-one net needs a nonempty point set");
  ex.poset = std::make_shared<ExampleOnePoset>(ex.points.size());
  auto pts = std::make_shared<const std::vector<Point>>(ex.points);
  const DomainBox domain = sigma.ambient();
  std::vector<double> clip;
  for (const auto& p : ex.points) {
    const double bd = domain.boundary_distance(p);
    if (!(bd > 0.0)) throw PreconditionError("example-one points must lie inside the domain");
    clip.push_back(bd / 2.0);
  }
  auto caps = std::make_shared<const std::vector<double>>(std::move(clip));

  ex.net = Net(ex.poset,
               [pts, caps, schedule](const Index& l) {
                 const double r = schedule.at(ExampleOnePoset::level(l));
                 std::vector<Expr> parts;
                 for (std::size_t k = 1; k < l.key.size(); ++k) {
                   const auto i = static_cast<std::size_t>(l.key[k]);
                   parts.push_back(bump((*pts)[i], std::min(r, (*caps)[i])));
                 }
                 return sum(std::move(parts));
               },
               "w*");
  ex.representation = LimsupFamily{ex.poset,
                                   [pts](const Index& l) {
                                     std::vector<SingPrimitive> out;
                                     for (std::size_t k = 1; k < l.key.size(); ++k) {
                                       out.push_back(SingPrimitive::point((*pts)[static_cast<std::size_t>(l.key[k])]));
                                     }
                                     return out;
                                   },
                                   "Sigma_(A,k)=A"};
  return ex;
}

LimsupFamily prefix_representation(const ExampleOne& ex) {
  auto pts = std::make_shared<const std::vector<Point>>(ex.points);
  return LimsupFamily{ex.poset,
                      [pts](const Index& l) {
                        std::vector<SingPrimitive> out;
                        const auto top = static_cast<std::size_t>(l.key.back());
                        for (std::size_t i = 0; i <= top; ++i) out.push_back(SingPrimitive::point((*pts)[i]));
                        return out;
                      },
                      "Sigma_(A,k)=prefix(max A)"};
}

LimsupFamily augmented_representation(const ExampleOne& ex, const std::vector<Point>& extra) {
  auto pts = std::make_shared<const std::vector<Point>>(ex.points);
  auto add = std::make_shared<const std::vector<Point>>(extra);
  return LimsupFamily{ex.poset,
                      [pts, add](const Index& l) {
                        std::vector<SingPrimitive> out;
                        for (std::size_t k = 1; k < l.key.size(); ++k) {
                          out.push_back(SingPrimitive::point((*pts)[static_cast<std::size_t>(l.key[k])]));
                        }
                        for (const auto& p : *add) out.push_back(SingPrimitive::point(p));
                        return out;
                      },
                      "Sigma_(A,k)=A+extra"};
}

Lemma2Report lemma2_monotonicity_check(const Net& w, const SingularitySet& sigma, const LimsupFamily& rep,
                                       const SingularitySet& sigma_big, const LimsupFamily& rep_big,
                                       const std::vector<Point>& samples, const CheckOptions& opts) {
  for (const auto& p : sigma.primitives()) {
    if (p.is_point() && !sigma_big.contains(p.as_point())) {
      throw PreconditionError("Sigma is not contained in Sigma'");
    }
  }
  Lemma2Report r;
  r.small = check_I_membership(w, sigma, rep, samples, opts);
  r.large = check_I_membership(w, sigma_big, rep_big, samples, opts);
  r.holds = !(r.small.outcome == Outcome::Verified && r.large.outcome == Outcome::Refuted);
  return r;
}

}  // namespace foamck
