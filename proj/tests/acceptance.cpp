// One line per acceptance criterion: PASS or FAIL, a short detail and the
// wall time. Exit status is nonzero when any criterion fails.
#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "foamck/error.hpp"
#include "foamck/gck.hpp"
#include "foamck/nets.hpp"
#include "foamck/report.hpp"
#include "oracles.hpp"

using namespace foamck;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

DomainBox unit1() { return DomainBox({Interval{0.0, 1.0}}); }

SingularitySet three_points() {
  SingularitySet s(unit1(), SetClass::NowhereDense);
  for (double x : {0.25, 0.5, 0.75}) s.add(SingPrimitive::point(std::vector<double>{x}));
  return s;
}

SingularitySet dyadics() {
  SingularitySet s(unit1(), SetClass::BaireI);
  s.set_enumerator(adic_points(unit1(), 2), 256);
  return s;
}

SingularitySet rationals() {
  SingularitySet s(unit1(), SetClass::DenseComplement);
  s.set_enumerator(rational_points(unit1(), 64));
  return s;
}

std::vector<Point> samples_off(const SingularitySet& s, std::size_t n, std::uint64_t seed) {
  oracle::Gen g(seed);
  std::vector<Point> out;
  while (out.size() < n) {
    Point x{g.uniform(0.0, 1.0)};
    if (x[0] > 0.0 && !s.contains(x)) out.push_back(x);
  }
  return out;
}

const std::vector<std::string>& basket() {
  static const std::vector<std::string> b = {
      "1",
      "t",
      "sin(t)",
      "cos(t)",
      "exp(t)",
      "t^2 - 0.3",
      "sin(3 * t) + 2",
      "exp(-t) * cos(5 * t)",
      "t^3",
      "1 / (1 + t)",
      "sin(t)^2 + 0.1",
      "cos(10 * t)",
      "t * exp(t)",
      "(t - 0.5)^2",
      "2 - t",
      "exp(sin(t))",
      "bump((0.5), 0.4)",
      "bump((0.3), 0.2) + bump((0.7), 0.2)",
      "rise(0, 0.2, 0.8) + 0.01",
      "0.001",
  };
  return b;
}

/// A net checked against one ideal on fixed samples.
struct Instance {
  std::string name;
  Net w;
  SingularitySet sigma;
  LimsupFamily rep;
  std::vector<Point> samples;
  CheckOptions opts;
};

std::vector<Instance>& verified_instances() {
  static std::vector<Instance> v;
  return v;
}

// ---------------------------------------------------------------------------

Result off_diagonality() {
  const std::vector<std::pair<std::string, SingularitySet>> sets = {
      {"three points", three_points()}, {"dyadics", dyadics()}, {"rationals", rationals()}};
  int refuted = 0, checks = 0, false_verified = 0, bad_witness = 0;
  for (const auto& [name, sigma] : sets) {
    const auto samples = samples_off(sigma, 20, 17);
    const LimsupFamily rep = constant_family(sigma);
    for (const auto& text : basket()) {
      const Net w = diagonal_embed(parse_expr(text), rep.poset);
      for (const auto& v : {check_J_membership(w, sigma, samples), check_I_membership(w, sigma, rep, samples)}) {
        ++checks;
        if (v.outcome == Outcome::Verified) ++false_verified;
        if (v.outcome != Outcome::Refuted) continue;
        if (!v.witness || !replay_witness(w, *v.witness)) {
          ++bad_witness;
          continue;
        }
        ++refuted;
      }
    }
  }
  return {refuted == checks && false_verified == 0,
          std::to_string(refuted) + "/" + std::to_string(checks) + " refuted with replayable witness, " +
              std::to_string(false_verified) + " false verifications"};
}

Result example_one_suite() {
  const std::vector<std::pair<std::string, SingularitySet>> sets = {
      {"three points", three_points()}, {"dyadics", dyadics()}, {"rationals", rationals()}};
  std::string detail;
  bool ok = true;
  for (const auto& [name, sigma] : sets) {
    const ExampleOne ex = example_one_net(sigma, RadiusSchedule{});
    const auto samples = samples_off(sigma, 100, 23);
    CheckOptions opts;
    opts.certificate_only = true;
    const auto v = check_I_membership(ex.net, sigma, ex.representation, samples, opts);
    std::size_t numeric = 0;
    for (const auto& c : v.certificates) numeric += c.numeric ? 1 : 0;
    const bool pass = v.outcome == Outcome::Verified && v.certificates.size() == 100 && numeric == 0;
    ok = ok && pass;
    detail += name + ": " + outcome_name(v.outcome) + "; ";
    if (pass) verified_instances().push_back({"example-one " + name, ex.net, sigma, ex.representation, samples, opts});
  }
  return {ok, detail + "certificate-only, 100 samples each"};
}

Result representation_suite() {
  oracle::Gen g(31);
  const SingularitySet dy = dyadics();
  int discrepancies = 0, verified = 0;
  for (int i = 0; i < 50; ++i) {
    SingularitySet sigma(unit1(), SetClass::NowhereDense);
    const int n = g.integer(1, 12);
    for (int k = 0; k < n; ++k) {
      const double x = g.coin() ? dy.primitives()[static_cast<std::size_t>(g.integer(0, 126))].as_point()[0]
                                : g.uniform(0.05, 0.95);
      if (!sigma.contains(std::vector<double>{x})) sigma.add(SingPrimitive::point(std::vector<double>{x}));
    }
    const ExampleOne ex = example_one_net(sigma, RadiusSchedule{});
    Net w;
    switch (i % 5) {
      case 0:
        w = ex.net;
        break;
      case 1:
        w = net_mul(ex.net, diagonal_embed(parse_expr(g.analytic(2, true)), ex.poset));
        break;
      case 2:
        w = diagonal_embed(parse_expr(basket()[static_cast<std::size_t>(g.integer(0, 19))]), ex.poset);
        break;
      case 3:
        w = net_add(ex.net, net_scale(ex.net, g.uniform(-2.0, 2.0)));
        break;
      default:
        w = net_derive(ex.net, MultiIndex{1});
        break;
    }
    const auto samples = samples_off(sigma, 20, static_cast<std::uint64_t>(100 + i));
    CheckOptions opts;
    const auto a = check_I_membership(w, sigma, ex.representation, samples, opts);
    const auto b = check_I_membership(w, sigma, prefix_representation(ex), samples, opts);
    if (a.outcome != b.outcome) ++discrepancies;
    if (a.outcome == Outcome::Verified) {
      ++verified;
      verified_instances().push_back({"representation #" + std::to_string(i), w, sigma, ex.representation, samples, opts});
    }
  }
  return {discrepancies == 0, "50 instances, " + std::to_string(discrepancies) + " discrepancies, " +
                                  std::to_string(verified) + " verified under both representations"};
}

Result monotonicity_suite() {
  oracle::Gen g(47);
  const SingularitySet dy = dyadics();
  int violations = 0, verified_both = 0;
  for (int i = 0; i < 50; ++i) {
    SingularitySet sigma(unit1(), SetClass::BaireI);
    std::vector<Point> extra;
    const int n = g.integer(1, 10);
    const int m = g.integer(1, 5);
    for (int k = 0; k < n + m; ++k) {
      const Point x = dy.primitives()[static_cast<std::size_t>(g.integer(0, 62))].as_point();
      if (sigma.contains(x) || std::find(extra.begin(), extra.end(), x) != extra.end()) continue;
      if (k < n) sigma.add(SingPrimitive::point(x));
      else extra.push_back(x);
    }
    if (sigma.primitives().empty()) sigma.add(SingPrimitive::point(std::vector<double>{0.5}));
    SingularitySet big = sigma;
    for (const auto& x : extra) big.add(SingPrimitive::point(x));

    const ExampleOne ex = example_one_net(sigma, RadiusSchedule{});
    const Net w = i % 3 == 2 ? diagonal_embed(parse_expr(g.analytic(2, true)), ex.poset)
                             : (i % 3 == 1 ? net_mul(ex.net, diagonal_embed(parse_expr("cos(t)"), ex.poset)) : ex.net);
    const auto samples = samples_off(big, 20, static_cast<std::uint64_t>(500 + i));
    const auto r = lemma2_monotonicity_check(w, sigma, ex.representation, big, augmented_representation(ex, extra),
                                             samples);
    if (!r.holds) ++violations;
    if (r.small.outcome == Outcome::Verified && r.large.outcome == Outcome::Verified) {
      ++verified_both;
      verified_instances().push_back({"monotonicity #" + std::to_string(i), w, sigma, ex.representation, samples, {}});
    }
  }
  return {violations == 0, "50 instances, " + std::to_string(violations) + " violations, " +
                               std::to_string(verified_both) + " verified for both sets"};
}

Result derivation_closure() {
  int checked = 0, failed = 0;
  for (const auto& inst : verified_instances()) {
    for (int k = 1; k <= 2; ++k) {
      CheckOptions opts = inst.opts;
      opts.max_order = std::max(0, opts.max_order - k);
      const Net d = net_derive(inst.w, MultiIndex{k});
      const auto v = check_I_membership(d, inst.sigma, inst.rep, inst.samples, opts);
      ++checked;
      if (v.outcome != Outcome::Verified) ++failed;
    }
  }
  return {checked > 0 && failed == 0, std::to_string(checked) + " derived nets from " +
                                          std::to_string(verified_instances().size()) + " verified instances, " +
                                          std::to_string(failed) + " lost membership"};
}

Result homomorphism_ladder() {
  const SingularitySet sigma = three_points();
  const ExampleOne ex = example_one_net(sigma, RadiusSchedule{});
  const IdealMember m{sigma, ex.representation};
  const IdealMember md{dyadics(), std::nullopt};
  const IdealSpec a_single = single_ideal(IdealKind::I, sigma, ex.poset, ex.representation);
  const IdealSpec b_single = single_ideal(IdealKind::J, sigma, ex.poset);
  const IdealSpec a_family = family_ideal(IdealKind::I, SetClass::BaireI, {m}, ex.poset);
  const IdealSpec b_family = family_ideal(IdealKind::J, SetClass::BaireI, {m, md}, ex.poset);

  std::vector<Net> nets;
  for (int i = 0; i < 8; ++i) nets.push_back(diagonal_embed(parse_expr(basket()[static_cast<std::size_t>(2 * i)]), ex.poset));
  nets.push_back(ex.net);
  nets.push_back(net_mul(ex.net, diagonal_embed(parse_expr("exp(t)"), ex.poset)));

  const auto samples = samples_off(sigma, 10, 61);
  int mismatches = 0, comparisons = 0;
  for (const Net& w : nets) {
    const GenFunction u = make_gen(w, a_single);
    const std::vector<GenFunction> paths = {retag(retag(u, a_family), b_family), retag(retag(u, b_single), b_family),
                                            retag(u, b_family)};
    for (const auto& p : paths) {
      if (p.tag.label() != paths.back().tag.label()) ++mismatches;
      for (std::size_t k = 0; k < 16; ++k) {
        const Index i = ex.poset->element(k);
        ++comparisons;
        if (!structurally_equal(p.net.term(i), paths.back().net.term(i))) ++mismatches;
      }
      if (equal_modulo_ideal(p, paths.back(), samples).outcome != Outcome::Verified) ++mismatches;
    }
    for (int d = 1; d <= 2; ++d) {
      const MultiIndex pd{d};
      const GenFunction rd = derive(retag(u, b_family), pd);
      const GenFunction dr = retag(derive(u, pd), b_family);
      for (std::size_t k = 0; k < 16; ++k) {
        const Index i = ex.poset->element(k);
        ++comparisons;
        if (!structurally_equal(rd.net.term(i), dr.net.term(i))) ++mismatches;
      }
    }
  }
  bool illegal_rejected = false;
  try {
    retag(make_gen(nets[0], b_family), a_single);
  } catch (const PreconditionError&) {
    illegal_rejected = true;
  }
  return {mismatches == 0 && illegal_rejected, "10 nets, 3 paths each, " + std::to_string(comparisons) +
                                                   " structural comparisons, " + std::to_string(mismatches) +
                                                   " mismatches, illegal direction rejected"};
}

Result local_recursion() {
  int bad = 0;
  {
    const ParsedPde p = parse_pde("dim 1\ndomain -1 1\norder 1\nt0 0\nG J[0,()]^2\ng0 1\n");
    const auto s = ck_solve_local(p.pde, p.data, {0.0}, 10);
    for (int k = 0; k <= 10; ++k) bad += s[0].at(MultiIndex{k}) == 1.0 ? 0 : 1;
  }
  double cos_err = 0.0;
  {
    const ParsedPde p = parse_pde("dim 1\ndomain -1 1\norder 2\nt0 0\nG -J[0,()]\ng0 1\ng1 0\n");
    const auto s = ck_solve_local(p.pde, p.data, {0.0}, 14);
    const auto table = oracle::cos_table(14);
    for (int k = 0; k <= 14; ++k) cos_err = std::max(cos_err, std::abs(s[0].at(MultiIndex{k}) - table[static_cast<std::size_t>(k)]));
    bad += cos_err <= 1e-15 ? 0 : 1;
  }
  {
    // Polynomial data: g(y + t) has exact binomial coefficients.
    const ParsedPde p = parse_pde("dim 2\ndomain 0 1 0 1\norder 1\nt0 0\nG J[0,(1)]\ng0 y1^5 - 2 * y1^3 + y1\n");
    const auto s = ck_solve_local(p.pde, p.data, {0.0, 0.0}, 8);
    auto binom = [](int n, int k) { return oracle::factorial(n) / (oracle::factorial(k) * oracle::factorial(n - k)); };
    const double c[6] = {0, 1, 0, -2, 0, 1};
    for (std::size_t i = 0; i < s[0].size(); ++i) {
      const MultiIndex& a = s[0].basis().alpha(i);
      const int n = a[0] + a[1];
      const double want = n <= 5 ? c[n] * binom(n, a[0]) : 0.0;
      bad += s[0].coef(i) == want ? 0 : 1;
    }
    const ParsedPde q = parse_pde("dim 2\ndomain 0 1 0 7\norder 1\nt0 0\nG J[0,(1)]\ng0 sin(y1)\n");
    const auto r = ck_solve_local(q.pde, q.data, {0.0, 0.9}, 8);
    for (std::size_t i = 0; i < r[0].size(); ++i) {
      const MultiIndex& a = r[0].basis().alpha(i);
      const double want = oracle::transport_sin_coef(a[0], a[1], 0.0, 0.9);
      bad += std::abs(r[0].coef(i) - want) <= 1e-15 ? 0 : 1;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "Riccati k=0..10 exact, cos max error %.1e, transport N=8; %d mismatches", cos_err, bad);
  return {bad == 0, buf};
}

GlobalSolution solve_spec(const std::string& path, int workers) {
  const ParsedPde p = load_pde(path);
  GckConfig cfg;
  cfg.apply(p.config);
  cfg.parallel = workers != 1;
  omp_set_num_threads(workers);
  return construct_global_solution(p.pde, p.data, cfg);
}

std::string frozen_report(const GlobalSolution& sol) {
  json j;
  j["created"] = timestamp(true);
  j["solution"] = solution_json(sol);
  j["residual"] = residual_json(verify_residual(sol, sample_grid(sol.pde.domain, 50), 1e-6, sol.config.parallel));
  return j.dump(2);
}

Result transport_run() {
  const GlobalSolution sol = solve_spec(FOAMCK_SPECS "/transport.pde", omp_get_num_procs());
  const auto grid = sample_grid(sol.pde.domain, 50);
  const auto r = verify_residual(sol, grid, 1e-6);
  bool exact = !sol.stabilization.empty();
  for (const auto& row : sol.stabilization) exact = exact && row.exact;
  const auto o = oracle_error(sol, grid);
  char buf[200];
  std::snprintf(buf, sizeof buf, "sigma %s, N=%d, sup residual %.2e on 50x50, oracle error %.2e, stabilization %s",
                sol.sigma.empty() ? "empty" : "nonempty", sol.config.order, r.max_residual, o.max_error,
                exact ? "exact" : "NOT exact");
  return {sol.sigma.empty() && sol.config.order == 12 && r.max_residual <= 1e-6 && r.ok && exact, buf};
}

Result riccati_run() {
  const GlobalSolution sol = solve_spec(FOAMCK_SPECS "/riccati.pde", omp_get_num_procs());
  const double h = sol.config.h;
  std::vector<oracle::Box2> boxes;
  for (const auto& p : sol.sigma.primitives()) {
    boxes.push_back({p.box.axis(0).lo, p.box.axis(0).hi, p.box.axis(1).lo, p.box.axis(1).hi});
  }
  const double two_pi = 2 * 3.141592653589793;
  const auto curve = [](double y) { return 2.0 + std::sin(y); };
  const double hd = boxes.empty() ? kInf : oracle::hausdorff_boxes_curve(boxes, curve, 0.0, two_pi, 4000);
  const double mb = measure_bound(sol.sigma).bound;

  // Oracle error on grid points covered by the exhaustion and at distance
  // >= 0.5 from the curve.
  std::vector<Point> far;
  for (const auto& x : sample_grid(sol.pde.domain, 80)) {
    double d = kInf;
    for (int i = 0; i <= 2000; ++i) {
      const double y = two_pi * i / 2000.0;
      d = std::min(d, std::max(std::abs(curve(y) - x[0]), std::abs(y - x[1])));
    }
    if (d >= 0.5 && sol.level_of(x) >= 0) far.push_back(x);
  }
  double err = 0.0;
  for (const auto& x : far) {
    err = std::max(err, std::abs(sol.evaluate(0, sol.top_level, x) - oracle::riccati_u(x[0], x[1])));
  }
  char buf[240];
  std::snprintf(buf, sizeof buf,
                "h=%.3g, N=%d, %zu slabs, Hausdorff %.4f (<= %.3f), measure %.2e (<= %.2g), error %.2e on %zu points "
                "at distance >= 0.5",
                h, sol.config.order, boxes.size(), hd, 2 * h, mb, sol.config.eps, err, far.size());
  return {h == 0.02 && sol.config.order == 14 && hd <= 2 * h && mb <= 0.05 && far.size() > 1000 && err <= 1e-4, buf};
}

Result ideal_agreement() {
  const SingularitySet sigma = three_points();
  const LimsupFamily rep = constant_family(sigma);
  const PosetPtr n = rep.poset;
  std::vector<Net> nets;
  for (int i = 0; i < 8; ++i) nets.push_back(diagonal_embed(parse_expr(basket()[static_cast<std::size_t>(i)]), n));
  nets.push_back(diagonal_embed(zero(), n));
  for (double c : {0.25, 0.5, 0.75}) {
    nets.emplace_back(n, [c](const Index& k) { return bump({c}, 0.2 * std::pow(0.5, static_cast<double>(k.key[0]))); });
  }
  nets.emplace_back(n, [](const Index& k) { return k.key[0] < 5 ? parse_expr("sin(t)") : zero(); });
  nets.emplace_back(n, [](const Index& k) { return k.key[0] < 12 ? bump({0.4}, 0.1) : zero(); });
  nets.emplace_back(n, [](const Index& k) { return std::pow(0.5, static_cast<double>(k.key[0])) * parse_expr("cos(t)"); });
  nets.emplace_back(n, [](const Index& k) { return k.key[0] % 2 ? zero() : parse_expr("t"); });
  nets.emplace_back(n, [](const Index& k) {
    return bump({0.25}, 0.1 * std::pow(0.5, static_cast<double>(k.key[0]))) +
           bump({0.75}, 0.1 * std::pow(0.5, static_cast<double>(k.key[0])));
  });
  nets.emplace_back(n, [](const Index& k) { return constant(static_cast<double>(k.key[0])); });
  nets.push_back(net_derive(nets[10], MultiIndex{1}));
  nets.push_back(net_mul(nets[9], diagonal_embed(parse_expr("exp(t)"), n)));

  const auto samples = samples_off(sigma, 30, 71);
  int disagree = 0, verified = 0, refuted = 0;
  for (const auto& w : nets) {
    const auto j = check_J_membership(w, sigma, samples);
    const auto i = check_I_membership(w, sigma, rep, samples);
    if (j.outcome != i.outcome) ++disagree;
    verified += j.outcome == Outcome::Verified;
    refuted += j.outcome == Outcome::Refuted;
  }
  return {nets.size() == 20 && disagree == 0,
          std::to_string(nets.size()) + " nets over N: " + std::to_string(verified) + " verified, " +
              std::to_string(refuted) + " refuted, " + std::to_string(disagree) + " disagreements"};
}

Result determinism() {
  bool same = true;
  std::string detail;
  for (const char* name : {"transport", "riccati"}) {
    const std::string path = std::string(FOAMCK_SPECS) + "/" + name + ".pde";
    const std::string a = frozen_report(solve_spec(path, 1));
    const std::string b = frozen_report(solve_spec(path, 4));
    const std::string c = frozen_report(solve_spec(path, 3));
    const bool s = a == b && b == c;
    same = same && s;
    detail += std::string(name) + (s ? " identical" : " DIFFERS") + " (" + std::to_string(a.size()) + " bytes); ";
  }
  omp_set_num_threads(omp_get_num_procs());
  return {same, detail + "workers 1, 4, 3"};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Result()> run;
  };
  const std::vector<Criterion> all = {
      {1, "off-diagonality", 10, off_diagonality},
      {2, "example-one membership", 30, example_one_suite},
      {3, "representation independence", 0, representation_suite},
      {4, "monotonicity in the singular set", 0, monotonicity_suite},
      {5, "derivation closure", 0, derivation_closure},
      {6, "homomorphism ladder", 0, homomorphism_ladder},
      {7, "local recursion coefficients", 0, local_recursion},
      {8, "global transport run", 60, transport_run},
      {9, "global Riccati run", 300, riccati_run},
      {10, "J and I checkers agree over N", 0, ideal_agreement},
      {11, "determinism across worker counts", 0, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = c.budget_s <= 0 || secs <= c.budget_s;
    const bool pass = r.pass && in_time;
    if (!pass) ++failed;
    std::printf("%s criterion %2d  %-34s %s [%.2fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, r.detail.c_str(), secs,
                c.budget_s > 0 ? (" of " + std::to_string(static_cast<int>(c.budget_s)) + "s").c_str() : "");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed == 0 ? 0 : 1;
}
