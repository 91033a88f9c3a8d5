#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "foamck/error.hpp"
#include "foamck/gck.hpp"
#include "foamck/report.hpp"
#include "oracles.hpp"

using namespace foamck;

namespace {

const char* kTransport =
    "dim 2\ndomain 0 1 0 2*pi\norder 1\nt0 0\nG J[0,(1)]\ng0 sin(y1)\noracle sin(y1 + t)\n"
    "config order 12\nconfig tile 0.5\nconfig h 0.05\nconfig eps 0.05\n";

GlobalSolution build(const std::string& text, bool parallel = true) {
  const ParsedPde p = parse_pde(text);
  GckConfig cfg;
  cfg.apply(p.config);
  cfg.parallel = parallel;
  return construct_global_solution(p.pde, p.data, cfg);
}

const GlobalSolution& transport() {
  static const GlobalSolution sol = build(kTransport);
  return sol;
}

}  // namespace

TEST_CASE("spec parsing") {
  const ParsedPde t = parse_pde(kTransport);
  CHECK(t.pde.dim == 2);
  CHECK(t.pde.order == 1);
  CHECK(t.pde.domain.axis(1).hi == doctest::Approx(2 * 3.141592653589793));
  CHECK(t.config.at("order") == "12");
  CHECK(t.pde.oracle.size() == 1);

  CHECK_NOTHROW(parse_pde("dim 2\ndomain 0 1 0 1\norder 1\nt0 0\nG J[0,(0)]^2\ng0 1\n"));
  try {
    parse_pde("dim 2\ndomain 0 1 0 1\norder 1\nt0 0\nG J[1,(0)]\ng0 1\n");
    FAIL("expected a rejection");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("p < m") != std::string::npos);
  }
  try {
    parse_pde("dim 2\ndomain 0 1 0 1\norder 1\nG J[0,(1)] +* 2\ng0 y1\n");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_pde("dim 2\ndomain 0 1\norder 1\nG 0\ng0 0\n"), ParseError);
  CHECK_THROWS_AS(parse_pde("dim 2\ndomain 0 1 0 1\norder 2\nG 0\ng0 0\n"), Error);
}

TEST_CASE("config validation") {
  const DomainBox d({Interval{0.0, 1.0}, Interval{0.0, 1.0}});
  GckConfig c;
  CHECK_NOTHROW(c.validate(d));
  c.sigma = 1.0;
  CHECK_THROWS_AS(c.validate(d), PreconditionError);
  c = GckConfig{};
  c.h = 2.0;
  CHECK_THROWS_AS(c.validate(d), PreconditionError);
  CHECK_THROWS(c.apply({{"nonsense", "1"}}));
}

TEST_CASE("zero problem gives the zero solution") {
  const auto sol = build("dim 2\ndomain 0 1 0 1\norder 1\nt0 0\nG 0\ng0 0\nconfig order 6\n");
  CHECK(sol.sigma.empty());
  CHECK(sol.events.empty());
  for (const auto& row : sol.stabilization) {
    CHECK(row.index == 0);
    CHECK(row.exact);
  }
  const auto grid = sample_grid(sol.pde.domain, 10);
  const auto r = verify_residual(sol, grid, 1e-12);
  CHECK(r.max_residual == 0.0);
  CHECK(r.ok);
  for (const auto& x : grid) CHECK(sol.evaluate(0, sol.top_level, x) == 0.0);
}

TEST_CASE("transport: empty singular set, oracle agreement, exact stabilization") {
  const GlobalSolution& sol = transport();
  CHECK(sol.sigma.empty());
  CHECK(sol.measure.bound == 0.0);
  CHECK(sol.dense == DenseOutcome::Dense);

  const auto grid = sample_grid(sol.pde.domain, 50);
  const auto r = verify_residual(sol, grid, 1e-6);
  CHECK(r.ok);
  CHECK(r.max_residual <= 1e-6);
  CHECK(r.constant_past_stabilization);

  for (const auto& x : grid) {
    if (sol.level_of(x) < 0) continue;
    CHECK(std::abs(sol.evaluate(0, sol.top_level, x) - std::sin(x[1] + x[0])) <= 1e-6);
  }
  const auto o = oracle_error(sol, grid);
  CHECK(o.max_error <= 1e-6);
  CHECK(o.points > 0);

  // Stabilization table: monotone and exact.
  for (std::size_t i = 0; i < sol.stabilization.size(); ++i) {
    CHECK(sol.stabilization[i].exact);
    if (i > 0) CHECK(sol.stabilization[i].index >= sol.stabilization[i - 1].index);
  }
  for (std::size_t mu = 0; mu < sol.stabilization.size(); ++mu) {
    const auto& row = sol.stabilization[mu];
    for (int nu = row.index; nu <= sol.top_level; ++nu) {
      CHECK(structurally_equal(sol.restrict_to(0, nu, row.mu), sol.restrict_to(0, sol.top_level, row.mu)));
    }
  }
}

TEST_CASE("exhaustion is nested and avoids the singular set") {
  const GlobalSolution& sol = transport();
  REQUIRE(sol.exhaustion.size() >= 2);
  for (std::size_t mu = 0; mu + 1 < sol.exhaustion.size(); ++mu) {
    for (const auto& b : sol.exhaustion[mu]) {
      // Each box of K_mu lies inside the union of K_(mu+1); probe corners and center.
      std::vector<Point> probes;
      Point lo, hi, mid;
      for (std::size_t a = 0; a < b.size(); ++a) {
        lo.push_back(b.axis(a).lo);
        hi.push_back(b.axis(a).hi);
        mid.push_back(0.5 * (b.axis(a).lo + b.axis(a).hi));
      }
      for (const auto& x : {lo, hi, mid}) {
        bool in = false;
        for (const auto& c : sol.exhaustion[mu + 1]) in = in || c.contains(x);
        CHECK(in);
      }
    }
  }
  CHECK(sol.distances.front() > sol.distances.back());
}

TEST_CASE("initial data is reproduced at t0") {
  const GlobalSolution& sol = transport();
  for (int i = 1; i < 40; ++i) {
    const double y = 2 * 3.141592653589793 * i / 40.0;
    const std::vector<double> x{1e-12, y};
    if (sol.level_of(x) < 0) continue;
    CHECK(std::abs(sol.evaluate(0, sol.top_level, x) - std::sin(y)) <= 1e-9);
  }
}

TEST_CASE("tags are connected by retag") {
  const GlobalSolution& sol = transport();
  CHECK(sol.a_nd.tag.label() == "I_family(ND)");
  CHECK(sol.a_baire.tag.label() == "I_family(BAIRE_I)");
  CHECK(sol.b_baire.tag.label() == "J_family(BAIRE_I)");
  CHECK_FALSE(retag_obstruction(sol.a_nd.tag, sol.a_baire.tag));
  CHECK_FALSE(retag_obstruction(sol.a_baire.tag, sol.b_baire.tag));
  const GenFunction via = retag(retag(sol.a_nd, sol.a_baire.tag), sol.b_baire.tag);
  for (std::size_t k = 0; k < 4; ++k) {
    const Index i = via.net.poset()->element(k);
    CHECK(structurally_equal(via.net.term(i), sol.b_baire.net.term(i)));
    const MultiIndex p{1, 1};
    CHECK(structurally_equal(derive(via, p).net.term(i), retag(derive(sol.a_nd, p), sol.b_baire.tag).net.term(i)));
  }
}

TEST_CASE("serial and parallel construction give identical reports") {
  const auto a = build(kTransport, false);
  CHECK(solution_json(a).dump() == solution_json(transport()).dump());
}

TEST_CASE("measure shrinking") {
  const DomainBox d({Interval{0.0, 1.0}, Interval{0.0, 1.0}});
  SingularitySet s(d, SetClass::NowhereDense);
  for (double c : {0.3, 0.6}) {
    s.add(SingPrimitive::make_slab(Box({Interval{c - 0.01, c + 0.01}, Interval{0.0, 1.0}}), SlabInfo{0, c, 0.0}));
  }
  const auto out = shrink_measure(s, 0.01, 0.04);
  REQUIRE(out.primitives().size() == 2);
  CHECK(out.primitives()[0].box.axis(0).length() == doctest::Approx(0.005));
  CHECK(out.primitives()[1].box.axis(0).length() == doctest::Approx(0.0025));
  CHECK(measure_bound(out).bound <= 0.01);

  SingularitySet pts(d, SetClass::NowhereDense);
  pts.add(SingPrimitive::point(std::vector<double>{0.5, 0.5}));
  pts.add(SingPrimitive::make_box(Box({Interval{0.2, 0.2}, Interval{0.0, 1.0}})));
  const auto z = shrink_measure(pts, 0.0, 0.05);
  CHECK(measure_bound(z).bound == 0.0);
  CHECK(z.primitives().size() == 2);

  SingularitySet fat(d, SetClass::NowhereDense);
  fat.add(SingPrimitive::make_slab(Box({Interval{0.3, 0.7}, Interval{0.0, 1.0}}), SlabInfo{0, 0.5, 0.4}));
  CHECK_THROWS_AS(shrink_measure(fat, 0.05, 0.05), BudgetViolation);
}

TEST_CASE("residuals skip points near the singular set") {
  const ParsedPde p = parse_pde(
      "dim 2\ndomain 0 4 0 2*pi\norder 1\nt0 0\nG J[0,(0)]^2\ng0 1/(2 + sin(y1))\n"
      "oracle (1/(2 + sin(y1))) / (1 - t/(2 + sin(y1)))\nconfig order 14\nconfig tile 0.0625\nconfig h 0.02\n");
  GckConfig cfg;
  cfg.apply(p.config);
  const GlobalSolution sol = construct_global_solution(p.pde, p.data, cfg);
  CHECK_FALSE(sol.sigma.empty());
  CHECK(measure_bound(sol.sigma).bound <= 0.05);
  const auto grid = sample_grid(sol.pde.domain, 50);
  const auto r = verify_residual(sol, grid, 1e-5);
  CHECK_FALSE(r.skipped.empty());
  for (const auto& s : r.skipped) CHECK_FALSE(s.reason.empty());
  CHECK(r.tile_sup.size() == sol.tiles.size());
  // Blow-up times sit on the oracle pole t = 2 + sin y.
  for (const auto& e : sol.events) {
    const auto& col = sol.columns[e.column];
    const double y = 0.5 * (col.axis(1).lo + col.axis(1).hi);
    CHECK(std::abs(e.t_hat - (2.0 + std::sin(y))) <= 1e-3);
  }
}
