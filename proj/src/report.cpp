#include "foamck/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>

#include "foamck/error.hpp"

namespace foamck {

namespace {

/// JSON has no infinity; unbounded sides print as null.
json number(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

const char* edge_name(EdgeKind k) {
  switch (k) {
    case EdgeKind::Domain:
      return "domain";
    case EdgeKind::Partnered:
      return "partnered";
    case EdgeKind::Gap:
      return "gap";
  }
  return "?";
}

}  // namespace

json point_json(const Point& x) {
  json out = json::array();
  for (double v : x) out.push_back(number(v));
  return out;
}

json box_json(const Box& b) {
  json out = json::array();
  for (const auto& iv : b.axes()) out.push_back(json::array({number(iv.lo), number(iv.hi)}));
  return out;
}

json index_json(const Index& i) { return i.key; }

json sigma_json(const SingularitySet& s) {
  json prims = json::array();
  for (const auto& p : s.primitives()) {
    json j;
    j["box"] = box_json(p.box);
    if (p.slab) {
      j["slab"] = {{"axis", p.slab->axis}, {"center", p.slab->center}, {"required_width", p.slab->required_width}};
    }
    prims.push_back(std::move(j));
  }
  json out;
  out["class"] = class_name(s.set_class());
  out["primitives"] = std::move(prims);
  out["truncated"] = s.truncated();
  if (s.enumerator()) out["enumerator"] = s.enumerator()->spec();
  const auto m = measure_bound(s);
  out["measure_bound"] = m.bound;
  out["measure_partial"] = m.partial;
  return out;
}

json solution_json(const GlobalSolution& sol) {
  json out;
  const auto& c = sol.config;
  out["config"] = {{"order", c.order}, {"tile", c.tile},         {"sigma", c.sigma},   {"h", c.h},
                   {"eps", c.eps},     {"max_step", c.max_step}, {"levels", c.levels}, {"d0", c.d0},
                   {"blend", c.blend}};
  out["domain"] = box_json(Box(sol.pde.domain.axes()));
  out["columns"] = sol.columns.size();
  out["sigma"] = sigma_json(sol.sigma);
  out["measure_bound"] = sol.measure.bound;
  out["dense_complement"] = sol.dense == DenseOutcome::Dense      ? "dense"
                            : sol.dense == DenseOutcome::NotDense ? "not-dense"
                                                                  : "inconclusive";
  json events = json::array();
  for (const auto& e : sol.events) {
    events.push_back({{"column", e.column},
                      {"t_stop", e.t_stop},
                      {"t_hat", number(e.t_hat)},
                      {"reason", e.reason},
                      {"crossed", e.crossed},
                      {"required_width", number(e.required_width)}});
  }
  out["blowups"] = std::move(events);
  json stab = json::array();
  for (const auto& r : sol.stabilization) {
    stab.push_back(
        {{"mu", r.mu}, {"distance", r.distance}, {"boxes", r.boxes}, {"index", r.index}, {"exact", r.exact}});
  }
  out["stabilization"] = std::move(stab);
  json tiles = json::array();
  for (const auto& t : sol.tiles) {
    double ratio = 0.0;
    for (const auto& s : t.series) {
      const double r = axis_radius(s, 0);
      if (std::isfinite(r) && r > 0.0) ratio = std::max(ratio, t.core.axis(0).length() / r);
    }
    tiles.push_back({{"column", t.column},
                     {"core", box_json(t.core)},
                     {"direction", t.direction},
                     {"center", point_json(t.series.front().center())},
                     {"lo_edge", edge_name(t.lo_kind)},
                     {"hi_edge", edge_name(t.hi_kind)},
                     {"step_over_radius", ratio},
                     {"level", t.level}});
  }
  out["tiles"] = std::move(tiles);
  out["tags"] = {sol.a_nd.tag.label(), sol.a_baire.tag.label(), sol.b_baire.tag.label()};
  return out;
}

json verdict_json(const MembershipVerdict& v) {
  json out;
  out["ideal"] = v.ideal;
  out["outcome"] = outcome_name(v.outcome);
  out["budgets"] = {{"samples", v.budgets.samples},
                    {"max_order", v.budgets.max_order},
                    {"tail", v.budgets.tail},
                    {"terms_examined", v.budgets.terms_examined}};
  json certs = json::array();
  for (const auto& c : v.certificates) {
    json deltas = json::array();
    for (const auto& [mu, box] : c.deltas) deltas.push_back({{"mu", index_json(mu)}, {"delta", box_json(box)}});
    certs.push_back({{"x", point_json(c.x)}, {"lambda", index_json(c.lambda)}, {"numeric", c.numeric},
                     {"deltas", std::move(deltas)}});
  }
  out["certificates"] = std::move(certs);
  if (v.witness) {
    const auto& w = *v.witness;
    out["witness"] = {{"x", point_json(w.x)}, {"mu", index_json(w.mu)}, {"p", w.p}, {"value", number(w.value)},
                      {"reason", w.reason}};
  } else {
    out["witness"] = nullptr;
  }
  json inc = json::array();
  for (const auto& x : v.inconclusive_samples) inc.push_back(point_json(x));
  out["inconclusive_samples"] = std::move(inc);
  return out;
}

json residual_json(const ResidualReport& r) {
  json out;
  out["tol"] = r.tol;
  out["ok"] = r.ok;
  out["max_residual"] = number(r.max_residual);
  out["constant_past_stabilization"] = r.constant_past_stabilization;
  json levels = json::array();
  for (std::size_t mu = 0; mu < r.sup_by_level.size(); ++mu) {
    levels.push_back({{"mu", mu}, {"points", r.points_by_level[mu]}, {"sup_residual", number(r.sup_by_level[mu])}});
  }
  out["levels"] = std::move(levels);
  json tiles = json::array();
  for (std::size_t t = 0; t < r.tile_sup.size(); ++t) {
    if (r.tile_sup[t] >= 0.0) tiles.push_back({{"tile", t}, {"sup_residual", number(r.tile_sup[t])}});
  }
  out["tiles"] = std::move(tiles);
  out["failing_tiles"] = r.failing_tiles;
  json skipped = json::array();
  for (const auto& s : r.skipped) skipped.push_back({{"x", point_json(s.x)}, {"reason", s.reason}});
  out["skipped"] = std::move(skipped);
  return out;
}

std::string timestamp(bool frozen) {
  if (frozen) return "frozen";
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << content;
    if (!out) throw Error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_samples_csv(std::ostream& os, const GlobalSolution& sol, const std::vector<Point>& grid) {
  const auto dim = static_cast<std::size_t>(sol.pde.dim);
  os << 't';
  for (std::size_t j = 1; j < dim; ++j) os << ",y" << j;
  for (int k = 0; k < sol.pde.components; ++k) {
    const std::string sfx = sol.pde.components > 1 ? "." + std::to_string(k) : "";
    os << ",psi" << sfx;
    if (!sol.pde.oracle.empty()) os << ",oracle" << sfx;
    os << ",residual" << sfx;
  }
  os << '\n';
  for (const auto& x : grid) {
    if (sol.sigma.distance_inf(x) < sol.config.h || sol.level_of(x) < 0) continue;
    for (std::size_t j = 0; j < dim; ++j) os << (j ? "," : "") << format_double(x[j]);
    for (int k = 0; k < sol.pde.components; ++k) {
      os << ',' << format_double(sol.evaluate(k, sol.top_level, x));
      if (!sol.pde.oracle.empty()) os << ',' << format_double(evaluate(sol.pde.oracle[static_cast<std::size_t>(k)], x));
      os << ',' << format_double(residual_at(sol, k, sol.top_level, x));
    }
    os << '\n';
  }
}

}  // namespace foamck
