#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "foamck/error.hpp"
#include "foamck/gck.hpp"

namespace foamck {

namespace {

struct Line {
  std::size_t number = 0;
  std::string key;
  std::string rest;
  std::size_t rest_pos = 0;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// "G.1" -> ("G", 1); "g0" -> ("g0", 0).
std::pair<std::string, int> split_component(const Line& l) {
  const auto dot = l.key.find('.');
  if (dot == std::string::npos) return {l.key, 0};
  try {
    std::size_t used = 0;
    const int k = std::stoi(l.key.substr(dot + 1), &used);
    if (used + dot + 1 != l.key.size() || k < 0) throw std::invalid_argument("component");
    return {l.key.substr(0, dot), k};
  } catch (const std::exception&) {
    throw ParseError("bad component suffix in '" + l.key + "'", dot + 1, l.number);
  }
}

Expr parse_at(const Line& l, bool jets) {
  try {
    return parse_expr(l.rest, ParseOptions{jets});
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()).substr(std::string(e.what()).find(": ") + 2), l.rest_pos + e.position(),
                     l.number);
  }
}

double parse_value(const Line& l, const std::string& tok, std::size_t pos) {
  double v = 0.0;
  try {
    if (is_constant(parse_expr(tok), &v)) return v;
  } catch (const ParseError&) {
  }
  throw ParseError("expected a number, got '" + tok + "'", pos, l.number);
}

std::vector<std::pair<std::string, std::size_t>> tokens(const Line& l) {
  std::vector<std::pair<std::string, std::size_t>> out;
  std::size_t i = 0;
  while (i < l.rest.size()) {
    while (i < l.rest.size() && (l.rest[i] == ' ' || l.rest[i] == '\t')) ++i;
    const std::size_t b = i;
    while (i < l.rest.size() && l.rest[i] != ' ' && l.rest[i] != '\t') ++i;
    if (i > b) out.emplace_back(l.rest.substr(b, i - b), l.rest_pos + b);
  }
  return out;
}

int single_int(const Line& l) {
  const auto t = tokens(l);
  if (t.size() != 1) throw ParseError("'" + l.key + "' takes one integer", l.rest_pos, l.number);
  const double v = parse_value(l, t[0].first, t[0].second);
  if (v != std::floor(v)) throw ParseError("'" + l.key + "' must be an integer", t[0].second, l.number);
  return static_cast<int>(v);
}

}  // namespace

ParsedPde parse_pde(std::string_view text) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++number;
    std::string raw(text.substr(start, end - start));
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string body = trim(raw);
    if (!body.empty()) {
      const std::size_t lead = raw.find_first_not_of(" \t");
      const auto sp = body.find_first_of(" \t");
      Line l;
      l.number = number;
      l.key = body.substr(0, sp);
      if (sp != std::string::npos) {
        const auto r = body.find_first_not_of(" \t", sp);
        l.rest = body.substr(r);
        l.rest_pos = lead + r;
      } else {
        l.rest_pos = lead + body.size();
      }
      lines.push_back(std::move(l));
    }
    if (end == text.size()) break;
    start = end + 1;
  }

  ParsedPde out;
  PdeSystem& pde = out.pde;
  bool have_dim = false;
  bool have_domain = false;
  std::vector<const Line*> rhs_lines;
  std::vector<const Line*> data_lines;
  std::vector<const Line*> oracle_lines;

  for (const auto& l : lines) {
    const auto [base, comp] = split_component(l);
    if (base == "dim") {
      pde.dim = single_int(l);
      if (pde.dim < 1 || pde.dim > 10) throw ParseError("dim must lie in [1, 10]", l.rest_pos, l.number);
      have_dim = true;
    } else if (base == "domain") {
      std::vector<Interval> axes;
      const auto t = tokens(l);
      if (t.empty() || t.size() % 2 != 0) throw ParseError("domain needs pairs 'lo hi'", l.rest_pos, l.number);
      for (std::size_t i = 0; i < t.size(); i += 2) {
        axes.push_back({parse_value(l, t[i].first, t[i].second), parse_value(l, t[i + 1].first, t[i + 1].second)});
      }
      try {
        pde.domain = DomainBox(std::move(axes));
      } catch (const PreconditionError& e) {
        throw ParseError(e.what(), l.rest_pos, l.number);
      }
      have_domain = true;
    } else if (base == "order") {
      pde.order = single_int(l);
      if (pde.order < 1) throw ParseError("order must be at least 1", l.rest_pos, l.number);
    } else if (base == "components") {
      pde.components = single_int(l);
      if (pde.components < 1 || pde.components > 16) throw ParseError("components must lie in [1, 16]", l.rest_pos, l.number);
    } else if (base == "t0") {
      const auto t = tokens(l);
      if (t.size() != 1) throw ParseError("t0 takes one value", l.rest_pos, l.number);
      pde.t0 = parse_value(l, t[0].first, t[0].second);
    } else if (base == "G") {
      rhs_lines.push_back(&l);
    } else if (base.size() >= 2 && base[0] == 'g' && std::all_of(base.begin() + 1, base.end(), ::isdigit)) {
      data_lines.push_back(&l);
    } else if (base == "oracle") {
      oracle_lines.push_back(&l);
    } else if (base == "config") {
      const auto t = tokens(l);
      if (t.size() != 2) throw ParseError("config takes 'key value'", l.rest_pos, l.number);
      out.config[t[0].first] = t[1].first;
    } else {
      throw ParseError("unknown directive '" + l.key + "'", 0, l.number);
    }
  }
  if (!have_dim) throw ParseError("missing 'dim' line", 0, number);
  if (!have_domain) throw ParseError("missing 'domain' line", 0, number);
  if (pde.domain.dim() != static_cast<std::size_t>(pde.dim)) {
    throw ParseError("domain has " + std::to_string(pde.domain.dim()) + " axes but dim is " + std::to_string(pde.dim), 0,
                     number);
  }

  const auto ncomp = static_cast<std::size_t>(pde.components);
  pde.rhs.assign(ncomp, nullptr);
  for (const Line* l : rhs_lines) {
    const auto [base, comp] = split_component(*l);
    if (comp >= pde.components) throw ParseError("component index out of range", 0, l->number);
    if (pde.rhs[static_cast<std::size_t>(comp)]) throw ParseError("duplicate right-hand side", 0, l->number);
    Expr g = parse_at(*l, true);
    if (max_axis(g) >= pde.dim) throw ParseError("expression uses an axis beyond dim", l->rest_pos, l->number);
    PdeSystem probe = pde;
    probe.rhs.assign(ncomp, g);
    try {
      validate_pde(probe);
    } catch (const PreconditionError& e) {
      throw ParseError(e.what(), l->rest_pos, l->number);
    }
    pde.rhs[static_cast<std::size_t>(comp)] = std::move(g);
  }
  for (std::size_t k = 0; k < ncomp; ++k) {
    if (!pde.rhs[k]) throw ParseError("missing right-hand side G." + std::to_string(k), 0, number);
  }

  out.data.g.assign(ncomp, std::vector<Expr>(static_cast<std::size_t>(pde.order)));
  for (const Line* l : data_lines) {
    const auto [base, comp] = split_component(*l);
    const int p = std::stoi(base.substr(1));
    if (p >= pde.order) throw ParseError("data " + base + " needs p < m = " + std::to_string(pde.order), 0, l->number);
    if (comp >= pde.components) throw ParseError("component index out of range", 0, l->number);
    auto& slot = out.data.g[static_cast<std::size_t>(comp)][static_cast<std::size_t>(p)];
    if (slot) throw ParseError("duplicate initial data " + l->key, 0, l->number);
    slot = parse_at(*l, false);
    if (depends_on(slot, 0)) throw ParseError("initial data must not depend on t", l->rest_pos, l->number);
    if (max_axis(slot) >= pde.dim) throw ParseError("expression uses an axis beyond dim", l->rest_pos, l->number);
  }
  for (std::size_t k = 0; k < ncomp; ++k) {
    for (int p = 0; p < pde.order; ++p) {
      if (!out.data.g[k][static_cast<std::size_t>(p)]) {
        throw ParseError("missing initial data g" + std::to_string(p) + (ncomp > 1 ? "." + std::to_string(k) : ""), 0,
                         number);
      }
    }
  }

  if (!oracle_lines.empty()) {
    pde.oracle.assign(ncomp, nullptr);
    for (const Line* l : oracle_lines) {
      const auto [base, comp] = split_component(*l);
      if (comp >= pde.components) throw ParseError("component index out of range", 0, l->number);
      pde.oracle[static_cast<std::size_t>(comp)] = parse_at(*l, false);
    }
    for (std::size_t k = 0; k < ncomp; ++k) {
      if (!pde.oracle[k]) throw ParseError("oracle given for some components only", 0, number);
    }
  }

  try {
    validate_pde(pde);
    validate_data(pde, out.data);
  } catch (const PreconditionError& e) {
    throw ParseError(e.what(), 0, number);
  }
  return out;
}

ParsedPde load_pde(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PreconditionError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pde(ss.str());
}

}  // namespace foamck
