// foamck command line front end.
#include <omp.h>

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "foamck/error.hpp"
#include "foamck/gck.hpp"
#include "foamck/nets.hpp"
#include "foamck/report.hpp"

namespace fs = std::filesystem;
using namespace foamck;

namespace {

enum Exit : int {
  kOk = 0,
  kRefuted = 1,
  kVerifyFailed = 1,
  kBudget = 2,
  kInput = 3,
  kInconclusive = 4,
  kMissing = 5,
};

/// Keys understood by the tool itself; everything else goes to the solver.
struct RunConfig {
  std::map<std::string, std::string> solver;
  std::size_t grid = 50;
  double tol = 1e-6;
  int max_order = 2;
  std::size_t tail = 32;
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  int workers = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void set_run_key(RunConfig& rc, const std::string& k, const std::string& v) {
  try {
    if (k == "grid") rc.grid = std::stoul(v);
    else if (k == "tol") rc.tol = std::stod(v);
    else if (k == "max_order") rc.max_order = std::stoi(v);
    else if (k == "tail") rc.tail = std::stoul(v);
    else if (k == "samples") rc.samples = std::stoul(v);
    else if (k == "seed") rc.seed = std::stoull(v);
    else if (k == "workers") rc.workers = std::stoi(v);
    else rc.solver[k] = v;
  } catch (const std::logic_error&) {
    throw PreconditionError("config " + k + ": bad value '" + v + "'");
  }
}

/// "key value" per line, '#' comments.
void load_run_config(RunConfig& rc, const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string k, v, extra;
    if (!(ls >> k)) continue;
    if (!(ls >> v) || (ls >> extra)) throw ParseError("expected 'key value'", 0, n);
    set_run_key(rc, k, v);
  }
}

void apply_sets(RunConfig& rc, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw PreconditionError("--set expects key=value, got '" + s + "'");
    set_run_key(rc, s.substr(0, eq), s.substr(eq + 1));
  }
}

void set_workers(int workers, GckConfig* cfg = nullptr) {
  if (workers > 0) omp_set_num_threads(workers);
  if (cfg && workers == 1) cfg->parallel = false;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

GckConfig solver_config(const ParsedPde& spec, const std::map<std::string, std::string>& overrides) {
  GckConfig cfg;
  cfg.apply(spec.config);
  cfg.apply(overrides);
  cfg.validate(spec.pde.domain);
  return cfg;
}

std::string config_text(const std::map<std::string, std::string>& kv) {
  std::string out;
  for (const auto& [k, v] : kv) out += k + " " + v + "\n";
  return out;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string k, v;
  while (in >> k >> v) kv[k] = v;
  return kv;
}

// ---------------------------------------------------------------------------
// solve

struct SolveArgs {
  std::string spec;
  std::string config;
  std::vector<std::string> sets;
  std::string out = "foamck-out";
  int workers = 0;
  bool frozen = false;
};

int cmd_solve(const SolveArgs& a) {
  RunConfig rc;
  std::string text;
  ParsedPde spec;
  GckConfig cfg;
  try {
    if (!a.config.empty()) load_run_config(rc, a.config);
    apply_sets(rc, a.sets);
    text = read_file(a.spec);
    spec = parse_pde(text);
    cfg = solver_config(spec, rc.solver);
  } catch (const Error& e) {
    std::cerr << "foamck solve: " << a.spec << ": " << e.what() << "\n";
    return kInput;
  }
  const int workers = a.workers > 0 ? a.workers : rc.workers;
  set_workers(workers, &cfg);

  GlobalSolution sol;
  try {
    sol = construct_global_solution(spec.pde, spec.data, cfg);
  } catch (const BudgetViolation& e) {
    std::cerr << "foamck solve: budget violation: " << e.what() << "\n";
    return kBudget;
  } catch (const NoSeed& e) {
    std::cerr << "foamck solve: no seed: " << e.what() << "\n";
    return kBudget;
  } catch (const ComplementNotDense& e) {
    std::cerr << "foamck solve: " << e.what() << "\n";
    return kBudget;
  }

  const auto grid = sample_grid(spec.pde.domain, rc.grid);
  const ResidualReport res = verify_residual(sol, grid, rc.tol, cfg.parallel);

  json report;
  report["command"] = "solve";
  report["created"] = timestamp(a.frozen);
  report["spec"] = fs::path(a.spec).filename().string();
  report["solution"] = solution_json(sol);
  report["residual"] = residual_json(res);
  if (!spec.pde.oracle.empty()) {
    const auto err = oracle_error(sol, grid);
    report["oracle"] = {{"max_error", err.max_error}, {"points", err.points}};
  }

  try {
    fs::create_directories(a.out);
    const fs::path dir(a.out);
    write_atomic((dir / "spec.pde").string(), text);
    write_atomic((dir / "config.txt").string(), config_text(rc.solver));
    std::ostringstream csv;
    write_samples_csv(csv, sol, grid);
    write_atomic((dir / "samples.csv").string(), csv.str());
    write_atomic((dir / "report.json").string(), dump(report));
  } catch (const std::exception& e) {
    std::cerr << "foamck solve: " << e.what() << "\n";
    return kInput;
  }
  std::cout << "tiles " << sol.tiles.size() << ", singular primitives " << sol.sigma.primitives().size()
            << ", measure bound " << format_double(sol.measure.bound) << ", max residual "
            << format_double(res.max_residual) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// check-ideal

struct CheckArgs {
  std::string net;
  std::string sigma;
  std::string ideal;
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  int workers = 0;
  bool certificate_only = false;
  bool frozen = false;
};

/// Piecewise constant in the index over N, one "term k <expr>" per line:
/// w_j = expr for j from k up to the next listed k. A "term 0" line is required.
Net load_net_file(const std::string& path, PosetPtr poset) {
  std::istringstream in(read_file(path));
  std::map<std::int64_t, Expr> pieces;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    if (kw != "term") throw ParseError("unknown keyword '" + kw + "'", 0, n);
    std::int64_t k = 0;
    if (!(ls >> k) || k < 0) throw ParseError("term needs a nonnegative index", 0, n);
    std::string rest;
    std::getline(ls, rest);
    try {
      pieces[k] = parse_expr(rest);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), 0, n);
    }
  }
  if (pieces.empty() || pieces.begin()->first != 0) throw ParseError("net file needs a 'term 0' line", 0, n);
  return Net(
      std::move(poset),
      [pieces](const Index& i) {
        auto it = pieces.upper_bound(i.key[0]);
        return std::prev(it)->second;
      },
      fs::path(path).filename().string());
}

std::vector<Point> draw_samples(const SingularitySet& sigma, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto& dom = sigma.ambient();
  std::vector<std::uniform_real_distribution<double>> axes;
  for (const auto& iv : dom.axes()) axes.emplace_back(iv.lo, iv.hi);
  std::vector<Point> out;
  for (std::size_t tries = 0; out.size() < count && tries < 100 * count + 100; ++tries) {
    Point x;
    for (auto& d : axes) x.push_back(d(rng));
    if (dom.contains(x) && !sigma.contains(x)) out.push_back(std::move(x));
  }
  return out;
}

int cmd_check_ideal(const CheckArgs& a) {
  RunConfig rc;
  SingularitySet sigma;
  try {
    if (!a.config.empty()) load_run_config(rc, a.config);
    apply_sets(rc, a.sets);
    sigma = load_sigma(a.sigma);
  } catch (const Error& e) {
    std::cerr << "foamck check-ideal: " << e.what() << "\n";
    return kInput;
  }
  set_workers(a.workers > 0 ? a.workers : rc.workers);

  CheckOptions opts;
  opts.max_order = rc.max_order;
  opts.tail = rc.tail;
  opts.certificate_only = a.certificate_only;
  opts.parallel = (a.workers > 0 ? a.workers : rc.workers) != 1;

  MembershipVerdict v;
  Net net;
  try {
    const bool example = a.net == "example-one";
    const std::string ideal = a.ideal.empty() ? (example ? "I" : "J") : a.ideal;
    if (ideal != "I" && ideal != "J") throw PreconditionError("--ideal must be I or J");

    std::optional<ExampleOne> ex;
    LimsupFamily rep;
    if (example) {
      ex = example_one_net(sigma, RadiusSchedule{});
      rep = ex->representation;
      net = ex->net;
    } else {
      rep = constant_family(sigma);
      if (a.net.rfind("diagonal:", 0) == 0) {
        net = diagonal_embed(parse_expr(a.net.substr(9)), rep.poset);
      } else {
        net = load_net_file(a.net, rep.poset);
      }
    }
    const auto samples = draw_samples(sigma, rc.samples, rc.seed);
    if (samples.empty()) throw PreconditionError("no samples outside the singular set");
    v = ideal == "J" ? check_J_membership(net, sigma, samples, opts) : check_I_membership(net, sigma, rep, samples, opts);
  } catch (const Error& e) {
    std::cerr << "foamck check-ideal: " << e.what() << "\n";
    return kInput;
  }

  json report;
  report["command"] = "check-ideal";
  report["created"] = timestamp(a.frozen);
  report["net"] = a.net.rfind("diagonal:", 0) == 0 || a.net == "example-one" ? a.net
                                                                                : fs::path(a.net).filename().string();
  report["sigma"] = sigma_json(sigma);
  report["verdict"] = verdict_json(v);
  if (v.witness) report["verdict"]["witness_replays"] = replay_witness(net, *v.witness);
  const std::string text = dump(report);
  try {
    if (a.out.empty()) std::cout << text;
    else write_atomic(a.out, text);
  } catch (const std::exception& e) {
    std::cerr << "foamck check-ideal: " << e.what() << "\n";
    return kInput;
  }
  std::cerr << outcome_name(v.outcome) << "\n";
  switch (v.outcome) {
    case Outcome::Verified:
      return kOk;
    case Outcome::Refuted:
      return kRefuted;
    case Outcome::Inconclusive:
      return kInconclusive;
  }
  return kInconclusive;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string dir;
  std::size_t grid = 0;
  double tol = 0.0;
  int level = -1;
  int workers = 0;
  bool frozen = false;
};

int cmd_verify(const VerifyArgs& a) {
  const fs::path dir(a.dir);
  for (const char* f : {"spec.pde", "config.txt", "report.json"}) {
    if (!fs::exists(dir / f)) {
      std::cerr << "foamck verify: missing " << (dir / f).string() << "\n";
      return kMissing;
    }
  }
  ParsedPde spec;
  GckConfig cfg;
  json stored;
  try {
    spec = parse_pde(read_file((dir / "spec.pde").string()));
    cfg = solver_config(spec, parse_config_text(read_file((dir / "config.txt").string())));
    stored = json::parse(read_file((dir / "report.json").string()));
  } catch (const std::exception& e) {
    std::cerr << "foamck verify: unreadable artifacts: " << e.what() << "\n";
    return kMissing;
  }
  set_workers(a.workers, &cfg);

  GlobalSolution sol;
  try {
    sol = construct_global_solution(spec.pde, spec.data, cfg);
  } catch (const Error& e) {
    std::cerr << "foamck verify: construction failed: " << e.what() << "\n";
    return kVerifyFailed;
  }
  const json rebuilt = solution_json(sol);
  const bool matches = stored.contains("solution") && json(stored["solution"]) == rebuilt;

  const std::size_t n = a.grid > 0 ? a.grid : 50;
  const double tol = a.tol > 0.0 ? a.tol : 1e-6;
  const ResidualReport res = verify_residual(sol, sample_grid(spec.pde.domain, n), tol, cfg.parallel, a.level);

  json report;
  report["command"] = "verify";
  report["created"] = timestamp(a.frozen);
  report["grid"] = n;
  report["level"] = a.level;
  report["solution_matches_report"] = matches;
  report["stabilization_exact"] =
      std::all_of(sol.stabilization.begin(), sol.stabilization.end(), [](const auto& r) { return r.exact; });
  report["residual"] = residual_json(res);
  try {
    write_atomic((dir / "verify.json").string(), dump(report));
  } catch (const std::exception& e) {
    std::cerr << "foamck verify: " << e.what() << "\n";
    return kMissing;
  }
  std::map<std::string, std::size_t> reasons;
  for (const auto& s : res.skipped) ++reasons[s.reason];
  for (const auto& [why, count] : reasons) std::cerr << "skipped " << count << " points: " << why << "\n";
  std::cout << "max residual " << format_double(res.max_residual) << " (tol " << format_double(tol) << "), "
            << res.skipped.size() << " points skipped\n";
  if (!res.failing_tiles.empty()) {
    std::cout << "failing tiles:";
    for (auto t : res.failing_tiles) std::cout << ' ' << t;
    std::cout << "\n";
  }
  const bool ok = res.ok && matches && report["stabilization_exact"].get<bool>();
  return ok ? kOk : kVerifyFailed;
}

// ---------------------------------------------------------------------------
// example-one

struct ExampleArgs {
  std::string sigma;
  std::size_t terms = 8;
  std::string out;
  bool frozen = false;
};

int cmd_example_one(const ExampleArgs& a) {
  SingularitySet sigma;
  ExampleOne ex;
  try {
    sigma = load_sigma(a.sigma);
    ex = example_one_net(sigma, RadiusSchedule{});
  } catch (const Error& e) {
    std::cerr << "foamck example-one: " << e.what() << "\n";
    return kInput;
  }
  json terms = json::array();
  for (std::size_t k = 0; k < a.terms; ++k) {
    const Index lambda = ex.poset->element(k);
    terms.push_back({{"index", index_json(lambda)},
                     {"level", ExampleOnePoset::level(lambda)},
                     {"members", ExampleOnePoset::members(lambda)},
                     {"term", to_string(ex.net.term(lambda))}});
  }
  // Each alpha_x is e^-1 at its own center.
  double min_center = kInf;
  for (std::size_t i = 0; i < ex.points.size(); ++i) {
    const Index lambda = ExampleOnePoset::make(0, {static_cast<std::int64_t>(i)});
    min_center = std::min(min_center, evaluate(ex.net.term(lambda), ex.points[i]));
  }
  json report;
  report["command"] = "example-one";
  report["created"] = timestamp(a.frozen);
  report["sigma"] = sigma_json(sigma);
  json pts = json::array();
  for (const auto& p : ex.points) pts.push_back(point_json(p));
  report["points"] = std::move(pts);
  report["terms"] = std::move(terms);
  report["min_value_at_own_center"] = ex.points.empty() ? json(nullptr) : json(min_center);
  const std::string text = dump(report);
  try {
    if (a.out.empty()) std::cout << text;
    else write_atomic(a.out, text);
  } catch (const std::exception& e) {
    std::cerr << "foamck example-one: " << e.what() << "\n";
    return kInput;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const std::string& dir_arg) {
  const fs::path dir(dir_arg);
  if (!fs::exists(dir / "report.json")) {
    std::cerr << "foamck report: missing " << (dir / "report.json").string() << "\n";
    return kMissing;
  }
  json r;
  try {
    r = json::parse(read_file((dir / "report.json").string()));
  } catch (const std::exception& e) {
    std::cerr << "foamck report: " << e.what() << "\n";
    return kMissing;
  }
  const auto& s = r["solution"];
  std::cout << "spec            " << r.value("spec", "?") << "\n";
  std::cout << "tiles           " << s["tiles"].size() << "\n";
  std::cout << "singular set    " << s["sigma"]["primitives"].size() << " primitives, measure bound "
            << s["measure_bound"].dump() << ", complement " << s["dense_complement"].get<std::string>() << "\n";
  std::cout << "blow-ups        " << s["blowups"].size() << "\n";
  std::cout << "stabilization   mu  distance  boxes  index  exact\n";
  for (const auto& row : s["stabilization"]) {
    std::cout << "                " << row["mu"].dump() << "  " << row["distance"].dump() << "  " << row["boxes"].dump()
              << "  " << row["index"].dump() << "  " << (row["exact"].get<bool>() ? "yes" : "no") << "\n";
  }
  if (r.contains("residual")) std::cout << "max residual    " << r["residual"]["max_residual"].dump() << "\n";
  if (r.contains("oracle")) std::cout << "oracle error    " << r["oracle"]["max_error"].dump() << "\n";
  if (fs::exists(dir / "verify.json")) {
    try {
      const json v = json::parse(read_file((dir / "verify.json").string()));
      std::cout << "verify          residual " << v["residual"]["max_residual"].dump() << ", ok "
                << v["residual"]["ok"].dump() << "\n";
    } catch (const std::exception&) {
    }
  }
  std::cout << "tags            ";
  for (const auto& t : s["tags"]) std::cout << t.get<std::string>() << ' ';
  std::cout << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"foamck: generalized-function nets and global Cauchy-Kovalevskaia solutions"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Construct a global solution from a spec file");
  s->add_option("spec", solve.spec, "PDE spec file")->required();
  s->add_option("--config", solve.config, "Run config file ('key value' lines)");
  s->add_option("--set", solve.sets, "Config override key=value");
  s->add_option("--out", solve.out, "Output directory");
  s->add_option("--workers", solve.workers, "Worker threads");
  s->add_flag("--frozen-clock", solve.frozen, "Write 'frozen' instead of timestamps");

  CheckArgs check;
  auto* c = app.add_subcommand("check-ideal", "Check ideal membership of a net");
  c->add_option("net", check.net, "diagonal:<expr>, example-one, or a net file")->required();
  c->add_option("sigma", check.sigma, "Singularity set file")->required();
  c->add_option("--ideal", check.ideal, "J or I (default: I for example-one, J otherwise)");
  c->add_option("--config", check.config, "Run config file");
  c->add_option("--set", check.sets, "Config override key=value");
  c->add_option("--out", check.out, "Verdict JSON path (default: stdout)");
  c->add_option("--workers", check.workers, "Worker threads");
  c->add_flag("--certificate-only", check.certificate_only, "Reject numeric zeros");
  c->add_flag("--frozen-clock", check.frozen, "Write 'frozen' instead of timestamps");

  VerifyArgs verify;
  auto* v = app.add_subcommand("verify", "Re-check the residual of a solve output directory");
  v->add_option("dir", verify.dir, "Directory written by solve")->required();
  v->add_option("--grid", verify.grid, "Grid points per axis (default 50)");
  v->add_option("--tol", verify.tol, "Residual tolerance (default 1e-6)");
  v->add_option("--level", verify.level, "Only check points of K_level");
  v->add_option("--workers", verify.workers, "Worker threads");
  v->add_flag("--frozen-clock", verify.frozen, "Write 'frozen' instead of timestamps");

  ExampleArgs example;
  auto* e = app.add_subcommand("example-one", "Print the example-one net for a point set");
  e->add_option("sigma", example.sigma, "Singularity set file")->required();
  e->add_option("--terms", example.terms, "Number of poset elements to print");
  e->add_option("--out", example.out, "JSON path (default: stdout)");
  e->add_flag("--frozen-clock", example.frozen, "Write 'frozen' instead of timestamps");

  std::string report_dir;
  auto* r = app.add_subcommand("report", "Summarize a solve output directory");
  r->add_option("dir", report_dir, "Directory written by solve")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kInput;
  }

  if (s->parsed()) return cmd_solve(solve);
  if (c->parsed()) return cmd_check_ideal(check);
  if (v->parsed()) return cmd_verify(verify);
  if (e->parsed()) return cmd_example_one(example);
  return cmd_report(report_dir);
}
