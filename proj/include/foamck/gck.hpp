#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "foamck/ck.hpp"
#include "foamck/nets.hpp"
#include "foamck/sets.hpp"

namespace foamck {

// ---------------------------------------------------------------------------
// Spec files

struct ParsedPde {
  PdeSystem pde;
  InitialData data;
  /// Raw "config key value" lines, later merged into GckConfig.
  std::map<std::string, std::string> config;
};

/// Line format: dim, domain, order, t0, components, G[.k], g<p>[.k],
/// oracle[.k], config. Axis 0 is t, axes 1..n-1 are y1..y(n-1).
ParsedPde parse_pde(std::string_view text);
ParsedPde load_pde(const std::string& path);

// ---------------------------------------------------------------------------
// Global construction

struct GckConfig {
  int order = 12;
  /// Column width in every y axis.
  double tile = 0.5;
  /// Safety factor in (0, 1); the combined radius ratio per tile is sigma/2.
  double sigma = 0.8;
  /// Resolution: dense-complement checks, slab width cap, radius-collapse floor.
  double h = 0.05;
  /// Measure budget for the singular set.
  double eps = 0.05;
  double max_step = 0.5;
  /// Exhaustion K_mu at distance d0 * 2^-mu from the singular set and boundary.
  int levels = 10;
  double d0 = 0.5;
  /// Blend half-width as a fraction of the shorter neighbouring tile.
  double blend = 0.2;
  std::size_t max_steps = 20000;
  bool parallel = true;

  void validate(const DomainBox& domain) const;
  /// Applies "key value" overrides; unknown keys throw.
  void apply(const std::map<std::string, std::string>& kv);
};

enum class EdgeKind : std::uint8_t { Domain, Partnered, Gap };

struct Tile {
  std::size_t column = 0;
  /// [a, b] in t times the column box in y.
  Box core;
  int direction = 1;
  std::vector<TruncatedSeries> series;
  EdgeKind lo_kind = EdgeKind::Domain;
  EdgeKind hi_kind = EdgeKind::Domain;
  double lo_delta = 0.0;
  double hi_delta = 0.0;
  /// Weight times series, one per component.
  std::vector<Expr> terms;
  Box support;
  int level = 0;
};

struct BlowupEvent {
  std::size_t column = 0;
  double t_stop = 0.0;
  double t_hat = 0.0;
  std::string reason;
  bool crossed = false;
  double required_width = 0.0;
};

struct StabilizationRow {
  int mu = 0;
  double distance = 0.0;
  std::size_t boxes = 0;
  /// Max level of the terms meeting K_mu.
  int index = 0;
  /// psi_nu restricted to K_mu is structurally identical for all nu >= index.
  bool exact = false;
};

struct GlobalSolution {
  PdeSystem pde;
  GckConfig config;
  std::vector<Box> columns;
  std::vector<Tile> tiles;
  std::vector<BlowupEvent> events;
  SingularitySet sigma;
  MeasureBound measure;
  DenseOutcome dense = DenseOutcome::Inconclusive;
  /// K_mu for mu = 0..levels, each a list of closed boxes.
  std::vector<std::vector<Box>> exhaustion;
  std::vector<double> distances;
  std::vector<StabilizationRow> stabilization;
  /// psi_nu for nu past this is the full glued sum.
  int top_level = 0;

  LimsupFamily representation;
  std::vector<Net> psi;  // one net per component over N
  GenFunction a_nd;
  GenFunction a_baire;
  GenFunction b_baire;

  /// psi_cache[k][nu] for nu = 0..top_level.
  std::vector<std::vector<Expr>> psi_cache;

  /// psi_nu for one component.
  Expr psi_term(int component, int nu) const;
  /// Terms of psi_nu whose support meets some box of K_mu.
  Expr restrict_to(int component, int nu, int mu) const;
  /// Smallest mu with x in K_mu, or -1.
  int level_of(std::span<const double> x) const;
  double evaluate(int component, int nu, std::span<const double> x) const;
};

GlobalSolution construct_global_solution(const PdeSystem& pde, const InitialData& data, const GckConfig& config);

/// Slab thicknesses min(eps/2^(k+1) / max(1, cross-section), h/4) in primitive order.
/// Throws BudgetViolation when a slab needs more than width + h.
SingularitySet shrink_measure(const SingularitySet& sigma, double eps, double h);

// ---------------------------------------------------------------------------
// Residual verification

struct SkipNotice {
  Point x;
  std::string reason;
};

struct ResidualReport {
  /// Sup residual over grid points in K_mu, evaluated at nu = top level.
  std::vector<double> sup_by_level;
  /// Points per level (cumulative).
  std::vector<std::size_t> points_by_level;
  std::vector<SkipNotice> skipped;
  /// Residual at nu = stabilization index equals the one at the top level.
  bool constant_past_stabilization = true;
  double max_residual = 0.0;
  /// Sup over grid points in each tile core, -1 for tiles without points.
  std::vector<double> tile_sup;
  std::vector<std::size_t> failing_tiles;
  double tol = 0.0;
  bool ok = true;
};

/// Uniform cell-centred grid with n points per axis.
std::vector<Point> sample_grid(const DomainBox& domain, std::size_t per_axis);

/// D_t^m psi - G(jets of psi) on the grid. Points within h of the singular
/// set or outside the exhaustion are skipped with a notice, as are points
/// outside K_max_level when max_level >= 0.
ResidualReport verify_residual(const GlobalSolution& sol, const std::vector<Point>& grid, double tol,
                               bool parallel = true, int max_level = -1);

/// Residual of component k at x using psi_nu.
double residual_at(const GlobalSolution& sol, int component, int nu, std::span<const double> x);

struct OracleReport {
  double max_error = 0.0;
  std::size_t points = 0;
};

/// |psi - oracle| over grid points in K_mu (mu < 0: every covered point).
OracleReport oracle_error(const GlobalSolution& sol, const std::vector<Point>& grid, int mu = -1);

}  // namespace foamck
