#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "foamck/box.hpp"

namespace foamck {

enum class Op : std::uint8_t {
  Const,
  Var,
  Sum,
  Neg,
  Mul,
  Div,
  Pow,
  Exp,
  Sin,
  Cos,
  Bump,
  Step,
  Window,
  Poly,
  Jet,
};

enum class Region : std::uint8_t { Ball, Slab };

struct PolyTerm {
  MultiIndex alpha;
  double coef = 0.0;
  bool operator==(const PolyTerm&) const = default;
};

struct Node;
using Expr = std::shared_ptr<const Node>;

/// Immutable expression node. Build through the factory functions below,
/// which apply shallow normalization and compute the support cache.
struct Node {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int axis = 0;        // Var, Step, slab Window
  int exponent = 0;    // Pow
  bool rising = true;  // Step
  Region region = Region::Ball;
  double lo = 0.0, hi = 0.0;  // Step, slab Window
  double radius = 0.0;        // Bump, ball Window
  Point center;               // Bump, ball Window, Poly
  std::vector<PolyTerm> terms;
  int component = 0;  // Jet
  int jet_p = 0;
  MultiIndex jet_q;
  std::vector<Expr> args;
  /// Boxes whose union contains the support. nullopt: unknown (may be all of X).
  std::optional<std::vector<Box>> support;
};

// Factories.
Expr constant(double v);
Expr zero();
Expr one();
Expr var(int axis);
Expr sum(std::vector<Expr> terms);
Expr neg(Expr a);
Expr mul(Expr a, Expr b);
Expr div(Expr a, Expr b);
Expr pow(Expr a, int n);
Expr exp(Expr a);
Expr sin(Expr a);
Expr cos(Expr a);
/// exp(-1/(1 - |x-c|^2/R^2)) inside the ball, 0 outside. Uses the first
/// center.size() axes.
Expr bump(Point center, double radius);
/// Same, but rejects balls whose closure leaves the domain.
Expr bump(Point center, double radius, const DomainBox& domain);
/// Smooth step on one axis: 0 below lo and 1 above hi when rising, mirrored
/// otherwise. Built from f(u) = exp(-1/u) as f(u)/(f(u)+f(1-u)).
Expr step(int axis, double lo, double hi, bool rising);
/// inner on the open ball, 0 elsewhere. inner must vanish to all orders at
/// the boundary.
Expr ball_window(Point center, double radius, Expr inner);
Expr slab_window(int axis, double lo, double hi, Expr inner);
Expr poly(Point center, std::vector<PolyTerm> terms);
Expr jet(int component, int p, MultiIndex q);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator*(double c, const Expr& b);

bool is_zero(const Expr& e);
bool is_constant(const Expr& e, double* value = nullptr);
bool contains_jet(const Expr& e);
/// True when every node is analytic (no Bump/Step/Window).
bool is_analytic(const Expr& e);
/// Highest variable axis referenced, -1 if none.
int max_axis(const Expr& e);
bool depends_on(const Expr& e, int axis);

bool structurally_equal(const Expr& a, const Expr& b);
std::size_t node_count(const Expr& e);

const std::optional<std::vector<Box>>& support_boxes(const Expr& e);
/// Single hull box of the support, nullopt when unknown.
std::optional<Box> support_box(const Expr& e);
/// True when x is certified outside the support (every derivative vanishes there).
bool outside_support(const Expr& e, std::span<const double> x);
/// True when the closed box is certified disjoint from the support.
bool support_misses(const Expr& e, const Box& b);

/// Symbolic partial derivatives with a memo keyed on node identity.
class Differentiator {
 public:
  Expr derive(const Expr& e, int axis);
  Expr derive(const Expr& e, const MultiIndex& p);

 private:
  struct Key {
    const Node* node;
    int axis;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<const void*>()(k.node) * 31u + static_cast<std::size_t>(k.axis);
    }
  };
  std::unordered_map<Key, std::pair<Expr, Expr>, KeyHash> memo_;
};

Expr differentiate(const Expr& e, int axis);
Expr differentiate(const Expr& e, const MultiIndex& p);

enum class EvalStatus : std::uint8_t { Ok, SupportBoundary, NonFinite };

struct EvalResult {
  double value = 0.0;
  EvalStatus status = EvalStatus::Ok;
};

using JetResolver = std::function<double(const Node& jet)>;

double evaluate(const Expr& e, std::span<const double> x, const JetResolver& jets = {});
EvalResult evaluate_checked(const Expr& e, std::span<const double> x,
                            const JetResolver& jets = {});

/// Smooth step profile H(u) used by Step nodes.
double smooth_step(double u);

std::string to_string(const Expr& e);
std::string format_double(double v);

struct ParseOptions {
  bool allow_jets = false;
};

Expr parse_expr(std::string_view text, const ParseOptions& options = {});

}  // namespace foamck
