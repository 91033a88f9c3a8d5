#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "foamck/expr.hpp"
#include "foamck/poset.hpp"
#include "foamck/sets.hpp"

namespace foamck {

/// w = (w_lambda | lambda in Lambda), materialized lazily and memoized.
class Net {
 public:
  using TermFn = std::function<Expr(const Index&)>;

  Net() = default;
  Net(PosetPtr poset, TermFn term, std::string label = {});

  const PosetPtr& poset() const { return state_->poset; }
  const std::string& label() const { return state_->label; }
  Expr term(const Index& lambda) const;

 private:
  struct State {
    PosetPtr poset;
    TermFn term;
    std::string label;
    std::mutex mu;
    std::map<Index, Expr> memo;
  };
  std::shared_ptr<State> state_;
};

Net diagonal_embed(const Expr& psi, PosetPtr poset);
Net net_add(const Net& a, const Net& b);
/// Termwise a - b; common summands cancel so that u - u is the zero net.
Net net_sub(const Net& a, const Net& b);
Net net_mul(const Net& a, const Net& b);
Net net_scale(const Net& a, double c);
Net net_derive(const Net& a, const MultiIndex& p);

/// a - b with shared top-level summands removed.
Expr subtract(const Expr& a, const Expr& b);

enum class Outcome : std::uint8_t { Verified, Refuted, Inconclusive };
std::string outcome_name(Outcome o);

struct Certificate {
  Point x;
  Index lambda;
  /// Open boxes Delta_mu (I-kinds) keyed by the successor mu examined.
  std::vector<std::pair<Index, Box>> deltas;
  bool numeric = false;
};

struct Witness {
  Point x;
  Index mu;
  MultiIndex p;
  double value = 0.0;
  std::string reason;
};

struct Budgets {
  std::size_t samples = 0;
  int max_order = 0;
  std::size_t tail = 0;
  std::size_t terms_examined = 0;
};

struct MembershipVerdict {
  Outcome outcome = Outcome::Inconclusive;
  std::vector<Certificate> certificates;
  std::optional<Witness> witness;
  std::vector<Point> inconclusive_samples;
  Budgets budgets;
  std::string ideal;
};

struct CheckOptions {
  int max_order = 2;
  std::size_t tail = 32;
  /// Refuse numeric zeros as satisfactions.
  bool certificate_only = false;
  double zero_tol = 1e-12;
  bool parallel = true;
};

MembershipVerdict check_J_membership(const Net& w, const SingularitySet& sigma, const std::vector<Point>& samples,
                                     const CheckOptions& opts = {});

MembershipVerdict check_I_membership(const Net& w, const SingularitySet& sigma, const LimsupFamily& rep,
                                     const std::vector<Point>& samples, const CheckOptions& opts = {});

/// Replays a refutation witness: true when it still violates the condition.
bool replay_witness(const Net& w, const Witness& wit, double zero_tol = 1e-12);

// ---------------------------------------------------------------------------
// Ideal tags and generalized functions

enum class IdealKind : std::uint8_t { J, I };

struct IdealMember {
  SingularitySet sigma;
  std::optional<LimsupFamily> rep;  // required for I-kinds
};

struct IdealSpec {
  IdealKind kind = IdealKind::J;
  bool family = false;
  SetClass set_class = SetClass::NowhereDense;
  std::vector<IdealMember> members;
  PosetPtr poset;

  std::string label() const;
};

IdealSpec single_ideal(IdealKind kind, const SingularitySet& sigma, PosetPtr poset,
                       std::optional<LimsupFamily> rep = std::nullopt);
IdealSpec family_ideal(IdealKind kind, SetClass cls, std::vector<IdealMember> members, PosetPtr poset);

MembershipVerdict check_membership(const Net& w, const IdealSpec& ideal, const std::vector<Point>& samples,
                                   const CheckOptions& opts = {});

struct GenFunction {
  Net net;
  IdealSpec tag;
};

GenFunction make_gen(Net net, IdealSpec tag);
/// Empty when the inclusion from a's ideal into b's ideal is derivable.
std::optional<std::string> retag_obstruction(const IdealSpec& from, const IdealSpec& to);
GenFunction retag(const GenFunction& u, const IdealSpec& target);
GenFunction derive(const GenFunction& u, const MultiIndex& p);
MembershipVerdict equal_modulo_ideal(const GenFunction& u, const GenFunction& v, const std::vector<Point>& samples,
                                     const CheckOptions& opts = {});

// ---------------------------------------------------------------------------
// Bump nets around enumerated points

struct RadiusSchedule {
  enum class Kind : std::uint8_t { Geometric, Explicit } kind = Kind::Geometric;
  double r0 = 0.25;
  double ratio = 0.5;
  std::vector<double> radii;

  /// Radius for a level; explicit lists continue by halving past their end.
  double at(std::int64_t level) const;
  void validate() const;
};

struct ExampleOne {
  std::shared_ptr<const ExampleOnePoset> poset;
  Net net;
  std::vector<Point> points;
  LimsupFamily representation;  // Sigma_(A,k) = A
};

/// w*_(A,k) = sum over x in A of bump(x, r_k), each radius clipped to half
/// the distance from x to the domain boundary.
ExampleOne example_one_net(const SingularitySet& sigma, const RadiusSchedule& schedule);

/// Sigma_(A,k) = {x_i : i <= max A}, another representation of the same Sigma.
LimsupFamily prefix_representation(const ExampleOne& ex);
/// Sigma_(A,k) = A plus extra points (a representation of Sigma union extra).
LimsupFamily augmented_representation(const ExampleOne& ex, const std::vector<Point>& extra);

struct Lemma2Report {
  bool holds = true;
  MembershipVerdict small;
  MembershipVerdict large;
};

/// w verified for I(Sigma) on samples outside Sigma' must stay verified for I(Sigma').
Lemma2Report lemma2_monotonicity_check(const Net& w, const SingularitySet& sigma, const LimsupFamily& rep,
                                       const SingularitySet& sigma_big, const LimsupFamily& rep_big,
                                       const std::vector<Point>& samples, const CheckOptions& opts = {});

}  // namespace foamck
