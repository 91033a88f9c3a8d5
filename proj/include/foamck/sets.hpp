#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "foamck/box.hpp"
#include "foamck/poset.hpp"

namespace foamck {

/// Ordered so that the class join is std::max.
enum class SetClass : std::uint8_t { NowhereDense = 0, BaireI = 1, DenseComplement = 2 };

std::string class_name(SetClass c);
SetClass parse_class(const std::string& s);

/// Thickness bookkeeping for slabs inserted around blow-up loci.
struct SlabInfo {
  int axis = 0;
  double center = 0.0;
  double required_width = 0.0;
};

/// A point, or a closed box that is degenerate in some axis. Slabs (thin
/// boxes of width below the checking resolution) carry SlabInfo.
struct SingPrimitive {
  Box box;
  std::optional<SlabInfo> slab;

  static SingPrimitive point(std::span<const double> x);
  static SingPrimitive make_box(Box b);
  static SingPrimitive make_slab(Box b, SlabInfo info);

  bool is_point() const;
  Point as_point() const;
  bool contains(std::span<const double> x) const { return box.contains(x); }
};

/// Lazily enumerated countable family of primitives.
class Enumerator {
 public:
  virtual ~Enumerator() = default;
  /// k-th primitive, or nullopt when the family has fewer than k+1 members.
  virtual std::optional<SingPrimitive> at(std::size_t k) const = 0;
  /// Exact count for finite families.
  virtual std::optional<std::size_t> count() const = 0;
  /// Text form used after "enum" in serialized sets.
  virtual std::string spec() const = 0;
};

using EnumPtr = std::shared_ptr<const Enumerator>;

/// Points whose coordinates are all j/b^L inside the open box, by level L.
EnumPtr adic_points(const DomainBox& ambient, int base);
/// p/q in lowest terms with q <= max_den, inside an interval (1-D only).
EnumPtr rational_points(const DomainBox& ambient, int max_den);
/// Nodes lo + k*spacing strictly inside the box.
EnumPtr grid_points(const DomainBox& ambient, double spacing);
/// Round-robin over several families; exhausted ones are skipped.
EnumPtr interleave(std::vector<EnumPtr> parts);

class SingularitySet {
 public:
  static constexpr std::size_t kDefaultBudget = 256;

  SingularitySet() = default;
  SingularitySet(DomainBox ambient, SetClass cls) : ambient_(std::move(ambient)), class_(cls) {}

  const DomainBox& ambient() const { return ambient_; }
  SetClass set_class() const { return class_; }
  SingularitySet retagged(SetClass cls) const;

  void add(SingPrimitive p);
  /// Attach a countable family; the first `budget` members are materialized.
  void set_enumerator(EnumPtr e, std::size_t budget = kDefaultBudget);

  const std::vector<SingPrimitive>& finite_part() const { return finite_; }
  const EnumPtr& enumerator() const { return enum_; }
  std::size_t budget() const { return budget_; }

  /// Finite primitives followed by the materialized enumeration prefix.
  const std::vector<SingPrimitive>& primitives() const { return all_; }
  /// True when the enumeration has members past the budget.
  bool truncated() const { return truncated_; }
  bool empty() const { return all_.empty() && !truncated_; }

  bool contains(std::span<const double> x) const;
  /// Chebyshev distance from x to the materialized primitives (inf if none).
  double distance_inf(std::span<const double> x) const;
  /// Point list, throws when some primitive is not a point.
  std::vector<Point> points() const;

  std::optional<double> epsilon;

 private:
  void rebuild();

  DomainBox ambient_;
  SetClass class_ = SetClass::NowhereDense;
  std::vector<SingPrimitive> finite_;
  EnumPtr enum_;
  std::size_t budget_ = 0;
  std::vector<SingPrimitive> all_;
  bool truncated_ = false;
};

/// Same ambient, same primitives and same enumeration spec.
bool same_set(const SingularitySet& a, const SingularitySet& b);

enum class DenseOutcome : std::uint8_t { Dense, NotDense, Inconclusive };

enum class SampleMode : std::uint8_t { Jittered, GridNodes };

struct DenseCheckOptions {
  SampleMode mode = SampleMode::Jittered;
  int samples_per_cell = 8;
  std::size_t sample_budget = 50'000'000;
  bool parallel = true;
  bool keep_witnesses = false;
};

struct DenseCheck {
  DenseOutcome outcome = DenseOutcome::Inconclusive;
  std::vector<std::size_t> cells_per_axis;
  /// One witness per cell (row-major), filled when keep_witnesses is set.
  std::vector<Point> witnesses;
  std::optional<Box> failing_cell;
  std::size_t samples_used = 0;
};

DenseCheck is_complement_dense_at(const SingularitySet& s, double h, const DenseCheckOptions& opts = {});

/// Class join, concatenated finite parts, interleaved enumerations. Throws
/// ComplementNotDense when the result fails the check at resolution h.
SingularitySet union_sets(const SingularitySet& a, const SingularitySet& b, double h,
                          const DenseCheckOptions& opts = {});

struct MeasureBound {
  double bound = 0.0;
  bool partial = false;
};

MeasureBound measure_bound(const SingularitySet& s);

/// lambda -> Sigma_lambda over an index poset.
struct LimsupFamily {
  PosetPtr poset;
  std::function<std::vector<SingPrimitive>(const Index&)> sigma;
  std::string name;
};

enum class LimsupOutcome : std::uint8_t { In, Out, Inconclusive };

struct LimsupVerdict {
  LimsupOutcome outcome = LimsupOutcome::Inconclusive;
  std::optional<Index> lambda;  // set for Out
};

/// Examines the first `budget` poset elements E. A probe lambda certifies Out
/// when x misses Sigma_mu for every mu in E above lambda and every join of
/// lambda with E. In when every probe has such a mu containing x.
LimsupVerdict limsup_contains(const LimsupFamily& f, std::span<const double> x, std::size_t budget);

/// Sigma_lambda = Sigma for every lambda in N.
LimsupFamily constant_family(const SingularitySet& s);
/// Sigma_A = A over nonvoid finite subsets of the materialized points.
LimsupFamily finite_subset_representation(const SingularitySet& s);

/// Line format: header "sigma ND|BAIRE_I|DENSE l1 u1 ...", then primitives.
std::string to_text(const SingularitySet& s);
SingularitySet parse_sigma(std::string_view text);
SingularitySet load_sigma(const std::string& path);

}  // namespace foamck
