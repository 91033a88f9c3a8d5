#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace foamck {

using Point = std::vector<double>;
using MultiIndex = std::vector<int>;

constexpr double kInf = std::numeric_limits<double>::infinity();

int order_of(const MultiIndex& p);
MultiIndex add_indices(const MultiIndex& a, const MultiIndex& b);

struct Interval {
  double lo = -kInf;
  double hi = kInf;

  double length() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

/// Closed axis-aligned box. Axes past size() are unbounded, which lets a
/// half-space on axis k be stored with k+1 entries.
class Box {
 public:
  Box() = default;
  explicit Box(std::vector<Interval> axes) : axes_(std::move(axes)) {}

  static Box around(std::span<const double> center, double radius);

  std::size_t size() const { return axes_.size(); }
  const Interval& axis(std::size_t i) const { return axes_[i]; }
  Interval bound(std::size_t i) const { return i < axes_.size() ? axes_[i] : Interval{}; }
  const std::vector<Interval>& axes() const { return axes_; }

  bool empty() const;
  bool contains(std::span<const double> x) const;
  bool degenerate() const;
  double volume(std::size_t dim) const;

  /// Chebyshev distance from x to the box, 0 when x is inside.
  double distance_inf(std::span<const double> x) const;
  /// Euclidean distance between two boxes (0 when they meet).
  double distance(const Box& other) const;
  bool intersects(const Box& other) const;

  static std::optional<Box> intersect(const Box& a, const Box& b);
  static Box hull(const Box& a, const Box& b);

  bool operator==(const Box&) const = default;

 private:
  std::vector<Interval> axes_;
};

/// Open box X = (l1,u1) x ... x (ln,un). Axis 0 is t, axes 1..n-1 are y.
class DomainBox {
 public:
  DomainBox() = default;
  explicit DomainBox(std::vector<Interval> axes);

  std::size_t dim() const { return axes_.size(); }
  const Interval& axis(std::size_t i) const { return axes_[i]; }
  const std::vector<Interval>& axes() const { return axes_; }
  bool contains(std::span<const double> x) const;
  double min_length() const;
  Box closure() const { return Box(axes_); }
  /// Closed box obtained by moving every face inward by d.
  std::optional<Box> shrunk(double d) const;
  /// Chebyshev distance from an interior point to the boundary.
  double boundary_distance(std::span<const double> x) const;
  bool operator==(const DomainBox&) const = default;

 private:
  std::vector<Interval> axes_;
};

std::string format_point(std::span<const double> x);

}  // namespace foamck
