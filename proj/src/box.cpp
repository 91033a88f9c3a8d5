#include "foamck/box.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "foamck/error.hpp"

namespace foamck {

int order_of(const MultiIndex& p) {
  int s = 0;
  for (int v : p) s += v;
  return s;
}

MultiIndex add_indices(const MultiIndex& a, const MultiIndex& b) {
  if (a.size() != b.size()) throw MismatchError("multi-index length mismatch");
  MultiIndex out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Box Box::around(std::span<const double> center, double radius) {
  std::vector<Interval> axes;
  axes.reserve(center.size());
  for (double c : center) axes.push_back({c - radius, c + radius});
  return Box(std::move(axes));
}

bool Box::empty() const {
  return std::any_of(axes_.begin(), axes_.end(), [](const Interval& iv) { return iv.lo > iv.hi; });
}

bool Box::contains(std::span<const double> x) const {
  const std::size_t n = std::min(axes_.size(), x.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] < axes_[i].lo || x[i] > axes_[i].hi) return false;
  }
  return true;
}

bool Box::degenerate() const {
  return std::any_of(axes_.begin(), axes_.end(), [](const Interval& iv) { return iv.lo == iv.hi; });
}

double Box::volume(std::size_t dim) const {
  double v = 1.0;
  for (std::size_t i = 0; i < dim; ++i) v *= std::max(0.0, bound(i).length());
  return v;
}

double Box::distance_inf(std::span<const double> x) const {
  double d = 0.0;
  const std::size_t n = std::min(axes_.size(), x.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] < axes_[i].lo) d = std::max(d, axes_[i].lo - x[i]);
    else if (x[i] > axes_[i].hi) d = std::max(d, x[i] - axes_[i].hi);
  }
  return d;
}

double Box::distance(const Box& other) const {
  const std::size_t n = std::max(size(), other.size());
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Interval a = bound(i);
    const Interval b = other.bound(i);
    double gap = 0.0;
    if (a.hi < b.lo) gap = b.lo - a.hi;
    else if (b.hi < a.lo) gap = a.lo - b.hi;
    s += gap * gap;
  }
  return std::sqrt(s);
}

bool Box::intersects(const Box& other) const {
  const std::size_t n = std::max(size(), other.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Interval a = bound(i);
    const Interval b = other.bound(i);
    if (a.hi < b.lo || b.hi < a.lo) return false;
  }
  return true;
}

std::optional<Box> Box::intersect(const Box& a, const Box& b) {
  const std::size_t n = std::max(a.size(), b.size());
  std::vector<Interval> axes(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Interval x = a.bound(i);
    const Interval y = b.bound(i);
    axes[i] = {std::max(x.lo, y.lo), std::min(x.hi, y.hi)};
    if (axes[i].lo > axes[i].hi) return std::nullopt;
  }
  return Box(std::move(axes));
}

Box Box::hull(const Box& a, const Box& b) {
  // An axis missing from either box is unbounded, so the hull drops it too.
  const std::size_t n = std::min(a.size(), b.size());
  std::vector<Interval> axes(n);
  for (std::size_t i = 0; i < n; ++i) {
    axes[i] = {std::min(a.axes_[i].lo, b.axes_[i].lo), std::max(a.axes_[i].hi, b.axes_[i].hi)};
  }
  return Box(std::move(axes));
}

DomainBox::DomainBox(std::vector<Interval> axes) : axes_(std::move(axes)) {
  if (axes_.empty()) throw PreconditionError("domain box needs at least one axis");
  for (const auto& iv : axes_) {
    if (!(iv.lo < iv.hi)) throw PreconditionError("domain box axis must satisfy lower < upper");
  }
}

bool DomainBox::contains(std::span<const double> x) const {
  if (x.size() != axes_.size()) return false;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (!(x[i] > axes_[i].lo && x[i] < axes_[i].hi)) return false;
  }
  return true;
}

double DomainBox::min_length() const {
  double m = kInf;
  for (const auto& iv : axes_) m = std::min(m, iv.length());
  return m;
}

std::optional<Box> DomainBox::shrunk(double d) const {
  std::vector<Interval> axes;
  for (const auto& iv : axes_) {
    if (iv.lo + d > iv.hi - d) return std::nullopt;
    axes.push_back({iv.lo + d, iv.hi - d});
  }
  return Box(std::move(axes));
}

double DomainBox::boundary_distance(std::span<const double> x) const {
  double d = kInf;
  for (std::size_t i = 0; i < axes_.size() && i < x.size(); ++i) {
    d = std::min({d, x[i] - axes_[i].lo, axes_[i].hi - x[i]});
  }
  return d;
}

std::string format_point(std::span<const double> x) {
  std::string out = "(";
  char buf[64];
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (i) out += ", ";
    auto res = std::to_chars(buf, buf + sizeof buf, x[i]);
    out.append(buf, res.ptr);
  }
  return out + ")";
}

}  // namespace foamck
