#pragma once
// Test-side reference values. Nothing here calls into the library's
// numerical code; each oracle is computed from first principles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace oracle {

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

/// Taylor coefficients of cos t at 0: 1, 0, -1/2, 0, 1/24, ...
inline std::vector<double> cos_table(int n) {
  std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
  for (int k = 0; k <= n; k += 2) c[static_cast<std::size_t>(k)] = ((k / 2) % 2 ? -1.0 : 1.0) / factorial(k);
  return c;
}

/// n-th derivative of sin at y.
inline double sin_derivative(int n, double y) {
  switch (n % 4) {
    case 0:
      return std::sin(y);
    case 1:
      return std::cos(y);
    case 2:
      return -std::sin(y);
    default:
      return -std::cos(y);
  }
}

/// Coefficient of (t-t0)^a (y-y0)^b for U = g(y + t) with g = sin.
inline double transport_sin_coef(int a, int b, double t0, double y0) {
  return sin_derivative(a + b, y0 + t0) / (factorial(a) * factorial(b));
}

/// Fourth order central difference of f along axis.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 int axis, double step) {
  const auto i = static_cast<std::size_t>(axis);
  const double x0 = x[i];
  auto at = [&](double d) {
    x[i] = x0 + d;
    return f(x);
  };
  return (-at(2 * step) + 8 * at(step) - 8 * at(-step) + at(-2 * step)) / (12 * step);
}

/// Repeated differences for a mixed derivative given as a list of axes.
inline double mixed_difference(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                               std::vector<int> axes, double step) {
  if (axes.empty()) return f(x);
  const int last = axes.back();
  axes.pop_back();
  auto inner = [&](const std::vector<double>& y) { return mixed_difference(f, y, axes, step); };
  return central_difference(inner, x, last, step);
}

/// x == j / 2^L for some L <= max_level, checked in exact binary arithmetic.
inline bool is_dyadic(double x, int max_level) {
  double scaled = x;
  for (int l = 0; l <= max_level; ++l) {
    if (scaled == std::floor(scaled)) return true;
    scaled *= 2.0;
  }
  return false;
}

/// x == p/q with q <= max_den, up to rounding of the division.
inline bool is_rational_with_den(double x, int max_den) {
  for (int q = 1; q <= max_den; ++q) {
    const double p = std::round(x * q);
    if (std::abs(p / q - x) < 1e-15) return true;
  }
  return false;
}

/// Count of p/q in (0, 1) in lowest terms with q <= max_den (Euler phi sum).
inline std::size_t farey_interior_count(int max_den) {
  std::size_t n = 0;
  for (int q = 2; q <= max_den; ++q) {
    for (int p = 1; p < q; ++p) {
      int a = p, b = q;
      while (b) {
        const int r = a % b;
        a = b;
        b = r;
      }
      if (a == 1) ++n;
    }
  }
  return n;
}

inline double riccati_g(double y) { return 1.0 / (2.0 + std::sin(y)); }
inline double riccati_u(double t, double y) {
  const double g = riccati_g(y);
  return g / (1.0 - t * g);
}

/// Hausdorff distance (Chebyshev metric) between a set of axis-aligned boxes
/// in (t, y) and the curve t = c(y) sampled on [y0, y1].
struct Box2 {
  double t0, t1, y0, y1;
};

inline double box_point_distance(const Box2& b, double t, double y) {
  const double dt = std::max({b.t0 - t, 0.0, t - b.t1});
  const double dy = std::max({b.y0 - y, 0.0, y - b.y1});
  return std::max(dt, dy);
}

inline double hausdorff_boxes_curve(const std::vector<Box2>& boxes, const std::function<double(double)>& curve,
                                    double ylo, double yhi, int samples) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= samples; ++i) {
    const double y = ylo + (yhi - ylo) * i / samples;
    pts.emplace_back(curve(y), y);
  }
  double d1 = 0.0;  // curve -> boxes
  for (const auto& [t, y] : pts) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : boxes) best = std::min(best, box_point_distance(b, t, y));
    d1 = std::max(d1, best);
  }
  double d2 = 0.0;  // boxes -> curve, probed at box corners and centers
  for (const auto& b : boxes) {
    const double ts[] = {b.t0, b.t1, 0.5 * (b.t0 + b.t1)};
    const double ys[] = {b.y0, b.y1, 0.5 * (b.y0 + b.y1)};
    for (double t : ts) {
      for (double y : ys) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [ct, cy] : pts) best = std::min(best, std::max(std::abs(ct - t), std::abs(cy - y)));
        d2 = std::max(d2, best);
      }
    }
  }
  return std::max(d1, d2);
}

/// Deterministic generator shared by the property tests.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  bool coin() { return integer(0, 1) == 1; }
  std::mt19937_64& engine() { return rng_; }

  /// Random analytic expression text in t and y1 with bounded depth.
  /// With one_dim set only t appears.
  std::string analytic(int depth, bool one_dim = false) {
    if (depth <= 0 || integer(0, 3) == 0) {
      switch (integer(0, 3)) {
        case 0:
          return "t";
        case 1:
          return one_dim ? "t" : "y1";
        case 2:
          return std::to_string(integer(1, 5));
        default:
          return "0.5";
      }
    }
    const std::string a = analytic(depth - 1, one_dim);
    const std::string b = analytic(depth - 1, one_dim);
    switch (integer(0, 6)) {
      case 0:
        return "(" + a + " + " + b + ")";
      case 1:
        return "(" + a + " - " + b + ")";
      case 2:
        return "(" + a + " * " + b + ")";
      case 3:
        return "sin(" + a + ")";
      case 4:
        return "cos(" + a + ")";
      case 5:
        return "exp(0.3 * " + a + ")";
      default:
        return "(" + a + ")^2";
    }
  }

 private:
  std::mt19937_64 rng_;
};

}  // namespace oracle
