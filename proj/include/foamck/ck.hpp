#pragma once

#include <complex>
#include <span>
#include <vector>

#include "foamck/box.hpp"
#include "foamck/expr.hpp"
#include "foamck/series.hpp"

namespace foamck {

/// D_t^m U_k = G_k(t, y, jets) on the open box X, data posed on t = t0.
/// Jet J.k[p,(q)] stands for D_t^p D_y^q U_k.
struct PdeSystem {
  int dim = 1;
  int order = 1;
  int components = 1;
  std::vector<Expr> rhs;
  DomainBox domain;
  double t0 = 0.0;
  /// Optional closed-form solution per component, used only for reporting.
  std::vector<Expr> oracle;
};

/// g[k][p] = D_t^p U_k(t0, y) for p < m, as expressions in y only.
struct InitialData {
  std::vector<std::vector<Expr>> g;
};

/// Throws PreconditionError when a jet breaks 0 <= p < m, p + |q| <= m, or
/// when data and right-hand sides do not fit the declared shape.
void validate_pde(const PdeSystem& pde);
void validate_data(const PdeSystem& pde, const InitialData& data);

template <class T>
using SeriesVec = std::vector<Series<T>>;

/// Fills the coefficients with t-degree >= m from those with t-degree < m by
/// matching D_t^m U = G degree by degree. Throws RadiusCollapse on overflow.
template <class T>
SeriesVec<T> ck_complete(const PdeSystem& pde, SeriesVec<T> u);

/// Local analytic solution at a point of the initial hypersurface.
SeriesVec<double> ck_solve_local(const PdeSystem& pde, const InitialData& data,
                                 const Point& center, int order);

/// Re-expands at center + shift and recomputes the t-degree >= m part.
template <class T>
SeriesVec<T> continue_solution(const PdeSystem& pde, const SeriesVec<T>& s,
                               std::span<const T> shift);

struct RadiusEstimate {
  std::vector<double> raw;  // per axis, may be infinite
  Box box;                  // center +- sigma*raw, clipped to the domain closure
  bool low_order = false;   // fewer than 4 orders, estimate is rough
};

template <class T>
RadiusEstimate estimate_radius(const Series<T>& s, const DomainBox& domain, double sigma);

/// Radius along one axis: root test on the pure-axis coefficient diagonal.
template <class T>
double axis_radius(const Series<T>& s, int axis);

/// Ratio test on the same diagonal; exact for a simple pole on the axis.
template <class T>
double pole_distance(const Series<T>& s, int axis);

/// Root test restricted to pure orders lo..hi along one axis. After many
/// continuation steps only the lower degrees stay resolved.
template <class T>
double axis_radius_band(const Series<T>& s, int axis, int lo, int hi);

struct SeriesValue {
  double value = 0.0;
  bool extrapolated = false;
};

SeriesValue evaluate_series(const TruncatedSeries& s, std::span<const double> x);

extern template SeriesVec<double> ck_complete(const PdeSystem&, SeriesVec<double>);
extern template SeriesVec<std::complex<double>> ck_complete(const PdeSystem&, SeriesVec<std::complex<double>>);
extern template SeriesVec<double> continue_solution(const PdeSystem&, const SeriesVec<double>&,
                                                    std::span<const double>);
extern template SeriesVec<std::complex<double>> continue_solution(
    const PdeSystem&, const SeriesVec<std::complex<double>>&, std::span<const std::complex<double>>);
extern template RadiusEstimate estimate_radius(const Series<double>&, const DomainBox&, double);
extern template RadiusEstimate estimate_radius(const Series<std::complex<double>>&, const DomainBox&, double);
extern template double axis_radius(const Series<double>&, int);
extern template double axis_radius(const Series<std::complex<double>>&, int);
extern template double pole_distance(const Series<double>&, int);
extern template double pole_distance(const Series<std::complex<double>>&, int);
extern template double axis_radius_band(const Series<double>&, int, int, int);
extern template double axis_radius_band(const Series<std::complex<double>>&, int, int, int);

}  // namespace foamck
