#pragma once

#include "hmlab/bound_check.hpp"
#include "hmlab/hyperboloid.hpp"

#include <optional>

namespace hmlab {

/// Geodesic triangle with the side lengths and the Gromov product at the
/// apex vertex cached. Vertex 0 is the apex for all angle checks.
struct Triangle {
  HPoint x0, x1, x2;
  double l0, l1, l2;  // l0 = d(x1,x2), l1 = d(x0,x1), l2 = d(x0,x2)
  double m;           // Gromov product (x1|x2)_{x0}

  Triangle(HPoint a0, HPoint a1, HPoint a2)
      : x0(std::move(a0)), x1(std::move(a1)), x2(std::move(a2)),
        l0(dist(x1, x2)), l1(dist(x0, x1)), l2(dist(x0, x2)),
        m(0.5 * (l1 + l2 - l0)) {}

  bool degenerate(double min_side = 1e-8) const {
    return l0 < min_side || l1 < min_side || l2 < min_side;
  }

  /// Interior angle at vertex 0 measured from log-map vectors (in the chart
  /// recentered at the vertex, which keeps tiny angles resolvable).
  double angle_at_apex() const { return vertex_angle(x0, x1, x2); }
  /// Interior angle at vertex 1 measured from log-map vectors.
  double angle_at_x1() const { return vertex_angle(x1, x0, x2); }
};

/// Angle at the apex of a curvature -1 plane triangle with the given side
/// lengths, from sin^2(theta/2) = sinh(l1-m)/sinh(l1) * sinh(l2-m)/sinh(l2).
///
/// This closed form is kept as the oracle; lemma verifiers always measure
/// angles from log vectors instead.
inline double plane_triangle_angle(double l0, double l1, double l2) {
  if (l1 <= 1e-8 || l2 <= 1e-8) throw Error("plane_triangle_angle: degenerate side");
  if (l0 > l1 + l2 + 1e-12 || l1 > l0 + l2 + 1e-12 || l2 > l0 + l1 + 1e-12)
    throw Error("plane_triangle_angle: triangle inequality violated");
  const double m = std::max(0.0, 0.5 * (l1 + l2 - l0));
  double s2 = (std::sinh(l1 - m) / std::sinh(l1)) * (std::sinh(l2 - m) / std::sinh(l2));
  s2 = std::min(1.0, std::max(0.0, s2));
  return 2.0 * std::asin(std::sqrt(s2));
}

/// Part a of the triangle angle lemma:
/// (x0|x2)_{x1} >= d(x0,x1) sin^2(theta0/2), with theta0 from log vectors.
inline BoundCheck check_angle_gromov_lower(const Triangle& T, double tol = 1e-9) {
  if (T.degenerate()) throw Error("check_angle_gromov_lower: degenerate triangle");
  const double theta0 = T.angle_at_apex();
  const double s = std::sin(0.5 * theta0);
  const double measured = T.l1 * s * s;
  const double bound = gromov_product(T.x1, T.x0, T.x2);
  return BoundCheck::upper("angle_gromov_lower", measured, bound, tol);
}

/// Part b: theta0 <= 4 exp(-a (x1|x2)_{x0}).
inline BoundCheck check_angle_upper(const Triangle& T, const CurvaturePinching& pinching,
                                    double tol = 1e-9) {
  if (T.degenerate()) throw Error("check_angle_upper: degenerate triangle");
  const double measured = T.angle_at_apex();
  const double bound = 4.0 * std::exp(-pinching.a * T.m);
  return BoundCheck::upper("angle_upper_exp", measured, bound, tol);
}

/// Part c: when min((x0|x1)_{x2}, (x0|x2)_{x1}) >= 1,
/// theta0 >= exp(-(x1|x2)_{x0}). NotApplicable when the gate fails.
inline BoundCheck check_angle_lower(const Triangle& T, double tol = 1e-9) {
  if (T.degenerate()) throw Error("check_angle_lower: degenerate triangle");
  const double g1 = gromov_product(T.x2, T.x0, T.x1);
  const double g2 = gromov_product(T.x1, T.x0, T.x2);
  if (std::min(g1, g2) < 1.0) return BoundCheck::not_applicable("angle_lower_exp");
  const double measured = std::exp(-T.m);
  const double bound = T.angle_at_apex();
  return BoundCheck::upper("angle_lower_exp", measured, bound, tol);
}

struct HessianCheck {
  BoundCheck transverse_lower;  // a coth(a d) <= second difference
  BoundCheck transverse_upper;  // second difference <= b coth(b d)
  BoundCheck radial_zero;       // |second difference along the radial line| ~ 0
  BoundCheck square_convexity;  // second difference of d^2 >= 2
  double transverse_value = 0.0;
  double radial_value = 0.0;
  double square_value = 0.0;
};

/// Finite-difference verification of the Hessian bounds for the distance
/// function d_{x0} and its square at the probe point x.
/// Fourth-order central stencils with step h; tolerance tol covers the
/// truncation + roundoff budget.
HessianCheck check_hessian_dist(const HPoint& x0, const HPoint& x, const CurvaturePinching& pinching,
                                double h = 1e-3, double tol = 1e-4);

/// Gradient bound (M/a) * d(x, boundary) for a function with |Laplacian| <= M
/// vanishing on the boundary sphere.
inline double laplacian_bound_value(double M, double a, double dist_to_boundary) {
  if (a <= 0.0) throw Error("laplacian_bound_value: need a > 0");
  if (M < 0.0 || dist_to_boundary < 0.0)
    throw Error("laplacian_bound_value: negative magnitude");
  return (M / a) * dist_to_boundary;
}

}  // namespace hmlab
