#include "hmlab/comparison.hpp"

namespace hmlab {

namespace {

// Fourth-order second difference of f along the geodesic through x with
// unit direction w.
template <typename F>
double second_difference(const F& f, const HPoint& x, const TangentVector& w, double h) {
  const double fp2 = f(exp_map(x, w.scaled(2.0 * h)));
  const double fp1 = f(exp_map(x, w.scaled(h)));
  const double f0 = f(x);
  const double fm1 = f(exp_map(x, w.scaled(-h)));
  const double fm2 = f(exp_map(x, w.scaled(-2.0 * h)));
  return (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h);
}

}  // namespace

HessianCheck check_hessian_dist(const HPoint& x0, const HPoint& x,
                                const CurvaturePinching& pinching, double h, double tol) {
  const double d = dist(x0, x);
  if (d < 1e-6) throw Error("check_hessian_dist: probe point coincides with the center");

  auto dist_fn = [&x0](const HPoint& p) { return dist(x0, p); };
  auto dist_sq_fn = [&x0](const HPoint& p) {
    const double v = dist(x0, p);
    return v * v;
  };

  // Radial and transverse directions of unit metric length.
  TangentVector radial = log_map(x, x0).scaled(1.0 / log_map(x, x0).coord_norm());
  const auto frame = tangent_frame(x);
  TangentVector transverse = TangentVector::zero(x);
  double best = -1.0;
  for (const auto& e : frame) {
    Vec w = e.components() -
            minkowski_dot(radial.components(), e.components()) * radial.components();
    TangentVector cand(x, std::move(w));
    const double n = cand.coord_norm();
    if (n > best) {
      best = n;
      transverse = cand.scaled(1.0 / n);
    }
  }
  if (best < 1e-6) throw Error("check_hessian_dist: failed to build a transverse direction");
  // Steps below are taken in metric length: rescale coordinate-unit
  // directions by 1/kappa.
  const double inv_kappa = 1.0 / x.kappa();
  radial = radial.scaled(inv_kappa);
  transverse = transverse.scaled(inv_kappa);

  HessianCheck out;
  out.transverse_value = second_difference(dist_fn, x, transverse, h);
  out.radial_value = second_difference(dist_fn, x, radial, h);
  out.square_value = second_difference(dist_sq_fn, x, transverse, h);

  const double lower = pinching.a / std::tanh(pinching.a * d);
  const double upper = pinching.b / std::tanh(pinching.b * d);
  out.transverse_lower = BoundCheck::upper("hessian_dist_transverse_lower", lower,
                                           out.transverse_value, tol);
  out.transverse_upper = BoundCheck::upper("hessian_dist_transverse_upper",
                                           out.transverse_value, upper, tol);
  out.radial_zero = BoundCheck::upper("hessian_dist_radial_zero", std::abs(out.radial_value),
                                      0.0, tol);
  out.square_convexity = BoundCheck::upper("hessian_dist_square_convexity", 2.0,
                                           out.square_value, tol);
  return out;
}

}  // namespace hmlab
