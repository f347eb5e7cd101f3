#include "hmlab/hyperboloid.hpp"

namespace hmlab {

HPoint karcher_mean(std::span<const WeightedPoint> points, const HPoint& init, double tol,
                    int max_iterations) {
  if (points.empty()) throw Error("karcher_mean: empty point set");
  double wsum = 0.0;
  for (const auto& wp : points) {
    if (wp.weight < 0.0) throw Error("karcher_mean: negative weight");
    detail::require_same_space(wp.point, init, "karcher_mean");
    wsum += wp.weight;
  }
  if (!(wsum > 0.0)) throw Error("karcher_mean: weights sum to zero");

  HPoint y = init;
  double residual = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vec g = Vec::Zero(y.coords().size());
    // Hessian eigenvalues of the objective sit in [1, L] with
    // L = sum w_i d_i coth(d_i) / sum w; damp the gradient step accordingly.
    // A unit step oscillates once the points spread beyond diameter ~2.
    Scalar L = 0.0L;
    for (const auto& wp : points) {
      if (wp.weight == 0.0) continue;
      const TangentVector lg = log_map(y, wp.point);
      g += wp.weight * lg.components();
      const Scalar d = lg.coord_norm();
      L += wp.weight * (d > 1e-4L ? d / std::tanh(d) : 1.0L + d * d / 3.0L);
    }
    g /= wsum;
    L /= wsum;
    TangentVector step(y, std::move(g));
    residual = step.norm();
    if (residual <= tol) return y;
    y = exp_map(y, step.scaled(2.0L / (1.0L + L)));
  }
  throw KarcherError(residual, max_iterations);
}

std::vector<TangentVector> tangent_frame(const HPoint& p) {
  const int k = p.dim();
  std::vector<TangentVector> frame;
  frame.reserve(k);
  for (int axis = 1; axis <= k; ++axis) {
    Vec e = Vec::Zero(k + 1);
    e[axis] = 1.0;
    TangentVector v(p, std::move(e));  // ctor projects onto the tangent space
    Vec w = v.components();
    for (const auto& f : frame) w -= minkowski_dot(f.components(), w) * f.components();
    TangentVector u(p, std::move(w));
    const double n = u.coord_norm();
    if (n < 1e-12) throw Error("tangent_frame: degenerate projection");
    frame.push_back(u.scaled(1.0 / n));
  }
  return frame;
}

}  // namespace hmlab
