#pragma once

#include "hmlab/hyperboloid.hpp"
#include "hmlab/random.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace hmlab {

/// Evaluable map H^k -> H^m carrying its claimed coarse-distance constants:
/// c^{-1} d(x,x') - additive <= d(f(x),f(x')) <= c d(x,x') + additive.
/// The constants are certified empirically by estimate_qi_constant.
struct QuasiIsometricMap {
  std::function<HPoint(const HPoint&)> eval;
  double c = 1.0;
  double additive = 0.0;
  int domain_dim = 2;
  int target_dim = 2;
  std::string description;

  HPoint operator()(const HPoint& x) const { return eval(x); }
};

/// Upper half-plane chart of H^2. Used by the shear generator and as an
/// independent algebraic route to distances in tests.
struct HalfPlanePoint {
  double x;
  double y;
};

inline HalfPlanePoint to_half_plane(const HPoint& p) {
  if (p.dim() != 2) throw Error("to_half_plane: expected a point of H^2");
  const Vec& c = p.coords();
  const Scalar denom = c[0] - c[1];
  return HalfPlanePoint{static_cast<double>(c[2] / denom), static_cast<double>(1.0L / denom)};
}

inline HPoint from_half_plane(const HalfPlanePoint& hp, double kappa = 1.0) {
  if (hp.y <= 0.0) throw Error("from_half_plane: y must be positive");
  const double n = hp.x * hp.x + hp.y * hp.y;
  Vec c(3);
  c[0] = (n + 1.0) / (2.0 * hp.y);
  c[1] = (n - 1.0) / (2.0 * hp.y);
  c[2] = hp.x / hp.y;
  return HPoint(std::move(c), kappa);
}

/// Lorentz isometry of H^k: rotations in the spatial coordinate planes
/// composed with a boost of the given translation length along the first
/// spatial axis, then optional post-rotations.
/// Rotation angles act on the planes (1,2), (2,3), ... in order.
struct IsometryParams {
  int dim = 2;
  double translation = 0.0;
  std::vector<double> angles;       // applied before the boost
  std::vector<double> post_angles;  // applied after the boost
};

QuasiIsometricMap make_isometry(const IsometryParams& params);

/// Smooth perturbation of an isometry: f(x) = exp_{base(x)}(s(x) e(base(x)))
/// with |s| <= amplitude, s built from sin(frequency * sum of spatial
/// coordinates), and e a smooth unit tangent field. Stays within the given
/// amplitude of the base isometry everywhere.
QuasiIsometricMap make_perturbed_isometry(const IsometryParams& base, double amplitude,
                                          double frequency);

/// Horocyclic shear of H^2: in the upper half-plane, (x, y) -> (x + lambda*y, y).
/// A non-isometric bi-Lipschitz bijection; the differential in an orthonormal
/// frame is the constant matrix [[1, lambda], [0, 1]], so the operator norm
/// is bounded by sqrt(1 + lambda^2) + |lambda| uniformly.
QuasiIsometricMap make_horocyclic_shear(double lambda);

/// Post-compose f : H^2 -> H^2 with the totally geodesic embedding into H^m.
QuasiIsometricMap compose_with_embedding(const QuasiIsometricMap& f, int m);

/// Empirical distortion envelope; also carries the sample count so reports
/// can state how much evidence backs the constants.
struct DistortionEstimate {
  double c_lower = 1.0;   // smallest grid multiplicative constant covering all samples
  double A_lower = 0.0;   // additive constant (for products: the Burger constant)
  std::uint64_t samples = 0;
};

/// Seeded generator of point pairs (and triples) in a ball of the domain.
struct PairSampler {
  std::uint64_t seed = 1;
  int dim = 2;
  double radius = 8.0;
  double kappa = 1.0;

  std::pair<HPoint, HPoint> pair(std::uint64_t i) const {
    Rng rng(seed, 2 * i);
    Rng rng2(seed, 2 * i + 1);
    return {random_ball_point(rng, dim, radius, kappa),
            random_ball_point(rng2, dim, radius, kappa)};
  }
  std::array<HPoint, 3> triple(std::uint64_t i) const {
    Rng a(seed, 3 * i), b(seed, 3 * i + 1), c(seed, 3 * i + 2);
    return {random_ball_point(a, dim, radius, kappa), random_ball_point(b, dim, radius, kappa),
            random_ball_point(c, dim, radius, kappa)};
  }
};

/// Least (c, additive) on a 0.05-step grid satisfying both defining
/// inequalities on all n sampled pairs (with 1e-9 slack, so exact isometries
/// certify at c = 1, additive = 0). c is minimized first, then additive.
DistortionEstimate estimate_qi_constant(const QuasiIsometricMap& f, const PairSampler& sampler,
                                        std::uint64_t n);

/// Largest observed violation A of the two-sided Gromov-product bound
/// c^{-1}(x1|x2)_{x0} - A <= (f(x1)|f(x2))_{f(x0)} <= c(x1|x2)_{x0} + A
/// over n sampled triples, for the given c.
DistortionEstimate estimate_product_distortion(const QuasiIsometricMap& f, double c,
                                               const PairSampler& sampler, std::uint64_t n);

/// Radial mollifier profile. alpha takes the squared distance and is
/// supported in [0,1]; normalizer C makes the induced measure on H^k a
/// probability measure.
struct BumpProfile {
  std::function<double(double)> alpha;
  double normalizer = 1.0;
  int dim = 2;
  std::string name;
};

/// Default profile: alpha(s) = exp(-1/(1-s)) on [0,1), 0 beyond.
std::function<double(double)> default_bump_alpha();

/// Compute the normalizer by adaptive radial quadrature:
/// C^{-1} = vol(S^{k-1}) * Int_0^1 alpha(t^2) sinh^{k-1}(t) dt.
BumpProfile normalize_bump(std::function<double(double)> alpha, int k, std::string name = "bump",
                           double quad_tol = 1e-12);

struct SmoothingQuadrature {
  int radial_nodes = 16;
  int angular_nodes = 32;
};

/// Center-of-mass smoothing: f~(x) is the weighted Karcher mean of f over a
/// geodesic polar quadrature of the unit ball at x, weighted by the bump.
/// Every evaluation checks d(f(x), f~(x)) <= 2c. Pure evaluator, no caching.
QuasiIsometricMap smooth(const QuasiIsometricMap& f, const BumpProfile& bump,
                         const SmoothingQuadrature& quad = {}, double karcher_tol = 1e-10);

/// Finite-difference bounds on the first and second differences of a map,
/// sampled at n points in B(O, radius). Used to certify smoothed maps.
struct DerivativeBounds {
  double first = 0.0;
  double second = 0.0;
  std::uint64_t samples = 0;
};

DerivativeBounds sample_derivative_bounds(const QuasiIsometricMap& f, std::uint64_t seed,
                                          std::uint64_t n, double radius, double step = 1e-2);

}  // namespace hmlab
