#pragma once

#include "hmlab/hyperboloid.hpp"

#include <cstdint>

namespace hmlab {

/// Counter-based splitmix64 stream. Every draw is a pure function of
/// (seed, stream, counter), so sampling is reproducible independently of
/// evaluation order or thread scheduling.
class Rng {
public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
  std::uint64_t state_;
};

/// Uniform point (w.r.t. the Riemannian volume) in the ball B(origin, radius)
/// of H^k for k = 2 or 3.
inline HPoint random_ball_point(Rng& rng, int k, double radius, double kappa = 1.0) {
  if (k < 2 || k > 3) throw Error("random_ball_point: only H^2 and H^3 supported");
  const double r0 = radius / kappa;  // coordinate radius
  double t;
  if (k == 2) {
    // radial density sinh(t): invert (cosh t - 1)/(cosh r - 1)
    t = acosh1p(rng.uniform() * (std::cosh(r0) - 1.0));
  } else {
    // radial density sinh^2(t): invert F(t) = (sinh(2t)/2 - t) by bisection
    const double u = rng.uniform();
    auto F = [](double s) { return 0.5 * std::sinh(2.0 * s) - s; };
    const double target = u * F(r0);
    double lo = 0.0, hi = r0;
    for (int i = 0; i < 60; ++i) {
      const double mid = 0.5 * (lo + hi);
      (F(mid) < target ? lo : hi) = mid;
    }
    t = 0.5 * (lo + hi);
  }
  Vec dir = Vec::Zero(k);
  if (k == 2) {
    const double phi = 2.0 * M_PI * rng.uniform();
    dir[0] = std::cos(phi);
    dir[1] = std::sin(phi);
  } else {
    const double z = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * M_PI * rng.uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    dir[0] = s * std::cos(phi);
    dir[1] = s * std::sin(phi);
    dir[2] = z;
  }
  Vec comp = Vec::Zero(k + 1);
  comp.tail(k) = dir * t;
  const HPoint O = HPoint::origin(k, kappa);
  return exp_map(O, TangentVector(O, std::move(comp)));
}

}  // namespace hmlab
