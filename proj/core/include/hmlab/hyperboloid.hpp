#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hmlab {

/// Coordinate scalar of the geometry kernel. Extended precision: transverse
/// position resolution in the hyperboloid chart scales like cosh(r) * ulp,
/// so 80-bit storage keeps sub-1e-9 geometry out to radius ~20 where plain
/// double already loses it near radius 14.
using Scalar = long double;

/// Ambient Minkowski coordinate vector. Sized at runtime, capacity bounded
/// so that small-dimensional points never touch the heap.
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, 9, 1>;

inline constexpr int kMaxAmbientDim = 9;

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Minkowski bilinear form <u,v> = -u0 v0 + sum_i ui vi.
inline Scalar minkowski_dot(const Vec& u, const Vec& v) {
  Scalar s = -u[0] * v[0];
  for (int i = 1; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

/// <u-v, u-v> in the Minkowski form. Cancellation-free for nearly coincident
/// points (the difference is taken before any large product forms).
inline Scalar minkowski_chord_sq(const Vec& u, const Vec& v) {
  const Scalar d0 = u[0] - v[0];
  Scalar s = -d0 * d0;
  for (int i = 1; i < u.size(); ++i) {
    const Scalar di = u[i] - v[i];
    s += di * di;
  }
  return s;
}

/// acosh(1 + e) for e >= 0, with a series branch near 0 so nearly coincident
/// points keep relative accuracy. Negative drift clamps to 0.
inline Scalar acosh1p(Scalar e) {
  if (e <= 0.0L) return 0.0L;
  if (e < 1e-10L) {
    // acosh(1+e) = sqrt(2e) * (1 - e/12 + 3e^2/160 - ...)
    return std::sqrt(2.0L * e) * (1.0L - e / 12.0L + 3.0L * e * e / 160.0L);
  }
  return std::acosh(1.0L + e);
}

/// Point of the hyperboloid model of H^k embedded in Minkowski space R^{1,k}.
///
/// Coordinates are dimensionless and satisfy <x,x> = -1, x0 >= 1; the metric
/// carries a length scale kappa_len so that the sectional curvature is
/// -1/kappa_len^2. Construction renormalizes onto the sheet in graph form,
/// recomputing x0 from the spatial part: rescaling by the measured drift
/// would inject a cosh^2(r)-amplified radial error instead.
class HPoint {
public:
  HPoint(Vec coords, double kappa_len = 1.0) : x_(std::move(coords)), kappa_(kappa_len) {
    if (x_.size() < 3 || x_.size() > kMaxAmbientDim)
      throw Error("HPoint: ambient dimension out of range");
    if (kappa_ <= 0.0) throw Error("HPoint: curvature scale must be positive");
    renormalize();
  }

  /// Base point (1,0,...,0) of H^k.
  static HPoint origin(int k, double kappa_len = 1.0) {
    Vec v = Vec::Zero(k + 1);
    v[0] = 1.0L;
    return HPoint(std::move(v), kappa_len);
  }

  int dim() const { return static_cast<int>(x_.size()) - 1; }
  const Vec& coords() const { return x_; }
  double kappa() const { return kappa_; }

  bool same_space(const HPoint& o) const {
    return x_.size() == o.x_.size() && kappa_ == o.kappa_;
  }

private:
  void renormalize() {
    Scalar spatial_sq = 0.0L;
    for (int i = 1; i < x_.size(); ++i) spatial_sq += x_[i] * x_[i];
    const Scalar x0 = std::sqrt(1.0L + spatial_sq);
    if (!(x_[0] > 0.0L) || std::abs(x_[0] - x0) > 1e-6L * x0)
      throw Error("HPoint: coordinates are not near the upper sheet");
    x_[0] = x0;
  }

  Vec x_;
  double kappa_;
};

/// Tangent vector at a base point, stored in ambient Minkowski coordinates
/// and kept Minkowski-orthogonal to the base. The metric norm of the vector
/// is kappa_len times its coordinate norm.
class TangentVector {
public:
  TangentVector(HPoint base, Vec components) : base_(std::move(base)), v_(std::move(components)) {
    if (v_.size() != base_.coords().size())
      throw Error("TangentVector: component/base dimension mismatch");
    project_to_tangent();
  }

  static TangentVector zero(const HPoint& base) {
    return TangentVector(base, Vec::Zero(base.coords().size()));
  }

  const HPoint& base() const { return base_; }
  const Vec& components() const { return v_; }

  /// Coordinate (Minkowski) norm; tangent vectors are spacelike.
  Scalar coord_norm() const { return std::sqrt(std::max<Scalar>(0.0L, minkowski_dot(v_, v_))); }

  /// Length in the metric of the space.
  double norm() const { return static_cast<double>(base_.kappa() * coord_norm()); }

  TangentVector scaled(Scalar s) const { return TangentVector(base_, Vec(v_ * s)); }

  TangentVector operator+(const TangentVector& o) const {
    if (!base_.same_space(o.base_)) throw Error("TangentVector: base mismatch in +");
    return TangentVector(base_, Vec(v_ + o.v_));
  }

private:
  void project_to_tangent() {
    // v + <x,v> x is orthogonal to x since <x,x> = -1. Two passes push the
    // residual to the rounding floor.
    for (int pass = 0; pass < 2; ++pass) {
      const Scalar d = minkowski_dot(base_.coords(), v_);
      if (d != 0.0L) v_ += d * base_.coords();
    }
  }

  HPoint base_;
  Vec v_;
};

/// Curvature pinching band -b^2 <= K <= -a^2 with 0 < a <= b, used to
/// parameterize the comparison bounds.
struct CurvaturePinching {
  double a = 1.0;
  double b = 1.0;

  CurvaturePinching() = default;
  CurvaturePinching(double a_, double b_) : a(a_), b(b_) {
    if (!(0.0 < a && a <= b)) throw Error("CurvaturePinching: need 0 < a <= b");
  }
};

namespace detail {
inline void require_same_space(const HPoint& p, const HPoint& q, const char* op) {
  if (!p.same_space(q)) throw Error(std::string(op) + ": points live in different spaces");
}
}  // namespace detail

/// Geodesic distance acosh(-<p,q>), scaled by the curvature length.
/// Evaluated through the Minkowski chord: -<p,q> = 1 + <p-q,p-q>/2 on the
/// sheet, which is exact for coincident points.
inline double dist(const HPoint& p, const HPoint& q) {
  detail::require_same_space(p, q, "dist");
  const Scalar e = 0.5L * minkowski_chord_sq(p.coords(), q.coords());
  return static_cast<double>(p.kappa() * acosh1p(e));
}

/// Exponential map: follow the geodesic with initial velocity v for its
/// metric length. Globally defined.
///
/// Long geodesics are built at the origin and pushed forward through the
/// transvection to p; forming cosh(r) p + sinh(r) dir directly would smear
/// the result transversally by |p| * ulp(cosh r).
inline HPoint exp_map(const HPoint& p, const TangentVector& v) {
  if (!p.same_space(v.base())) throw Error("exp_map: vector is not based at the point");
  const Scalar r = v.coord_norm();
  if (r < 1e-300L) return p;
  const Vec dir = v.components() / r;
  if (r <= 0.5L) {
    Vec out = std::cosh(r) * p.coords() + std::sinh(r) * dir;
    return HPoint(std::move(out), p.kappa());
  }
  const Vec& c = p.coords();
  const int n = static_cast<int>(c.size());
  // Pull the direction back to the origin chart (spatial part only; the
  // time component of a tangent vector at the origin vanishes).
  Scalar sd = 0.0L;
  for (int i = 1; i < n; ++i) sd += c[i] * dir[i];
  const Scalar pull = sd / (1.0L + c[0]) - dir[0];
  Vec nhat(n);
  Scalar nn = 0.0L;
  for (int i = 1; i < n; ++i) {
    nhat[i] = dir[i] + c[i] * pull;
    nn += nhat[i] * nhat[i];
  }
  nn = std::sqrt(nn);
  const Scalar ss = std::sinh(r) / nn;  // nn ~ 1; renormalize the pullback
  // Geodesic endpoint at the origin, pushed forward through the transvection.
  Scalar push = 0.0L;
  for (int i = 1; i < n; ++i) push += c[i] * (ss * nhat[i]);
  Vec out(n);
  const Scalar coef = push / (1.0L + c[0]) + std::cosh(r);
  for (int i = 1; i < n; ++i) out[i] = ss * nhat[i] + c[i] * coef;
  Scalar spatial_sq = 0.0L;
  for (int i = 1; i < n; ++i) spatial_sq += out[i] * out[i];
  out[0] = std::sqrt(1.0L + spatial_sq);
  return HPoint(std::move(out), p.kappa());
}

/// Coordinates of x in the chart centered at `center`: the inverse of the
/// transvection mapping the origin to `center`. An exact isometry; moving
/// the working origin this way keeps directional computations at full
/// precision even when the configuration sits far out on the sheet.
inline HPoint recenter(const HPoint& center, const HPoint& x) {
  detail::require_same_space(center, x, "recenter");
  const Vec& c = center.coords();
  const Vec& v = x.coords();
  const int n = static_cast<int>(c.size());
  Scalar spatial_dot = 0.0L;
  for (int i = 1; i < n; ++i) spatial_dot += c[i] * v[i];
  Vec out(n);
  const Scalar coef = spatial_dot / (1.0L + c[0]) - v[0];
  for (int i = 1; i < n; ++i) out[i] = v[i] + c[i] * coef;
  Scalar spatial_sq = 0.0L;
  for (int i = 1; i < n; ++i) spatial_sq += out[i] * out[i];
  out[0] = std::sqrt(1.0L + spatial_sq);
  return HPoint(std::move(out), x.kappa());
}

/// Inverse of exp_map; unique on a Hadamard manifold. log(p,p) = 0.
///
/// Short range uses the chord form w = q - cosh(d) p directly. Long range
/// recenters p to the origin first (exact isometry), takes the log there
/// where the formula is cancellation-free, and pushes the vector forward
/// through the transvection; the direct form would otherwise amplify the
/// rounding of cosh(d) by |p|.
inline TangentVector log_map(const HPoint& p, const HPoint& q) {
  detail::require_same_space(p, q, "log_map");
  const Scalar e = 0.5L * minkowski_chord_sq(p.coords(), q.coords());
  if (e <= 0.125L) {
    const Scalar d0 = acosh1p(e);
    Vec w = q.coords() - (1.0L + e) * p.coords();
    if (d0 >= 1e-18L) w *= d0 / std::sinh(d0);
    return TangentVector(p, std::move(w));
  }
  const int n = static_cast<int>(p.coords().size());
  const HPoint qc = recenter(p, q);
  // At the origin cosh(d) is the time coordinate itself, so the distance
  // comes out at full relative precision.
  const Scalar d0 = acosh1p(qc.coords()[0] - 1.0L);
  const Scalar scale = d0 / std::sinh(d0);
  // Tangent vector at the origin has vanishing time component; push it
  // forward through the transvection taking the origin to p.
  Scalar sd = 0.0L;
  for (int i = 1; i < n; ++i) sd += p.coords()[i] * (qc.coords()[i] * scale);
  Vec w(n);
  w[0] = sd;
  const Scalar coef = sd / (1.0L + p.coords()[0]);
  for (int i = 1; i < n; ++i) w[i] = qc.coords()[i] * scale + p.coords()[i] * coef;
  return TangentVector(p, std::move(w));
}

/// Point at parameter t in [0,1] along the geodesic from p to q.
inline HPoint geodesic_point(const HPoint& p, const HPoint& q, double t) {
  detail::require_same_space(p, q, "geodesic_point");
  if (t < 0.0 || t > 1.0) throw Error("geodesic_point: parameter outside [0,1]");
  const Scalar d0 = acosh1p(0.5L * minkowski_chord_sq(p.coords(), q.coords()));
  const Scalar ts = static_cast<Scalar>(t);
  if (d0 < 1e-12L) {
    Vec m = (1.0L - ts) * p.coords() + ts * q.coords();
    return HPoint(std::move(m), p.kappa());
  }
  const Scalar s = std::sinh(d0);
  Vec m = (std::sinh((1.0L - ts) * d0) / s) * p.coords() + (std::sinh(ts * d0) / s) * q.coords();
  return HPoint(std::move(m), p.kappa());
}

/// Parallel transport of v along the geodesic from p to q.
inline TangentVector parallel_transport(const HPoint& p, const HPoint& q, const TangentVector& v) {
  if (!p.same_space(v.base())) throw Error("parallel_transport: vector is not based at p");
  detail::require_same_space(p, q, "parallel_transport");
  const Scalar u = 1.0L + 0.5L * minkowski_chord_sq(p.coords(), q.coords());  // cosh d
  const Scalar qv = minkowski_dot(q.coords(), v.components());
  Vec w = v.components() + (qv / (u + 1.0L)) * (p.coords() + q.coords());
  return TangentVector(q, std::move(w));
}

/// Angle in [0, pi] between two tangent vectors at the same base point.
/// Uses the half-angle form, which stays accurate near 0 and pi.
inline double angle(const TangentVector& v1, const TangentVector& v2) {
  if (!v1.base().same_space(v2.base()) ||
      minkowski_chord_sq(v1.base().coords(), v2.base().coords()) > 1e-20L)
    throw Error("angle: vectors must share a base point");
  const Scalar n1 = v1.coord_norm(), n2 = v2.coord_norm();
  if (n1 < 1e-300L || n2 < 1e-300L) throw Error("angle: zero vector");
  // Tangent restriction of the Minkowski form is positive definite, so the
  // Euclidean-style half-angle identities apply verbatim.
  Scalar qm = 0.0L, qp = 0.0L;
  for (int i = 0; i < v1.components().size(); ++i) {
    const Scalar a = v1.components()[i] / n1;
    const Scalar b = v2.components()[i] / n2;
    const Scalar sign = (i == 0) ? -1.0L : 1.0L;
    qm += sign * (a - b) * (a - b);
    qp += sign * (a + b) * (a + b);
  }
  const Scalar dm = std::sqrt(std::max<Scalar>(0.0L, qm));
  const Scalar dp = std::sqrt(std::max<Scalar>(0.0L, qp));
  return static_cast<double>(2.0L * std::atan2(dm, dp));
}

/// Gromov product (x1|x2)_{x0} = (d(x0,x1) + d(x0,x2) - d(x1,x2)) / 2.
inline double gromov_product(const HPoint& x0, const HPoint& x1, const HPoint& x2) {
  return 0.5 * (dist(x0, x1) + dist(x0, x2) - dist(x1, x2));
}

/// Angle at `apex` between the geodesics towards a and b, measured from
/// log vectors after recentering the apex to the origin.
inline double vertex_angle(const HPoint& apex, const HPoint& a, const HPoint& b) {
  const HPoint O = HPoint::origin(apex.dim(), apex.kappa());
  return angle(log_map(O, recenter(apex, a)), log_map(O, recenter(apex, b)));
}

class KarcherError : public Error {
public:
  KarcherError(double residual, int iterations)
      : Error("karcher_mean: no convergence after " + std::to_string(iterations) +
              " iterations (residual " + std::to_string(residual) + ")"),
        residual(residual),
        iterations(iterations) {}
  double residual;
  int iterations;
};

struct WeightedPoint {
  HPoint point;
  double weight;
};

/// Weighted Riemannian center of mass. Fixed-point iteration with unit step;
/// the objective is 2-strongly convex on a Hadamard target, so the iteration
/// contracts. Stops when the gradient residual drops below tol * sum(w).
HPoint karcher_mean(std::span<const WeightedPoint> points, const HPoint& init, double tol = 1e-10,
                    int max_iterations = 200);

/// Isometric embedding of H^k into H^m (m >= k) fixing the first k+1
/// coordinates; the image is totally geodesic.
inline HPoint embed_totally_geodesic(const HPoint& p, int m) {
  if (m < p.dim()) throw Error("embed_totally_geodesic: target dimension too small");
  Vec out = Vec::Zero(m + 1);
  out.head(p.coords().size()) = p.coords();
  return HPoint(std::move(out), p.kappa());
}

/// Deterministic orthonormal tangent frame at p, built by projecting the
/// spatial coordinate axes and running Gram-Schmidt.
std::vector<TangentVector> tangent_frame(const HPoint& p);

}  // namespace hmlab
