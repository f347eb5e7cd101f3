#include "hmlab/qi_map.hpp"

#include <algorithm>
#include <cmath>

namespace hmlab {

namespace {

using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 9, 9>;

Mat rotation_in_plane(int n, int i, int j, double angle) {
  Mat R = Mat::Identity(n, n);
  R(i, i) = std::cos(angle);
  R(j, j) = std::cos(angle);
  R(i, j) = -std::sin(angle);
  R(j, i) = std::sin(angle);
  return R;
}

Mat boost_along_first_axis(int n, double t) {
  Mat B = Mat::Identity(n, n);
  B(0, 0) = std::cosh(t);
  B(0, 1) = std::sinh(t);
  B(1, 0) = std::sinh(t);
  B(1, 1) = std::cosh(t);
  return B;
}

Mat lorentz_matrix(const IsometryParams& p) {
  const int n = p.dim + 1;
  if (static_cast<int>(p.angles.size()) > p.dim - 1 ||
      static_cast<int>(p.post_angles.size()) > p.dim - 1)
    throw Error("make_isometry: more rotation angles than spatial planes");
  Mat M = Mat::Identity(n, n);
  for (std::size_t i = 0; i < p.angles.size(); ++i)
    M = rotation_in_plane(n, 1 + static_cast<int>(i), 2 + static_cast<int>(i), p.angles[i]) * M;
  M = boost_along_first_axis(n, p.translation) * M;
  for (std::size_t i = 0; i < p.post_angles.size(); ++i)
    M = rotation_in_plane(n, 1 + static_cast<int>(i), 2 + static_cast<int>(i), p.post_angles[i]) * M;
  return M;
}

}  // namespace

QuasiIsometricMap make_isometry(const IsometryParams& params) {
  if (params.dim < 2) throw Error("make_isometry: dimension must be at least 2");
  Mat M = lorentz_matrix(params);
  QuasiIsometricMap f;
  f.domain_dim = params.dim;
  f.target_dim = params.dim;
  f.c = 1.0;
  f.additive = 0.0;
  f.description = "isometry";
  f.eval = [M](const HPoint& x) { return HPoint(Vec(M * x.coords()), x.kappa()); };
  return f;
}

QuasiIsometricMap make_perturbed_isometry(const IsometryParams& base, double amplitude,
                                          double frequency) {
  if (amplitude < 0.0) throw Error("make_perturbed_isometry: amplitude must be nonnegative");
  if (base.dim != 2) throw Error("make_perturbed_isometry: implemented for H^2");
  QuasiIsometricMap iso = make_isometry(base);
  if (amplitude == 0.0) return iso;
  auto base_eval = iso.eval;
  QuasiIsometricMap f;
  f.domain_dim = 2;
  f.target_dim = 2;
  // Lipschitz envelope 1 + B(omega + C): the phase is a Busemann height
  // (gradient norm 1) and the horocyclic frame field has bounded covariant
  // derivative, so the perturbation oscillates at a uniformly bounded rate.
  f.c = 1.0 + amplitude * (frequency + 2.0);
  f.additive = std::min(2.0 * amplitude, f.c);
  f.description = "perturbed_isometry";
  f.eval = [base_eval, amplitude, frequency](const HPoint& x) {
    const HPoint w = base_eval(x);
    const Vec& cw = w.coords();
    // Busemann height of the half-plane chart: b = ln y = -ln(X0 - X1).
    const double b = -static_cast<double>(std::log(cw[0] - cw[1]));
    const double mag = amplitude * std::sin(frequency * b);
    // Unit field of the horocyclic direction (the pushforward of y d/dx);
    // its first two Minkowski components equal the half-plane abscissa.
    const Scalar hx = cw[2] / (cw[0] - cw[1]);
    Vec e(3);
    e[0] = hx;
    e[1] = hx;
    e[2] = 1.0;
    return exp_map(w, TangentVector(w, std::move(e)).scaled(mag));
  };
  return f;
}

QuasiIsometricMap make_horocyclic_shear(double lambda) {
  QuasiIsometricMap f;
  f.domain_dim = 2;
  f.target_dim = 2;
  f.c = std::abs(lambda) + std::sqrt(1.0 + lambda * lambda);
  f.additive = 0.0;
  f.description = "horocyclic_shear";
  f.eval = [lambda](const HPoint& p) {
    HalfPlanePoint hp = to_half_plane(p);
    hp.x += lambda * hp.y;
    return from_half_plane(hp, p.kappa());
  };
  return f;
}

QuasiIsometricMap compose_with_embedding(const QuasiIsometricMap& f, int m) {
  if (m < f.target_dim) throw Error("compose_with_embedding: target dimension too small");
  if (m == f.target_dim) return f;
  QuasiIsometricMap g = f;
  auto inner = f.eval;
  g.target_dim = m;
  g.description = f.description + "+embed";
  g.eval = [inner, m](const HPoint& x) { return embed_totally_geodesic(inner(x), m); };
  return g;
}

DistortionEstimate estimate_qi_constant(const QuasiIsometricMap& f, const PairSampler& sampler,
                                        std::uint64_t n) {
  if (n < 1) throw Error("estimate_qi_constant: need at least one sample");
  std::vector<std::pair<double, double>> dd;  // (domain distance, image distance)
  dd.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    auto [p, q] = sampler.pair(i);
    const double d = dist(p, q);
    if (d < 1e-12) continue;
    dd.emplace_back(d, dist(f(p), f(q)));
  }
  constexpr double kGrid = 0.05;
  // Smallest additive first, then the smallest grid constant whose
  // distortion covers the samples with 20% headroom. The headroom makes the
  // certificate hold on fresh samples, not just the ones it was fitted on;
  // an exact isometry still certifies as (1, 0).
  DistortionEstimate est;
  est.samples = n;
  for (int ai = 0; ai < 400; ++ai) {
    const double add = kGrid * ai;
    double needed = 1.0;
    bool ok = true;
    for (const auto& [d, di] : dd) {
      needed = std::max(needed, (di - add) / d);
      if (di + add < 1e-12) {
        ok = false;  // collapsed pair; no multiplicative constant works
        break;
      }
      needed = std::max(needed, d / (di + add));
    }
    if (!ok) continue;
    const double inflated = 1.0 + 1.2 * (needed - 1.0);
    const double cells = std::ceil((inflated - 1.0 - 1e-9) / kGrid);
    est.c_lower = 1.0 + kGrid * std::max(0.0, cells);
    est.A_lower = add;
    return est;
  }
  throw Error("estimate_qi_constant: no admissible constants on the grid");
}

DistortionEstimate estimate_product_distortion(const QuasiIsometricMap& f, double c,
                                               const PairSampler& sampler, std::uint64_t n) {
  if (c < 1.0) throw Error("estimate_product_distortion: need c >= 1");
  DistortionEstimate est;
  est.c_lower = c;
  est.samples = n;
  double worst = 0.0;
  for (std::uint64_t i = 0; i < n; ++i) {
    auto [x0, x1, x2] = sampler.triple(i);
    const double g = gromov_product(x0, x1, x2);
    const double gi = gromov_product(f(x0), f(x1), f(x2));
    worst = std::max(worst, gi - c * g);   // upper-side violation
    worst = std::max(worst, g / c - gi);   // lower-side violation
  }
  est.A_lower = worst;
  return est;
}

std::function<double(double)> default_bump_alpha() {
  return [](double s) {
    if (s >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s));
  };
}

namespace {

double sphere_area(int k) {
  // Surface measure of S^{k-1}.
  if (k == 2) return 2.0 * M_PI;
  if (k == 3) return 4.0 * M_PI;
  return 2.0 * std::pow(M_PI, 0.5 * k) / std::tgamma(0.5 * k);
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double fa,
                        double fm, double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return adaptive_simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40);
}

}  // namespace

BumpProfile normalize_bump(std::function<double(double)> alpha, int k, std::string name,
                           double quad_tol) {
  if (k < 2) throw Error("normalize_bump: dimension must be at least 2");
  auto integrand = [&alpha, k](double t) {
    return alpha(t * t) * std::pow(std::sinh(t), k - 1);
  };
  const double radial = integrate(integrand, 0.0, 1.0, quad_tol);
  const double total = sphere_area(k) * radial;
  if (!(total > 0.0)) throw Error("normalize_bump: profile integrates to zero");
  BumpProfile bp;
  bp.alpha = std::move(alpha);
  bp.normalizer = 1.0 / total;
  bp.dim = k;
  bp.name = std::move(name);
  return bp;
}

QuasiIsometricMap smooth(const QuasiIsometricMap& f, const BumpProfile& bump,
                         const SmoothingQuadrature& quad, double karcher_tol) {
  if (f.domain_dim != 2 || bump.dim != 2)
    throw Error("smooth: polar quadrature is implemented for H^2 domains");
  const int nr = quad.radial_nodes, na = quad.angular_nodes;
  if (nr < 2 || na < 4 || na % 2 != 0)
    throw Error("smooth: quadrature needs >= 2 radial and an even number >= 4 angular nodes");

  const double reach = 2.0 * f.c;  // containment radius for the center of mass
  auto inner = f.eval;
  const auto alpha = bump.alpha;
  const double C = bump.normalizer;
  QuasiIsometricMap g;
  g.domain_dim = f.domain_dim;
  g.target_dim = f.target_dim;
  g.c = f.c;
  g.additive = f.additive;
  g.description = f.description + "+smooth[" + bump.name + "]";
  g.eval = [inner, alpha, C, nr, na, reach, karcher_tol](const HPoint& x) {
    const double dt = 1.0 / nr;
    const double dphi = 2.0 * M_PI / na;
    const auto frame = tangent_frame(x);
    std::vector<WeightedPoint> pts;
    pts.reserve(static_cast<std::size_t>(nr) * na);
    for (int i = 0; i < nr; ++i) {
      const double t = (i + 0.5) * dt;
      const double w_rad = alpha(t * t) * std::sinh(t) * dt * dphi * C;
      if (w_rad <= 0.0) continue;
      for (int j = 0; j < na; ++j) {
        const double phi = j * dphi;
        TangentVector dir = frame[0].scaled(t * std::cos(phi)) + frame[1].scaled(t * std::sin(phi));
        pts.push_back({inner(exp_map(x, dir)), w_rad});
      }
    }
    const HPoint fx = inner(x);
    HPoint y = karcher_mean(pts, fx, karcher_tol);
    if (dist(fx, y) > reach + 1e-9)
      throw Error("smooth: center of mass escaped the containment ball");
    return y;
  };
  return g;
}

DerivativeBounds sample_derivative_bounds(const QuasiIsometricMap& f, std::uint64_t seed,
                                          std::uint64_t n, double radius, double step) {
  DerivativeBounds out;
  out.samples = n;
  for (std::uint64_t i = 0; i < n; ++i) {
    Rng rng(seed, i);
    const HPoint x = random_ball_point(rng, f.domain_dim, radius);
    const HPoint fx = f(x);
    const auto frame = tangent_frame(x);
    const double phi = 2.0 * M_PI * rng.uniform();
    TangentVector dir = frame[0].scaled(std::cos(phi));
    for (std::size_t j = 1; j < frame.size(); ++j) {
      // only mix the second axis; a single random in-plane direction suffices
      if (j == 1) dir = dir + frame[1].scaled(std::sin(phi));
    }
    const HPoint xp = exp_map(x, dir.scaled(step));
    const HPoint xm = exp_map(x, dir.scaled(-step));
    const HPoint fp = f(xp), fm = f(xm);
    out.first = std::max(out.first, dist(fp, fm) / (2.0 * step));
    // Second difference vector at fx: log(fp) + log(fm), norm / step^2.
    TangentVector sec = log_map(fx, fp) + log_map(fx, fm);
    out.second = std::max(out.second, sec.norm() / (step * step));
  }
  return out;
}

}  // namespace hmlab
