#include "hmlab/estimates.hpp"

#include "hmlab/numeric.hpp"

#include <algorithm>
#include <cmath>

namespace hmlab {

SupDistanceRecord sup_distance(const BallMesh& mesh, const DiscreteMap& h,
                               const std::vector<HPoint>& f_values) {
  if (h.values.size() != mesh.vertices.size() || f_values.size() != mesh.vertices.size())
    throw Error("sup_distance: field size mismatch");
  SupDistanceRecord rec;
  rec.R = mesh.R;
  double best = -1.0;
  for (std::size_t v = 0; v < f_values.size(); ++v) {
    const double d = dist(h.values[v], f_values[v]);
    if (d > best) {
      best = d;
      rec.argmax_vertex = static_cast<std::uint32_t>(v);
    }
  }
  rec.rho_sup = std::max(0.0, best);
  rec.domain_point = mesh.vertices[rec.argmax_vertex];
  rec.y = f_values[rec.argmax_vertex];
  if (rec.rho_sup > 1e-9) {
    TangentVector dir = log_map(rec.y, h.values[rec.argmax_vertex]);
    rec.direction = dir.scaled(1.0 / dir.coord_norm());
  }
  return rec;
}

VertexFieldCheck check_boundary_estimate(const BallMesh& mesh, const DiscreteMap& h,
                                         const std::vector<HPoint>& f_values, double c, double a,
                                         int k, bool detailed) {
  if (c < 1.0 || a <= 0.0) throw Error("check_boundary_estimate: need c >= 1 and a > 0");
  const double eps = tolerances::eps_mesh_displacement(mesh.h_mesh);
  const double factor = 4.0 * k * c * c / a;
  VertexFieldCheck out;
  double worst_margin = 1e300;
  double worst_measured = 0.0, worst_bound = 0.0;
  std::uint64_t count = 0;
  if (detailed) out.margins.assign(mesh.vertices.size(), 0.0);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.boundary(v)) continue;
    const double measured = dist(h.values[static_cast<std::size_t>(v)], f_values[static_cast<std::size_t>(v)]);
    const double bound = factor * mesh.dist_to_boundary(v);
    const double margin = bound + eps - measured;
    if (detailed) out.margins[static_cast<std::size_t>(v)] = margin;
    if (margin < 0.0) ++out.violations;
    if (margin < worst_margin) {
      worst_margin = margin;
      worst_measured = measured;
      worst_bound = bound;
      out.worst_vertex = static_cast<std::uint32_t>(v);
    }
    ++count;
  }
  out.aggregate = BoundCheck::upper("boundary_estimate", worst_measured, worst_bound, 0.0, eps,
                                    0.0, count);
  return out;
}

VertexFieldCheck check_subharmonicity(const BallMesh& mesh, const DiscreteMap& h, const HPoint& y0,
                                      bool detailed) {
  const double eps = tolerances::eps_laplacian(mesh.h_mesh);
  std::vector<double> u(mesh.vertices.size());
  for (std::size_t v = 0; v < u.size(); ++v) u[v] = dist(y0, h.values[v]);
  const std::vector<double> lap = discrete_laplacian(mesh, u);
  VertexFieldCheck out;
  double worst = 1e300;
  std::uint64_t count = 0;
  if (detailed) out.margins.assign(u.size(), 0.0);
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.boundary(v)) continue;
    const double margin = lap[static_cast<std::size_t>(v)] + eps;
    if (detailed) out.margins[static_cast<std::size_t>(v)] = margin;
    if (margin < 0.0) ++out.violations;
    if (margin < worst) {
      worst = margin;
      out.worst_vertex = static_cast<std::uint32_t>(v);
    }
    ++count;
  }
  // Subharmonicity says the Laplacian is bounded below by 0 up to mesh error:
  // record measured = -min Laplacian against bound 0 with slack eps.
  const double min_lap = worst - eps;
  out.aggregate = BoundCheck::upper("subharmonicity", -min_lap, 0.0, 0.0, eps, 0.0, count);
  return out;
}

BoundCheck check_cheng(const BallMesh& mesh, const DiscreteMap& h, std::uint32_t x0_vertex,
                       double r0, double b, int k) {
  if (r0 <= 0.0) throw Error("check_cheng: need r0 > 0");
  const HPoint& x0 = mesh.vertices[x0_vertex];
  if (dist(mesh.center, x0) + r0 > mesh.R + 1e-9)
    throw Error("check_cheng: probe ball does not fit inside the mesh");

  // Collect the image sample over B(x0, r0) and the local stretch.
  const HPoint& hx0 = h.values[x0_vertex];
  double R0 = 0.0;
  double max_stretch_ball = 0.0;
  for (const auto& e : mesh.edges) {
    const bool a_in = dist(x0, mesh.vertices[e.a]) <= r0;
    const bool b_in = dist(x0, mesh.vertices[e.b]) <= r0;
    if (a_in) R0 = std::max(R0, dist(hx0, h.values[e.a]));
    if (b_in) R0 = std::max(R0, dist(hx0, h.values[e.b]));
    if (a_in || b_in)
      max_stretch_ball = std::max(max_stretch_ball, dist(h.values[e.a], h.values[e.b]) / e.length);
  }
  // Certify the continuum image radius: between vertices the image can move
  // by at most half an edge at the measured stretch.
  R0 += 0.5 * max_stretch_ball * mesh.h_mesh;

  double measured = 0.0;
  for (const auto& [q, w] : mesh.neighbors[x0_vertex]) {
    const double len = dist(x0, mesh.vertices[q]);
    measured = std::max(measured, dist(hx0, h.values[q]) / len);
  }
  const double bound = 32.0 * k * (1.0 + b * r0) / r0 * R0;
  return BoundCheck::upper("cheng_gradient_bound", measured, bound, 0.0, 0.0, 0.0,
                           mesh.neighbors[x0_vertex].size());
}

namespace {
constexpr double kGolden = 0.6180339887498949;
}

SphereSets polar_window(const BallMesh& mesh, const DiscreteMap& h, const SupDistanceRecord& rec,
                        double c, int k, const WindowOptions& opts) {
  SphereSets sets;
  sets.rho_sup = rec.rho_sup;
  const double rho = rec.rho_sup;
  const double rmax = rho / (16.0 * k * c * c);
  if (rho < 1.0 || rmax < 1.0) {
    sets.applicable = false;
    sets.reason = "sup distance below the window threshold";
    return sets;
  }
  const double r = std::min(std::max(1.0, std::cbrt(rho)), rmax);
  const HPoint& x_R = rec.domain_point;
  if (dist(mesh.center, x_R) + r > mesh.R - 1.0) {
    sets.applicable = false;
    sets.reason = "window ball does not fit inside B(O, R-1)";
    return sets;
  }
  sets.applicable = true;
  sets.r_R = r;

  const auto frame = tangent_frame(x_R);
  const double step = opts.ray_step > 0.0 ? opts.ray_step : mesh.h_mesh;
  const int n = opts.sphere_samples;
  const double thr_U = rho - r / (2.0 * c);
  const double thr_V = 0.5 * rho;
  sets.samples.reserve(static_cast<std::size_t>(n));
  int cu = 0, cv = 0, cw = 0;
  for (int j = 0; j < n; ++j) {
    SphereSample s;
    s.angle = 2.0 * M_PI * std::fmod(j * kGolden, 1.0);
    TangentVector dir = frame[0].scaled(std::cos(s.angle)) + frame[1].scaled(std::sin(s.angle));
    s.point = exp_map(x_R, dir.scaled(r));
    s.rho_h = dist(rec.y, interpolate(mesh, h, s.point));
    s.in_U = s.rho_h >= thr_U;
    s.in_V = true;
    for (double t = 0.0; s.in_V && t < r + 0.5 * step; t += step) {
      const HPoint zt = exp_map(x_R, dir.scaled(std::min(t, r)));
      if (dist(rec.y, interpolate(mesh, h, zt)) < thr_V) s.in_V = false;
    }
    s.in_W = s.in_U && s.in_V;
    cu += s.in_U;
    cv += s.in_V;
    cw += s.in_W;
    sets.samples.push_back(std::move(s));
  }
  sets.sigma_U = static_cast<double>(cu) / n;
  sets.sigma_V = static_cast<double>(cv) / n;
  sets.sigma_W = static_cast<double>(cw) / n;
  return sets;
}

std::vector<BoundCheck> check_window_lemmas(const BallMesh& mesh, const DiscreteMap& h,
                                            const QuasiIsometricMap& f,
                                            const SupDistanceRecord& rec, const SphereSets& sets,
                                            double c, int k) {
  std::vector<BoundCheck> out;
  if (!sets.applicable) {
    for (const char* ctx : {"window_rho_upper", "window_grad_bound", "window_measure_lower",
                            "window_angle_fh[a=1/2]", "window_angle_fh[a=1]", "window_angle_hR",
                            "window_green_mean"})
      out.push_back(BoundCheck::not_applicable(ctx));
    return out;
  }
  const double rho = rec.rho_sup, r = sets.r_R;
  const double eps_mesh = tolerances::eps_mesh_displacement(mesh.h_mesh);
  const std::uint64_t n = sets.samples.size();

  // (i) rho_h <= rho + c r on the sphere.
  double max_rho_h = 0.0;
  for (const auto& s : sets.samples) max_rho_h = std::max(max_rho_h, s.rho_h);
  out.push_back(
      BoundCheck::upper("window_rho_upper", max_rho_h, rho + c * r, 0.0, eps_mesh, 0.0, n));

  // (ii) discrete ||Dh|| <= 2^8 k rho on vertices of B(x_R, r).
  double max_stretch = 0.0;
  std::uint64_t stretch_count = 0;
  for (const auto& e : mesh.edges) {
    if (dist(rec.domain_point, mesh.vertices[e.a]) > r &&
        dist(rec.domain_point, mesh.vertices[e.b]) > r)
      continue;
    max_stretch = std::max(max_stretch, dist(h.values[e.a], h.values[e.b]) / e.length);
    ++stretch_count;
  }
  out.push_back(BoundCheck::upper("window_grad_bound", max_stretch, 256.0 * k * rho, 0.0, 0.0,
                                  0.0, stretch_count));

  // (iii) sigma(W) lower bound, only meaningful when the right side is positive.
  {
    const double rhs = 1.0 / (3.0 * c * c) - 4096.0 * k * c * r * r / rho;
    if (rhs > 0.0) {
      const double tol_sampling = 2.0 / std::sqrt(static_cast<double>(n));
      out.push_back(
          BoundCheck::upper("window_measure_lower", rhs, sets.sigma_W, 0.0, 0.0, tol_sampling, n));
    } else {
      out.push_back(BoundCheck::not_applicable("window_measure_lower", n));
    }
  }

  // (iv) angle bounds. theta(v_f, v_h) on U under both curvature conventions;
  // theta(v_h, v_R) on V.
  double max_theta_fh = 0.0, max_theta_hR = 0.0;
  std::uint64_t nu = 0, nv = 0;
  for (const auto& s : sets.samples) {
    const HPoint fz = f(s.point);
    const HPoint hz = interpolate(mesh, h, s.point);
    const double rho_f = dist(rec.y, fz);
    if (s.in_U && rho_f > 1e-9 && s.rho_h > 1e-9) {
      const double th = angle(log_map(rec.y, fz), log_map(rec.y, hz));
      max_theta_fh = std::max(max_theta_fh, th);
      ++nu;
    }
    if (s.in_V && s.rho_h > 1e-9 && rec.direction) {
      const double th = angle(log_map(rec.y, hz), *rec.direction);
      max_theta_hR = std::max(max_theta_hR, th);
      ++nv;
    }
  }
  const double bound_half = 4.0 * std::exp(0.25 * c) * std::exp(-r / (8.0 * c));
  const double bound_unit = 4.0 * std::exp(0.5 * c) * std::exp(-r / (4.0 * c));
  if (nu > 0) {
    out.push_back(
        BoundCheck::upper("window_angle_fh[a=1/2]", max_theta_fh, bound_half, 0.0, eps_mesh, 0.0, nu));
    out.push_back(
        BoundCheck::upper("window_angle_fh[a=1]", max_theta_fh, bound_unit, 0.0, eps_mesh, 0.0, nu));
  } else {
    out.push_back(BoundCheck::not_applicable("window_angle_fh[a=1/2]"));
    out.push_back(BoundCheck::not_applicable("window_angle_fh[a=1]"));
  }
  if (nv > 0) {
    const double bound_vr = 8.0 * rho * rho / std::sinh(0.25 * rho);
    out.push_back(
        BoundCheck::upper("window_angle_hR", max_theta_hR, bound_vr, 0.0, eps_mesh, 0.0, nv));
  } else {
    out.push_back(BoundCheck::not_applicable("window_angle_hR"));
  }

  // Spherical-mean sanity: mean(rho_h - rho) over the sphere is nonnegative
  // for a genuinely subharmonic rho_h.
  {
    KahanSum acc;
    for (const auto& s : sets.samples) acc.add(s.rho_h - rho);
    const double mean = acc.value() / static_cast<double>(n);
    const double tol_sampling = 2.0 * c * r / std::sqrt(static_cast<double>(n));
    out.push_back(
        BoundCheck::upper("window_green_mean", -mean, 0.0, 0.0, eps_mesh, tol_sampling, n));
  }
  return out;
}

std::vector<BoundCheck> check_gauss_inequality(const BallMesh& mesh, const DiscreteMap& h,
                                               const HPoint& y_R) {
  // Edge-integrated form of the polar-gradient comparison: the angle swing
  // of v_h across an edge is at most the image arc length divided by
  // 2 sinh(rho/2) at the smallest polar radius the image curve can reach,
  // which is the endpoint minimum less half the arc. Edges whose image may
  // graze the pole are skipped: no finite comparison exists there.
  const double eps = tolerances::eps_mesh_displacement(mesh.h_mesh);
  double meas_p = 0.0, bnd_p = 0.0, meas_s = 0.0, bnd_s = 0.0;
  std::uint64_t count = 0;
  for (const auto& e : mesh.edges) {
    const HPoint& ha = h.values[e.a];
    const HPoint& hb = h.values[e.b];
    const double ra = dist(y_R, ha), rb = dist(y_R, hb);
    const double dh = dist(ha, hb);
    const double rho_floor = std::min(ra, rb) - 0.5 * dh;
    if (rho_floor < 0.05) continue;
    const double dv = angle(log_map(y_R, ha), log_map(y_R, hb));
    const double b_pinched = dh / (2.0 * std::sinh(0.5 * rho_floor));
    const double b_sharp = dh / std::sinh(rho_floor);
    ++count;
    if (b_pinched - dv < (bnd_p - meas_p) || count == 1) {
      meas_p = dv;
      bnd_p = b_pinched;
    }
    if (b_sharp - dv < (bnd_s - meas_s) || count == 1) {
      meas_s = dv;
      bnd_s = b_sharp;
    }
  }
  std::vector<BoundCheck> out;
  if (count == 0) {
    out.push_back(BoundCheck::not_applicable("gauss_polar_gradient[a=1/2]"));
    out.push_back(BoundCheck::not_applicable("gauss_polar_gradient[a=1]"));
    return out;
  }
  out.push_back(
      BoundCheck::upper("gauss_polar_gradient[a=1/2]", meas_p, bnd_p, 0.0, eps, 0.0, count));
  out.push_back(BoundCheck::upper("gauss_polar_gradient[a=1]", meas_s, bnd_s, 0.0, eps, 0.0, count));
  return out;
}

double diameter_of_directions(const SphereSets& sets, const QuasiIsometricMap& f,
                              const SupDistanceRecord& rec) {
  if (!sets.applicable) return 0.0;
  std::vector<TangentVector> dirs;
  for (const auto& s : sets.samples) {
    if (!s.in_W) continue;
    const HPoint fz = f(s.point);
    if (dist(rec.y, fz) < 1e-9) continue;
    TangentVector v = log_map(rec.y, fz);
    dirs.push_back(v.scaled(1.0 / v.coord_norm()));
  }
  double diam = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i)
    for (std::size_t j = i + 1; j < dirs.size(); ++j)
      diam = std::max(diam, angle(dirs[i], dirs[j]));
  return diam;
}

ConvergenceStudy convergence_study(const QuasiIsometricMap& f, const std::vector<double>& radii,
                                   double S, double h_mesh, const SolveOptions& solve_opts,
                                   std::uint64_t mesh_cap) {
  if (radii.size() < 2) throw Error("convergence_study: need at least two radii");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] <= radii[i - 1]) throw Error("convergence_study: radii must increase");
  if (S > radii.front())
    throw Error("convergence_study: comparison radius S = " + std::to_string(S) +
                " must fit inside the smallest ball (R = " + std::to_string(radii.front()) + ")");

  ConvergenceStudy study;
  const HPoint O = HPoint::origin(f.domain_dim);
  std::optional<BallMesh> prev_mesh;
  std::optional<DiscreteMap> prev_sol;
  for (double R : radii) {
    BallMesh mesh = build_polar_mesh(O, R, h_mesh, mesh_cap);
    const std::vector<HPoint> f_values = evaluate_on_vertices(f, mesh);
    BoundaryData bd;
    bd.target_dim = f.target_dim;
    bd.values = f_values;
    bd.present.assign(f_values.size(), 0);
    for (int v = 0; v < mesh.num_vertices(); ++v)
      if (mesh.boundary(v)) bd.present[static_cast<std::size_t>(v)] = 1;
    SolveOptions opts = solve_opts;
    opts.initial_guess = DiscreteMap{f_values, f.target_dim};
    auto [sol, rep] = solve_dirichlet(mesh, bd, opts);

    StudyRow row;
    row.R = R;
    row.sweeps = rep.sweeps;
    row.converged = rep.converged;
    row.rho_sup = sup_distance(mesh, sol, f_values).rho_sup;
    if (prev_mesh) {
      double sup = 0.0;
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (dist(O, mesh.vertices[static_cast<std::size_t>(v)]) > S) continue;
        const HPoint prev_here = interpolate(*prev_mesh, *prev_sol, mesh.vertices[static_cast<std::size_t>(v)]);
        sup = std::max(sup, dist(prev_here, sol.values[static_cast<std::size_t>(v)]));
      }
      row.sup_diff_prev = sup;
    }
    study.rows.push_back(row);
    prev_mesh = std::move(mesh);
    prev_sol = std::move(sol);
  }

  // Acceptance rule: the schedule fails only when rho grows beyond the mesh
  // slack at EVERY consecutive pair (the signature of unbounded growth); a
  // bounded sequence settling towards its limit has shrinking increments.
  const double eps = tolerances::eps_mesh_displacement(h_mesh);
  double min_step = 1e300;
  for (std::size_t i = 1; i < study.rows.size(); ++i)
    min_step = std::min(min_step, study.rows[i].rho_sup - study.rows[i - 1].rho_sup);
  study.growth_check = BoundCheck::upper("study_rho_growth", min_step, 0.0, 0.0, eps, 0.0,
                                         study.rows.size());
  for (std::size_t i = 2; i < study.rows.size(); ++i)
    if (study.rows[i].sup_diff_prev > study.rows[i - 1].sup_diff_prev + 0.25 * eps)
      study.sup_diffs_monotone = false;
  return study;
}

}  // namespace hmlab
