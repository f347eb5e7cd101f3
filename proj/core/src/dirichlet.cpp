#include "hmlab/dirichlet.hpp"

#include "hmlab/numeric.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hmlab {

BoundaryData restrict_boundary(const QuasiIsometricMap& f, const BallMesh& mesh) {
  BoundaryData bd;
  bd.target_dim = f.target_dim;
  bd.present.assign(mesh.vertices.size(), 0);
  bd.values.reserve(mesh.vertices.size());
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    if (mesh.boundary(v)) {
      bd.values.push_back(f(mesh.vertices[static_cast<std::size_t>(v)]));
      bd.present[static_cast<std::size_t>(v)] = 1;
    } else {
      bd.values.push_back(HPoint::origin(f.target_dim));
    }
  }
  return bd;
}

std::vector<HPoint> evaluate_on_vertices(const QuasiIsometricMap& f, const BallMesh& mesh) {
  std::vector<HPoint> out;
  out.reserve(mesh.vertices.size());
  for (const auto& v : mesh.vertices) out.push_back(f(v));
  return out;
}

double discrete_energy(const BallMesh& mesh, const DiscreteMap& map) {
  if (map.values.size() != mesh.vertices.size()) throw Error("discrete_energy: size mismatch");
  KahanSum acc;
  for (const auto& e : mesh.edges) {
    const double d = dist(map.values[e.a], map.values[e.b]);
    acc.add(e.weight * d * d);
  }
  return acc.value();
}

namespace {

// Exact local minimizer: weighted Karcher mean of the neighbor values.
HPoint local_update(const BallMesh& mesh, const std::vector<HPoint>& vals, std::uint32_t p,
                    double karcher_tol) {
  HPoint y = vals[p];
  for (int it = 0; it < 100; ++it) {
    Vec g = Vec::Zero(y.coords().size());
    double wsum = 0.0;
    for (const auto& [q, w] : mesh.neighbors[p]) {
      if (w == 0.0) continue;
      g += w * log_map(y, vals[q]).components();
      wsum += w;
    }
    TangentVector step(y, Vec(g / wsum));
    y = exp_map(y, step);
    if (step.norm() <= karcher_tol) break;
  }
  return y;
}

struct NewtonWorkspace {
  std::vector<std::uint32_t> interior;       // interior vertex ids in index order
  std::vector<int> local_of;                 // vertex -> local index or -1
  Eigen::SparseMatrix<double> H;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool pattern_ready = false;
};

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 9, 9>;

// One damped Newton step on the discrete energy, assembled from the exact
// per-edge Hessians in per-vertex orthonormal tangent frames and solved with
// a sparse Cholesky factorization. Accepted when the energy does not rise
// beyond the monotonicity slack; returns false when the line search fails.
bool newton_step(const BallMesh& mesh, std::vector<HPoint>& vals, int m, NewtonWorkspace& ws,
                 double& energy_inout) {
  const int n_int = static_cast<int>(ws.interior.size());
  const int dim = n_int * m;
  std::vector<std::vector<TangentVector>> frames(n_int);
  for (int i = 0; i < n_int; ++i) frames[i] = tangent_frame(vals[ws.interior[i]]);

  // Right-hand side: the tension direction sum_q w log_{y_p}(y_q) in frame
  // coordinates.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < n_int; ++i) {
    const std::uint32_t p = ws.interior[static_cast<std::size_t>(i)];
    Vec g = Vec::Zero(m + 1);
    for (const auto& [q, w] : mesh.neighbors[p])
      if (w != 0.0) g += w * log_map(vals[p], vals[q]).components();
    for (int c = 0; c < m; ++c)
      rhs[i * m + c] = minkowski_dot(frames[i][static_cast<std::size_t>(c)].components(), g);
  }

  // Exact per-edge Hessian of d^2/2: eigenvalue 1 along the connecting
  // geodesic and d coth d transverse on the diagonal blocks, d/sinh d
  // transverse on the cross block. Dropping the transverse corrections
  // looks like an O(d^2) detail per edge, but summed over the mesh it is
  // the order-one curvature term of the harmonic-map Hessian and capping
  // it stalls the iteration on the smooth modes.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(mesh.edges.size() * static_cast<std::size_t>(m) * m * 2);
  std::vector<Mat> diag(static_cast<std::size_t>(n_int), Mat::Zero(m, m));
  for (const auto& e : mesh.edges) {
    if (e.weight == 0.0) continue;
    const int la = ws.local_of[e.a], lb = ws.local_of[e.b];
    const double d = dist(vals[e.a], vals[e.b]);
    double alpha = 1.0, beta = 1.0;
    if (d > 1e-7) {
      alpha = d / std::tanh(d);
      beta = d / std::sinh(d);
    }
    Eigen::VectorXd na_d(m), nb_d(m);
    if (d > 1e-12) {
      const TangentVector la_dir = log_map(vals[e.a], vals[e.b]);
      const TangentVector lb_dir = log_map(vals[e.b], vals[e.a]);
      for (int r = 0; r < m; ++r) {
        if (la >= 0)
          na_d[r] = static_cast<double>(
              minkowski_dot(frames[static_cast<std::size_t>(la)][static_cast<std::size_t>(r)].components(),
                            la_dir.components()) /
              la_dir.coord_norm());
        if (lb >= 0)
          nb_d[r] = static_cast<double>(
              minkowski_dot(frames[static_cast<std::size_t>(lb)][static_cast<std::size_t>(r)].components(),
                            lb_dir.components()) /
              lb_dir.coord_norm());
      }
    } else {
      na_d = Eigen::VectorXd::Zero(m);
      nb_d = Eigen::VectorXd::Zero(m);
      if (m > 0) na_d[0] = nb_d[0] = 1.0;
    }
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(m, m);
    if (la >= 0)
      diag[static_cast<std::size_t>(la)] +=
          e.weight * (na_d * na_d.transpose() + alpha * (I - na_d * na_d.transpose()));
    if (lb >= 0)
      diag[static_cast<std::size_t>(lb)] +=
          e.weight * (nb_d * nb_d.transpose() + alpha * (I - nb_d * nb_d.transpose()));
    if (la >= 0 && lb >= 0) {
      // T[r][c] = <frame_a_r, transport_{b->a}(frame_b_c)>.
      Eigen::MatrixXd T(m, m);
      for (int c = 0; c < m; ++c) {
        TangentVector tv = parallel_transport(vals[e.b], vals[e.a],
                                              frames[static_cast<std::size_t>(lb)][static_cast<std::size_t>(c)]);
        for (int r = 0; r < m; ++r)
          T(r, c) = static_cast<double>(
              minkowski_dot(frames[static_cast<std::size_t>(la)][static_cast<std::size_t>(r)].components(),
                            tv.components()));
      }
      const Eigen::MatrixXd cross =
          -e.weight * ((na_d * na_d.transpose() + beta * (I - na_d * na_d.transpose())) * T);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) {
          trip.emplace_back(la * m + r, lb * m + c, cross(r, c));
          trip.emplace_back(lb * m + c, la * m + r, cross(r, c));
        }
    }
  }
  for (int i = 0; i < n_int; ++i)
    for (int r = 0; r < m; ++r)
      for (int c = 0; c < m; ++c)
        trip.emplace_back(i * m + r, i * m + c, diag[static_cast<std::size_t>(i)](r, c));

  ws.H.resize(dim, dim);
  ws.H.setFromTriplets(trip.begin(), trip.end());
  if (!ws.pattern_ready) {
    ws.ldlt.analyzePattern(ws.H);
    ws.pattern_ready = true;
  }
  ws.ldlt.factorize(ws.H);
  if (ws.ldlt.info() != Eigen::Success) return false;
  Eigen::VectorXd u = ws.ldlt.solve(rhs);
  if (ws.ldlt.info() != Eigen::Success) return false;

  std::vector<HPoint> trial = vals;
  // Near the minimum the true decrease falls below the energy summation
  // noise; accept within the same slack the monotonicity contract allows.
  const double slack = 1e-12 * std::max(1.0, energy_inout);
  for (double tau = 1.0; tau >= 1.0 / 256.0; tau *= 0.5) {
    for (int i = 0; i < n_int; ++i) {
      const std::uint32_t p = ws.interior[static_cast<std::size_t>(i)];
      Vec step = Vec::Zero(m + 1);
      for (int c = 0; c < m; ++c)
        step += u[i * m + c] * frames[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].components();
      trial[p] = exp_map(vals[p], TangentVector(vals[p], Vec(step * tau)));
    }
    DiscreteMap tmp{trial, m};
    const double e_trial = discrete_energy(mesh, tmp);
    if (e_trial <= energy_inout + slack) {
      vals = trial;
      energy_inout = std::min(energy_inout, e_trial);
      return true;
    }
  }
  return false;
}

}  // namespace

std::pair<DiscreteMap, SolveReport> solve_dirichlet(const BallMesh& mesh,
                                                    const BoundaryData& boundary,
                                                    const SolveOptions& opts) {
  const int n = mesh.num_vertices();
  const int m = boundary.target_dim;
  for (int v = 0; v < n; ++v)
    if (mesh.boundary(v) && !boundary.present[static_cast<std::size_t>(v)])
      throw Error("solve_dirichlet: incomplete boundary data");

  const double tol = opts.tol > 0.0 ? opts.tol : 1e-6 * mesh.h_mesh;
  const double ratio = mesh.R / mesh.h_mesh;
  const int max_sweeps =
      opts.max_sweeps > 0 ? opts.max_sweeps : static_cast<int>(10.0 * ratio * ratio);

  // Initial state: boundary data on the boundary; supplied guess or the
  // boundary centroid inside.
  std::vector<HPoint> vals;
  vals.reserve(static_cast<std::size_t>(n));
  if (opts.initial_guess) {
    if (static_cast<int>(opts.initial_guess->values.size()) != n ||
        opts.initial_guess->target_dim != m)
      throw Error("solve_dirichlet: initial guess does not match mesh/target");
    vals = opts.initial_guess->values;
    for (int v = 0; v < n; ++v)
      if (mesh.boundary(v)) vals[static_cast<std::size_t>(v)] = boundary.values[static_cast<std::size_t>(v)];
  } else {
    std::vector<WeightedPoint> bpts;
    for (int v = 0; v < n; ++v)
      if (mesh.boundary(v)) bpts.push_back({boundary.values[static_cast<std::size_t>(v)], 1.0});
    HPoint centroid = karcher_mean(bpts, bpts.front().point, 1e-8, 400);
    for (int v = 0; v < n; ++v)
      vals.push_back(mesh.boundary(v) ? boundary.values[static_cast<std::size_t>(v)] : centroid);
  }

  // Ring-parity coloring; fixed index order inside each color.
  std::vector<std::uint32_t> color[2];
  for (int v = 0; v < n; ++v)
    if (!mesh.boundary(v)) color[mesh.ring_of[static_cast<std::size_t>(v)] % 2].push_back(static_cast<std::uint32_t>(v));

  NewtonWorkspace ws;
  ws.local_of.assign(static_cast<std::size_t>(n), -1);
  for (int v = 0; v < n; ++v)
    if (!mesh.boundary(v)) {
      ws.local_of[static_cast<std::size_t>(v)] = static_cast<int>(ws.interior.size());
      ws.interior.push_back(static_cast<std::uint32_t>(v));
    }

  SolveReport report;
  DiscreteMap cur{vals, m};
  double energy = discrete_energy(mesh, cur);
  report.energy_trace.push_back(energy);

  auto gs_sweep = [&]() {
    double max_disp = 0.0;
    for (const auto& group : color)
      for (std::uint32_t p : group) {
        HPoint fresh = local_update(mesh, cur.values, p, opts.karcher_tol);
        max_disp = std::max(max_disp, dist(cur.values[p], fresh));
        cur.values[p] = fresh;
      }
    ++report.sweeps;
    energy = discrete_energy(mesh, cur);
    report.energy_trace.push_back(energy);
    return max_disp;
  };

  // Stop when the sweep displacement meets tol AND the geometric-tail
  // estimate disp * rho / (1 - rho) of the remaining distance to the
  // minimizer is itself below tol: a bare displacement threshold can leave
  // the iterate tens of tol away on stiff meshes, which would break the
  // method/order independence contract.
  double disp = gs_sweep();
  double disp_prev = -1.0;
  bool newton_alive = (opts.method == SolveMethod::NewtonAccelerated) && !ws.interior.empty();
  int newton_budget = 60;
  auto done = [&]() {
    if (disp > tol) return false;
    if (disp_prev <= 0.0) return disp <= 0.01 * tol;
    const double rho = std::min(disp / disp_prev, 0.999);
    return disp * rho / (1.0 - rho) <= tol;
  };
  while (!done() && report.sweeps < max_sweeps) {
    if (newton_alive && newton_budget > 0) {
      --newton_budget;
      if (newton_step(mesh, cur.values, m, ws, energy)) {
        ++report.newton_steps;
        report.energy_trace.push_back(energy);
        disp_prev = -1.0;  // the contraction estimate restarts after a jump
      } else {
        newton_alive = false;
      }
    }
    disp_prev = disp;
    disp = gs_sweep();
  }

  report.final_max_displacement = disp;
  report.converged = disp <= tol;
  return {std::move(cur), std::move(report)};
}

namespace {

struct Barycentric {
  double w0, w1, w2;
  double score;  // min weight before clamping
};

Barycentric barycentric_in_tangent(const BallMesh& mesh, const MeshTriangle& t, const HPoint& x) {
  const HPoint& p0 = mesh.vertices[t.v0];
  const Vec e1 = log_map(p0, mesh.vertices[t.v1]).components();
  const Vec e2 = log_map(p0, mesh.vertices[t.v2]).components();
  const Vec u = log_map(p0, x).components();
  const double g11 = minkowski_dot(e1, e1), g12 = minkowski_dot(e1, e2),
               g22 = minkowski_dot(e2, e2);
  const double b1 = minkowski_dot(e1, u), b2 = minkowski_dot(e2, u);
  const double det = g11 * g22 - g12 * g12;
  if (std::abs(det) < 1e-18) return {0, 0, 0, -1e9};
  const double w1 = (g22 * b1 - g12 * b2) / det;
  const double w2 = (g11 * b2 - g12 * b1) / det;
  const double w0 = 1.0 - w1 - w2;
  return {w0, w1, w2, std::min({w0, w1, w2})};
}

}  // namespace

HPoint interpolate(const BallMesh& mesh, const DiscreteMap& map, const HPoint& x) {
  if (map.values.size() != mesh.vertices.size()) throw Error("interpolate: size mismatch");
  const double t = dist(mesh.center, x);
  if (t > mesh.R + 1e-9) throw Error("interpolate: point outside the mesh");

  double phi = 0.0;
  if (t > 1e-12) {
    const TangentVector u = log_map(mesh.center, x);
    const double cx = minkowski_dot(u.components(), mesh.center_frame[0].components());
    const double cy = minkowski_dot(u.components(), mesh.center_frame[1].components());
    phi = std::atan2(cy, cx);
    if (phi < 0.0) phi += 2.0 * M_PI;
  }

  const int nbands = mesh.num_rings();
  const int band0 = std::min(static_cast<int>(t / mesh.dt), nbands - 1);

  const MeshTriangle* best_tri = nullptr;
  Barycentric best{0, 0, 0, -1e18};
  auto consider = [&](const MeshTriangle& tri) {
    const Barycentric b = barycentric_in_tangent(mesh, tri, x);
    if (b.score > best.score) {
      best = b;
      best_tri = &tri;
    }
  };
  for (int band = std::max(0, band0 - 1); band <= std::min(nbands - 1, band0 + 1); ++band) {
    const auto [lo, hi] = mesh.band_range[static_cast<std::size_t>(band)];
    if (hi <= lo) continue;
    // Triangles are sweep-ordered; probe around phi and its unwrapped copies.
    for (double target : {phi - 2.0 * M_PI, phi, phi + 2.0 * M_PI}) {
      auto it = std::lower_bound(mesh.triangles.begin() + lo, mesh.triangles.begin() + hi, target,
                                 [](const MeshTriangle& tr, double v) { return tr.sweep < v; });
      long idx = it - mesh.triangles.begin();
      for (long j = idx - 4; j <= idx + 4; ++j) {
        long wrapped = lo + ((j - lo) % (hi - lo) + (hi - lo)) % (hi - lo);
        consider(mesh.triangles[static_cast<std::size_t>(wrapped)]);
      }
    }
  }
  if (!best_tri || best.score < -0.25)
    throw Error("interpolate: point location failed");

  const double w0 = std::max(0.0, best.w0), w1 = std::max(0.0, best.w1),
               w2 = std::max(0.0, best.w2);
  const double ws = w0 + w1 + w2;
  const std::array<std::pair<std::uint32_t, double>, 3> corner = {
      std::pair<std::uint32_t, double>{best_tri->v0, w0 / ws},
      {best_tri->v1, w1 / ws},
      {best_tri->v2, w2 / ws}};
  // Snap exactly onto vertices.
  for (const auto& [v, w] : corner)
    if (w >= 1.0 - 1e-12) return map.values[v];
  std::vector<WeightedPoint> pts;
  const HPoint* init = &map.values[corner[0].first];
  double wmax = -1.0;
  Scalar x0max = 1.0L;
  for (const auto& [v, w] : corner) {
    pts.push_back({map.values[v], w});
    x0max = std::max(x0max, map.values[v].coords()[0]);
    if (w > wmax) {
      wmax = w;
      init = &map.values[v];
    }
  }
  // Residual floor: the gradient cannot be evaluated below the rounding
  // noise of the corner coordinates, which enters through chord products
  // and therefore grows with the square of the chart radius.
  const double tol = std::max(
      1e-12, 1e-19 * static_cast<double>(x0max * x0max) * map.values[0].kappa());
  return karcher_mean(pts, *init, tol, 1000);
}

void save_solution(const DiscreteMap& map, const BallMesh& mesh, const std::string& map_desc,
                   const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("save_solution: cannot open " + path);
  char buf[64];
  f << "# hmlab solution dump v1\n";
  std::snprintf(buf, sizeof buf, "0x%016" PRIx64, mesh.hash());
  f << "# mesh_hash: " << buf << "\n";
  f << "# map: " << map_desc << "\n";
  f << "# target_dim: " << map.target_dim << "\n";
  f << "# columns: vertex_index x0 ... x" << map.target_dim << "\n";
  for (std::size_t v = 0; v < map.values.size(); ++v) {
    f << v;
    const Vec& c = map.values[v].coords();
    for (int i = 0; i < c.size(); ++i) {
      std::snprintf(buf, sizeof buf, " %.17g", static_cast<double>(c[i]));
      f << buf;
    }
    f << "\n";
  }
  if (!f) throw Error("save_solution: write failed for " + path);
}

DiscreteMap round_to_double(const DiscreteMap& map) {
  DiscreteMap out;
  out.target_dim = map.target_dim;
  out.values.reserve(map.values.size());
  for (const auto& p : map.values) {
    Vec c(p.coords().size());
    for (int i = 0; i < c.size(); ++i) c[i] = static_cast<double>(p.coords()[i]);
    out.values.emplace_back(std::move(c), p.kappa());
  }
  return out;
}

DiscreteMap load_solution(const std::string& path, const BallMesh& mesh) {
  std::ifstream f(path);
  if (!f) throw Error("load_solution: cannot open " + path);
  DiscreteMap map;
  map.target_dim = -1;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("target_dim:");
      if (pos != std::string::npos) map.target_dim = std::stoi(line.substr(pos + 11));
      continue;
    }
    std::istringstream ss(line);
    std::size_t idx;
    ss >> idx;
    if (map.target_dim < 2) throw Error("load_solution: missing target_dim header");
    Vec c(map.target_dim + 1);
    for (int i = 0; i <= map.target_dim; ++i) {
      double value;  // records are doubles; parse as such for exact round trips
      ss >> value;
      c[i] = value;
    }
    if (!ss) throw Error("load_solution: malformed record");
    if (idx != map.values.size()) throw Error("load_solution: records out of order");
    map.values.emplace_back(std::move(c));
  }
  if (map.values.size() != mesh.vertices.size())
    throw Error("load_solution: vertex count does not match the mesh");
  return map;
}

}  // namespace hmlab
