#pragma once

#include "hmlab/ball_mesh.hpp"
#include "hmlab/qi_map.hpp"

#include <optional>
#include <string>
#include <vector>

namespace hmlab {

/// Vertex-indexed map from a BallMesh into H^m. Boundary vertices carry the
/// prescribed Dirichlet data throughout a solve.
struct DiscreteMap {
  std::vector<HPoint> values;
  int target_dim = 2;

  const HPoint& at(int v) const { return values[static_cast<std::size_t>(v)]; }
};

struct SolveReport {
  int sweeps = 0;
  int newton_steps = 0;
  double final_max_displacement = 0.0;
  std::vector<double> energy_trace;
  bool converged = false;
};

enum class SolveMethod { GaussSeidel, NewtonAccelerated };

struct SolveOptions {
  double tol = 0.0;        // 0 -> default 1e-6 * h_mesh
  int max_sweeps = 0;      // 0 -> default 10 * (R / h_mesh)^2
  SolveMethod method = SolveMethod::NewtonAccelerated;
  double karcher_tol = 1e-12;
  std::optional<DiscreteMap> initial_guess;  // default: boundary centroid everywhere
};

/// Dirichlet data: target values for every boundary vertex (indexed by
/// vertex id; interior slots unused).
struct BoundaryData {
  std::vector<HPoint> values;
  std::vector<std::uint8_t> present;
  int target_dim = 2;
};

/// Evaluate f on the boundary vertices of the mesh.
BoundaryData restrict_boundary(const QuasiIsometricMap& f, const BallMesh& mesh);

/// Evaluate f on every vertex (used for initial guesses and for the
/// comparison fields of the harness).
std::vector<HPoint> evaluate_on_vertices(const QuasiIsometricMap& f, const BallMesh& mesh);

/// Discrete Dirichlet energy sum_edges w_pq d^2(h_p, h_q), compensated
/// summation in fixed edge order.
double discrete_energy(const BallMesh& mesh, const DiscreteMap& map);

/// Minimize the discrete energy with the boundary held fixed.
///
/// Sweeps are nonlinear Gauss-Seidel: each interior vertex is replaced by
/// the weighted Karcher mean of its neighbors, colored by ring parity with
/// fixed index order inside a color, so every sweep decreases the energy.
/// The Newton-accelerated method interleaves damped Newton steps on the
/// energy (a connection-Laplacian system solved sparsely) accepted only when
/// the energy decreases, which cuts the sweep count on fine meshes by orders
/// of magnitude. Convergence means the max vertex displacement of a full
/// Gauss-Seidel sweep is at most tol. Exceeding max_sweeps reports
/// converged = false rather than throwing.
std::pair<DiscreteMap, SolveReport> solve_dirichlet(const BallMesh& mesh,
                                                    const BoundaryData& boundary,
                                                    const SolveOptions& opts = {});

/// Evaluate the discrete map between vertices: barycentric weights in the
/// tangent plane of the containing triangle, combined with a Karcher mean.
/// Throws when x lies outside the mesh.
HPoint interpolate(const BallMesh& mesh, const DiscreteMap& map, const HPoint& x);

/// Text dump, one record per vertex: index followed by the target Minkowski
/// coordinates (%.17g, exact round trip). Header lines carry the mesh hash
/// and target dimension.
void save_solution(const DiscreteMap& map, const BallMesh& mesh, const std::string& map_desc,
                   const std::string& path);
DiscreteMap load_solution(const std::string& path, const BallMesh& mesh);

/// Pass every coordinate through double precision; the result is exactly
/// what a save/load round trip produces, so checks computed on it match
/// checks on a reloaded dump bit for bit.
DiscreteMap round_to_double(const DiscreteMap& map);

}  // namespace hmlab
