#pragma once

#include "hmlab/hyperboloid.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

namespace hmlab {

struct MeshEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  double weight = 0.0;  // cotangent weight, clamped at 0
  double length = 0.0;
};

struct MeshTriangle {
  std::uint32_t v0 = 0, v1 = 0, v2 = 0;
  std::uint32_t band = 0;   // band i sits between rings i and i+1 (band 0 is the center fan)
  double area = 0.0;        // hyperbolic area from the angle defect
  double sweep = 0.0;       // unwrapped construction angle, used for point location
};

/// Triangulated geodesic ball B(O, R) in H^2: concentric vertex rings at
/// spacing ~h_mesh, zigzag strip triangulation between consecutive rings,
/// cotangent edge weights and barycentric-dual vertex areas.
struct BallMesh {
  HPoint center = HPoint::origin(2);
  double R = 0.0;
  double h_mesh = 0.0;
  double dt = 0.0;  // ring spacing; ring i sits at radius i * dt

  std::vector<HPoint> vertices;
  std::vector<std::uint32_t> ring_of;
  std::vector<double> theta_of;
  std::vector<std::uint8_t> is_boundary;
  std::vector<double> vertex_area;
  std::vector<MeshEdge> edges;
  std::vector<MeshTriangle> triangles;

  std::vector<std::uint32_t> ring_start;  // first vertex index of each ring (ring 0 = center)
  std::vector<std::uint32_t> ring_count;
  std::vector<double> ring_offset;
  std::uint32_t clamped_weights = 0;

  // Derived connectivity, rebuilt by finalize().
  std::vector<std::vector<std::pair<std::uint32_t, double>>> neighbors;  // (vertex, weight)
  std::vector<std::pair<std::uint32_t, std::uint32_t>> band_range;       // triangle ranges per band
  std::vector<TangentVector> center_frame;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_rings() const { return static_cast<int>(ring_count.size()) - 1; }
  bool boundary(int v) const { return is_boundary[static_cast<std::size_t>(v)] != 0; }

  /// Exact by construction: vertices of ring i sit at distance i*dt from O.
  double dist_to_boundary(int v) const { return R - ring_of[static_cast<std::size_t>(v)] * dt; }

  std::uint64_t hash() const;
  void finalize();  // rebuild adjacency, band ranges; validate invariants
};

/// Build the polar mesh. Rings at radii i*dt with dt = R/round(R/h_mesh);
/// ring i holds ceil(2 pi sinh(i dt) / h_mesh) vertices. Throws when the
/// vertex count would exceed the cap.
BallMesh build_polar_mesh(const HPoint& O, double R, double h_mesh,
                          std::uint64_t vertex_cap = 2'000'000);

/// Recompute cotangent weights, triangle areas and vertex areas in place.
/// Negative weights are clamped to zero and counted; a mesh with more than
/// 1% clamped edges is rejected.
void cotan_weights(BallMesh& mesh);

/// (sum_q w_pq (u_q - u_p)) / vertex_area_p at every vertex.
std::vector<double> discrete_laplacian(const BallMesh& mesh, std::span<const double> u);

/// Versioned binary cache. Header: magic, version, k, kappa, R, h_mesh, dt,
/// counts; then rings, vertices, edges, triangles, areas, boundary flags.
void save_mesh(const BallMesh& mesh, const std::string& path);
BallMesh load_mesh(const std::string& path);

}  // namespace hmlab
