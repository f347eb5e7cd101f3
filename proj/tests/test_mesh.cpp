#include <doctest.h>

#include "hmlab/ball_mesh.hpp"
#include "hmlab/comparison.hpp"
#include "hmlab/estimates.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace hmlab;

TEST_CASE("polar mesh: ring layout at R=1, h=0.5") {
  const BallMesh m = build_polar_mesh(HPoint::origin(2), 1.0, 0.5);
  // Center plus two rings.
  CHECK(m.ring_count.size() == 3);
  CHECK(m.ring_count[0] == 1);
  // Innermost ring: ceil(2 pi sinh(0.5) / 0.5) = 7 vertices.
  CHECK(m.ring_count[1] == 7);
  CHECK(m.ring_count[2] == static_cast<std::uint32_t>(
                               std::ceil(2.0 * M_PI * std::sinh(1.0) / 0.5)));
  for (int v = 0; v < m.num_vertices(); ++v) {
    const double r = dist(m.center, m.vertices[static_cast<std::size_t>(v)]);
    if (m.boundary(v)) {
      CHECK(std::abs(r - 1.0) <= 1e-9);
    } else {
      CHECK(r < 1.0);
    }
  }
}

TEST_CASE("polar mesh: total area matches the closed-form ball area within 2%") {
  for (double R : {2.0, 4.0}) {
    const BallMesh m = build_polar_mesh(HPoint::origin(2), R, 0.1);
    double area = 0.0;
    for (const auto& t : m.triangles) area += t.area;
    const double exact = 2.0 * M_PI * (std::cosh(R) - 1.0);
    CHECK(std::abs(area - exact) <= 0.02 * exact);
    // Mixed Voronoi cells tile the ball up to the flat-formula O(h^2) bias.
    double vertex_total = 0.0;
    for (double a : m.vertex_area) vertex_total += a;
    CHECK(vertex_total == doctest::Approx(area).epsilon(0.01));
  }
}

TEST_CASE("polar mesh: edge lengths, interior stencils and clamping stay in bounds") {
  const BallMesh m = build_polar_mesh(HPoint::origin(2), 3.0, 0.1);
  for (const auto& e : m.edges) {
    CHECK(e.length >= 0.5 * m.h_mesh - 1e-12);
    CHECK(e.length <= 1.5 * m.h_mesh + 1e-12);
    CHECK(e.weight >= 0.0);
  }
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (m.boundary(v)) continue;
    CHECK(m.neighbors[static_cast<std::size_t>(v)].size() >= 3);
  }
  CHECK(m.clamped_weights * 100 < m.edges.size());
}

TEST_CASE("polar mesh: parameter validation and the vertex cap") {
  CHECK_THROWS_AS(static_cast<void>(build_polar_mesh(HPoint::origin(2), 0.5, 0.1)), Error);
  CHECK_THROWS_AS(static_cast<void>(build_polar_mesh(HPoint::origin(2), 2.0, 0.005)), Error);
  CHECK_THROWS_AS(static_cast<void>(build_polar_mesh(HPoint::origin(2), 2.0, 0.6)), Error);
  CHECK_THROWS_AS(static_cast<void>(build_polar_mesh(HPoint::origin(2), 4.0, 0.05, 1000)), Error);
  CHECK_THROWS_AS(static_cast<void>(build_polar_mesh(HPoint::origin(3), 2.0, 0.1)), Error);
}

TEST_CASE("cotangent weights: small equilateral pair approaches the flat value") {
  // Two equilateral triangles sharing an edge give w = cot(pi/3) = 1/sqrt(3)
  // in the flat limit; hyperbolic corrections are O(side^2).
  const double s = 1e-3;
  const double a = plane_triangle_angle(s, s, s);
  const double w = 0.5 * (1.0 / std::tan(a)) * 2.0;
  CHECK(w == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-5));
  // At a visible scale the angle is strictly below pi/3.
  CHECK(plane_triangle_angle(0.5, 0.5, 0.5) < M_PI / 3.0);
}

TEST_CASE("cotangent weights: center spokes are symmetric") {
  const BallMesh m = build_polar_mesh(HPoint::origin(2), 1.0, 0.25);
  // All edges from the center vertex carry the same weight by symmetry.
  double w0 = -1.0;
  for (const auto& [q, w] : m.neighbors[0]) {
    (void)q;
    if (w0 < 0.0) w0 = w;
    CHECK(w == doctest::Approx(w0).epsilon(1e-9));
  }
  CHECK(w0 > 0.0);
}

TEST_CASE("discrete laplacian: constants, distance field, squared distance field") {
  const BallMesh m = build_polar_mesh(HPoint::origin(2), 2.0, 0.05);
  std::vector<double> ones(m.vertices.size(), 1.0);
  for (double v : discrete_laplacian(m, ones)) CHECK(v == 0.0);

  // d_{x0} for x0 outside the mesh: Laplacian >= a - eps at interior
  // vertices (a = 1 here, and coth(d) >= 1). Regular stencils hold 0.05;
  // the first ring absorbs the pinned ring-count jump and only meets the
  // calibrated 3h slack.
  const auto frame = tangent_frame(m.center);
  const HPoint x0 = exp_map(m.center, frame[0].scaled(3.0));
  std::vector<double> dfield(m.vertices.size());
  for (std::size_t v = 0; v < dfield.size(); ++v) dfield[v] = dist(x0, m.vertices[v]);
  const auto lap = discrete_laplacian(m, dfield);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (m.boundary(v)) continue;
    CHECK(lap[static_cast<std::size_t>(v)] >= 1.0 - tolerances::eps_laplacian(m.h_mesh));
    if (m.ring_of[static_cast<std::size_t>(v)] >= 2)
      CHECK(lap[static_cast<std::size_t>(v)] >= 1.0 - 0.05);
  }

  // d^2 about the center: the flat-limit value is 2k = 4 near the origin.
  std::vector<double> d2(m.vertices.size());
  for (std::size_t v = 0; v < d2.size(); ++v) {
    const double d = dist(m.center, m.vertices[v]);
    d2[v] = d * d;
  }
  const auto lap2 = discrete_laplacian(m, d2);
  for (int v = 0; v < m.num_vertices(); ++v) {
    if (m.boundary(v)) continue;
    const double d = dist(m.center, m.vertices[static_cast<std::size_t>(v)]);
    if (d > 0.3) continue;
    CHECK(lap2[static_cast<std::size_t>(v)] >= 3.8);
    CHECK(lap2[static_cast<std::size_t>(v)] <= 4.4);
  }
}

TEST_CASE("mesh cache round trip is exact") {
  const BallMesh m = build_polar_mesh(HPoint::origin(2), 2.0, 0.2);
  const std::string path = (std::filesystem::temp_directory_path() / "hmlab_mesh_rt.bin").string();
  save_mesh(m, path);
  const BallMesh r = load_mesh(path);
  CHECK(r.num_vertices() == m.num_vertices());
  CHECK(r.edges.size() == m.edges.size());
  CHECK(r.triangles.size() == m.triangles.size());
  CHECK(r.hash() == m.hash());
  // Saving the loaded mesh reproduces the same bytes.
  const std::string path2 = path + ".2";
  save_mesh(r, path2);
  CHECK(load_mesh(path2).hash() == r.hash());
  std::filesystem::remove(path);
  std::filesystem::remove(path2);
  CHECK_THROWS_AS(static_cast<void>(load_mesh("/nonexistent/mesh.bin")), Error);
}
