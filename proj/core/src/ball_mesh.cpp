#include "hmlab/ball_mesh.hpp"

#include "hmlab/comparison.hpp"
#include "hmlab/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

namespace hmlab {

namespace {

void push_byte_range(std::vector<std::byte>& out, const void* p, std::size_t n) {
  const auto* b = static_cast<const std::byte*>(p);
  out.insert(out.end(), b, b + n);
}

template <typename T>
void put(std::vector<std::byte>& out, const T& v) {
  static_assert(std::is_trivially_copyable_v<T>);
  push_byte_range(out, &v, sizeof(T));
}

template <typename T>
T get(const std::vector<char>& in, std::size_t& off) {
  static_assert(std::is_trivially_copyable_v<T>);
  if (off + sizeof(T) > in.size()) throw Error("load_mesh: truncated file");
  T v;
  std::memcpy(&v, in.data() + off, sizeof(T));
  off += sizeof(T);
  return v;
}

constexpr char kMagic[8] = {'H', 'M', 'L', 'M', 'E', 'S', 'H', '1'};

std::vector<std::byte> serialize(const BallMesh& m) {
  std::vector<std::byte> out;
  push_byte_range(out, kMagic, 8);
  put<std::uint32_t>(out, 1u);  // version
  put<std::uint32_t>(out, static_cast<std::uint32_t>(m.center.dim()));
  put<double>(out, m.center.kappa());
  put<double>(out, m.R);
  put<double>(out, m.h_mesh);
  put<double>(out, m.dt);
  put<std::uint64_t>(out, m.ring_count.size());
  put<std::uint64_t>(out, m.vertices.size());
  put<std::uint64_t>(out, m.edges.size());
  put<std::uint64_t>(out, m.triangles.size());
  put<std::uint32_t>(out, m.clamped_weights);
  // Spatial coordinates only: the time coordinate is derived on load, so a
  // save/load round trip is bit-exact.
  for (int i = 1; i < m.center.coords().size(); ++i)
    put<double>(out, static_cast<double>(m.center.coords()[i]));
  for (std::size_t r = 0; r < m.ring_count.size(); ++r) {
    put<std::uint32_t>(out, m.ring_start[r]);
    put<std::uint32_t>(out, m.ring_count[r]);
    put<double>(out, m.ring_offset[r]);
  }
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    for (int i = 1; i < m.vertices[v].coords().size(); ++i)
      put<double>(out, static_cast<double>(m.vertices[v].coords()[i]));
    put<std::uint32_t>(out, m.ring_of[v]);
    put<double>(out, m.theta_of[v]);
    put<double>(out, m.vertex_area[v]);
    put<std::uint8_t>(out, m.is_boundary[v]);
  }
  for (const auto& e : m.edges) {
    put<std::uint32_t>(out, e.a);
    put<std::uint32_t>(out, e.b);
    put<double>(out, e.weight);
    put<double>(out, e.length);
  }
  for (const auto& t : m.triangles) {
    put<std::uint32_t>(out, t.v0);
    put<std::uint32_t>(out, t.v1);
    put<std::uint32_t>(out, t.v2);
    put<std::uint32_t>(out, t.band);
    put<double>(out, t.area);
    put<double>(out, t.sweep);
  }
  return out;
}

}  // namespace

std::uint64_t BallMesh::hash() const { return fnv1a(serialize(*this)); }

void BallMesh::finalize() {
  const std::size_t n = vertices.size();
  center_frame = tangent_frame(center);
  neighbors.assign(n, {});
  for (const auto& e : edges) {
    neighbors[e.a].push_back({e.b, e.weight});
    neighbors[e.b].push_back({e.a, e.weight});
  }
  for (auto& nb : neighbors)
    std::sort(nb.begin(), nb.end(),
              [](const auto& x, const auto& y) { return x.first < y.first; });

  band_range.assign(num_rings(), {0, 0});
  for (std::uint32_t i = 0; i < triangles.size(); ++i) {
    auto& rng = band_range[triangles[i].band];
    if (rng.second == 0) rng.first = i;
    rng.second = i + 1;
  }

  // Invariants.
  for (std::size_t v = 0; v < n; ++v) {
    if (!(vertex_area[v] > 0.0)) throw Error("BallMesh: nonpositive dual-cell area");
    if (is_boundary[v]) {
      const double r = dist(center, vertices[v]);
      if (std::abs(r - R) > 1e-9) throw Error("BallMesh: boundary vertex off the sphere");
      continue;
    }
    double wsum = 0.0;
    for (const auto& [q, w] : neighbors[v]) wsum += w;
    if (neighbors[v].size() < 3 || !(wsum > 0.0))
      throw Error("BallMesh: interior vertex with insufficient stencil");
  }
  for (const auto& e : edges) {
    if (e.length < 0.5 * h_mesh - 1e-12 || e.length > 1.5 * h_mesh + 1e-12)
      throw Error("BallMesh: edge (" + std::to_string(e.a) + "," + std::to_string(e.b) +
                  ") length " + std::to_string(e.length) + " outside [0.5, 1.5] * h_mesh, rings " +
                  std::to_string(ring_of[e.a]) + "/" + std::to_string(ring_of[e.b]));
  }
  if (clamped_weights * 100 >= edges.size())
    throw Error("BallMesh: " + std::to_string(clamped_weights) + " of " +
                std::to_string(edges.size()) + " cotangent weights clamped (>1%), mesh rejected");
}

BallMesh build_polar_mesh(const HPoint& O, double R, double h_mesh, std::uint64_t vertex_cap) {
  if (O.dim() != 2) throw Error("build_polar_mesh: center must lie in H^2");
  if (R < 1.0) throw Error("build_polar_mesh: radius must be at least 1");
  if (h_mesh < 0.01 || h_mesh > 0.5)
    throw Error("build_polar_mesh: target edge length outside [0.01, 0.5]");

  BallMesh m;
  m.center = O;
  m.R = R;
  m.h_mesh = h_mesh;
  const int nrings = std::max(2, static_cast<int>(std::lround(R / h_mesh)));
  m.dt = R / nrings;

  // Ring sizes first, to enforce the cap before allocating anything big.
  std::vector<std::uint32_t> counts(nrings + 1, 0);
  counts[0] = 1;
  std::uint64_t total = 1;
  for (int i = 1; i <= nrings; ++i) {
    const double r = i * m.dt;
    counts[i] = static_cast<std::uint32_t>(std::ceil(2.0 * M_PI * std::sinh(r) / h_mesh));
    total += counts[i];
  }
  if (total > vertex_cap)
    throw Error("build_polar_mesh: " + std::to_string(total) +
                " vertices exceed the cap; increase h_mesh or the cap");

  const auto frame = tangent_frame(O);
  m.vertices.reserve(total);
  m.ring_of.reserve(total);
  m.theta_of.reserve(total);
  m.is_boundary.reserve(total);
  m.ring_start.resize(nrings + 1);
  m.ring_count = counts;
  m.ring_offset.resize(nrings + 1, 0.0);

  m.ring_start[0] = 0;
  m.vertices.push_back(O);
  m.ring_of.push_back(0);
  m.theta_of.push_back(0.0);
  m.is_boundary.push_back(0);
  for (int i = 1; i <= nrings; ++i) {
    m.ring_start[i] = static_cast<std::uint32_t>(m.vertices.size());
    const double r = i * m.dt;
    const double offset = (i % 2 == 0) ? M_PI / counts[i] : 0.0;  // stagger alternate rings
    m.ring_offset[i] = offset;
    for (std::uint32_t j = 0; j < counts[i]; ++j) {
      const double th = offset + 2.0 * M_PI * j / counts[i];
      TangentVector dir =
          frame[0].scaled(r * std::cos(th)) + frame[1].scaled(r * std::sin(th));
      m.vertices.push_back(exp_map(O, dir));
      m.ring_of.push_back(static_cast<std::uint32_t>(i));
      m.theta_of.push_back(th);
      m.is_boundary.push_back(i == nrings ? 1 : 0);
    }
  }

  // Center fan.
  const std::uint32_t s1 = m.ring_start[1], n1 = counts[1];
  for (std::uint32_t j = 0; j < n1; ++j) {
    MeshTriangle t;
    t.v0 = 0;
    t.v1 = s1 + j;
    t.v2 = s1 + (j + 1) % n1;
    t.band = 0;
    t.sweep = m.theta_of[t.v1];
    m.triangles.push_back(t);
  }

  // Strips between consecutive rings: greedy merge that always advances the
  // side whose new diagonal is shorter, which keeps diagonals short even
  // where the ring counts jump (they roughly double near the center).
  for (int band = 1; band < nrings; ++band) {
    const std::uint32_t si = m.ring_start[band], ni = counts[band];
    const std::uint32_t so = m.ring_start[band + 1], no = counts[band + 1];
    const double step_i = 2.0 * M_PI / ni, step_o = 2.0 * M_PI / no;
    const double start_i = m.ring_offset[band];
    // Outer start: vertex whose angle is closest to start_i, unwrapped nearby.
    const long no_l = static_cast<long>(no), ni_l = static_cast<long>(ni);
    const long o0 = std::lround((start_i - m.ring_offset[band + 1]) / step_o);
    const long o_base = ((o0 % no_l) + no_l) % no_l;
    const double start_o = m.ring_offset[band + 1] + o0 * step_o;
    long ii = 0, oo = 0;
    auto inner_at = [&](long s) { return si + static_cast<std::uint32_t>(s % ni_l); };
    auto outer_at = [&](long s) { return so + static_cast<std::uint32_t>((o_base + s) % no_l); };
    while (ii < ni_l || oo < no_l) {
      const std::uint32_t vi = inner_at(ii);
      const std::uint32_t vo = outer_at(oo);
      bool advance_inner;
      if (ii >= ni_l) {
        advance_inner = false;
      } else if (oo >= no_l) {
        advance_inner = true;
      } else {
        const double diag_i = dist(m.vertices[inner_at(ii + 1)], m.vertices[vo]);
        const double diag_o = dist(m.vertices[vi], m.vertices[outer_at(oo + 1)]);
        advance_inner = diag_i <= diag_o;
      }
      MeshTriangle t;
      t.band = static_cast<std::uint32_t>(band);
      t.v0 = vi;
      t.v1 = vo;
      if (advance_inner) {
        t.v2 = inner_at(ii + 1);
        t.sweep = start_i + ii * step_i;
        ++ii;
      } else {
        t.v2 = outer_at(oo + 1);
        t.sweep = start_o + oo * step_o;
        ++oo;
      }
      m.triangles.push_back(t);
    }
  }

  // Edge set from triangles, in sorted order for stable reports.
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> edge_len;
  auto add_edge = [&](std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    auto [it, fresh] = edge_len.try_emplace({a, b}, 0.0);
    if (fresh) it->second = dist(m.vertices[a], m.vertices[b]);
  };
  for (const auto& t : m.triangles) {
    add_edge(t.v0, t.v1);
    add_edge(t.v1, t.v2);
    add_edge(t.v0, t.v2);
  }
  m.edges.reserve(edge_len.size());
  for (const auto& [key, len] : edge_len)
    m.edges.push_back({key.first, key.second, 0.0, len});

  cotan_weights(m);
  m.finalize();
  return m;
}

void cotan_weights(BallMesh& mesh) {
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::size_t> edge_index;
  for (std::size_t i = 0; i < mesh.edges.size(); ++i)
    edge_index[{mesh.edges[i].a, mesh.edges[i].b}] = i;
  auto index_of = [&](std::uint32_t a, std::uint32_t b) {
    if (a > b) std::swap(a, b);
    return edge_index.at({a, b});
  };
  auto length_of = [&](std::uint32_t a, std::uint32_t b) {
    return mesh.edges[index_of(a, b)].length;
  };

  std::vector<double> raw(mesh.edges.size(), 0.0);
  mesh.vertex_area.assign(mesh.vertices.size(), 0.0);
  for (auto& t : mesh.triangles) {
    const double la = length_of(t.v1, t.v2);  // opposite v0
    const double lb = length_of(t.v0, t.v2);  // opposite v1
    const double lc = length_of(t.v0, t.v1);  // opposite v2
    const double a0 = plane_triangle_angle(la, lb, lc);
    const double a1 = plane_triangle_angle(lb, lc, la);
    const double a2 = plane_triangle_angle(lc, la, lb);
    t.area = std::max(0.0, M_PI - a0 - a1 - a2);
    raw[index_of(t.v1, t.v2)] += 0.5 / std::tan(a0);
    raw[index_of(t.v0, t.v2)] += 0.5 / std::tan(a1);
    raw[index_of(t.v0, t.v1)] += 0.5 / std::tan(a2);
    // Mixed Voronoi dual areas: circumcentric for non-obtuse triangles,
    // half/quarter split at an obtuse corner. Keeps the Laplacian stencil
    // pointwise consistent where barycentric thirds drift by O(1) factors
    // on irregular stencils.
    const std::uint32_t vids[3] = {t.v0, t.v1, t.v2};
    const double ang[3] = {a0, a1, a2};
    const double opp[3] = {la, lb, lc};
    const double obtuse_at = std::max({a0, a1, a2});
    if (obtuse_at <= M_PI / 2 + 1e-14) {
      for (int i = 0; i < 3; ++i) {
        const int j = (i + 1) % 3, k = (i + 2) % 3;
        // Corner i gets (1/8)(l_j^2 cot(ang_j) + l_k^2 cot(ang_k)) in the
        // flat formula; the small-triangle limit is what the stencil needs.
        mesh.vertex_area[vids[i]] +=
            0.125 * (opp[j] * opp[j] / std::tan(ang[j]) + opp[k] * opp[k] / std::tan(ang[k]));
      }
    } else {
      for (int i = 0; i < 3; ++i)
        mesh.vertex_area[vids[i]] += (ang[i] == obtuse_at ? 0.5 : 0.25) * t.area;
    }
  }
  mesh.clamped_weights = 0;
  for (std::size_t i = 0; i < mesh.edges.size(); ++i) {
    if (raw[i] < 0.0) {
      mesh.edges[i].weight = 0.0;
      ++mesh.clamped_weights;
    } else {
      mesh.edges[i].weight = raw[i];
    }
  }
}

std::vector<double> discrete_laplacian(const BallMesh& mesh, std::span<const double> u) {
  if (u.size() != mesh.vertices.size()) throw Error("discrete_laplacian: field size mismatch");
  std::vector<double> out(u.size(), 0.0);
  for (std::size_t p = 0; p < u.size(); ++p) {
    KahanSum acc;
    for (const auto& [q, w] : mesh.neighbors[p]) acc.add(w * (u[q] - u[p]));
    out[p] = acc.value() / mesh.vertex_area[p];
  }
  return out;
}

void save_mesh(const BallMesh& mesh, const std::string& path) {
  const auto bytes = serialize(mesh);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("save_mesh: cannot open " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("save_mesh: write failed for " + path);
}

BallMesh load_mesh(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("load_mesh: cannot open " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::size_t off = 0;
  char magic[8];
  if (bytes.size() < 8) throw Error("load_mesh: truncated file");
  std::memcpy(magic, bytes.data(), 8);
  off = 8;
  if (std::memcmp(magic, kMagic, 8) != 0) throw Error("load_mesh: bad magic");
  const auto version = get<std::uint32_t>(bytes, off);
  if (version != 1) throw Error("load_mesh: unsupported version");
  const auto k = get<std::uint32_t>(bytes, off);
  if (k != 2) throw Error("load_mesh: only H^2 meshes supported");
  const double kappa = get<double>(bytes, off);

  BallMesh m;
  m.R = get<double>(bytes, off);
  m.h_mesh = get<double>(bytes, off);
  m.dt = get<double>(bytes, off);
  const auto nrings_total = get<std::uint64_t>(bytes, off);
  const auto nv = get<std::uint64_t>(bytes, off);
  const auto ne = get<std::uint64_t>(bytes, off);
  const auto nt = get<std::uint64_t>(bytes, off);
  m.clamped_weights = get<std::uint32_t>(bytes, off);
  auto read_point = [&](void) {
    Vec x(k + 1);
    Scalar sq = 0.0L;
    for (std::uint32_t i = 1; i <= k; ++i) {
      x[i] = get<double>(bytes, off);
      sq += x[i] * x[i];
    }
    x[0] = std::sqrt(1.0L + sq);
    return HPoint(std::move(x), kappa);
  };
  m.center = read_point();
  m.ring_start.resize(nrings_total);
  m.ring_count.resize(nrings_total);
  m.ring_offset.resize(nrings_total);
  for (std::uint64_t r = 0; r < nrings_total; ++r) {
    m.ring_start[r] = get<std::uint32_t>(bytes, off);
    m.ring_count[r] = get<std::uint32_t>(bytes, off);
    m.ring_offset[r] = get<double>(bytes, off);
  }
  m.vertices.reserve(nv);
  m.ring_of.resize(nv);
  m.theta_of.resize(nv);
  m.vertex_area.resize(nv);
  m.is_boundary.resize(nv);
  for (std::uint64_t v = 0; v < nv; ++v) {
    m.vertices.push_back(read_point());
    m.ring_of[v] = get<std::uint32_t>(bytes, off);
    m.theta_of[v] = get<double>(bytes, off);
    m.vertex_area[v] = get<double>(bytes, off);
    m.is_boundary[v] = get<std::uint8_t>(bytes, off);
  }
  m.edges.resize(ne);
  for (auto& e : m.edges) {
    e.a = get<std::uint32_t>(bytes, off);
    e.b = get<std::uint32_t>(bytes, off);
    e.weight = get<double>(bytes, off);
    e.length = get<double>(bytes, off);
  }
  m.triangles.resize(nt);
  for (auto& t : m.triangles) {
    t.v0 = get<std::uint32_t>(bytes, off);
    t.v1 = get<std::uint32_t>(bytes, off);
    t.v2 = get<std::uint32_t>(bytes, off);
    t.band = get<std::uint32_t>(bytes, off);
    t.area = get<double>(bytes, off);
    t.sweep = get<double>(bytes, off);
  }
  m.finalize();
  return m;
}

}  // namespace hmlab
