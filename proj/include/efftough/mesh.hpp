#ifndef EFFTOUGH_MESH_HPP
#define EFFTOUGH_MESH_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "efftough/delaunay.hpp"
#include "efftough/tensor.hpp"

namespace efftough {

enum class MeshKind { structured, jittered_delaunay };

inline std::string to_string(MeshKind k) {
  return k == MeshKind::structured ? "structured" : "jittered-delaunay";
}

// Conforming P1 triangulation of the rectangle [0,L] x [0,H].
//
// Immutable after generate_mesh(): geometry, per-element constant
// shape-function gradients, boundary node set and element adjacency are all
// precomputed so that assembly and diagnostics never touch coordinates again.
struct Mesh {
  double length = 0.0;
  double height = 0.0;
  double target_h = 0.0;

  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> elements;       // CCW triples
  std::vector<double> element_area;
  std::vector<std::array<Vec2, 3>> grad_ops;      // P1 gradients per vertex
  std::vector<int> boundary_nodes;                // sorted
  std::vector<char> node_on_boundary;
  std::vector<std::array<int, 3>> neighbors;      // shared-edge adjacency, -1 none

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }

  Vec2 centroid(int e) const {
    const auto& t = elements[e];
    return (nodes[t[0]] + nodes[t[1]] + nodes[t[2]]) * (1.0 / 3.0);
  }
};

namespace detail {

inline std::array<Vec2, 3> p1_gradients(const Vec2& p0, const Vec2& p1,
                                        const Vec2& p2, double two_area) {
  return {Vec2{(p1.y - p2.y) / two_area, (p2.x - p1.x) / two_area},
          Vec2{(p2.y - p0.y) / two_area, (p0.x - p2.x) / two_area},
          Vec2{(p0.y - p1.y) / two_area, (p1.x - p0.x) / two_area}};
}

// Canonical form: CCW, smallest vertex first, elements sorted. Makes the
// mesh independent of the order in which the generator emitted triangles.
inline void normalize_elements(const std::vector<Vec2>& nodes,
                               std::vector<std::array<int, 3>>& elements) {
  for (auto& t : elements) {
    if (orient2d(nodes[t[0]], nodes[t[1]], nodes[t[2]]) < 0.0)
      std::swap(t[1], t[2]);
    int lo = 0;
    if (t[1] < t[lo]) lo = 1;
    if (t[2] < t[lo]) lo = 2;
    t = {t[lo], t[(lo + 1) % 3], t[(lo + 2) % 3]};
  }
  std::sort(elements.begin(), elements.end());
}

inline void finalize_mesh(Mesh& mesh) {
  normalize_elements(mesh.nodes, mesh.elements);

  const int ne = mesh.num_elements();
  mesh.element_area.resize(ne);
  mesh.grad_ops.resize(ne);
  for (int e = 0; e < ne; ++e) {
    const auto& t = mesh.elements[e];
    const Vec2& p0 = mesh.nodes[t[0]];
    const Vec2& p1 = mesh.nodes[t[1]];
    const Vec2& p2 = mesh.nodes[t[2]];
    const double two_area = orient2d(p0, p1, p2);
    if (two_area <= 0.0)
      throw std::runtime_error("mesh: degenerate element encountered");
    mesh.element_area[e] = 0.5 * two_area;
    mesh.grad_ops[e] = p1_gradients(p0, p1, p2, two_area);
  }

  const double tol = 1e-12 * std::max(mesh.length, mesh.height);
  mesh.node_on_boundary.assign(mesh.nodes.size(), 0);
  mesh.boundary_nodes.clear();
  for (int i = 0; i < mesh.num_nodes(); ++i) {
    const Vec2& p = mesh.nodes[i];
    if (p.x < tol || p.x > mesh.length - tol || p.y < tol || p.y > mesh.height - tol) {
      mesh.node_on_boundary[i] = 1;
      mesh.boundary_nodes.push_back(i);
    }
  }

  // Shared-edge adjacency.
  mesh.neighbors.assign(ne, {-1, -1, -1});
  std::unordered_map<std::uint64_t, std::pair<int, int>> open_edges;
  open_edges.reserve(ne * 2);
  auto edge_key = [](int u, int v) {
    const auto lo = static_cast<std::uint64_t>(u < v ? u : v);
    const auto hi = static_cast<std::uint64_t>(u < v ? v : u);
    return (hi << 32) | lo;
  };
  for (int e = 0; e < ne; ++e) {
    for (int k = 0; k < 3; ++k) {
      const int u = mesh.elements[e][(k + 1) % 3];
      const int v = mesh.elements[e][(k + 2) % 3];
      const auto key = edge_key(u, v);
      auto it = open_edges.find(key);
      if (it == open_edges.end()) {
        open_edges.emplace(key, std::make_pair(e, k));
      } else {
        mesh.neighbors[e][k] = it->second.first;
        mesh.neighbors[it->second.first][it->second.second] = e;
        open_edges.erase(it);
      }
    }
  }
}

inline void build_structured(Mesh& mesh, int nx, int ny) {
  const double hx = mesh.length / nx;
  const double hy = mesh.height / ny;
  mesh.nodes.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.nodes.emplace_back(i == nx ? mesh.length : i * hx,
                              j == ny ? mesh.height : j * hy);

  auto idx = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.elements.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = idx(i, j), b = idx(i + 1, j);
      const int c = idx(i + 1, j + 1), d = idx(i, j + 1);
      // Alternate the split diagonal so the pattern is symmetric about the
      // centerlines instead of biased toward one direction.
      if ((i + j) % 2 == 0) {
        mesh.elements.push_back({a, b, c});
        mesh.elements.push_back({a, c, d});
      } else {
        mesh.elements.push_back({a, b, d});
        mesh.elements.push_back({b, c, d});
      }
    }
  }
}

// Jittered grid triangulated per cell, then Lawson-flipped to Delaunay.
// Boundary nodes keep their exact grid positions so the rectangle boundary
// stays sharp; interior nodes move by up to jitter_frac of the spacing.
inline void build_jittered_delaunay(Mesh& mesh, int nx, int ny, std::uint64_t seed,
                                    double jitter_frac) {
  const double hx = mesh.length / nx;
  const double hy = mesh.height / ny;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  mesh.nodes.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      Vec2 p(i == nx ? mesh.length : i * hx, j == ny ? mesh.height : j * hy);
      const double jx = unit(rng), jy = unit(rng);  // always consume the stream
      if (i > 0 && i < nx && j > 0 && j < ny) {
        p.x += jx * jitter_frac * hx;
        p.y += jy * jitter_frac * hy;
      }
      mesh.nodes.push_back(p);
    }
  }

  auto idx = [nx](int i, int j) { return j * (nx + 1) + i; };
  mesh.elements.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = idx(i, j), b = idx(i + 1, j);
      const int c = idx(i + 1, j + 1), d = idx(i, j + 1);
      // Pick a diagonal that yields two strictly positive triangles,
      // preferring the locally Delaunay one.
      const bool ac_valid = detail::orient2d(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]) > 0.0 &&
                            detail::orient2d(mesh.nodes[a], mesh.nodes[c], mesh.nodes[d]) > 0.0;
      const bool bd_valid = detail::orient2d(mesh.nodes[a], mesh.nodes[b], mesh.nodes[d]) > 0.0 &&
                            detail::orient2d(mesh.nodes[b], mesh.nodes[c], mesh.nodes[d]) > 0.0;
      bool use_ac = ac_valid;
      if (ac_valid && bd_valid &&
          detail::incircle(mesh.nodes[a], mesh.nodes[b], mesh.nodes[c], mesh.nodes[d]) > 0.0)
        use_ac = false;
      if (!ac_valid && !bd_valid)
        throw std::runtime_error("mesh: jittered cell degenerated");
      if (use_ac) {
        mesh.elements.push_back({a, b, c});
        mesh.elements.push_back({a, c, d});
      } else {
        mesh.elements.push_back({a, b, d});
        mesh.elements.push_back({b, c, d});
      }
    }
  }

  detail::lawson_flip_to_delaunay(mesh.nodes, mesh.elements);
}

}  // namespace detail

// Generates a conforming triangulation of [0,L] x [0,H] with nominal element
// size delta. The same (kind, seed) always produces the same mesh.
inline Mesh generate_mesh(double length, double height, double delta, MeshKind kind,
                          std::uint64_t seed = 0) {
  if (length <= 0.0 || height <= 0.0)
    throw std::invalid_argument("generate_mesh: domain dimensions must be positive");
  if (delta <= 0.0 || delta > 0.5 * std::min(length, height))
    throw std::invalid_argument(
        "generate_mesh: delta must satisfy 0 < delta <= min(L,H)/2");

  const int nx = std::max(1, static_cast<int>(std::lround(length / delta)));
  const int ny = std::max(1, static_cast<int>(std::lround(height / delta)));

  const int max_attempts = 3;
  for (int attempt = 0;; ++attempt) {
    Mesh mesh;
    mesh.length = length;
    mesh.height = height;
    mesh.target_h = delta;
    try {
      if (kind == MeshKind::structured)
        detail::build_structured(mesh, nx, ny);
      else
        detail::build_jittered_delaunay(
            mesh, nx, ny, seed + 0x9E3779B97F4A7C15ull * attempt, 0.3);
      detail::finalize_mesh(mesh);

      double total = 0.0;
      for (const double a : mesh.element_area) total += a;
      if (std::abs(total - length * height) > 1e-10 * length * height)
        throw std::runtime_error("mesh: triangulation does not tile the rectangle");
      return mesh;
    } catch (const std::runtime_error&) {
      if (kind == MeshKind::structured || attempt + 1 >= max_attempts) throw;
    }
  }
}

// Recomputes the per-element P1 shape-function gradients. The result matches
// Mesh::grad_ops; kept as a standalone entry point for verification.
inline std::vector<std::array<Vec2, 3>> shape_gradients(const Mesh& mesh) {
  std::vector<std::array<Vec2, 3>> grads(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements[e];
    const double two_area =
        detail::orient2d(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
    if (two_area <= 0.0) throw std::runtime_error("shape_gradients: zero-area element");
    grads[e] = detail::p1_gradients(mesh.nodes[t[0]], mesh.nodes[t[1]],
                                    mesh.nodes[t[2]], two_area);
  }
  return grads;
}

// Indices of the elements whose centroid satisfies the predicate.
template <class Predicate>
std::vector<int> locate_phase_elements(const Mesh& mesh, Predicate&& pred) {
  std::vector<int> out;
  for (int e = 0; e < mesh.num_elements(); ++e)
    if (pred(mesh.centroid(e))) out.push_back(e);
  return out;
}

}  // namespace efftough

#endif
