#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "efftough/mesh.hpp"

using namespace efftough;

namespace {

double total_area(const Mesh& mesh) {
  double a = 0.0;
  for (const double v : mesh.element_area) a += v;
  return a;
}

std::vector<double> edge_lengths(const Mesh& mesh) {
  std::set<std::pair<int, int>> seen;
  std::vector<double> lengths;
  for (const auto& t : mesh.elements) {
    for (int k = 0; k < 3; ++k) {
      int u = t[k], v = t[(k + 1) % 3];
      if (u > v) std::swap(u, v);
      if (seen.insert({u, v}).second)
        lengths.push_back(norm(mesh.nodes[u] - mesh.nodes[v]));
    }
  }
  return lengths;
}

}  // namespace

TEST(StructuredMesh, ExactAreaConservation) {
  const Mesh mesh = generate_mesh(4.0, 2.0, 1.0, MeshKind::structured);
  EXPECT_DOUBLE_EQ(total_area(mesh), 8.0);
  EXPECT_EQ(mesh.num_elements(), 16);
}

TEST(StructuredMesh, RightTriangleAreas) {
  const Mesh mesh = generate_mesh(4.0, 2.0, 1.0, MeshKind::structured);
  for (const double a : mesh.element_area) EXPECT_DOUBLE_EQ(a, 0.5);
}

TEST(StructuredMesh, CounterClockwiseElements) {
  const Mesh mesh = generate_mesh(3.0, 2.0, 0.5, MeshKind::structured);
  for (const auto& t : mesh.elements) {
    const double two_a = cross(mesh.nodes[t[1]] - mesh.nodes[t[0]],
                               mesh.nodes[t[2]] - mesh.nodes[t[0]]);
    EXPECT_GT(two_a, 0.0);
  }
}

TEST(JitteredMesh, DeterministicForSeed) {
  const Mesh a = generate_mesh(24.0, 10.0, 0.25, MeshKind::jittered_delaunay, 7);
  const Mesh b = generate_mesh(24.0, 10.0, 0.25, MeshKind::jittered_delaunay, 7);
  ASSERT_EQ(a.num_nodes(), b.num_nodes());
  ASSERT_EQ(a.num_elements(), b.num_elements());
  for (int n = 0; n < a.num_nodes(); ++n) {
    EXPECT_DOUBLE_EQ(a.nodes[n].x, b.nodes[n].x);
    EXPECT_DOUBLE_EQ(a.nodes[n].y, b.nodes[n].y);
  }
  EXPECT_EQ(a.elements, b.elements);

  const Mesh c = generate_mesh(24.0, 10.0, 0.25, MeshKind::jittered_delaunay, 8);
  EXPECT_NE(a.nodes[a.num_nodes() / 2].x, c.nodes[a.num_nodes() / 2].x);
}

TEST(JitteredMesh, DeskScaleNodeCountRepeats) {
  const Mesh a = generate_mesh(60.0, 20.0, 0.25, MeshKind::jittered_delaunay, 7);
  const Mesh b = generate_mesh(60.0, 20.0, 0.25, MeshKind::jittered_delaunay, 7);
  EXPECT_EQ(a.num_nodes(), b.num_nodes());
  EXPECT_EQ(a.num_elements(), b.num_elements());
}

TEST(JitteredMesh, AreaConservation) {
  const Mesh mesh = generate_mesh(12.0, 6.0, 0.5, MeshKind::jittered_delaunay, 3);
  EXPECT_NEAR(total_area(mesh), 72.0, 1e-10 * 72.0);
  for (const double a : mesh.element_area) EXPECT_GT(a, 0.0);
}

TEST(JitteredMesh, MedianEdgeNearTarget) {
  const double delta = 0.5;
  const Mesh mesh = generate_mesh(12.0, 6.0, delta, MeshKind::jittered_delaunay, 3);
  auto lengths = edge_lengths(mesh);
  std::nth_element(lengths.begin(), lengths.begin() + lengths.size() / 2, lengths.end());
  const double median = lengths[lengths.size() / 2];
  EXPECT_NEAR(median, delta, 0.25 * delta);
}

TEST(JitteredMesh, BoundaryNodesOnBoundary) {
  const Mesh mesh = generate_mesh(12.0, 6.0, 0.5, MeshKind::jittered_delaunay, 5);
  ASSERT_FALSE(mesh.boundary_nodes.empty());
  for (const int n : mesh.boundary_nodes) {
    const Vec2& p = mesh.nodes[n];
    const double d = std::min(std::min(p.x, 12.0 - p.x), std::min(p.y, 6.0 - p.y));
    EXPECT_LE(d, 1e-12);
  }
  // Interior nodes must not be flagged.
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    if (mesh.node_on_boundary[n]) continue;
    const Vec2& p = mesh.nodes[n];
    EXPECT_GT(std::min(std::min(p.x, 12.0 - p.x), std::min(p.y, 6.0 - p.y)), 1e-12);
  }
}

TEST(JitteredMesh, DelaunayPropertyHolds) {
  const Mesh mesh = generate_mesh(8.0, 4.0, 0.25, MeshKind::jittered_delaunay, 17);
  int checked = 0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    for (int k = 0; k < 3; ++k) {
      const int nb = mesh.neighbors[e][k];
      if (nb < 0 || nb < e) continue;
      // Vertex of nb opposite to the shared edge.
      const auto& te = mesh.elements[e];
      const auto& tn = mesh.elements[nb];
      for (const int v : tn) {
        if (v == te[0] || v == te[1] || v == te[2]) continue;
        const double det = detail::incircle(mesh.nodes[te[0]], mesh.nodes[te[1]],
                                            mesh.nodes[te[2]], mesh.nodes[v]);
        const double scale = detail::incircle_scale(mesh.nodes[te[0]], mesh.nodes[te[1]],
                                                    mesh.nodes[te[2]], mesh.nodes[v]);
        EXPECT_LE(det, 1e-11 * scale);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(ShapeGradients, UnitRightTriangle) {
  Mesh mesh;
  mesh.nodes = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  mesh.elements = {{0, 1, 2}};
  const auto grads = shape_gradients(mesh);
  EXPECT_DOUBLE_EQ(grads[0][0].x, -1.0);
  EXPECT_DOUBLE_EQ(grads[0][0].y, -1.0);
  EXPECT_DOUBLE_EQ(grads[0][1].x, 1.0);
  EXPECT_DOUBLE_EQ(grads[0][1].y, 0.0);
  EXPECT_DOUBLE_EQ(grads[0][2].x, 0.0);
  EXPECT_DOUBLE_EQ(grads[0][2].y, 1.0);
}

TEST(ShapeGradients, PartitionOfUnityAndP1Exactness) {
  const Mesh mesh = generate_mesh(6.0, 3.0, 0.5, MeshKind::jittered_delaunay, 9);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& g = mesh.grad_ops[e];
    const Vec2 sum = g[0] + g[1] + g[2];
    EXPECT_NEAR(sum.x, 0.0, 1e-12);
    EXPECT_NEAR(sum.y, 0.0, 1e-12);

    // Linear field u = x reproduces grad u = (1, 0) exactly.
    Vec2 grad{0.0, 0.0};
    for (int a = 0; a < 3; ++a) grad += mesh.nodes[mesh.elements[e][a]].x * g[a];
    EXPECT_NEAR(grad.x, 1.0, 1e-10);
    EXPECT_NEAR(grad.y, 0.0, 1e-10);
  }
}

TEST(LocatePhaseElements, PredicateSelection) {
  const Mesh mesh = generate_mesh(4.0, 2.0, 0.5, MeshKind::structured);
  EXPECT_EQ(locate_phase_elements(mesh, [](const Vec2&) { return true; }).size(),
            static_cast<std::size_t>(mesh.num_elements()));
  EXPECT_TRUE(locate_phase_elements(mesh, [](const Vec2& c) { return c.x < 0.0; }).empty());
  const auto upper = locate_phase_elements(mesh, [](const Vec2& c) { return c.y > 1.0; });
  EXPECT_EQ(upper.size(), static_cast<std::size_t>(mesh.num_elements() / 2));
}

TEST(GenerateMesh, RejectsDegenerateParameters) {
  EXPECT_THROW(generate_mesh(-1.0, 2.0, 0.1, MeshKind::structured), std::invalid_argument);
  EXPECT_THROW(generate_mesh(4.0, 2.0, 0.0, MeshKind::structured), std::invalid_argument);
  EXPECT_THROW(generate_mesh(4.0, 2.0, 1.5, MeshKind::structured), std::invalid_argument);
}
