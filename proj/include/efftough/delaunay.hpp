#ifndef EFFTOUGH_DELAUNAY_HPP
#define EFFTOUGH_DELAUNAY_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "efftough/tensor.hpp"

namespace efftough::detail {

inline double orient2d(const Vec2& a, const Vec2& b, const Vec2& c) {
  return cross(b - a, c - a);
}

// > 0 when d lies strictly inside the circumcircle of the CCW triangle (a,b,c).
inline double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad2 = adx * adx + ady * ady;
  const double bd2 = bdx * bdx + bdy * bdy;
  const double cd2 = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd2 - cdy * bd2) - ady * (bdx * cd2 - cdx * bd2) +
         ad2 * (bdx * cdy - cdx * bdy);
}

// Magnitude estimate used to turn the incircle determinant into a relative
// test, so near-cocircular point sets do not trigger endless flips.
inline double incircle_scale(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad2 = adx * adx + ady * ady;
  const double bd2 = bdx * bdx + bdy * bdy;
  const double cd2 = cdx * cdx + cdy * cdy;
  return std::abs(adx) * (std::abs(bdy) * cd2 + std::abs(cdy) * bd2) +
         std::abs(ady) * (std::abs(bdx) * cd2 + std::abs(cdx) * bd2) +
         ad2 * (std::abs(bdx) * std::abs(cdy) + std::abs(cdx) * std::abs(bdy));
}

// Lawson edge flips on a valid triangulation until every interior edge
// satisfies the (epsilon-guarded) Delaunay criterion. Each pass collects the
// interior edges, flips a maximal set of independent illegal ones, and
// repeats; triangles touched by a flip are left alone until the next pass so
// the edge table never goes stale.
inline void lawson_flip_to_delaunay(const std::vector<Vec2>& pts,
                                    std::vector<std::array<int, 3>>& tris,
                                    int max_passes = 100) {
  struct HalfEdge {
    int tri = -1;
    int opp = -1;  // local index of the vertex opposite the edge
  };

  for (int pass = 0; pass < max_passes; ++pass) {
    std::unordered_map<std::uint64_t, std::pair<HalfEdge, HalfEdge>> edges;
    edges.reserve(tris.size() * 2);

    auto edge_key = [](int u, int v) {
      const auto lo = static_cast<std::uint64_t>(u < v ? u : v);
      const auto hi = static_cast<std::uint64_t>(u < v ? v : u);
      return (hi << 32) | lo;
    };

    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      for (int k = 0; k < 3; ++k) {
        const int u = tris[t][(k + 1) % 3];
        const int v = tris[t][(k + 2) % 3];
        auto& slot = edges[edge_key(u, v)];
        if (slot.first.tri < 0)
          slot.first = {t, k};
        else
          slot.second = {t, k};
      }
    }

    std::vector<std::uint64_t> keys;
    keys.reserve(edges.size());
    for (const auto& kv : edges) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());

    std::vector<char> dirty(tris.size(), 0);
    bool flipped = false;

    for (const auto key : keys) {
      const auto& pairing = edges[key];
      const HalfEdge h1 = pairing.first;
      const HalfEdge h2 = pairing.second;
      if (h1.tri < 0 || h2.tri < 0) continue;         // boundary edge
      if (dirty[h1.tri] || dirty[h2.tri]) continue;   // touched this pass

      const int p = tris[h1.tri][h1.opp];
      const int a = tris[h1.tri][(h1.opp + 1) % 3];
      const int b = tris[h1.tri][(h1.opp + 2) % 3];
      const int q = tris[h2.tri][h2.opp];

      const double det = incircle(pts[a], pts[b], pts[p], pts[q]);
      if (det <= 1e-12 * incircle_scale(pts[a], pts[b], pts[p], pts[q]))
        continue;  // legal (or cocircular) edge

      // Flip a-b to p-q, keeping CCW orientation; skip if the quad is not
      // strictly convex.
      const std::array<int, 3> n1 = {p, a, q};
      const std::array<int, 3> n2 = {q, b, p};
      if (orient2d(pts[n1[0]], pts[n1[1]], pts[n1[2]]) <= 0.0) continue;
      if (orient2d(pts[n2[0]], pts[n2[1]], pts[n2[2]]) <= 0.0) continue;

      tris[h1.tri] = n1;
      tris[h2.tri] = n2;
      dirty[h1.tri] = dirty[h2.tri] = 1;
      flipped = true;
    }

    if (!flipped) return;
  }
}

}  // namespace efftough::detail

#endif
