#ifndef EFFTOUGH_LOADING_HPP
#define EFFTOUGH_LOADING_HPP

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "efftough/mesh.hpp"
#include "efftough/microstructure.hpp"
#include "efftough/solver.hpp"

namespace efftough {

// Parameters of the steadily translating mode-I opening field imposed on the
// outer boundary. The reference constants are the pad properties; the field
// amplitude is built from sqrt(E_ref Gc_ref) so its nominal energy release
// rate is Gc_ref.
struct SurfingParams {
  double E_ref = 1.0;
  double nu_ref = 0.2;
  double Gc_ref = 1.0;
  double V = 1.0;               // tip velocity
  double x0 = 0.0;              // initial nominal tip
  double y0 = 0.0;
  double amplitude_scale = 1.0;
};

struct Schedule {
  double t_start = 0.0;
  double t_end = 0.0;
  double dt = 0.0;

  int num_steps() const {
    return 1 + static_cast<int>(std::floor((t_end - t_start) / dt + 1e-9));
  }
};

// Mode-I crack opening displacement in the frame moving with the nominal tip
// (x0 + V t, y0). Polar angle phi in (-pi, pi], branch cut along the crack
// line behind the tip.
inline Vec2 surfing_displacement(const Vec2& z, double t, const SurfingParams& sp) {
  const double dx = z.x - (sp.x0 + sp.V * t);
  const double dy = z.y - sp.y0;
  const double r = std::hypot(dx, dy);
  if (r == 0.0) return {0.0, 0.0};
  double phi = std::atan2(dy, dx);
  if (phi <= -std::numbers::pi) phi = std::numbers::pi;

  const double kappa = (3.0 - sp.nu_ref) / (1.0 + sp.nu_ref);
  const double amp = sp.amplitude_scale * std::sqrt(sp.E_ref * sp.Gc_ref) *
                     (1.0 + sp.nu_ref) / sp.E_ref;
  const double radial = std::sqrt(r / (2.0 * std::numbers::pi));
  const double shape = kappa - std::cos(phi);
  return {amp * shape * radial * std::cos(0.5 * phi),
          amp * shape * radial * std::sin(0.5 * phi)};
}

// Dirichlet values on all boundary nodes at time t.
inline std::vector<Vec2> surfing_boundary_values(const Mesh& mesh, double t,
                                                 const SurfingParams& sp) {
  std::vector<Vec2> bc(mesh.boundary_nodes.size());
  for (std::size_t k = 0; k < bc.size(); ++k)
    bc[k] = surfing_displacement(mesh.nodes[mesh.boundary_nodes[k]], t, sp);
  return bc;
}

namespace detail {

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  const double s = len2 > 0.0 ? std::clamp(dot(p - a, ab) / len2, 0.0, 1.0) : 0.0;
  return norm(p - (a + s * ab));
}

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                               const Vec2& d) {
  const double d1 = cross(b - a, c - a);
  const double d2 = cross(b - a, d - a);
  const double d3 = cross(d - c, a - c);
  const double d4 = cross(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

inline double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c,
                                       const Vec2& d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min(std::min(point_segment_distance(a, c, d),
                           point_segment_distance(b, c, d)),
                  std::min(point_segment_distance(c, a, b),
                           point_segment_distance(d, a, b)));
}

inline double triangle_segment_distance(const Vec2& p0, const Vec2& p1, const Vec2& p2,
                                        const Vec2& a, const Vec2& b) {
  // Segment end inside the triangle (covers a slit fully contained in one
  // element); otherwise the minimum over the edges.
  const double s0 = cross(p1 - p0, a - p0);
  const double s1 = cross(p2 - p1, a - p1);
  const double s2 = cross(p0 - p2, a - p2);
  if (s0 >= 0.0 && s1 >= 0.0 && s2 >= 0.0) return 0.0;
  return std::min(std::min(segment_segment_distance(p0, p1, a, b),
                           segment_segment_distance(p1, p2, a, b)),
                  segment_segment_distance(p2, p0, a, b));
}

}  // namespace detail

// Paints the initial crack along the segment from the left boundary (0, y0)
// to the initial tip (x0, y0): every element the segment cuts has all of its
// nodes set to alpha = alpha_lower = 1, forming a contiguous one-element
// channel on any mesh. The channel is kept thin so the painted notch stays
// sharp relative to the opening field; the damage solve then relaxes the
// interior profile to the optimal regularized shape on its own. The slit
// runs through the left pad strip, where the painted values stay frozen (the
// pad never evolves), so the boundary data's opening jump is carried by
// fully degraded elements instead of being stored as spurious strain energy.
inline void seed_initial_crack(State& state, const Mesh& mesh, double ell,
                               const SurfingParams& sp) {
  if (sp.x0 < 0.0 || sp.x0 > mesh.length || sp.y0 < 0.0 || sp.y0 > mesh.height)
    throw std::invalid_argument("seed_initial_crack: seed segment outside domain");

  const Vec2 left{0.0, sp.y0};
  const Vec2 tip{sp.x0, sp.y0};
  const double half_width = std::min(0.5 * ell, 0.05 * mesh.target_h);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements[e];
    const double d = detail::triangle_segment_distance(
        mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]], left, tip);
    if (d <= half_width) {
      for (const int n : t) {
        state.alpha[n] = 1.0;
        state.alpha_lower[n] = 1.0;
      }
    }
  }
  state.alpha_seed = state.alpha;
}

}  // namespace efftough

#endif
