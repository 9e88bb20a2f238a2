#ifndef EFFTOUGH_MICROSTRUCTURE_HPP
#define EFFTOUGH_MICROSTRUCTURE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "efftough/constitutive.hpp"
#include "efftough/mesh.hpp"

namespace efftough {

// Two-phase layered pattern at angle theta, embedded in an undamageable pad.
//
// The layer normal is n = (-sin theta, cos theta); bands of width tau
// alternate along n. origin_offset shifts the pattern along n, so the phase
// registration relative to the crack line is a configuration choice.
struct LayerSpec {
  double theta = 0.0;          // radians, [0, pi/2]
  double tau = 32.0;           // layer thickness normal to the layer axis
  PhaseProperties phase1;
  PhaseProperties phase2;
  double origin_offset = 0.0;  // signed shift along the layer normal
  double pad_width = 4.0;      // thickness of the undamageable frame
};

inline int phase_of_point(const Vec2& x, const LayerSpec& spec) {
  const double s = -std::sin(spec.theta) * x.x + std::cos(spec.theta) * x.y +
                   spec.origin_offset;
  const auto band = static_cast<long long>(std::floor(s / spec.tau));
  return (band % 2 == 0) ? 1 : 2;
}

// Offset that centers a phase-1 band on the given point, e.g. the initial
// crack tip, so the crack starts inside material 1.
inline double centered_origin_offset(double theta, double tau, const Vec2& point) {
  return 0.5 * tau - (-std::sin(theta) * point.x + std::cos(theta) * point.y);
}

// Pad material: arithmetic mean of the phase constants, with the sentinel
// yield strength so the pad never yields.
inline PhaseProperties averaged_pad_properties(const PhaseProperties& p1,
                                               const PhaseProperties& p2) {
  PhaseProperties pad;
  pad.E = 0.5 * (p1.E + p2.E);
  pad.nu = 0.5 * (p1.nu + p2.nu);
  pad.Gc = 0.5 * (p1.Gc + p2.Gc);
  pad.sigma0 = kElasticSigma0;
  return pad;
}

constexpr int kPhasePad = 0;

// Per-element material assignment. Immutable once built; the Lame constants
// are precomputed because assembly touches them in every inner loop.
struct MaterialField {
  std::vector<PhaseProperties> props;
  std::vector<LameParameters> lame;
  std::vector<std::int8_t> phase;   // kPhasePad, 1 or 2
  std::vector<char> damageable;     // false in the pad
  PhaseProperties pad;
  bool any_plastic = false;         // false when every phase uses the sentinel

  int num_elements() const { return static_cast<int>(props.size()); }
};

inline MaterialField build_material_field(const Mesh& mesh, const LayerSpec& spec) {
  if (spec.tau <= 0.0) throw std::invalid_argument("build_material_field: tau must be positive");
  if (spec.theta < 0.0 || spec.theta > 1.5707963267948966 + 1e-12)
    throw std::invalid_argument("build_material_field: theta must lie in [0, pi/2]");
  if (spec.pad_width >= 0.5 * std::min(mesh.length, mesh.height))
    throw std::invalid_argument("build_material_field: pad_width leaves no interior");

  MaterialField mat;
  const int ne = mesh.num_elements();
  mat.props.resize(ne);
  mat.lame.resize(ne);
  mat.phase.resize(ne);
  mat.damageable.resize(ne);
  mat.pad = averaged_pad_properties(spec.phase1, spec.phase2);

  for (int e = 0; e < ne; ++e) {
    const Vec2 c = mesh.centroid(e);
    const double dist_to_boundary =
        std::min(std::min(c.x, mesh.length - c.x), std::min(c.y, mesh.height - c.y));
    if (dist_to_boundary <= spec.pad_width) {
      mat.props[e] = mat.pad;
      mat.phase[e] = kPhasePad;
      mat.damageable[e] = 0;
    } else {
      const int ph = phase_of_point(c, spec);
      mat.props[e] = (ph == 1) ? spec.phase1 : spec.phase2;
      mat.phase[e] = static_cast<std::int8_t>(ph);
      mat.damageable[e] = 1;
      if (mat.props[e].sigma0 < 0.1 * kElasticSigma0) mat.any_plastic = true;
    }
    mat.lame[e] = lame_parameters(mat.props[e]);
  }
  return mat;
}

}  // namespace efftough

#endif
