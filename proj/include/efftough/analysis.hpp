#ifndef EFFTOUGH_ANALYSIS_HPP
#define EFFTOUGH_ANALYSIS_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <vector>

#include "efftough/solver.hpp"

namespace efftough {

struct Rect {
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;

  // Inward distance to the rectangle boundary; negative outside.
  double inward_distance(const Vec2& p) const {
    return std::min(std::min(p.x - x0, x1 - p.x), std::min(p.y - y0, y1 - p.y));
  }
};

// Equivalent-domain J-integral support: a ring between two nested rectangles
// whose boundaries both lie inside the undamageable pad frame. The virtual
// extension q is 1 on/inside the inner rectangle and 0 on/outside the outer
// one. With the pad forming a closed frame around the layered interior, the
// ring necessarily encircles the whole interior (and with it the crack tip);
// path independence holds because the pad between two such rings is
// homogeneous, elastic and in equilibrium.
struct JDomainSpec {
  Rect inner;
  Rect outer;

  double q(const Vec2& p) const {
    const double m_in = inner.inward_distance(p);
    const double m_out = outer.inward_distance(p);
    if (m_in >= 0.0) return 1.0;
    if (m_out <= 0.0) return 0.0;
    return m_out / (m_out - m_in);
  }
};

// Ring placed at the given fractions of the pad thickness; inner_frac >
// outer_frac, both in (0, 1).
inline JDomainSpec pad_ring_domain(const Mesh& mesh, double pad_width,
                                   double inner_frac = 0.75, double outer_frac = 0.25) {
  if (!(inner_frac > outer_frac) || inner_frac >= 1.0 || outer_frac <= 0.0)
    throw std::invalid_argument("pad_ring_domain: need 0 < outer_frac < inner_frac < 1");
  const double a_in = inner_frac * pad_width;
  const double a_out = outer_frac * pad_width;
  JDomainSpec spec;
  spec.inner = {a_in, mesh.length - a_in, a_in, mesh.height - a_in};
  spec.outer = {a_out, mesh.length - a_out, a_out, mesh.height - a_out};
  return spec;
}

// Far-field J-integral in equivalent-domain form,
//   J = sum_e a_e (sigma_ij u_i,x - W delta_xj) q,_j
// over the ring support. W is the elastic energy density; the ring must not
// touch damageable elements (the painted slit crosses it through pad
// elements whose stress is degraded to eta, contributing nothing).
inline double j_integral(const State& state, const Mesh& mesh,
                         const MaterialField& mat, double eta,
                         const JDomainSpec& spec) {
  double j = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& t = mesh.elements[e];
    const auto& g = mesh.grad_ops[e];

    Vec2 gq{0.0, 0.0};
    for (int a = 0; a < 3; ++a) gq += spec.q(mesh.nodes[t[a]]) * g[a];
    if (std::abs(gq.x) < 1e-14 && std::abs(gq.y) < 1e-14) continue;

    if (mat.damageable[e])
      throw std::runtime_error("j_integral: ring touches damageable elements");

    const double scale = stiffness_scale(mesh, mat, state.alpha, state.alpha_seed, e, eta);
    const SymTensor eps = element_strain(mesh, state.u, e);
    const SymTensor sig = scale * isotropic_stress(mat.lame[e], eps);
    const double w = 0.5 * double_dot(sig, eps);

    // u_i,x from the P1 gradients.
    double uxx = 0.0, uyx = 0.0;
    for (int a = 0; a < 3; ++a) {
      uxx += state.u[2 * t[a]] * g[a].x;
      uyx += state.u[2 * t[a] + 1] * g[a].x;
    }

    j += mesh.element_area[e] * ((sig.xx * uxx + sig.xy * uyx - w) * gq.x +
                                 (sig.xy * uxx + sig.yy * uyx) * gq.y);
  }
  return j;
}

struct TimeSeriesRecord {
  double t = 0.0;
  double J = 0.0;
  double E_elastic = 0.0;
  double E_surface = 0.0;
  double E_plastic = 0.0;       // cumulated plastic dissipation (undegraded)
  double tip_nominal_x = 0.0;
  double tip_actual_x = 0.0;    // rightmost node with alpha >= 0.95 near y0
  bool converged = true;
};

// G_c^eff = max_t J(t) over the window in which the nominal tip traverses
// the layered interior.
inline double effective_toughness(const std::vector<TimeSeriesRecord>& series,
                                  double t_a, double t_b) {
  double g_eff = 0.0;
  bool any = false;
  for (const auto& rec : series) {
    if (rec.t < t_a || rec.t > t_b) continue;
    g_eff = any ? std::max(g_eff, rec.J) : rec.J;
    any = true;
  }
  if (!any) throw std::invalid_argument("effective_toughness: empty window");
  return g_eff;
}

// Rightmost fully formed crack point near the crack line.
inline double actual_tip_x(const State& state, const Mesh& mesh, double y0,
                           double ell, double alpha_threshold = 0.95) {
  double tip = 0.0;
  for (int n = 0; n < mesh.num_nodes(); ++n)
    if (state.alpha[n] >= alpha_threshold &&
        std::abs(mesh.nodes[n].y - y0) <= 4.0 * ell)
      tip = std::max(tip, mesh.nodes[n].x);
  return tip;
}

// Number of disjoint plastic clusters: connected components (shared-edge
// adjacency) of the elements with p >= threshold. A discontinuous wake is
// the record of intermittent propagation.
inline int wake_clusters(const State& state, const Mesh& mesh,
                         double threshold = 1e-3) {
  const int ne = mesh.num_elements();
  std::vector<char> active(ne, 0);
  for (int e = 0; e < ne; ++e) active[e] = state.plastic[e].p >= threshold;

  std::vector<char> visited(ne, 0);
  int clusters = 0;
  std::deque<int> queue;
  for (int s = 0; s < ne; ++s) {
    if (!active[s] || visited[s]) continue;
    ++clusters;
    queue.push_back(s);
    visited[s] = 1;
    while (!queue.empty()) {
      const int e = queue.front();
      queue.pop_front();
      for (const int nb : mesh.neighbors[e]) {
        if (nb >= 0 && active[nb] && !visited[nb]) {
          visited[nb] = 1;
          queue.push_back(nb);
        }
      }
    }
  }
  return clusters;
}

struct PathPoint {
  double x = 0.0;
  double y = 0.0;
  bool present = false;
};

// Crack trajectory: per x-bin of width target_h, the alpha-weighted centroid
// y of the nodes with alpha >= threshold. Bins with no such node are gaps.
inline std::vector<PathPoint> crack_path(const State& state, const Mesh& mesh,
                                         double alpha_threshold = 0.95) {
  const double h = mesh.target_h;
  const int nbins = std::max(1, static_cast<int>(std::ceil(mesh.length / h)));
  std::vector<double> wsum(nbins, 0.0), wy(nbins, 0.0);
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    const double a = state.alpha[n];
    if (a < alpha_threshold) continue;
    int bin = static_cast<int>(mesh.nodes[n].x / h);
    bin = std::clamp(bin, 0, nbins - 1);
    wsum[bin] += a;
    wy[bin] += a * mesh.nodes[n].y;
  }
  std::vector<PathPoint> path(nbins);
  for (int b = 0; b < nbins; ++b) {
    path[b].x = (b + 0.5) * h;
    if (wsum[b] > 0.0) {
      path[b].y = wy[b] / wsum[b];
      path[b].present = true;
    }
  }
  return path;
}

// Largest |y - y0| of the path centroids inside [x_min, x_max].
inline double max_path_deviation(const std::vector<PathPoint>& path, double y0,
                                 double x_min, double x_max) {
  double dev = 0.0;
  for (const auto& pp : path)
    if (pp.present && pp.x >= x_min && pp.x <= x_max)
      dev = std::max(dev, std::abs(pp.y - y0));
  return dev;
}

// Counts distinct rise-drop cycles of J(t): a cycle is a running peak
// followed by a drawdown of at least drop_frac of that peak.
inline int count_rise_drop_cycles(const std::vector<TimeSeriesRecord>& series,
                                  double t_a, double t_b, double drop_frac = 0.10) {
  int cycles = 0;
  double peak = 0.0;
  bool started = false;
  for (const auto& rec : series) {
    if (rec.t < t_a || rec.t > t_b) continue;
    if (!started) {
      peak = rec.J;
      started = true;
      continue;
    }
    if (rec.J > peak) {
      peak = rec.J;
    } else if (peak > 0.0 && rec.J <= (1.0 - drop_frac) * peak) {
      ++cycles;
      peak = rec.J;
    }
  }
  return cycles;
}

}  // namespace efftough

#endif
