#ifndef EFFTOUGH_CONSTITUTIVE_HPP
#define EFFTOUGH_CONSTITUTIVE_HPP

#include <cmath>
#include <stdexcept>

#include "efftough/tensor.hpp"

namespace efftough {

// Yield strength used to emulate a purely elastic phase: far above any
// stress the non-dimensional simulations can reach.
inline constexpr double kElasticSigma0 = 1.0e6;

// Isotropic elastic / perfectly plastic phase, non-dimensional units.
struct PhaseProperties {
  double E = 1.0;        // Young's modulus
  double nu = 0.2;       // Poisson ratio
  double Gc = 1.0;       // critical energy release rate
  double sigma0 = 0.625; // von Mises yield strength

  bool operator==(const PhaseProperties&) const = default;
};

struct LameParameters {
  double lambda = 0.0;
  double mu = 0.0;
};

inline LameParameters lame_parameters(double E, double nu) {
  if (E <= 0.0) throw std::invalid_argument("lame_parameters: E must be positive");
  if (nu < 0.0 || nu >= 0.5)
    throw std::invalid_argument("lame_parameters: nu must lie in [0, 0.5)");
  return {E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), E / (2.0 * (1.0 + nu))};
}

inline LameParameters lame_parameters(const PhaseProperties& p) {
  return lame_parameters(p.E, p.nu);
}

// sigma = lambda tr(e) I + 2 mu e
inline SymTensor isotropic_stress(const LameParameters& lp, const SymTensor& e) {
  const double v = lp.lambda * e.trace();
  return {v + 2.0 * lp.mu * e.xx, v + 2.0 * lp.mu * e.yy, v + 2.0 * lp.mu * e.zz,
          2.0 * lp.mu * e.xy};
}

// Undegraded elastic energy density psi_e = 1/2 (eps - eps_p) : C : (eps - eps_p).
inline double elastic_energy_density(const SymTensor& eps, const SymTensor& eps_p,
                                     const LameParameters& lp) {
  const SymTensor e = eps - eps_p;
  const double tr = e.trace();
  return lp.mu * double_dot(e, e) + 0.5 * lp.lambda * tr * tr;
}

inline double elastic_energy_density(const SymTensor& eps, const SymTensor& eps_p,
                                     const PhaseProperties& props) {
  return elastic_energy_density(eps, eps_p, lame_parameters(props));
}

// sigma = (eta + (1 - alpha)^2) C : (eps - eps_p)
inline SymTensor degraded_stress(const SymTensor& eps, const SymTensor& eps_p,
                                 double alpha, double eta,
                                 const PhaseProperties& props) {
  const double s = eta + (1.0 - alpha) * (1.0 - alpha);
  return s * isotropic_stress(lame_parameters(props), eps - eps_p);
}

struct PlasticPointState {
  SymTensor eps_p;  // plastic strain, trace-free
  double p = 0.0;   // cumulative equivalent plastic strain
};

// Incremental energy of a candidate plastic state against the step-start
// state, at fixed strain and damage:
//   A psi_e(eps - eps_p) + B sigma0 dp,  dp = sqrt(2/3) |eps_p - eps_p_start|.
// Used by the solver's monotonicity checks and by the brute-force oracle.
inline double incremental_point_energy(const SymTensor& eps,
                                       const PlasticPointState& start,
                                       const SymTensor& eps_p_candidate,
                                       double alpha, double eta,
                                       const PhaseProperties& props) {
  const double a = eta + (1.0 - alpha) * (1.0 - alpha);
  const double b = (1.0 - alpha) * (1.0 - alpha);
  const SymTensor d = eps_p_candidate - start.eps_p;
  const double dp = std::sqrt(2.0 / 3.0) * norm(d);
  return a * elastic_energy_density(eps, eps_p_candidate, props) +
         b * props.sigma0 * dp;
}

// Radial return for perfect von Mises plasticity coupled to damage.
//
// Minimizes A psi_e(eps - eps_p) + B sigma0 dp over the plastic increment,
// with A = eta + (1-alpha)^2 degrading the elastic energy and B = (1-alpha)^2
// degrading the plastic work. The trial deviatoric stress is
// s_tr = A 2mu dev(eps - eps_p^start); yielding occurs when
// q_tr = sqrt(3/2)|s_tr| exceeds B sigma0, and then
//   dp    = (q_tr - B sigma0) / (3 A mu)
//   eps_p += dp (3/2) s_tr / q_tr.
inline PlasticPointState return_map(const SymTensor& eps,
                                    const PlasticPointState& prev, double alpha,
                                    double eta, const PhaseProperties& props) {
  const double a = eta + (1.0 - alpha) * (1.0 - alpha);
  if (a <= 0.0) throw std::invalid_argument("return_map: eta + (1-alpha)^2 must be positive");
  const double b = (1.0 - alpha) * (1.0 - alpha);

  const LameParameters lp = lame_parameters(props);
  const SymTensor e_tr = (eps - prev.eps_p).deviator();
  const SymTensor s_tr = (a * 2.0 * lp.mu) * e_tr;
  const double q_tr = std::sqrt(1.5) * norm(s_tr);

  if (q_tr <= b * props.sigma0 || q_tr == 0.0) return prev;

  const double dp = (q_tr - b * props.sigma0) / (3.0 * a * lp.mu);
  PlasticPointState next;
  next.eps_p = prev.eps_p + (1.5 * dp / q_tr) * s_tr;
  next.p = prev.p + dp;
  return next;
}

// G_c^num = G_c (1 + 3 delta / 8 ell): effective toughness of the discrete
// AT1 model on a mesh of size delta.
inline double numerical_toughness(double gc, double delta, double ell) {
  return gc * (1.0 + 3.0 * delta / (8.0 * ell));
}

// sigma_c = sqrt(3 G_c E / (8 ell (1 - nu^2))): AT1 nucleation stress in
// plane strain.
inline double nucleation_stress(double E, double nu, double gc, double ell) {
  return std::sqrt(3.0 * gc * E / (8.0 * ell * (1.0 - nu * nu)));
}

inline double nucleation_stress(const PhaseProperties& p, double ell) {
  return nucleation_stress(p.E, p.nu, p.Gc, ell);
}

// r_y = sigma_c / sigma_0; > 1 means ductile, < 1 quasi-brittle.
inline double ductility_ratio(double sigma_c, double sigma0) {
  return sigma_c / sigma0;
}

}  // namespace efftough

#endif
