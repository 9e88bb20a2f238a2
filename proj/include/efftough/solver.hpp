#ifndef EFFTOUGH_SOLVER_HPP
#define EFFTOUGH_SOLVER_HPP

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "efftough/bqp.hpp"
#include "efftough/fem.hpp"

namespace efftough {

struct SolverSettings {
  double am_tol = 1e-4;      // max nodal damage change between outer iterations
  int am_maxit = 500;
  double lin_tol = 1e-8;     // relative residual of the displacement solve
  double damage_tol = 1e-6;  // KKT residual of the damage subproblem
  double plastic_tol = 1e-8; // stall threshold on the plastic increment
  int plastic_maxit = 100;
  double energy_slack = 1e-10;  // relative slack for the monotonicity check
};

// Fields of one quasistatic step. alpha_lower is the irreversibility bound
// (previous step's damage); alpha_seed is the frozen post-seeding damage used
// for the undamageable pad.
struct State {
  double t = 0.0;
  Eigen::VectorXd u;                        // interleaved nodal displacement
  std::vector<PlasticPointState> plastic;   // per element
  Eigen::VectorXd alpha;                    // nodal damage
  Eigen::VectorXd alpha_lower;
  Eigen::VectorXd alpha_seed;
};

inline State make_state(const Mesh& mesh) {
  State s;
  s.u = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
  s.plastic.assign(mesh.num_elements(), {});
  s.alpha = Eigen::VectorXd::Zero(mesh.num_nodes());
  s.alpha_lower = Eigen::VectorXd::Zero(mesh.num_nodes());
  s.alpha_seed = Eigen::VectorXd::Zero(mesh.num_nodes());
  return s;
}

struct EnergyBreakdown {
  double total = 0.0;
  double elastic = 0.0;   // degraded elastic energy
  double surface = 0.0;   // AT1 fracture energy (damageable elements only)
  double plastic = 0.0;   // degraded plastic work (1-abar)^2 sigma0 p
};

// Value of the regularized functional at the current fields:
//   sum_e a_e [ (eta+(1-abar)^2) psi_e + (1-abar)^2 sigma0 p ]
// + sum_e a_e (3 Gc/8) (abar/ell + ell |grad alpha|^2)   over damageable e.
inline EnergyBreakdown assemble_total_energy(const State& state, const Mesh& mesh,
                                             const MaterialField& mat, double ell,
                                             double eta) {
  EnergyBreakdown en;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double area = mesh.element_area[e];
    const double psi =
        elastic_energy_density(element_strain(mesh, state.u, e),
                               state.plastic[e].eps_p, mat.lame[e]);
    en.elastic += area * stiffness_scale(mesh, mat, state.alpha, state.alpha_seed, e, eta) * psi;

    if (!mat.damageable[e]) continue;
    const double abar = element_alpha(mesh, state.alpha, e);
    const double b = (1.0 - abar) * (1.0 - abar);
    en.plastic += area * b * mat.props[e].sigma0 * state.plastic[e].p;

    const auto& t = mesh.elements[e];
    const auto& g = mesh.grad_ops[e];
    Vec2 grad{0.0, 0.0};
    for (int a = 0; a < 3; ++a) grad += state.alpha[t[a]] * g[a];
    en.surface += area * (3.0 * mat.props[e].Gc / 8.0) *
                  (abar / ell + ell * dot(grad, grad));
  }
  en.total = en.elastic + en.surface + en.plastic;
  return en;
}

// Physical plastic dissipation sum_e a_e sigma0 p, without degradation;
// monotone in time since p never decreases.
inline double plastic_dissipation(const State& state, const Mesh& mesh,
                                  const MaterialField& mat) {
  double w = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e)
    if (mat.damageable[e])
      w += mesh.element_area[e] * mat.props[e].sigma0 * state.plastic[e].p;
  return w;
}

// Discrete gradient of the functional with respect to the nodal
// displacements (all dofs, no boundary elimination). Verification helper.
inline Eigen::VectorXd energy_gradient_u(const State& state, const Mesh& mesh,
                                         const MaterialField& mat, double eta) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double scale = mesh.element_area[e] *
                         stiffness_scale(mesh, mat, state.alpha, state.alpha_seed, e, eta);
    const SymTensor eps = element_strain(mesh, state.u, e);
    const SymTensor sig = isotropic_stress(mat.lame[e], eps - state.plastic[e].eps_p);
    const auto& t = mesh.elements[e];
    const auto& g = mesh.grad_ops[e];
    for (int a = 0; a < 3; ++a) {
      grad[2 * t[a]] += scale * (sig.xx * g[a].x + sig.xy * g[a].y);
      grad[2 * t[a] + 1] += scale * (sig.xy * g[a].x + sig.yy * g[a].y);
    }
  }
  return grad;
}

// Discrete gradient with respect to the nodal damage field. Frozen (pad)
// nodes receive no contribution, matching the solve.
inline Eigen::VectorXd energy_gradient_alpha(const State& state, const Mesh& mesh,
                                             const MaterialField& mat, double ell) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!mat.damageable[e]) continue;
    const double area = mesh.element_area[e];
    const double abar = element_alpha(mesh, state.alpha, e);
    const double h_e =
        elastic_energy_density(element_strain(mesh, state.u, e),
                               state.plastic[e].eps_p, mat.lame[e]) +
        mat.props[e].sigma0 * state.plastic[e].p;
    const auto& t = mesh.elements[e];
    const auto& g = mesh.grad_ops[e];
    Vec2 ga{0.0, 0.0};
    for (int a = 0; a < 3; ++a) ga += state.alpha[t[a]] * g[a];
    const double gc = mat.props[e].Gc;
    for (int a = 0; a < 3; ++a)
      grad[t[a]] += area * (-2.0 * (1.0 - abar) * h_e / 3.0 + gc / (8.0 * ell) +
                            0.75 * gc * ell * dot(ga, g[a]));
  }
  return grad;
}

// Persistent per-mesh scratch: sparsity patterns, factorizations, maps.
struct SolverWorkspace {
  DofMap dofs;
  std::unique_ptr<DisplacementSystem> displacement;
  DamageMap damage_map;
  std::unique_ptr<DamageSystem> damage;

  SolverWorkspace(const Mesh& mesh, const MaterialField& mat)
      : dofs(make_dof_map(mesh)),
        displacement(std::make_unique<DisplacementSystem>(mesh, dofs)),
        damage_map(make_damage_map(mesh, mat)),
        damage(std::make_unique<DamageSystem>(mesh, mat, damage_map)) {}
};

// Expands boundary values (aligned with mesh.boundary_nodes) into a
// full-length dof vector.
inline Eigen::VectorXd expand_boundary_values(const Mesh& mesh,
                                              const std::vector<Vec2>& bc) {
  if (bc.size() != mesh.boundary_nodes.size())
    throw std::invalid_argument("boundary value count does not match boundary nodes");
  Eigen::VectorXd u_bc = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
  for (std::size_t k = 0; k < bc.size(); ++k) {
    u_bc[2 * mesh.boundary_nodes[k]] = bc[k].x;
    u_bc[2 * mesh.boundary_nodes[k] + 1] = bc[k].y;
  }
  return u_bc;
}

// One-shot displacement solve (assemble + factorize + solve) at fixed
// (eps_p, alpha). The minimizer of the elastic block subject to the
// Dirichlet data.
inline Eigen::VectorXd solve_displacement(const State& state, const Mesh& mesh,
                                          const MaterialField& mat,
                                          const std::vector<Vec2>& bc, double eta,
                                          const SolverSettings& settings,
                                          SolverWorkspace& ws) {
  const Eigen::VectorXd u_bc = expand_boundary_values(mesh, bc);
  ws.displacement->assemble_matrix(mesh, mat, state.alpha, state.alpha_seed, eta);
  return ws.displacement->solve(mesh, mat, state.alpha, state.alpha_seed,
                                state.plastic, u_bc, eta, settings.lin_tol);
}

// Elementwise return maps against the step-start plastic state. Returns the
// largest change of any plastic strain component. Pad elements never yield.
inline double update_plasticity(State& state, const Mesh& mesh,
                                const MaterialField& mat,
                                const std::vector<PlasticPointState>& step_start,
                                double eta) {
  double max_change = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!mat.damageable[e]) continue;
    if (mat.props[e].sigma0 >= 0.1 * kElasticSigma0) continue;
    const SymTensor eps = element_strain(mesh, state.u, e);
    const double abar = element_alpha(mesh, state.alpha, e);
    const PlasticPointState next =
        return_map(eps, step_start[e], abar, eta, mat.props[e]);
    max_change = std::max(max_change,
                          max_abs_component(next.eps_p - state.plastic[e].eps_p));
    state.plastic[e] = next;
  }
  return max_change;
}

struct DamageSolveInfo {
  double kkt_residual = 0.0;
  double max_change = 0.0;
  bool converged = false;
};

// Constrained minimization over the damage field at fixed (u, eps_p):
// bound constraints alpha_lower <= alpha <= 1 on the damage-active nodes,
// frozen values elsewhere.
inline DamageSolveInfo solve_damage(State& state, const Mesh& mesh,
                                    const MaterialField& mat, double ell,
                                    const SolverSettings& settings,
                                    SolverWorkspace& ws, double tol_scale = 1.0) {
  ws.damage->assemble(mesh, mat, state.u, state.plastic, ell);
  const auto& map = ws.damage_map;
  const int n = map.num_unknown;

  Eigen::VectorXd x0(n), lo(n), hi(n);
  for (int k = 0; k < n; ++k) {
    const int node = map.unknown_nodes[k];
    x0[k] = state.alpha[node];
    lo[k] = state.alpha_lower[node];
    hi[k] = 1.0;
  }

  const double grad_scale = std::max(1.0, ws.damage->linear().lpNorm<Eigen::Infinity>());
  BoundConstrainedQP qp;
  const BqpResult res = qp.solve(ws.damage->hessian(), ws.damage->linear(), lo, hi,
                                 x0, settings.damage_tol * grad_scale * tol_scale);

  DamageSolveInfo info;
  info.kkt_residual = res.kkt_residual;
  info.converged = res.converged;
  for (int k = 0; k < n; ++k) {
    const int node = map.unknown_nodes[k];
    info.max_change = std::max(info.max_change, std::abs(res.x[k] - state.alpha[node]));
    state.alpha[node] = res.x[k];
  }
  if (!res.converged)
    throw std::runtime_error("solve_damage: QP did not converge, KKT residual " +
                             std::to_string(res.kkt_residual));
  return info;
}

struct AmReport {
  int iterations = 0;
  bool converged = false;
  double final_dalpha = 0.0;
  std::vector<double> energy_trace;  // after every half-step
  int monotonicity_violations = 0;
  double worst_violation = 0.0;      // largest relative energy increase
};

// Alternating minimization of one quasistatic step:
//   repeat { [linear solve + local return maps to a fixed point], damage QP }
// until the damage field stalls. The energy trace records the functional
// after every half-step; it must be non-increasing up to solver slack.
inline AmReport alternate_minimize(State& state, const Mesh& mesh,
                                   const MaterialField& mat,
                                   const std::vector<Vec2>& bc, double ell,
                                   double eta, const SolverSettings& settings,
                                   SolverWorkspace& ws) {
  const Eigen::VectorXd u_bc = expand_boundary_values(mesh, bc);
  const std::vector<PlasticPointState> step_start = state.plastic;

  AmReport report;
  auto record_energy = [&](double e_val) {
    if (!report.energy_trace.empty()) {
      const double prev = report.energy_trace.back();
      const double slack = settings.energy_slack * std::max({std::abs(prev), std::abs(e_val), 1.0});
      if (e_val > prev + slack) {
        ++report.monotonicity_violations;
        report.worst_violation =
            std::max(report.worst_violation,
                     (e_val - prev) / std::max(1.0, std::abs(prev)));
      }
    }
    report.energy_trace.push_back(e_val);
  };

  // Plastic fixed-point iterations compare strain increments against an
  // absolute stall threshold; the linear solves must sit well below it.
  const double lin_tol = mat.any_plastic ? std::min(settings.lin_tol, 1e-12)
                                         : settings.lin_tol;

  // Plastic increment consistent with a straight path from the step start.
  auto consistent_p = [&](int e, const SymTensor& eps_p) {
    return step_start[e].p +
           std::sqrt(2.0 / 3.0) * norm(eps_p - step_start[e].eps_p);
  };

  Eigen::VectorXd u_prev_outer, alpha_prev_outer;
  std::vector<PlasticPointState> plastic_prev_outer;

  for (int it = 0; it < settings.am_maxit; ++it) {
    report.iterations = it + 1;

    // (u, eps_p) block at fixed damage: the matrix depends only on alpha, so
    // one factorization serves the whole fixed-point loop. A safeguarded
    // Aitken step every third sweep collapses the slowest contraction mode.
    ws.displacement->assemble_matrix(mesh, mat, state.alpha, state.alpha_seed, eta);
    double dp_prev = std::numeric_limits<double>::infinity();
    int stalled = 0;
    const Eigen::VectorXd* warm = it == 0 && state.u.isZero(0) ? nullptr : &state.u;
    Eigen::VectorXd u_hist1, u_hist2;
    for (int inner = 0; inner < settings.plastic_maxit; ++inner) {
      state.u = ws.displacement->solve(mesh, mat, state.alpha, state.alpha_seed,
                                       state.plastic, u_bc, eta, lin_tol, warm);
      warm = &state.u;
      if (!mat.any_plastic) break;
      const double dp = update_plasticity(state, mesh, mat, step_start, eta);
      if (dp <= settings.plastic_tol) break;
      // The loop is iterating: many more right-hand sides against this
      // matrix, so make the backsolves direct.
      if (inner == 0) ws.displacement->ensure_exact_factor();
      // Contraction stalled at the solver noise floor.
      stalled = dp >= 0.9 * dp_prev ? stalled + 1 : 0;
      if (stalled >= 3) break;
      dp_prev = dp;

      if (inner % 3 == 2) {
        const Eigen::VectorXd d1 = u_hist2 - u_hist1;
        const Eigen::VectorXd d2 = state.u - u_hist2;
        const double n1 = d1.norm(), n2 = d2.norm();
        if (n1 > 0.0 && n2 > 1e-30 && n2 < 0.9 * n1) {
          const double rho = n2 / n1;
          const Eigen::VectorXd u_keep = state.u;
          const std::vector<PlasticPointState> plastic_keep = state.plastic;
          const double e_keep =
              assemble_total_energy(state, mesh, mat, ell, eta).total;
          state.u += (rho / (1.0 - rho)) * d2;
          update_plasticity(state, mesh, mat, step_start, eta);
          if (assemble_total_energy(state, mesh, mat, ell, eta).total >= e_keep) {
            state.u = u_keep;  // overshoot: revert
            state.plastic = plastic_keep;
          }
        }
      }
      u_hist1 = u_hist2;
      u_hist2 = state.u;
    }
    record_energy(assemble_total_energy(state, mesh, mat, ell, eta).total);

    // Damage block.
    DamageSolveInfo dmg = solve_damage(state, mesh, mat, ell, settings, ws);
    double e_after = assemble_total_energy(state, mesh, mat, ell, eta).total;
    const double prev = report.energy_trace.back();
    if (e_after > prev + settings.energy_slack * std::max(std::abs(prev), 1.0)) {
      // Loose inner solve broke monotonicity; retry the damage solve tighter.
      dmg = solve_damage(state, mesh, mat, ell, settings, ws, 1e-2);
      e_after = assemble_total_energy(state, mesh, mat, ell, eta).total;
    }

    // Safeguarded acceleration: extrapolate the joint (u, eps_p, alpha)
    // iterate along the last outer step and keep doubling while the energy
    // drops. The trial plastic state stays admissible: trace-free strain with
    // the path-consistent increment from the step start. Pure descent moves,
    // so monotonicity is preserved; the crawl of alternating minimization
    // during steady crack advance shortens a lot.
    if (it >= 1 && dmg.max_change > settings.am_tol) {
      for (int boost = 0; boost < 3; ++boost) {
        Eigen::VectorXd trial_u = 2.0 * state.u - u_prev_outer;
        Eigen::VectorXd trial_alpha = state.alpha;
        for (const int n : ws.damage_map.unknown_nodes)
          trial_alpha[n] = std::clamp(2.0 * state.alpha[n] - alpha_prev_outer[n],
                                      state.alpha_lower[n], 1.0);
        std::vector<PlasticPointState> trial_plastic = state.plastic;
        if (mat.any_plastic) {
          for (int e = 0; e < mesh.num_elements(); ++e) {
            if (!mat.damageable[e]) continue;
            trial_plastic[e].eps_p =
                2.0 * state.plastic[e].eps_p - plastic_prev_outer[e].eps_p;
            trial_plastic[e].p = consistent_p(e, trial_plastic[e].eps_p);
          }
        }
        std::swap(state.u, trial_u);
        std::swap(state.alpha, trial_alpha);
        std::swap(state.plastic, trial_plastic);
        const double e_trial = assemble_total_energy(state, mesh, mat, ell, eta).total;
        if (e_trial < e_after - settings.energy_slack * std::max(std::abs(e_after), 1.0)) {
          e_after = e_trial;
          u_prev_outer = trial_u;        // previous iterate for the next boost
          alpha_prev_outer = trial_alpha;
          plastic_prev_outer = trial_plastic;
        } else {
          std::swap(state.u, trial_u);
          std::swap(state.alpha, trial_alpha);
          std::swap(state.plastic, trial_plastic);
          break;
        }
      }
    }
    record_energy(e_after);

    u_prev_outer = state.u;
    alpha_prev_outer = state.alpha;
    plastic_prev_outer = state.plastic;

    report.final_dalpha = dmg.max_change;
    if (dmg.max_change <= settings.am_tol) {
      report.converged = true;
      break;
    }
  }
  return report;
}

}  // namespace efftough

#endif
