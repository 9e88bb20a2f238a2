#ifndef EFFTOUGH_VERIFY_HPP
#define EFFTOUGH_VERIFY_HPP

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "efftough/runner.hpp"

namespace efftough {

struct VerifyCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace verify_detail {

// Brute-force minimization of the incremental point energy over the flow
// magnitude along the trial deviatoric direction; independent of the closed
// form in return_map. Golden-section narrows the bracket, then bisection on
// a central-difference slope recovers the argument beyond the sqrt(eps)
// resolution of value-only comparisons. Only energy evaluations are used.
inline double golden_section_flow(const SymTensor& eps, const PlasticPointState& prev,
                                  double alpha, double eta,
                                  const PhaseProperties& props) {
  const SymTensor e_tr = (eps - prev.eps_p).deviator();
  const double e_norm = norm(e_tr);
  if (e_norm == 0.0) return 0.0;
  const SymTensor dir = (1.0 / e_norm) * e_tr;

  auto energy = [&](double gamma) {
    const SymTensor cand = prev.eps_p + std::max(gamma, 0.0) * dir;
    return incremental_point_energy(eps, prev, cand, alpha, eta, props);
  };

  const double range = 3.0 * e_norm;
  const double inv_phi = 0.6180339887498949;
  double a = 0.0, b = range;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = energy(c), fd = energy(d);
  for (int it = 0; it < 25; ++it) {  // stop while value comparisons are reliable
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = energy(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = energy(d);
    }
  }

  // Slope-sign bisection on an inflated bracket. The objective is exactly
  // quadratic along the ray away from gamma = 0, so the central difference
  // carries no step-size bias and a wide step beats the noise floor.
  const double pad = 4.0 * std::max(b - a, 1e-7 * range);
  double lo = std::max(0.0, a - pad);
  double hi = std::min(range, b + pad);
  const double h = 1e-6 * range;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double slope = energy(mid + h) - energy(mid - h);
    if (slope > 0.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

inline SimulationConfig small_elastic_config() {
  SimulationConfig c;
  c.L = 24.0;
  c.H = 10.0;
  c.pad_width = 2.5;
  c.delta = 0.25;
  c.mesh_kind = MeshKind::jittered_delaunay;
  c.mesh_seed = 11;
  c.ell = 0.5;
  c.eta = 1e-6;
  c.phase1 = {1.0, 0.2, 1.0, kElasticSigma0};
  c.phase2 = c.phase1;
  c.theta = 0.0;
  c.tau = 2.0;
  c.surfing = SurfingParams{1.0, 0.2, 1.0, 1.0, c.pad_width + 2.0 * c.ell, 0.5 * c.H, 1.0};
  c.schedule = {0.0, (c.L - c.pad_width - 2.0 * c.ell - c.surfing.x0) / c.surfing.V,
                c.delta / c.surfing.V};
  c.window_margin_start = 8.0 * c.ell;
  c.window_margin_end = 2.0 * c.ell;
  c.origin_offset = centered_origin_offset(c.theta, c.tau, {c.surfing.x0, c.surfing.y0});
  validate_config(c);
  return c;
}

inline SimulationConfig small_plastic_config() {
  SimulationConfig c = small_elastic_config();
  const double sigma_c = nucleation_stress(c.phase1, c.ell);
  c.phase1.sigma0 = sigma_c / 2.0;  // ductility ratio 2
  c.phase2 = c.phase1;
  return c;
}

// Frozen-crack configuration for the K-field consistency check: the phase
// toughness is a large sentinel so the painted crack cannot grow, while the
// boundary amplitude is built from the unit reference toughness.
inline SimulationConfig kfield_config() {
  SimulationConfig c = small_elastic_config();
  c.phase1.Gc = 1e6;
  c.phase2 = c.phase1;
  c.surfing.x0 = 0.5 * c.L;
  c.surfing.E_ref = 1.0;
  c.surfing.nu_ref = 0.2;
  c.surfing.Gc_ref = 1.0;
  c.schedule = {0.0, 2.0 * c.delta, c.delta};
  validate_config(c);
  return c;
}

}  // namespace verify_detail

// Return map against the 1-D golden-section oracle on random samples, plus
// the plastic invariants: incompressibility, yield consistency, monotone p,
// and energy decrease against the elastic trial.
inline VerifyCheck check_return_map_oracle(int samples = 1000, double tol = 1e-8) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.0, 1.0);

  double worst = 0.0;
  std::string failure;
  for (int s = 0; s < samples && failure.empty(); ++s) {
    PhaseProperties props;
    props.E = 0.5 + 2.5 * pos(rng);
    props.nu = 0.45 * pos(rng);
    props.Gc = 1.0;
    props.sigma0 = 0.005 + 0.05 * pos(rng);

    SymTensor eps{0.02 * unit(rng), 0.02 * unit(rng), 0.0, 0.02 * unit(rng)};
    PlasticPointState prev;
    prev.eps_p.xx = 0.005 * unit(rng);
    prev.eps_p.yy = 0.005 * unit(rng);
    prev.eps_p.zz = -prev.eps_p.xx - prev.eps_p.yy;
    prev.eps_p.xy = 0.005 * unit(rng);
    prev.p = 0.01 * pos(rng);

    const double alpha = (s % 4 == 0) ? 0.0 : pos(rng) * 0.999;
    const double eta = 1e-6;

    const PlasticPointState next = return_map(eps, prev, alpha, eta, props);

    const double gamma = verify_detail::golden_section_flow(eps, prev, alpha, eta, props);
    const double dp_oracle = std::sqrt(2.0 / 3.0) * gamma;
    const double dp_closed = next.p - prev.p;
    const double rel = std::abs(dp_closed - dp_oracle) /
                       std::max(std::abs(dp_oracle), 1e-10);
    worst = std::max(worst, rel);
    if (rel > tol) {
      failure = "sample " + std::to_string(s) + ": dp mismatch " + std::to_string(rel);
      break;
    }

    if (std::abs(next.eps_p.trace()) > 1e-12) {
      failure = "plastic trace " + std::to_string(next.eps_p.trace());
      break;
    }
    if (next.p < prev.p) {
      failure = "p decreased";
      break;
    }
    const double a = eta + (1.0 - alpha) * (1.0 - alpha);
    const double b = (1.0 - alpha) * (1.0 - alpha);
    const SymTensor sig_dev =
        (a * isotropic_stress(lame_parameters(props), eps - next.eps_p)).deviator();
    const double q_after = std::sqrt(1.5) * norm(sig_dev);
    if (b > 0.0 && q_after > b * props.sigma0 + 1e-10 * props.sigma0) {
      failure = "yield consistency violated: q=" + std::to_string(q_after);
      break;
    }
    const double e_next =
        incremental_point_energy(eps, prev, next.eps_p, alpha, eta, props);
    const double e_trial =
        incremental_point_energy(eps, prev, prev.eps_p, alpha, eta, props);
    if (e_next > e_trial + 1e-12 * std::max(1.0, std::abs(e_trial))) {
      failure = "return map increased the incremental energy";
      break;
    }
  }

  VerifyCheck check{"return_map_vs_bruteforce_oracle", failure.empty(),
                    failure.empty() ? "worst rel err " + std::to_string(worst) : failure};
  return check;
}

// Central finite differences of the assembled energy against the analytic
// gradients, on a random smooth bound-inactive state.
inline VerifyCheck check_energy_gradients(double tol = 1e-5) {
  const Mesh mesh = generate_mesh(8.0, 6.0, 0.25, MeshKind::jittered_delaunay, 3);
  LayerSpec spec;
  spec.theta = 0.3;
  spec.tau = 2.0;
  spec.phase1 = {1.0, 0.2, 1.0, 0.5};
  spec.phase2 = {2.0, 0.25, 2.0, 0.8};
  spec.origin_offset = 0.1;
  spec.pad_width = 2.0;
  const MaterialField mat = build_material_field(mesh, spec);
  const DamageMap dmap = make_damage_map(mesh, mat);

  const double ell = 0.5, eta = 1e-6;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  State state = make_state(mesh);
  for (int d = 0; d < state.u.size(); ++d) state.u[d] = 0.02 * unit(rng);
  for (int k = 0; k < dmap.num_unknown; ++k)
    state.alpha[dmap.unknown_nodes[k]] = 0.3 + 0.25 * unit(rng);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!mat.damageable[e]) continue;
    PlasticPointState ps;
    ps.eps_p.xx = 0.002 * unit(rng);
    ps.eps_p.yy = 0.002 * unit(rng);
    ps.eps_p.zz = -ps.eps_p.xx - ps.eps_p.yy;
    ps.eps_p.xy = 0.002 * unit(rng);
    ps.p = 0.004 + 0.002 * unit(rng);
    state.plastic[e] = ps;
  }

  auto total = [&]() {
    return assemble_total_energy(state, mesh, mat, ell, eta).total;
  };

  const Eigen::VectorXd grad_u = energy_gradient_u(state, mesh, mat, eta);
  const Eigen::VectorXd grad_a = energy_gradient_alpha(state, mesh, mat, ell);
  const double scale_u = grad_u.lpNorm<Eigen::Infinity>();
  const double scale_a = grad_a.lpNorm<Eigen::Infinity>();

  double worst = 0.0;
  std::uniform_int_distribution<int> pick_u(0, static_cast<int>(state.u.size()) - 1);
  for (int k = 0; k < 20; ++k) {
    const int d = pick_u(rng);
    const double h = 1e-6;
    const double keep = state.u[d];
    state.u[d] = keep + h;
    const double ep = total();
    state.u[d] = keep - h;
    const double em = total();
    state.u[d] = keep;
    worst = std::max(worst, std::abs((ep - em) / (2.0 * h) - grad_u[d]) / scale_u);
  }
  std::uniform_int_distribution<int> pick_a(0, dmap.num_unknown - 1);
  for (int k = 0; k < 20; ++k) {
    const int n = dmap.unknown_nodes[pick_a(rng)];
    const double h = 1e-6;
    const double keep = state.alpha[n];
    state.alpha[n] = keep + h;
    const double ep = total();
    state.alpha[n] = keep - h;
    const double em = total();
    state.alpha[n] = keep;
    worst = std::max(worst, std::abs((ep - em) / (2.0 * h) - grad_a[n]) / scale_a);
  }

  return {"energy_gradients_vs_finite_differences", worst <= tol,
          "worst rel err " + std::to_string(worst)};
}

// Short plastic run: energy monotone across every half-step, damage
// irreversible nodewise between steps, plastic trace zero.
inline VerifyCheck check_am_monotonicity_and_irreversibility() {
  SimulationConfig cfg = verify_detail::small_plastic_config();
  cfg.schedule.t_end = 6.0;

  const Mesh mesh = generate_mesh(cfg.L, cfg.H, cfg.delta, cfg.mesh_kind, cfg.mesh_seed);
  const MaterialField mat = build_material_field(mesh, cfg.layer_spec());
  SolverWorkspace ws(mesh, mat);
  State state = make_state(mesh);
  seed_initial_crack(state, mesh, cfg.ell, cfg.surfing);

  int violations = 0;
  double max_drop = 0.0, max_trace = 0.0;
  for (int k = 0; k < cfg.schedule.num_steps(); ++k) {
    const double t = cfg.schedule.t_start + k * cfg.schedule.dt;
    state.t = t;
    const Eigen::VectorXd alpha_before = state.alpha;
    const AmReport rep = alternate_minimize(
        state, mesh, mat, surfing_boundary_values(mesh, t, cfg.surfing), cfg.ell,
        cfg.eta, cfg.solver, ws);
    violations += rep.monotonicity_violations;
    max_drop = std::max(max_drop, (alpha_before - state.alpha).maxCoeff());
    for (int e = 0; e < mesh.num_elements(); ++e)
      max_trace = std::max(max_trace, std::abs(state.plastic[e].eps_p.trace()));
    state.alpha_lower = state.alpha;
  }

  const bool pass = violations == 0 && max_drop <= 1e-12 && max_trace <= 1e-12;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "monotonicity violations %d, max alpha drop %.2e, max plastic trace %.2e",
                violations, max_drop, max_trace);
  return {"am_energy_monotone_and_irreversible", pass, detail};
}

// Frozen straight crack under the opening field: the far-field J must match
// the reference toughness the amplitude was built from, and two nested rings
// must agree. Measured at three consecutive tip stations one element apart,
// with the painted crack tracking the nominal tip so crack and field stay
// consistent at every station.
inline VerifyCheck check_kfield_j_consistency(double tol_j = 0.05,
                                              double tol_rings = 0.02,
                                              bool desk_scale = true) {
  SimulationConfig base = verify_detail::kfield_config();
  if (desk_scale) {
    base.L = 60.0;
    base.H = 20.0;
    base.pad_width = 4.0;
    base.surfing.y0 = 10.0;
  }

  double worst_j = 0.0, worst_rings = 0.0;
  for (int k = 0; k < 3; ++k) {
    SimulationConfig cfg = base;
    cfg.surfing.x0 = 0.5 * cfg.L + k * cfg.delta;
    cfg.schedule = {0.0, 0.4 * cfg.delta, cfg.delta};  // single step at t = 0
    validate_config(cfg);
    const RunResult res = run_quasistatic(cfg);

    const double j_a = res.series.back().J;
    const JDomainSpec ring_b = pad_ring_domain(res.mesh, cfg.pad_width, 0.65, 0.35);
    const double j_b = j_integral(res.state, res.mesh, res.mat, cfg.eta, ring_b);

    worst_j = std::max(worst_j,
                       std::abs(j_a - cfg.surfing.Gc_ref) / cfg.surfing.Gc_ref);
    worst_rings = std::max(worst_rings,
                           std::abs(j_a - j_b) / std::max(std::abs(j_a), 1e-12));
  }

  const bool pass = worst_j <= tol_j && worst_rings <= tol_rings;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "max |J-Gc_ref|/Gc_ref = %.4f (tol %.2f), ring disagreement %.4f (tol %.2f)",
                worst_j, tol_j, worst_rings, tol_rings);
  return {"kfield_j_consistency_and_path_independence", pass, detail};
}

// The effective toughness must not depend on the loading amplitude or the
// step size.
inline VerifyCheck check_toughness_invariance(double tol = 0.03) {
  SimulationConfig base = verify_detail::small_elastic_config();

  const double g_ref = run_quasistatic(base).g_eff;

  SimulationConfig amp = base;
  amp.surfing.amplitude_scale = 1.5;
  const double g_amp = run_quasistatic(amp).g_eff;

  SimulationConfig fine = base;
  fine.schedule.dt = 0.5 * base.schedule.dt;
  const double g_dt = run_quasistatic(fine).g_eff;

  const double dev_amp = std::abs(g_amp - g_ref) / g_ref;
  const double dev_dt = std::abs(g_dt - g_ref) / g_ref;
  const bool pass = dev_amp <= tol && dev_dt <= tol;
  char detail[160];
  std::snprintf(detail, sizeof detail,
                "G_eff=%.4f; amplitude 1.5 dev %.4f, dt/2 dev %.4f (tol %.2f)", g_ref,
                dev_amp, dev_dt, tol);
  return {"toughness_invariance_amplitude_and_dt", pass, detail};
}

inline std::vector<VerifyCheck> run_verify_suite(bool print = true) {
  std::vector<std::function<VerifyCheck()>> checks = {
      [] { return check_return_map_oracle(); },
      [] { return check_energy_gradients(); },
      [] { return check_am_monotonicity_and_irreversibility(); },
      [] { return check_kfield_j_consistency(); },
      [] { return check_toughness_invariance(); },
  };
  std::vector<VerifyCheck> results;
  for (auto& fn : checks) {
    VerifyCheck check = fn();
    if (print)
      std::printf("%-48s %s  (%s)\n", check.name.c_str(),
                  check.pass ? "PASS" : "FAIL", check.detail.c_str());
    results.push_back(std::move(check));
  }
  return results;
}

}  // namespace efftough

#endif
