#ifndef EFFTOUGH_RUNNER_HPP
#define EFFTOUGH_RUNNER_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "efftough/analysis.hpp"
#include "efftough/config.hpp"
#include "efftough/loading.hpp"
#include "efftough/solver.hpp"
#include "efftough/vtk_io.hpp"

namespace efftough {

struct RunOptions {
  bool verbose = false;
  bool write_outputs = false;
  std::string output_dir;  // overrides config.output.directory when non-empty
};

struct RunResult {
  SimulationConfig config;
  Mesh mesh;
  MaterialField mat;
  State state;  // final
  std::vector<TimeSeriesRecord> series;
  double g_eff = std::numeric_limits<double>::quiet_NaN();
  double gc_num = 0.0;  // numerical toughness of phase 1 at the run's (delta, ell)
  double window_t_a = 0.0;
  double window_t_b = 0.0;
  bool all_steps_converged = true;
  int total_am_iterations = 0;
  int monotonicity_violations = 0;
  double wall_seconds = 0.0;
};

inline void write_series_csv(const std::vector<TimeSeriesRecord>& series,
                             double gc_num, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_series_csv: cannot open '" + path + "'");
  out << "t,J,J_over_Gc_num,E_elastic,E_surface,E_plastic,tip_nominal_x,tip_actual_x\n";
  char buf[256];
  for (const auto& r : series) {
    std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                  r.t, r.J, r.J / gc_num, r.E_elastic, r.E_surface, r.E_plastic,
                  r.tip_nominal_x, r.tip_actual_x);
    out << buf;
  }
}

inline void write_summary_json(const RunResult& res, const std::string& path) {
  nlohmann::json summary;
  summary["G_eff"] = res.g_eff;
  summary["Gc_num"] = res.gc_num;
  summary["G_eff_over_Gc_num"] = res.g_eff / res.gc_num;
  const double ell = res.config.ell;
  summary["r_y"] = {
      {"phase1", ductility_ratio(nucleation_stress(res.config.phase1, ell),
                                 res.config.phase1.sigma0)},
      {"phase2", ductility_ratio(nucleation_stress(res.config.phase2, ell),
                                 res.config.phase2.sigma0)}};
  summary["window"] = {res.window_t_a, res.window_t_b};
  summary["steps"] = res.series.size();
  summary["all_steps_converged"] = res.all_steps_converged;
  summary["total_am_iterations"] = res.total_am_iterations;
  summary["monotonicity_violations"] = res.monotonicity_violations;
  summary["wall_time_seconds"] = res.wall_seconds;
  summary["complete"] = true;

  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_summary_json: cannot open '" + path + "'");
  out << summary.dump(2) << "\n";
}

// Quasistatic surfing simulation: at every step the boundary carries the
// translated opening field, the step is relaxed by alternating minimization,
// and the far-field J, the energy tallies and the tip positions are
// recorded. Damage irreversibility advances between steps.
inline RunResult run_quasistatic(const SimulationConfig& config,
                                 const RunOptions& options = {}) {
  const auto t_begin = std::chrono::steady_clock::now();

  RunResult res;
  res.config = config;
  res.mesh = generate_mesh(config.L, config.H, config.delta, config.mesh_kind,
                           config.mesh_seed);
  res.mat = build_material_field(res.mesh, config.layer_spec());
  res.gc_num = numerical_toughness(config.phase1.Gc, config.delta, config.ell);
  const auto window = config.measurement_window();
  res.window_t_a = window.first;
  res.window_t_b = window.second;

  SolverWorkspace ws(res.mesh, res.mat);
  res.state = make_state(res.mesh);
  seed_initial_crack(res.state, res.mesh, config.ell, config.surfing);

  const JDomainSpec ring = pad_ring_domain(res.mesh, config.pad_width);

  std::string out_dir;
  if (options.write_outputs) {
    out_dir = options.output_dir.empty() ? config.output.directory : options.output_dir;
    std::filesystem::create_directories(out_dir);
    std::ofstream cfg(out_dir + "/config_resolved.json");
    cfg << serialize_config(config) << "\n";
    write_mesh_vtk(res.mesh, out_dir + "/mesh.vtk");
  }

  const int n_steps = config.schedule.num_steps();
  res.series.reserve(n_steps);
  Eigen::VectorXd alpha_prev = res.state.alpha;

  for (int k = 0; k < n_steps; ++k) {
    const double t = config.schedule.t_start + k * config.schedule.dt;
    res.state.t = t;
    const std::vector<Vec2> bc =
        surfing_boundary_values(res.mesh, t, config.surfing);

    // Predictor: advance the damage field along its last increment. Only a
    // warm start; the bounds and the minimization are untouched.
    if (k >= 2) {
      for (const int n : ws.damage_map.unknown_nodes) {
        const double extrapolated = 2.0 * res.state.alpha[n] - alpha_prev[n];
        res.state.alpha[n] =
            std::clamp(extrapolated, res.state.alpha_lower[n], 1.0);
      }
    }
    alpha_prev = res.state.alpha_lower;  // damage at the end of the last step

    AmReport report;
    try {
      report = alternate_minimize(res.state, res.mesh, res.mat, bc, config.ell,
                                  config.eta, config.solver, ws);
    } catch (const std::exception& err) {
      if (options.write_outputs)
        write_snapshot(res.state, res.mesh, res.mat, config.eta,
                       out_dir + "/snapshot_abort.vtk");
      throw std::runtime_error("step " + std::to_string(k) + " (t=" +
                               std::to_string(t) + ") failed: " + err.what());
    }
    res.total_am_iterations += report.iterations;
    res.monotonicity_violations += report.monotonicity_violations;
    if (!report.converged) res.all_steps_converged = false;

    const EnergyBreakdown en =
        assemble_total_energy(res.state, res.mesh, res.mat, config.ell, config.eta);
    TimeSeriesRecord rec;
    rec.t = t;
    rec.J = j_integral(res.state, res.mesh, res.mat, config.eta, ring);
    rec.E_elastic = en.elastic;
    rec.E_surface = en.surface;
    rec.E_plastic = plastic_dissipation(res.state, res.mesh, res.mat);
    rec.tip_nominal_x = config.surfing.x0 + config.surfing.V * t;
    rec.tip_actual_x = actual_tip_x(res.state, res.mesh, config.surfing.y0,
                                    config.ell, config.output.path_alpha);
    rec.converged = report.converged;
    res.series.push_back(rec);

    res.state.alpha_lower = res.state.alpha;

    if (options.verbose) {
      std::printf("step %4d  t=%8.3f  J=%9.5f  am_it=%3d%s\n", k, t, rec.J,
                  report.iterations, report.converged ? "" : "  [not converged]");
      std::fflush(stdout);
    }
    if (options.write_outputs && (k % config.output.snapshot_stride == 0 || k == n_steps - 1)) {
      char name[64];
      std::snprintf(name, sizeof name, "/snapshot_%05d.vtk", k);
      write_snapshot(res.state, res.mesh, res.mat, config.eta, out_dir + name);
    }
  }

  try {
    res.g_eff = effective_toughness(res.series, res.window_t_a, res.window_t_b);
  } catch (const std::invalid_argument&) {
    // Short runs may never enter the measurement window.
  }

  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();

  if (options.write_outputs) {
    write_series_csv(res.series, res.gc_num, out_dir + "/series.csv");
    write_summary_json(res, out_dir + "/summary.json");
  }
  return res;
}

}  // namespace efftough

#endif
