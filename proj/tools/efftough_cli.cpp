// Command-line front end: single runs, layer-angle sweeps and the built-in
// verification suite.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "efftough/runner.hpp"
#include "efftough/sweep.hpp"
#include "efftough/verify.hpp"

namespace {

std::vector<double> parse_theta_list(const std::string& csv) {
  std::vector<double> thetas;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    const std::string token = csv.substr(pos, next - pos);
    if (!token.empty()) thetas.push_back(std::stod(token));
    pos = next + 1;
  }
  return thetas;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Effective fracture toughness of layered elastic-plastic media "
               "via phase-field surfing simulations"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string thetas_csv;
  int jobs = 1;
  std::int64_t seed = -1;
  bool verbose = false;

  CLI::App* cmd_run = app.add_subcommand("run", "Run a single simulation");
  cmd_run->add_option("--config", config_path, "JSON configuration file")->required();
  cmd_run->add_option("--out", out_dir, "Output directory");
  cmd_run->add_option("--seed", seed, "Override the mesh seed");
  cmd_run->add_flag("--verbose", verbose, "Per-step progress output");

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "Sweep the layer angle");
  cmd_sweep->add_option("--config", config_path, "JSON configuration file")->required();
  cmd_sweep->add_option("--thetas", thetas_csv, "Comma-separated layer angles (rad)")
      ->required();
  cmd_sweep->add_option("--out", out_dir, "Output directory");
  cmd_sweep->add_option("--jobs", jobs, "Parallel runs");
  cmd_sweep->add_option("--seed", seed, "Override the mesh seed");
  cmd_sweep->add_flag("--verbose", verbose, "Per-step progress output");

  CLI::App* cmd_verify =
      app.add_subcommand("verify", "Run the built-in verification suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      efftough::SimulationConfig config = efftough::parse_config_file(config_path);
      if (seed >= 0) config.mesh_seed = static_cast<std::uint64_t>(seed);

      efftough::RunOptions options;
      options.verbose = verbose;
      options.write_outputs = true;
      options.output_dir = out_dir;

      const efftough::RunResult res = efftough::run_quasistatic(config, options);
      std::printf("G_eff = %.6g  (G_eff/Gc_num = %.6g)\n", res.g_eff,
                  res.g_eff / res.gc_num);
      std::printf("wall time %.1f s, %zu steps, outputs in '%s'\n", res.wall_seconds,
                  res.series.size(),
                  out_dir.empty() ? config.output.directory.c_str() : out_dir.c_str());
      return res.all_steps_converged ? 0 : 1;
    }

    if (cmd_sweep->parsed()) {
      efftough::SimulationConfig config = efftough::parse_config_file(config_path);
      if (seed >= 0) config.mesh_seed = static_cast<std::uint64_t>(seed);
      const std::vector<double> thetas = parse_theta_list(thetas_csv);

      const auto rows = efftough::sweep_angles(config, thetas, jobs, verbose);

      const std::string dir = out_dir.empty() ? config.output.directory : out_dir;
      std::filesystem::create_directories(dir);
      efftough::write_polar_csv(rows, dir + "/polar.csv");

      bool all_ok = true;
      for (const auto& row : rows) {
        std::printf("theta=%.4f  G_eff=%.6g  (x%.4g)  dev=%.3g  wake=%d  %s\n",
                    row.theta, row.g_eff, row.g_eff_over_gc_num,
                    row.max_path_deviation, row.wake_clusters,
                    row.converged ? "ok" : ("FAILED " + row.error).c_str());
        all_ok = all_ok && row.converged;
      }
      return all_ok ? 0 : 1;
    }

    if (cmd_verify->parsed()) {
      const auto checks = efftough::run_verify_suite(true);
      for (const auto& check : checks)
        if (!check.pass) return 1;
      return 0;
    }
  } catch (const std::exception& err) {
    std::fprintf(stderr, "error: %s\n", err.what());
    return 1;
  }
  return 0;
}
