#ifndef EFFTOUGH_CONFIG_HPP
#define EFFTOUGH_CONFIG_HPP

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "efftough/loading.hpp"
#include "efftough/microstructure.hpp"
#include "efftough/solver.hpp"

namespace efftough {

struct OutputConfig {
  std::string directory = "out";
  int snapshot_stride = 10;
  double wake_threshold = 1e-3;   // p level marking the plastic wake
  double path_alpha = 0.95;       // alpha level locating the formed crack
};

// Fully resolved simulation configuration. parse_config() fills every field,
// substituting the documented defaults for omitted keys, and validates the
// cross-field constraints; downstream code never re-derives defaults.
struct SimulationConfig {
  // geometry
  double L = 352.0;
  double H = 40.0;
  double pad_width = 4.0;
  // mesh
  double delta = 0.1;
  MeshKind mesh_kind = MeshKind::jittered_delaunay;
  std::uint64_t mesh_seed = 0;
  // regularization
  double ell = 0.25;
  double eta = 1e-6;
  // phases
  PhaseProperties phase1;
  PhaseProperties phase2;
  double theta = 0.5 * std::numbers::pi;
  double tau = 32.0;
  double origin_offset = 0.0;     // resolved; default centers phase 1 on the seed tip
  // loading
  SurfingParams surfing;
  Schedule schedule;
  // window for the effective-toughness maximum, in tip-advance margins
  double window_margin_start = 0.0;  // resolved; default 8 ell past the pad edge
  double window_margin_end = 0.0;    // resolved; default 2 ell before the far pad

  SolverSettings solver;
  OutputConfig output;

  LayerSpec layer_spec() const {
    return {theta, tau, phase1, phase2, origin_offset, pad_width};
  }

  // [t_a, t_b] during which the nominal tip traverses the layered interior.
  std::pair<double, double> measurement_window() const {
    const double t_a = std::max(
        schedule.t_start, (pad_width + window_margin_start - surfing.x0) / surfing.V);
    const double t_b = std::min(
        schedule.t_end, (L - pad_width - window_margin_end - surfing.x0) / surfing.V);
    return {t_a, t_b};
  }
};

namespace detail {

inline void require_known_keys(const nlohmann::json& obj, const char* section,
                               std::initializer_list<const char*> allowed) {
  if (!obj.is_object())
    throw std::invalid_argument(std::string("config: '") + section +
                                "' must be an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) known = true;
    if (!known)
      throw std::invalid_argument(std::string("config: unknown key '") + item.key() +
                                  "' in '" + section + "'");
  }
}

inline double get_number(const nlohmann::json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number())
    throw std::invalid_argument(std::string("config: '") + key + "' must be a number");
  return obj[key].get<double>();
}

inline PhaseProperties parse_phase(const nlohmann::json& obj, const char* name,
                                   const PhaseProperties& fallback) {
  require_known_keys(obj, name, {"E", "nu", "Gc", "sigma0"});
  PhaseProperties p;
  p.E = get_number(obj, "E", fallback.E);
  p.nu = get_number(obj, "nu", fallback.nu);
  p.Gc = get_number(obj, "Gc", fallback.Gc);
  p.sigma0 = get_number(obj, "sigma0", fallback.sigma0);
  return p;
}

inline void check(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("config: constraint violated: " + what);
}

}  // namespace detail

inline void validate_config(const SimulationConfig& c) {
  using detail::check;
  check(c.L > 0.0 && c.H > 0.0, "L > 0 and H > 0");
  check(c.delta > 0.0 && c.delta < 0.25 * std::min(c.L, c.H),
        "0 < delta < min(L,H)/4");
  check(c.ell >= 2.0 * c.delta, "ell >= 2*delta (regularization resolved by the mesh)");
  check(c.tau >= 4.0 * c.ell, "tau >= 4*ell (layers resolved by the regularization)");
  check(c.pad_width >= 4.0 * c.ell, "pad_width >= 4*ell");
  check(c.pad_width < 0.5 * std::min(c.L, c.H), "pad_width < min(L,H)/2");
  check(c.eta > 0.0, "eta > 0");
  check(c.theta >= 0.0 && c.theta <= 0.5 * std::numbers::pi + 1e-12,
        "theta in [0, pi/2]");
  for (const PhaseProperties* p : {&c.phase1, &c.phase2}) {
    check(p->E > 0.0, "phase E > 0");
    check(p->nu >= 0.0 && p->nu < 0.5, "phase nu in [0, 0.5)");
    check(p->Gc > 0.0, "phase Gc > 0");
    check(p->sigma0 > 0.0, "phase sigma0 > 0");
  }
  check(c.surfing.V > 0.0, "V > 0");
  check(c.surfing.amplitude_scale >= 0.0, "amplitude_scale >= 0");
  check(c.surfing.x0 >= 0.0 && c.surfing.x0 <= c.L && c.surfing.y0 >= 0.0 &&
            c.surfing.y0 <= c.H,
        "(x0, y0) inside the domain");
  check(c.schedule.dt > 0.0, "dt > 0");
  check(c.schedule.t_end > c.schedule.t_start, "t_end > t_start");
  check(c.solver.am_tol > 0.0 && c.solver.lin_tol > 0.0 && c.solver.damage_tol > 0.0,
        "solver tolerances > 0");
  check(c.solver.am_maxit > 0, "am_maxit > 0");
  check(c.output.snapshot_stride > 0, "snapshot_stride > 0");
}

// Parses the strict JSON configuration. Unknown keys are errors; omitted
// keys fall back to the documented defaults (see docs/config.md). Derived
// defaults -- seed position, schedule, pattern offset, K-field reference
// constants -- are resolved here so the returned config is self-contained.
inline SimulationConfig parse_config(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& err) {
    throw std::invalid_argument(std::string("config: malformed JSON: ") + err.what());
  }
  detail::require_known_keys(root, "<root>",
                             {"geometry", "mesh", "regularization", "phases",
                              "loading", "solver", "output"});

  SimulationConfig c;
  const nlohmann::json empty = nlohmann::json::object();

  {
    const auto& g = root.contains("geometry") ? root["geometry"] : empty;
    detail::require_known_keys(g, "geometry", {"L", "H", "pad_width"});
    c.L = detail::get_number(g, "L", 352.0);
    c.H = detail::get_number(g, "H", 40.0);
    c.pad_width = detail::get_number(g, "pad_width", 4.0);
  }
  {
    const auto& m = root.contains("mesh") ? root["mesh"] : empty;
    detail::require_known_keys(m, "mesh", {"delta", "kind", "seed"});
    c.delta = detail::get_number(m, "delta", 0.1);
    if (m.contains("kind")) {
      const std::string kind = m["kind"].get<std::string>();
      if (kind == "structured")
        c.mesh_kind = MeshKind::structured;
      else if (kind == "jittered-delaunay")
        c.mesh_kind = MeshKind::jittered_delaunay;
      else
        throw std::invalid_argument("config: mesh.kind must be 'structured' or "
                                    "'jittered-delaunay'");
    }
    if (m.contains("seed")) c.mesh_seed = m["seed"].get<std::uint64_t>();
  }
  {
    const auto& r = root.contains("regularization") ? root["regularization"] : empty;
    detail::require_known_keys(r, "regularization", {"ell", "eta"});
    c.ell = detail::get_number(r, "ell", 0.25);
    c.eta = detail::get_number(r, "eta", 1e-6);
  }
  {
    const auto& p = root.contains("phases") ? root["phases"] : empty;
    detail::require_known_keys(p, "phases",
                               {"phase1", "phase2", "theta", "tau", "origin_offset"});
    const PhaseProperties def;  // E=1, nu=0.2, Gc=1, sigma0=0.625
    c.phase1 = p.contains("phase1") ? detail::parse_phase(p["phase1"], "phase1", def) : def;
    c.phase2 = p.contains("phase2") ? detail::parse_phase(p["phase2"], "phase2", def) : def;
    c.theta = detail::get_number(p, "theta", 0.5 * std::numbers::pi);
    c.tau = detail::get_number(p, "tau", 32.0);
    if (p.contains("origin_offset")) c.origin_offset = p["origin_offset"].get<double>();
  }

  const bool offset_given =
      root.contains("phases") && root["phases"].contains("origin_offset");

  {
    const auto& l = root.contains("loading") ? root["loading"] : empty;
    detail::require_known_keys(
        l, "loading",
        {"V", "x0", "y0", "amplitude_scale", "E_ref", "nu_ref", "Gc_ref", "t_start",
         "t_end", "dt", "window_margin_start", "window_margin_end"});
    const PhaseProperties pad = averaged_pad_properties(c.phase1, c.phase2);
    c.surfing.V = detail::get_number(l, "V", 1.0);
    c.surfing.x0 = detail::get_number(l, "x0", c.pad_width + 2.0 * c.ell);
    c.surfing.y0 = detail::get_number(l, "y0", 0.5 * c.H);
    c.surfing.amplitude_scale = detail::get_number(l, "amplitude_scale", 1.0);
    c.surfing.E_ref = detail::get_number(l, "E_ref", pad.E);
    c.surfing.nu_ref = detail::get_number(l, "nu_ref", pad.nu);
    c.surfing.Gc_ref = detail::get_number(l, "Gc_ref", pad.Gc);
    c.schedule.t_start = detail::get_number(l, "t_start", 0.0);
    c.schedule.dt = detail::get_number(l, "dt", c.delta / c.surfing.V);
    // Default end: the nominal tip stops short of the far pad.
    const double t_end_default =
        (c.L - c.pad_width - 2.0 * c.ell - c.surfing.x0) / c.surfing.V;
    c.schedule.t_end = detail::get_number(l, "t_end", t_end_default);
    c.window_margin_start = detail::get_number(l, "window_margin_start", 8.0 * c.ell);
    c.window_margin_end = detail::get_number(l, "window_margin_end", 2.0 * c.ell);
  }
  if (!offset_given)
    c.origin_offset =
        centered_origin_offset(c.theta, c.tau, {c.surfing.x0, c.surfing.y0});

  {
    const auto& s = root.contains("solver") ? root["solver"] : empty;
    detail::require_known_keys(s, "solver",
                               {"am_tol", "am_maxit", "lin_tol", "damage_tol"});
    c.solver.am_tol = detail::get_number(s, "am_tol", 1e-4);
    c.solver.am_maxit = static_cast<int>(detail::get_number(s, "am_maxit", 500));
    c.solver.lin_tol = detail::get_number(s, "lin_tol", 1e-8);
    c.solver.damage_tol = detail::get_number(s, "damage_tol", 1e-6);
  }
  {
    const auto& o = root.contains("output") ? root["output"] : empty;
    detail::require_known_keys(
        o, "output", {"directory", "snapshot_stride", "wake_threshold", "path_alpha"});
    if (o.contains("directory")) c.output.directory = o["directory"].get<std::string>();
    c.output.snapshot_stride =
        static_cast<int>(detail::get_number(o, "snapshot_stride", 10));
    c.output.wake_threshold = detail::get_number(o, "wake_threshold", 1e-3);
    c.output.path_alpha = detail::get_number(o, "path_alpha", 0.95);
  }

  validate_config(c);
  return c;
}

inline SimulationConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Serializes the resolved configuration; parse_config(serialize_config(c))
// reproduces c exactly.
inline std::string serialize_config(const SimulationConfig& c) {
  nlohmann::json root;
  root["geometry"] = {{"L", c.L}, {"H", c.H}, {"pad_width", c.pad_width}};
  root["mesh"] = {{"delta", c.delta},
                  {"kind", to_string(c.mesh_kind)},
                  {"seed", c.mesh_seed}};
  root["regularization"] = {{"ell", c.ell}, {"eta", c.eta}};
  auto phase_json = [](const PhaseProperties& p) {
    return nlohmann::json{{"E", p.E}, {"nu", p.nu}, {"Gc", p.Gc}, {"sigma0", p.sigma0}};
  };
  root["phases"] = {{"phase1", phase_json(c.phase1)},
                    {"phase2", phase_json(c.phase2)},
                    {"theta", c.theta},
                    {"tau", c.tau},
                    {"origin_offset", c.origin_offset}};
  root["loading"] = {{"V", c.surfing.V},
                     {"x0", c.surfing.x0},
                     {"y0", c.surfing.y0},
                     {"amplitude_scale", c.surfing.amplitude_scale},
                     {"E_ref", c.surfing.E_ref},
                     {"nu_ref", c.surfing.nu_ref},
                     {"Gc_ref", c.surfing.Gc_ref},
                     {"t_start", c.schedule.t_start},
                     {"t_end", c.schedule.t_end},
                     {"dt", c.schedule.dt},
                     {"window_margin_start", c.window_margin_start},
                     {"window_margin_end", c.window_margin_end}};
  root["solver"] = {{"am_tol", c.solver.am_tol},
                    {"am_maxit", c.solver.am_maxit},
                    {"lin_tol", c.solver.lin_tol},
                    {"damage_tol", c.solver.damage_tol}};
  root["output"] = {{"directory", c.output.directory},
                    {"snapshot_stride", c.output.snapshot_stride},
                    {"wake_threshold", c.output.wake_threshold},
                    {"path_alpha", c.output.path_alpha}};
  return root.dump(2);
}

}  // namespace efftough

#endif
