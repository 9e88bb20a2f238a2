#ifndef EFFTOUGH_VTK_IO_HPP
#define EFFTOUGH_VTK_IO_HPP

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "efftough/mesh.hpp"
#include "efftough/microstructure.hpp"
#include "efftough/solver.hpp"

namespace efftough {

namespace detail {

inline void vtk_header(std::ostream& out, const std::string& title) {
  out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n";
}

inline void vtk_geometry(std::ostream& out, const Mesh& mesh) {
  char buf[96];
  out << "POINTS " << mesh.num_nodes() << " double\n";
  for (const Vec2& p : mesh.nodes) {
    std::snprintf(buf, sizeof buf, "%.12g %.12g 0\n", p.x, p.y);
    out << buf;
  }
  out << "CELLS " << mesh.num_elements() << " " << 4 * mesh.num_elements() << "\n";
  for (const auto& t : mesh.elements)
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
  out << "CELL_TYPES " << mesh.num_elements() << "\n";
  for (int e = 0; e < mesh.num_elements(); ++e) out << "5\n";
}

}  // namespace detail

inline void write_mesh_vtk(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_mesh_vtk: cannot open '" + path + "'");
  detail::vtk_header(out, "efftough mesh");
  detail::vtk_geometry(out, mesh);
}

// Snapshot of the solution fields: nodal displacement and damage, elementwise
// cumulative equivalent plastic strain, phase id and degraded elastic energy
// density.
inline void write_snapshot(const State& state, const Mesh& mesh,
                           const MaterialField& mat, double eta,
                           const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_snapshot: cannot open '" + path + "'");
  char buf[96];

  detail::vtk_header(out, "efftough snapshot t=" + std::to_string(state.t));
  detail::vtk_geometry(out, mesh);

  out << "POINT_DATA " << mesh.num_nodes() << "\n";
  out << "VECTORS displacement double\n";
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    std::snprintf(buf, sizeof buf, "%.12g %.12g 0\n", state.u[2 * n], state.u[2 * n + 1]);
    out << buf;
  }
  out << "SCALARS alpha double 1\nLOOKUP_TABLE default\n";
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    std::snprintf(buf, sizeof buf, "%.12g\n", state.alpha[n]);
    out << buf;
  }

  out << "CELL_DATA " << mesh.num_elements() << "\n";
  out << "SCALARS plastic_eqv double 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    std::snprintf(buf, sizeof buf, "%.12g\n", state.plastic[e].p);
    out << buf;
  }
  out << "SCALARS phase int 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < mesh.num_elements(); ++e)
    out << static_cast<int>(mat.phase[e]) << "\n";
  out << "SCALARS energy_density double 1\nLOOKUP_TABLE default\n";
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const double psi =
        stiffness_scale(mesh, mat, state.alpha, state.alpha_seed, e, eta) *
        elastic_energy_density(element_strain(mesh, state.u, e),
                               state.plastic[e].eps_p, mat.lame[e]);
    std::snprintf(buf, sizeof buf, "%.12g\n", psi);
    out << buf;
  }
}

// Minimal legacy-VTK reader covering what the writers above emit; used by
// the round-trip checks and available for post-processing.
struct VtkGrid {
  std::vector<std::array<double, 3>> points;
  std::vector<std::array<int, 3>> cells;
  std::map<std::string, std::vector<double>> point_scalars;
  std::map<std::string, std::vector<std::array<double, 3>>> point_vectors;
  std::map<std::string, std::vector<double>> cell_scalars;
};

inline VtkGrid read_vtk_legacy(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_vtk_legacy: cannot open '" + path + "'");

  VtkGrid grid;
  std::string line;
  std::getline(in, line);
  if (line.rfind("# vtk DataFile", 0) != 0)
    throw std::runtime_error("read_vtk_legacy: not a legacy VTK file");

  enum class Block { none, point_data, cell_data } block = Block::none;
  std::size_t n_points = 0, n_cells = 0;

  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string word;
    if (!(ls >> word)) continue;

    if (word == "POINTS") {
      ls >> n_points;
      grid.points.resize(n_points);
      for (auto& p : grid.points) in >> p[0] >> p[1] >> p[2];
    } else if (word == "CELLS") {
      ls >> n_cells;
      grid.cells.resize(n_cells);
      for (auto& c : grid.cells) {
        int k;
        in >> k;
        if (k != 3) throw std::runtime_error("read_vtk_legacy: only triangles supported");
        in >> c[0] >> c[1] >> c[2];
      }
    } else if (word == "CELL_TYPES") {
      int m;
      ls >> m;
      for (int i = 0; i < m; ++i) {
        int type;
        in >> type;
        if (type != 5) throw std::runtime_error("read_vtk_legacy: unexpected cell type");
      }
    } else if (word == "POINT_DATA") {
      block = Block::point_data;
    } else if (word == "CELL_DATA") {
      block = Block::cell_data;
    } else if (word == "SCALARS") {
      std::string name;
      ls >> name;
      std::getline(in, line);  // LOOKUP_TABLE default
      const std::size_t count = block == Block::point_data ? n_points : n_cells;
      std::vector<double> values(count);
      for (auto& v : values) in >> v;
      if (block == Block::point_data)
        grid.point_scalars[name] = std::move(values);
      else
        grid.cell_scalars[name] = std::move(values);
    } else if (word == "VECTORS") {
      std::string name;
      ls >> name;
      std::vector<std::array<double, 3>> values(n_points);
      for (auto& v : values) in >> v[0] >> v[1] >> v[2];
      grid.point_vectors[name] = std::move(values);
    }
  }
  return grid;
}

}  // namespace efftough

#endif
