#ifndef EFFTOUGH_FEM_HPP
#define EFFTOUGH_FEM_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#ifdef EFFTOUGH_USE_CHOLMOD
#include <Eigen/CholmodSupport>
#endif

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "efftough/constitutive.hpp"
#include "efftough/mesh.hpp"
#include "efftough/microstructure.hpp"

namespace efftough {

#ifdef EFFTOUGH_USE_CHOLMOD
using SparseFactorization = Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>>;
#else
using SparseFactorization = Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>;
#endif

// Plane-strain strain of the P1 displacement field on element e;
// u is interleaved (u_x0, u_y0, u_x1, ...).
inline SymTensor element_strain(const Mesh& mesh, const Eigen::VectorXd& u, int e) {
  const auto& t = mesh.elements[e];
  const auto& g = mesh.grad_ops[e];
  SymTensor eps;
  for (int a = 0; a < 3; ++a) {
    const double ux = u[2 * t[a]];
    const double uy = u[2 * t[a] + 1];
    eps.xx += ux * g[a].x;
    eps.yy += uy * g[a].y;
    eps.xy += 0.5 * (ux * g[a].y + uy * g[a].x);
  }
  return eps;
}

// Element-average damage.
inline double element_alpha(const Mesh& mesh, const Eigen::VectorXd& alpha, int e) {
  const auto& t = mesh.elements[e];
  return (alpha[t[0]] + alpha[t[1]] + alpha[t[2]]) / 3.0;
}

// Stiffness degradation eta + (1 - abar)^2. Pad elements are undamageable:
// their factor is frozen at the seeded damage field (1 on the initial slit,
// 0 elsewhere) so evolving damage on shared interface nodes cannot soften
// them.
inline double stiffness_scale(const Mesh& mesh, const MaterialField& mat,
                              const Eigen::VectorXd& alpha,
                              const Eigen::VectorXd& alpha_seed, int e, double eta) {
  const double abar = mat.damageable[e] ? element_alpha(mesh, alpha, e)
                                        : element_alpha(mesh, alpha_seed, e);
  return eta + (1.0 - abar) * (1.0 - abar);
}

// -------------------------------------------------------------------------
// Displacement block: all boundary nodes carry Dirichlet data, the interior
// is solved with a sparse Cholesky factorization. The sparsity pattern and
// the element-to-value scatter table are built once per mesh; assemblies
// only refill the value array.
// -------------------------------------------------------------------------

struct DofMap {
  std::vector<std::int32_t> free_index;  // 2N entries, -1 for Dirichlet dofs
  std::vector<std::int32_t> free_dofs;   // free slot -> global dof
  int num_free = 0;
};

inline DofMap make_dof_map(const Mesh& mesh) {
  DofMap map;
  map.free_index.assign(2 * mesh.num_nodes(), 0);
  for (int n = 0; n < mesh.num_nodes(); ++n)
    if (mesh.node_on_boundary[n])
      map.free_index[2 * n] = map.free_index[2 * n + 1] = -1;
  for (int d = 0; d < 2 * mesh.num_nodes(); ++d) {
    if (map.free_index[d] >= 0) {
      map.free_index[d] = map.num_free++;
      map.free_dofs.push_back(d);
    }
  }
  return map;
}

class DisplacementSystem {
 public:
  DisplacementSystem(const Mesh& mesh, const DofMap& dofs) : dofs_(dofs) {
    const int n = dofs.num_free;
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.num_elements() * 12);
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto& t = mesh.elements[e];
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 2; ++i) {
          const int row = dofs.free_index[2 * t[a] + i];
          if (row < 0) continue;
          for (int b = 0; b < 3; ++b)
            for (int j = 0; j < 2; ++j) {
              const int col = dofs.free_index[2 * t[b] + j];
              if (col >= 0) trip.emplace_back(row, col, 0.0);
            }
        }
    }
    K_.resize(n, n);
    K_.setFromTriplets(trip.begin(), trip.end());
    K_.makeCompressed();

    // Scatter slots into the compressed value array; the unscaled element
    // matrices are filled by bind_material, after which assemblies reduce to
    // scale * base updates.
    const int ne = mesh.num_elements();
    base_ke_.assign(ne, {});
    slots_.assign(ne, {});
    for (int e = 0; e < ne; ++e) {
      const auto& t = mesh.elements[e];
      bool touches_boundary = false;
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 2; ++i)
          for (int b = 0; b < 3; ++b)
            for (int j = 0; j < 2; ++j) {
              const int local = (2 * a + i) * 6 + 2 * b + j;
              const int row = dofs.free_index[2 * t[a] + i];
              const int col = dofs.free_index[2 * t[b] + j];
              slots_[e][local] = (row >= 0 && col >= 0) ? value_slot(row, col) : -1;
              if (col < 0) touches_boundary = true;
            }
      if (touches_boundary) boundary_elements_.push_back(e);
    }

    scale_cache_.assign(ne, -1.0);
    scale_factored_.assign(ne, -1.0);
    ldlt_.analyzePattern(K_);
    rhs_.resize(n);
  }

  // Binds the material (fills the unscaled element matrices); must be called
  // once before the first assembly.
  void bind_material(const Mesh& mesh, const MaterialField& mat) {
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto& g = mesh.grad_ops[e];
      const double area = mesh.element_area[e];
      const double lam = mat.lame[e].lambda;
      const double mu = mat.lame[e].mu;
      for (int a = 0; a < 3; ++a) {
        const double gax[2] = {g[a].x, g[a].y};
        for (int b = 0; b < 3; ++b) {
          const double gbx[2] = {g[b].x, g[b].y};
          const double gdot = g[a].x * g[b].x + g[a].y * g[b].y;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
              base_ke_[e][(2 * a + i) * 6 + 2 * b + j] =
                  area * (lam * gax[i] * gbx[j] + mu * gax[j] * gbx[i] +
                          (i == j ? mu * gdot : 0.0));
        }
      }
    }
    bound_ = true;
  }

  // Updates K(alpha). Element values change incrementally; the factorization
  // is refreshed only when the accumulated drift since the last one is large
  // enough that preconditioned CG would be slower than refactorizing.
  void assemble_matrix(const Mesh& mesh, const MaterialField& mat,
                       const Eigen::VectorXd& alpha, const Eigen::VectorXd& alpha_seed,
                       double eta) {
    if (!bound_) bind_material(mesh, mat);
    double* vals = K_.valuePtr();
    const int ne = mesh.num_elements();

    if (scale_cache_[0] < 0.0) {
      std::fill(vals, vals + K_.nonZeros(), 0.0);
      for (int e = 0; e < ne; ++e) {
        const double s = stiffness_scale(mesh, mat, alpha, alpha_seed, e, eta);
        scale_cache_[e] = s;
        for (int local = 0; local < 36; ++local) {
          const int slot = slots_[e][local];
          if (slot >= 0) vals[slot] += s * base_ke_[e][local];
        }
      }
      refactorize();
      return;
    }

    for (int e = 0; e < ne; ++e) {
      const double s = stiffness_scale(mesh, mat, alpha, alpha_seed, e, eta);
      const double ds = s - scale_cache_[e];
      if (ds == 0.0) continue;
      scale_cache_[e] = s;
      for (int local = 0; local < 36; ++local) {
        const int slot = slots_[e][local];
        if (slot >= 0) vals[slot] += ds * base_ke_[e][local];
      }
    }

    // Drift of the current matrix relative to the factored one.
    double drift = 0.0;
    for (int e = 0; e < ne; ++e)
      drift += std::abs(scale_cache_[e] - scale_factored_[e]) /
               std::max(scale_factored_[e], 1e-8);
    if (drift > 8.0) refactorize();
  }

  // Refreshes the factorization if it is stale; called when several solves
  // against the current matrix are coming (the plastic fixed point), where
  // direct backsolves beat repeated preconditioned CG.
  void ensure_exact_factor() {
    if (scale_factored_ != scale_cache_) refactorize();
  }

  // Solves for the interior displacement given boundary values (full-length
  // vector, only Dirichlet entries read) and the current plastic strain.
  // Returns the full-length displacement vector. The factorization (exact or
  // stale-as-preconditioner) guarantees residual <= lin_tol * |rhs|. An
  // optional full-length warm start (the previous displacement) shortens the
  // iteration when the matrix moved only a little.
  Eigen::VectorXd solve(const Mesh& mesh, const MaterialField& mat,
                        const Eigen::VectorXd& alpha, const Eigen::VectorXd& alpha_seed,
                        const std::vector<PlasticPointState>& plastic,
                        const Eigen::VectorXd& u_bc, double eta, double lin_tol,
                        const Eigen::VectorXd* warm_start = nullptr) {
    rhs_.setZero();

    // Initial-strain force from the (trace-free) plastic strain.
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const SymTensor& ep = plastic[e].eps_p;
      if (ep.xx == 0.0 && ep.yy == 0.0 && ep.xy == 0.0) continue;
      const auto& t = mesh.elements[e];
      const auto& g = mesh.grad_ops[e];
      const double two_mu =
          2.0 * mat.lame[e].mu * mesh.element_area[e] * scale_cache_[e];
      for (int a = 0; a < 3; ++a) {
        const int rx = dofs_.free_index[2 * t[a]];
        const int ry = dofs_.free_index[2 * t[a] + 1];
        if (rx >= 0) rhs_[rx] += two_mu * (ep.xx * g[a].x + ep.xy * g[a].y);
        if (ry >= 0) rhs_[ry] += two_mu * (ep.xy * g[a].x + ep.yy * g[a].y);
      }
    }

    // Lift of the Dirichlet data.
    for (const int e : boundary_elements_) {
      const auto& t = mesh.elements[e];
      const double s = scale_cache_[e];
      for (int a = 0; a < 3; ++a)
        for (int i = 0; i < 2; ++i) {
          const int row = dofs_.free_index[2 * t[a] + i];
          if (row < 0) continue;
          double lift = 0.0;
          for (int b = 0; b < 3; ++b)
            for (int j = 0; j < 2; ++j) {
              if (dofs_.free_index[2 * t[b] + j] >= 0) continue;
              lift += base_ke_[e][(2 * a + i) * 6 + 2 * b + j] * u_bc[2 * t[b] + j];
            }
          rhs_[row] -= s * lift;
        }
    }

    const double rhs_norm = rhs_.norm();
    const bool factor_current = scale_factored_ == scale_cache_;

    Eigen::VectorXd x;
    if (factor_current) {
      x = ldlt_.solve(rhs_);
    } else {
      // Stale factorization: preconditioned CG on the current K, warm
      // started from the previous displacement when available.
      if (warm_start) {
        x.resize(dofs_.num_free);
        for (int s = 0; s < dofs_.num_free; ++s) x[s] = (*warm_start)[dofs_.free_dofs[s]];
      } else {
        x = ldlt_.solve(rhs_);
      }
      Eigen::VectorXd r = rhs_ - K_ * x;
      if (r.norm() > lin_tol * rhs_norm + 1e-300) {
        Eigen::VectorXd z = ldlt_.solve(r);
        Eigen::VectorXd p = z;
        double rz = r.dot(z);
        bool ok = false;
        for (int it = 0; it < 40; ++it) {
          const Eigen::VectorXd Kp = K_ * p;
          const double pKp = p.dot(Kp);
          if (pKp <= 0.0) break;
          const double step = rz / pKp;
          x += step * p;
          r -= step * Kp;
          if (r.norm() <= 0.5 * lin_tol * rhs_norm) {
            ok = true;
            break;
          }
          z = ldlt_.solve(r);
          const double rz_new = r.dot(z);
          p = z + (rz_new / rz) * p;
          rz = rz_new;
        }
        if (!ok) {  // perturbation too large for the stale factor
          refactorize();
          x = ldlt_.solve(rhs_);
        }
      }
    }

    const double res = (K_ * x - rhs_).norm();
    if (res > lin_tol * rhs_norm + 1e-14)
      throw std::runtime_error("solve_displacement: residual " + std::to_string(res) +
                               " exceeds tolerance");

    Eigen::VectorXd u = u_bc;
    for (int s = 0; s < dofs_.num_free; ++s) u[dofs_.free_dofs[s]] = x[s];
    return u;
  }

  const Eigen::SparseMatrix<double>& matrix() const { return K_; }

 private:
  void refactorize() {
    ldlt_.factorize(K_);
    if (ldlt_.info() != Eigen::Success)
      throw std::runtime_error("solve_displacement: factorization failed");
    scale_factored_ = scale_cache_;
  }

  int value_slot(int row, int col) const {
    const auto* outer = K_.outerIndexPtr();
    const auto* inner = K_.innerIndexPtr();
    for (int k = outer[col]; k < outer[col + 1]; ++k)
      if (inner[k] == row) return k;
    throw std::logic_error("DisplacementSystem: missing pattern entry");
  }

  DofMap dofs_;
  Eigen::SparseMatrix<double> K_;
  std::vector<std::array<double, 36>> base_ke_;
  std::vector<std::array<std::int32_t, 36>> slots_;
  std::vector<int> boundary_elements_;
  std::vector<double> scale_cache_;
  std::vector<double> scale_factored_;
  bool bound_ = false;
  Eigen::VectorXd rhs_;
  SparseFactorization ldlt_;
};

// -------------------------------------------------------------------------
// Damage block: quadratic form of the AT1 energy at fixed (u, eps_p) over
// the damage-active nodes (nodes touching at least one damageable element).
// All other nodes keep their seeded values and never enter the solve.
// -------------------------------------------------------------------------

struct DamageMap {
  std::vector<std::int32_t> unknown_index;  // N entries, -1 for frozen nodes
  std::vector<std::int32_t> unknown_nodes;
  int num_unknown = 0;
};

inline DamageMap make_damage_map(const Mesh& mesh, const MaterialField& mat) {
  DamageMap map;
  map.unknown_index.assign(mesh.num_nodes(), -1);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    if (!mat.damageable[e]) continue;
    for (const int n : mesh.elements[e]) map.unknown_index[n] = 0;
  }
  for (int n = 0; n < mesh.num_nodes(); ++n) {
    if (map.unknown_index[n] == 0) {
      map.unknown_index[n] = map.num_unknown++;
      map.unknown_nodes.push_back(n);
    } else {
      map.unknown_index[n] = -1;
    }
  }
  return map;
}

class DamageSystem {
 public:
  DamageSystem(const Mesh& mesh, const MaterialField& mat, const DamageMap& map)
      : map_(map) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(mesh.num_elements() * 9);
    for (int e = 0; e < mesh.num_elements(); ++e) {
      if (!mat.damageable[e]) continue;
      const auto& t = mesh.elements[e];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          trip.emplace_back(map.unknown_index[t[a]], map.unknown_index[t[b]], 0.0);
    }
    const int n = map.num_unknown;
    H_.resize(n, n);
    H_.setFromTriplets(trip.begin(), trip.end());
    H_.makeCompressed();

    slots_.assign(mesh.num_elements(), {-1, -1, -1, -1, -1, -1, -1, -1, -1});
    for (int e = 0; e < mesh.num_elements(); ++e) {
      if (!mat.damageable[e]) continue;
      const auto& t = mesh.elements[e];
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          slots_[e][3 * a + b] =
              value_slot(map.unknown_index[t[a]], map.unknown_index[t[b]]);
    }
    c_.resize(n);
  }

  // Assembles E(alpha) = 1/2 alpha' H alpha + c' alpha + const, where the
  // driving force per element is h_e = psi_e + sigma0 p (cumulative).
  void assemble(const Mesh& mesh, const MaterialField& mat,
                const Eigen::VectorXd& u, const std::vector<PlasticPointState>& plastic,
                double ell) {
    double* vals = H_.valuePtr();
    std::fill(vals, vals + H_.nonZeros(), 0.0);
    c_.setZero();

    for (int e = 0; e < mesh.num_elements(); ++e) {
      if (!mat.damageable[e]) continue;
      const auto& t = mesh.elements[e];
      const auto& g = mesh.grad_ops[e];
      const double area = mesh.element_area[e];
      const SymTensor eps = element_strain(mesh, u, e);
      const double h_e = elastic_energy_density(eps, plastic[e].eps_p, mat.lame[e]) +
                         mat.props[e].sigma0 * plastic[e].p;
      const double gc = mat.props[e].Gc;

      const double drive_diag = area * 2.0 * h_e / 9.0;
      const double grad_coef = area * 0.75 * gc * ell;
      const double lin = area * (-2.0 * h_e / 3.0 + gc / (8.0 * ell));

      for (int a = 0; a < 3; ++a) {
        c_[map_.unknown_index[t[a]]] += lin;
        for (int b = 0; b < 3; ++b)
          vals[slots_[e][3 * a + b]] +=
              drive_diag + grad_coef * (g[a].x * g[b].x + g[a].y * g[b].y);
      }
    }
  }

  const Eigen::SparseMatrix<double>& hessian() const { return H_; }
  const Eigen::VectorXd& linear() const { return c_; }
  const DamageMap& map() const { return map_; }

 private:
  int value_slot(int row, int col) const {
    const auto* outer = H_.outerIndexPtr();
    const auto* inner = H_.innerIndexPtr();
    for (int k = outer[col]; k < outer[col + 1]; ++k)
      if (inner[k] == row) return k;
    throw std::logic_error("DamageSystem: missing pattern entry");
  }

  DamageMap map_;
  Eigen::SparseMatrix<double> H_;
  std::vector<std::array<std::int32_t, 9>> slots_;
  Eigen::VectorXd c_;
};

}  // namespace efftough

#endif
