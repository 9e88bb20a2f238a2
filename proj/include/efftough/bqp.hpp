#ifndef EFFTOUGH_BQP_HPP
#define EFFTOUGH_BQP_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <vector>

namespace efftough {

struct BqpResult {
  Eigen::VectorXd x;
  double kkt_residual = 0.0;
  int outer_iterations = 0;
  int cg_iterations = 0;
  bool converged = false;
};

// Bound-constrained convex QP
//
//   min 1/2 x' H x + c' x   s.t.  lo <= x <= hi
//
// solved with an active-set outer loop around a Jacobi-preconditioned CG on
// the free variables. Steps that would leave the box are truncated at the
// first bound hit, which transfers the blocking variables to the active set.
// The projected-gradient KKT residual is the convergence measure:
// free components must have vanishing gradient, bound components a gradient
// pointing out of the box.
class BoundConstrainedQP {
 public:
  explicit BoundConstrainedQP(int max_outer = 800, int max_cg = 2000)
      : max_outer_(max_outer), max_cg_(max_cg) {}

  BqpResult solve(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& c,
                  const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                  const Eigen::VectorXd& x0, double tol) const {
    const int n = static_cast<int>(c.size());
    BqpResult res;
    res.x = x0.cwiseMax(lo).cwiseMin(hi);
    if (n == 0) {
      res.converged = true;
      return res;
    }

    Eigen::VectorXd g(n), p(n), Hp(n), r(n), z(n), diag(n);
    for (int i = 0; i < n; ++i) {
      const double d = H.coeff(i, i);
      diag[i] = d > 0.0 ? d : 1.0;
    }

    const double bound_eps = 1e-12;
    std::vector<char> free_mask(n, 1);

    for (int outer = 0; outer < max_outer_; ++outer) {
      res.outer_iterations = outer + 1;
      g.noalias() = H * res.x + c;

      // KKT residual and free set.
      double kkt = 0.0;
      for (int i = 0; i < n; ++i) {
        const bool at_lo = res.x[i] <= lo[i] + bound_eps;
        const bool at_hi = res.x[i] >= hi[i] - bound_eps;
        double viol;
        if (at_lo && g[i] >= 0.0) {
          viol = 0.0;
          free_mask[i] = 0;
        } else if (at_hi && g[i] <= 0.0) {
          viol = 0.0;
          free_mask[i] = 0;
        } else {
          viol = std::abs(g[i]);
          free_mask[i] = 1;
        }
        kkt = std::max(kkt, viol);
      }
      res.kkt_residual = kkt;
      if (kkt <= tol) {
        res.converged = true;
        return res;
      }

      // Projected Cauchy steps: clamping the gradient step can activate many
      // bounds at once, so the active set settles in a few sweeps even when a
      // whole crack front reaches alpha = 1 within one solve.
      for (int sweep = 0; sweep < 2; ++sweep) {
        for (int i = 0; i < n; ++i) p[i] = free_mask[i] ? -g[i] : 0.0;
        const double gg = p.squaredNorm();
        if (gg == 0.0) break;
        Hp.noalias() = H * p;
        const double gHg = p.dot(Hp);
        if (gHg <= 0.0) break;
        const double step = gg / gHg;
        res.x = (res.x + step * p).cwiseMax(lo).cwiseMin(hi);
        g.noalias() = H * res.x + c;
        for (int i = 0; i < n; ++i) {
          const bool at_lo = res.x[i] <= lo[i] + bound_eps;
          const bool at_hi = res.x[i] >= hi[i] - bound_eps;
          free_mask[i] = !((at_lo && g[i] >= 0.0) || (at_hi && g[i] <= 0.0));
        }
      }

      // CG on the free set: H_FF dx = -g_F.
      double g0sq = 0.0;
      for (int i = 0; i < n; ++i) {
        r[i] = free_mask[i] ? -g[i] : 0.0;
        g0sq += r[i] * r[i];
      }
      const double cg_tol_sq = std::max(1e-24, 1e-6 * g0sq);

      Eigen::VectorXd dx = Eigen::VectorXd::Zero(n);
      for (int i = 0; i < n; ++i) z[i] = free_mask[i] ? r[i] / diag[i] : 0.0;
      p = z;
      double rz = r.dot(z);

      int cg_it = 0;
      for (; cg_it < max_cg_; ++cg_it) {
        if (r.squaredNorm() <= cg_tol_sq) break;
        Hp.noalias() = H * p;
        for (int i = 0; i < n; ++i)
          if (!free_mask[i]) Hp[i] = 0.0;
        const double pHp = p.dot(Hp);
        if (pHp <= 0.0) break;  // semi-definite guard; fall back on current dx
        const double step = rz / pHp;
        dx += step * p;
        r -= step * Hp;
        for (int i = 0; i < n; ++i) z[i] = free_mask[i] ? r[i] / diag[i] : 0.0;
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
        if (rz <= 0.0) break;
      }
      res.cg_iterations += cg_it;

      // Longest feasible fraction of the CG step.
      double theta = 1.0;
      for (int i = 0; i < n; ++i) {
        if (dx[i] > 0.0)
          theta = std::min(theta, (hi[i] - res.x[i]) / dx[i]);
        else if (dx[i] < 0.0)
          theta = std::min(theta, (lo[i] - res.x[i]) / dx[i]);
      }
      theta = std::max(theta, 0.0);

      const double descent = dx.dot(g);
      if (descent >= 0.0 || dx.squaredNorm() == 0.0 || theta <= 1e-16) {
        // CG produced no usable direction; take a projected gradient step.
        double gg = 0.0, gHg = 0.0;
        for (int i = 0; i < n; ++i) p[i] = free_mask[i] ? -g[i] : 0.0;
        gg = p.squaredNorm();
        if (gg == 0.0) continue;  // re-evaluate KKT at the top
        Hp.noalias() = H * p;
        for (int i = 0; i < n; ++i)
          if (!free_mask[i]) Hp[i] = 0.0;
        gHg = p.dot(Hp);
        const double step = gHg > 0.0 ? gg / gHg : 1.0;
        res.x = (res.x + step * p).cwiseMax(lo).cwiseMin(hi);
        continue;
      }

      res.x = (res.x + theta * dx).cwiseMax(lo).cwiseMin(hi);
    }
    return res;
  }

 private:
  int max_outer_;
  int max_cg_;
};

}  // namespace efftough

#endif
