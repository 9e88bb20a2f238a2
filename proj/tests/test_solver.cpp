#include <gtest/gtest.h>

#include <Eigen/Dense>

#include <numbers>
#include <random>

#include "efftough/bqp.hpp"
#include "efftough/loading.hpp"
#include "efftough/solver.hpp"
#include "efftough/verify.hpp"

using namespace efftough;

namespace {

// Homogeneous elastic material over the whole rectangle (the pad ring is the
// same material, so tests can treat the body as uniform).
struct Fixture {
  Mesh mesh;
  MaterialField mat;
  SolverWorkspace ws;
  State state;
  double ell = 0.5;
  double eta = 1e-6;

  explicit Fixture(double L = 8.0, double H = 6.0, double delta = 0.25,
                   MeshKind kind = MeshKind::structured,
                   PhaseProperties props = {1.0, 0.2, 1.0, kElasticSigma0},
                   double pad = 2.0)
      : mesh(generate_mesh(L, H, delta, kind, 4)),
        mat(build_material_field(mesh, make_spec(props, pad))),
        ws(mesh, mat),
        state(make_state(mesh)) {}

  static LayerSpec make_spec(PhaseProperties props, double pad) {
    LayerSpec spec;
    spec.theta = 0.0;
    spec.tau = 2.0;
    spec.phase1 = spec.phase2 = props;
    spec.pad_width = pad;
    return spec;
  }

  std::vector<Vec2> bc_from_field(const std::function<Vec2(const Vec2&)>& field) const {
    std::vector<Vec2> bc(mesh.boundary_nodes.size());
    for (std::size_t k = 0; k < bc.size(); ++k)
      bc[k] = field(mesh.nodes[mesh.boundary_nodes[k]]);
    return bc;
  }
};

}  // namespace

TEST(SolveDisplacement, RigidTranslationIsExact) {
  Fixture f;
  SolverSettings settings;
  const Vec2 shift{0.3, -0.2};
  const auto bc = f.bc_from_field([&](const Vec2&) { return shift; });
  f.state.u = solve_displacement(f.state, f.mesh, f.mat, bc, f.eta, settings, f.ws);

  for (int n = 0; n < f.mesh.num_nodes(); ++n) {
    EXPECT_NEAR(f.state.u[2 * n], shift.x, 1e-10);
    EXPECT_NEAR(f.state.u[2 * n + 1], shift.y, 1e-10);
  }
  const EnergyBreakdown en = assemble_total_energy(f.state, f.mesh, f.mat, f.ell, f.eta);
  EXPECT_NEAR(en.total, 0.0, 1e-12);
}

TEST(SolveDisplacement, ReproducesLinearField) {
  Fixture f;
  SolverSettings settings;
  const double s = 0.01, nu = 0.2;
  const double lateral = -nu / (1.0 - nu) * s;
  auto field = [&](const Vec2& p) { return Vec2{s * p.x, lateral * p.y}; };
  const auto bc = f.bc_from_field(field);
  const Eigen::VectorXd u =
      solve_displacement(f.state, f.mesh, f.mat, bc, f.eta, settings, f.ws);

  for (int n = 0; n < f.mesh.num_nodes(); ++n) {
    const Vec2 expect = field(f.mesh.nodes[n]);
    EXPECT_NEAR(u[2 * n], expect.x, 1e-8);
    EXPECT_NEAR(u[2 * n + 1], expect.y, 1e-8);
  }
}

TEST(SolveDisplacement, MatchesDenseOracleUnderKField) {
  // Tiny mesh, boundary data from the translating opening field; compare the
  // sparse-Cholesky path against an independent dense assembly and solve.
  Fixture f(2.0, 1.0, 0.25, MeshKind::structured, {1.0, 0.2, 1.0, kElasticSigma0}, 0.3);
  ASSERT_LE(f.mesh.num_nodes(), 200);
  SolverSettings settings;

  SurfingParams sp;
  sp.x0 = 1.0;
  sp.y0 = 0.5;
  const auto bc = f.bc_from_field(
      [&](const Vec2& p) { return surfing_displacement(p, 0.0, sp); });
  const Eigen::VectorXd u_sparse =
      solve_displacement(f.state, f.mesh, f.mat, bc, f.eta, settings, f.ws);

  // Dense oracle: element stiffness by B' D B, Dirichlet rows eliminated.
  const int ndof = 2 * f.mesh.num_nodes();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ndof, ndof);
  for (int e = 0; e < f.mesh.num_elements(); ++e) {
    const auto& t = f.mesh.elements[e];
    const auto& g = f.mesh.grad_ops[e];
    const double scale = f.mesh.element_area[e] * (f.eta + 1.0);
    const double lam = f.mat.lame[e].lambda, mu = f.mat.lame[e].mu;
    Eigen::Matrix3d D;
    D << lam + 2 * mu, lam, 0, lam, lam + 2 * mu, 0, 0, 0, mu;
    Eigen::Matrix<double, 3, 6> B = Eigen::Matrix<double, 3, 6>::Zero();
    for (int a = 0; a < 3; ++a) {
      B(0, 2 * a) = g[a].x;
      B(1, 2 * a + 1) = g[a].y;
      B(2, 2 * a) = g[a].y;
      B(2, 2 * a + 1) = g[a].x;
    }
    const Eigen::Matrix<double, 6, 6> ke = scale * B.transpose() * D * B;
    for (int a = 0; a < 6; ++a)
      for (int b = 0; b < 6; ++b)
        K(2 * t[a / 2] + a % 2, 2 * t[b / 2] + b % 2) += ke(a, b);
  }

  Eigen::VectorXd u_bc = Eigen::VectorXd::Zero(ndof);
  std::vector<char> fixed(ndof, 0);
  for (std::size_t k = 0; k < f.mesh.boundary_nodes.size(); ++k) {
    const int n = f.mesh.boundary_nodes[k];
    fixed[2 * n] = fixed[2 * n + 1] = 1;
    u_bc[2 * n] = bc[k].x;
    u_bc[2 * n + 1] = bc[k].y;
  }
  std::vector<int> free_dofs;
  for (int d = 0; d < ndof; ++d)
    if (!fixed[d]) free_dofs.push_back(d);

  const int nf = static_cast<int>(free_dofs.size());
  Eigen::MatrixXd Kff(nf, nf);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  for (int i = 0; i < nf; ++i) {
    for (int j = 0; j < nf; ++j) Kff(i, j) = K(free_dofs[i], free_dofs[j]);
    double lift = 0.0;
    for (int d = 0; d < ndof; ++d)
      if (fixed[d]) lift += K(free_dofs[i], d) * u_bc[d];
    rhs[i] = -lift;
  }
  const Eigen::VectorXd x = Kff.ldlt().solve(rhs);
  Eigen::VectorXd u_dense = u_bc;
  for (int i = 0; i < nf; ++i) u_dense[free_dofs[i]] = x[i];

  State dense_state = make_state(f.mesh);
  dense_state.u = u_dense;
  State sparse_state = make_state(f.mesh);
  sparse_state.u = u_sparse;
  const double e_dense =
      assemble_total_energy(dense_state, f.mesh, f.mat, f.ell, f.eta).total;
  const double e_sparse =
      assemble_total_energy(sparse_state, f.mesh, f.mat, f.ell, f.eta).total;
  EXPECT_NEAR(e_sparse, e_dense, 1e-8 * std::abs(e_dense));
}

TEST(AssembleTotalEnergy, ZeroFieldsGiveZero) {
  Fixture f;
  const EnergyBreakdown en = assemble_total_energy(f.state, f.mesh, f.mat, f.ell, f.eta);
  EXPECT_DOUBLE_EQ(en.total, 0.0);
}

TEST(AssembleTotalEnergy, UniformStrainClosedForm) {
  Fixture f;
  const double s = 0.02;
  for (int n = 0; n < f.mesh.num_nodes(); ++n) f.state.u[2 * n] = s * f.mesh.nodes[n].x;

  const auto lp = f.mat.lame[0];
  const double psi = lp.mu * s * s + 0.5 * lp.lambda * s * s;
  const EnergyBreakdown en = assemble_total_energy(f.state, f.mesh, f.mat, f.ell, f.eta);
  EXPECT_NEAR(en.elastic, (1.0 + f.eta) * psi * 8.0 * 6.0, 1e-10);
  EXPECT_DOUBLE_EQ(en.surface, 0.0);
  EXPECT_DOUBLE_EQ(en.plastic, 0.0);
}

TEST(AssembleTotalEnergy, SharpBandMatchesIndependentSum) {
  // alpha = 1 on a one-element-wide vertical band: compare the surface term
  // against an independently coded sum.
  Fixture f;
  const double x_lo = 3.875, x_hi = 4.125;
  for (int n = 0; n < f.mesh.num_nodes(); ++n)
    if (f.mesh.nodes[n].x > x_lo && f.mesh.nodes[n].x < x_hi) f.state.alpha[n] = 1.0;

  double surface_oracle = 0.0;
  for (int e = 0; e < f.mesh.num_elements(); ++e) {
    if (!f.mat.damageable[e]) continue;
    const auto& t = f.mesh.elements[e];
    const double abar =
        (f.state.alpha[t[0]] + f.state.alpha[t[1]] + f.state.alpha[t[2]]) / 3.0;
    double gx = 0.0, gy = 0.0;
    for (int a = 0; a < 3; ++a) {
      gx += f.state.alpha[t[a]] * f.mesh.grad_ops[e][a].x;
      gy += f.state.alpha[t[a]] * f.mesh.grad_ops[e][a].y;
    }
    surface_oracle += f.mesh.element_area[e] * (3.0 * f.mat.props[e].Gc / 8.0) *
                      (abar / f.ell + f.ell * (gx * gx + gy * gy));
  }
  const EnergyBreakdown en = assemble_total_energy(f.state, f.mesh, f.mat, f.ell, f.eta);
  EXPECT_GT(en.surface, 0.0);
  EXPECT_NEAR(en.surface, surface_oracle, 1e-12 * surface_oracle);
}

TEST(UpdatePlasticity, BelowYieldLeavesStateUnchanged) {
  Fixture f(8.0, 6.0, 0.25, MeshKind::structured, {1.0, 0.2, 1.0, 0.5});
  for (int n = 0; n < f.mesh.num_nodes(); ++n)
    f.state.u[2 * n] = 1e-4 * f.mesh.nodes[n].x;
  const auto start = f.state.plastic;
  const double dp = update_plasticity(f.state, f.mesh, f.mat, start, f.eta);
  EXPECT_DOUBLE_EQ(dp, 0.0);
  for (int e = 0; e < f.mesh.num_elements(); ++e) EXPECT_DOUBLE_EQ(f.state.plastic[e].p, 0.0);
}

TEST(UpdatePlasticity, ElementwiseEqualsDirectReturnMap) {
  Fixture f(8.0, 6.0, 0.25, MeshKind::jittered_delaunay, {1.0, 0.2, 1.0, 0.02});
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int d = 0; d < f.state.u.size(); ++d) f.state.u[d] = 0.01 * unit(rng);

  const auto start = f.state.plastic;
  State copy = f.state;
  update_plasticity(f.state, f.mesh, f.mat, start, f.eta);

  int yielded = 0;
  for (int e = 0; e < f.mesh.num_elements(); ++e) {
    if (!f.mat.damageable[e]) {
      EXPECT_DOUBLE_EQ(f.state.plastic[e].p, 0.0);
      continue;
    }
    const SymTensor eps = element_strain(f.mesh, copy.u, e);
    const double abar = element_alpha(f.mesh, copy.alpha, e);
    const PlasticPointState expect = return_map(eps, start[e], abar, f.eta, f.mat.props[e]);
    EXPECT_DOUBLE_EQ(f.state.plastic[e].p, expect.p);
    EXPECT_DOUBLE_EQ(f.state.plastic[e].eps_p.xy, expect.eps_p.xy);
    if (expect.p > 0.0) ++yielded;
  }
  EXPECT_GT(yielded, 0);
}

TEST(BoundConstrainedQP, SingleVariableClosedForm) {
  // E(a) = s (1-a)^2 psi + c a on [0,1]: minimizer max(0, 1 - c/(2 s psi)).
  for (const double psi : {0.05, 0.5, 5.0}) {
    const double s = 0.7, c = 0.4;
    Eigen::SparseMatrix<double> H(1, 1);
    H.insert(0, 0) = 2.0 * s * psi;
    Eigen::VectorXd lin(1), lo(1), hi(1), x0(1);
    lin[0] = c - 2.0 * s * psi;
    lo[0] = 0.0;
    hi[0] = 1.0;
    x0[0] = 0.0;
    const BqpResult res = BoundConstrainedQP().solve(H, lin, lo, hi, x0, 1e-10);
    ASSERT_TRUE(res.converged);
    const double expect = std::max(0.0, 1.0 - c / (2.0 * s * psi));
    EXPECT_NEAR(res.x[0], expect, 1e-8);
  }
}

TEST(BoundConstrainedQP, RandomProblemsSatisfyKkt) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 40;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) M(i, j) = unit(rng);
    Eigen::MatrixXd A = M.transpose() * M + 0.1 * Eigen::MatrixXd::Identity(n, n);
    Eigen::SparseMatrix<double> H = A.sparseView();
    Eigen::VectorXd c(n), lo(n), hi(n), x0(n);
    for (int i = 0; i < n; ++i) {
      c[i] = unit(rng);
      lo[i] = -0.3;
      hi[i] = 0.4;
      x0[i] = 0.0;
    }
    const BqpResult res = BoundConstrainedQP().solve(H, c, lo, hi, x0, 1e-9);
    ASSERT_TRUE(res.converged);
    const Eigen::VectorXd g = A * res.x + c;
    for (int i = 0; i < n; ++i) {
      if (res.x[i] <= lo[i] + 1e-9)
        EXPECT_GE(g[i], -1e-7);
      else if (res.x[i] >= hi[i] - 1e-9)
        EXPECT_LE(g[i], 1e-7);
      else
        EXPECT_NEAR(g[i], 0.0, 1e-7);
    }
  }
}

TEST(SolveDamage, NoDrivingKeepsAlphaAtZero) {
  Fixture f;
  SolverSettings settings;
  solve_damage(f.state, f.mesh, f.mat, f.ell, settings, f.ws);
  EXPECT_NEAR(f.state.alpha.maxCoeff(), 0.0, 1e-12);
}

TEST(SolveDamage, IrreversibilityBoundIsActive) {
  Fixture f;
  SolverSettings settings;
  const int node = f.ws.damage_map.unknown_nodes[f.ws.damage_map.num_unknown / 2];
  f.state.alpha_lower[node] = 0.3;
  f.state.alpha[node] = 0.3;
  solve_damage(f.state, f.mesh, f.mat, f.ell, settings, f.ws);
  EXPECT_NEAR(f.state.alpha[node], 0.3, 1e-12);
  // Everything else stays at the bound too (no driving anywhere).
  for (const int n : f.ws.damage_map.unknown_nodes)
    EXPECT_GE(f.state.alpha[n], f.state.alpha_lower[n] - 1e-14);
}

TEST(AlternateMinimize, ElasticLowLoadConvergesImmediately) {
  Fixture f;
  SolverSettings settings;
  // Far below both the yield and the damage threshold.
  auto field = [](const Vec2& p) { return Vec2{1e-4 * p.x, 0.0}; };
  std::vector<Vec2> bc(f.mesh.boundary_nodes.size());
  for (std::size_t k = 0; k < bc.size(); ++k)
    bc[k] = field(f.mesh.nodes[f.mesh.boundary_nodes[k]]);

  const AmReport report = alternate_minimize(f.state, f.mesh, f.mat, bc, f.ell,
                                             f.eta, settings, f.ws);
  EXPECT_TRUE(report.converged);
  EXPECT_LE(report.iterations, 2);
  EXPECT_NEAR(f.state.alpha.maxCoeff(), 0.0, 1e-12);
  EXPECT_EQ(report.monotonicity_violations, 0);
}

TEST(AlternateMinimize, EnergyMonotoneUnderCrackDriving) {
  // Plastic material, load high enough to damage and yield.
  Fixture f(8.0, 6.0, 0.25, MeshKind::jittered_delaunay, {1.0, 0.2, 0.02, 0.05});
  SolverSettings settings;
  auto field = [](const Vec2& p) { return Vec2{0.25 * p.x, -0.05 * p.y}; };
  std::vector<Vec2> bc(f.mesh.boundary_nodes.size());
  for (std::size_t k = 0; k < bc.size(); ++k)
    bc[k] = field(f.mesh.nodes[f.mesh.boundary_nodes[k]]);

  const AmReport report = alternate_minimize(f.state, f.mesh, f.mat, bc, f.ell,
                                             f.eta, settings, f.ws);
  EXPECT_TRUE(report.converged);
  EXPECT_EQ(report.monotonicity_violations, 0) << "worst " << report.worst_violation;
  EXPECT_GT(f.state.alpha.maxCoeff(), 0.1);
  double p_max = 0.0;
  for (const auto& ps : f.state.plastic) p_max = std::max(p_max, ps.p);
  EXPECT_GT(p_max, 0.0);
}

TEST(EnergyGradients, MatchFiniteDifferences) {
  const VerifyCheck check = check_energy_gradients(1e-5);
  EXPECT_TRUE(check.pass) << check.detail;
}

TEST(AlternateMinimize, SelfConsistentUnderTighterTolerance) {
  // Stretched notched plate: the converged energy must be insensitive to a
  // 10x tighter stopping tolerance.
  auto run_with_tol = [](double am_tol) {
    Fixture f(8.0, 6.0, 0.25, MeshKind::jittered_delaunay, {1.0, 0.2, 0.02, 0.05});
    SurfingParams sp;
    sp.x0 = 2.5;
    sp.y0 = 3.0;
    seed_initial_crack(f.state, f.mesh, f.ell, sp);
    SolverSettings settings;
    settings.am_tol = am_tol;
    auto field = [](const Vec2& p) { return Vec2{0.0, 0.04 * (p.y - 3.0)}; };
    std::vector<Vec2> bc(f.mesh.boundary_nodes.size());
    for (std::size_t k = 0; k < bc.size(); ++k)
      bc[k] = field(f.mesh.nodes[f.mesh.boundary_nodes[k]]);
    const AmReport report = alternate_minimize(f.state, f.mesh, f.mat, bc, f.ell,
                                               f.eta, settings, f.ws);
    EXPECT_TRUE(report.converged);
    return assemble_total_energy(f.state, f.mesh, f.mat, f.ell, f.eta).total;
  };

  const double e_coarse = run_with_tol(1e-4);
  const double e_fine = run_with_tol(1e-5);
  EXPECT_NEAR(e_coarse, e_fine, 1e-6 * std::max(1.0, std::abs(e_fine)));
}
