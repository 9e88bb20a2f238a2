#include <gtest/gtest.h>

#include <random>

#include "efftough/constitutive.hpp"
#include "efftough/verify.hpp"

using namespace efftough;

TEST(LameParameters, ClosedForm) {
  const auto lp = lame_parameters(1.0, 0.2);
  EXPECT_NEAR(lp.mu, 0.416667, 1e-6);
  EXPECT_NEAR(lp.lambda, 0.277778, 1e-6);
}

TEST(LameParameters, ZeroPoissonDecouples) {
  const auto lp = lame_parameters(1.0, 0.0);
  EXPECT_DOUBLE_EQ(lp.lambda, 0.0);
  EXPECT_DOUBLE_EQ(lp.mu, 0.5);
}

TEST(LameParameters, LinearInYoungsModulus) {
  const auto a = lame_parameters(1.0, 0.2);
  const auto b = lame_parameters(2.0, 0.2);
  EXPECT_DOUBLE_EQ(b.lambda, 2.0 * a.lambda);
  EXPECT_DOUBLE_EQ(b.mu, 2.0 * a.mu);
}

TEST(LameParameters, RejectsIncompressibleLimit) {
  EXPECT_THROW(lame_parameters(1.0, 0.5), std::invalid_argument);
  EXPECT_THROW(lame_parameters(-1.0, 0.2), std::invalid_argument);
}

TEST(ElasticEnergy, ZeroAtPlasticStrain) {
  const SymTensor eps{0.3, -0.1, 0.0, 0.2};
  PhaseProperties props;
  EXPECT_DOUBLE_EQ(elastic_energy_density(eps, eps, props), 0.0);
}

TEST(ElasticEnergy, UniaxialClosedForm) {
  // E=1, nu=0: lambda=0, mu=1/2, psi = mu eps_xx^2 = 0.5.
  PhaseProperties props;
  props.E = 1.0;
  props.nu = 0.0;
  const SymTensor eps{1.0, 0.0, 0.0, 0.0};
  EXPECT_NEAR(elastic_energy_density(eps, SymTensor{}, props), 0.5, 1e-14);
}

TEST(ElasticEnergy, QuadraticScaling) {
  PhaseProperties props;
  const SymTensor eps{0.2, -0.05, 0.0, 0.1};
  const double e1 = elastic_energy_density(eps, SymTensor{}, props);
  const double e2 = elastic_energy_density(2.0 * eps, SymTensor{}, props);
  EXPECT_NEAR(e2, 4.0 * e1, 1e-14 * e2);
}

TEST(DegradedStress, DegradationFactors) {
  PhaseProperties props;
  const SymTensor eps{0.1, -0.02, 0.0, 0.03};
  const SymTensor plain = degraded_stress(eps, SymTensor{}, 0.0, 0.0, props);
  const SymTensor bare = isotropic_stress(lame_parameters(props), eps);
  EXPECT_NEAR(plain.xx, bare.xx, 1e-15);
  EXPECT_NEAR(plain.xy, bare.xy, 1e-15);

  const SymTensor broken = degraded_stress(eps, SymTensor{}, 1.0, 1e-6, props);
  EXPECT_NEAR(broken.xx, 1e-6 * bare.xx, 1e-18);

  const SymTensor half = degraded_stress(eps, SymTensor{}, 0.5, 0.0, props);
  EXPECT_NEAR(half.yy, 0.25 * bare.yy, 1e-16);
}

TEST(ReturnMap, ElasticStepLeavesStateUntouched) {
  PhaseProperties props;  // sigma0 = 0.625, far above the trial stress below
  const SymTensor eps{1e-4, 0.0, 0.0, 5e-5};
  PlasticPointState prev;
  prev.p = 0.01;
  const PlasticPointState next = return_map(eps, prev, 0.0, 1e-6, props);
  EXPECT_DOUBLE_EQ(next.p, prev.p);
  EXPECT_DOUBLE_EQ(next.eps_p.xx, prev.eps_p.xx);
  EXPECT_DOUBLE_EQ(next.eps_p.xy, prev.eps_p.xy);
}

TEST(ReturnMap, PureShearMatchesBruteForceOracle) {
  PhaseProperties props;
  props.sigma0 = 0.01;
  const SymTensor eps{0.0, 0.0, 0.0, 0.02};  // trial well beyond yield
  PlasticPointState prev;

  const PlasticPointState next = return_map(eps, prev, 0.0, 0.0, props);
  ASSERT_GT(next.p, 0.0);

  const double gamma = verify_detail::golden_section_flow(eps, prev, 0.0, 0.0, props);
  const double dp_oracle = std::sqrt(2.0 / 3.0) * gamma;
  EXPECT_NEAR(next.p, dp_oracle, 1e-8 * dp_oracle);
}

TEST(ReturnMap, FullyBrokenAbsorbsDeviatoricStrain) {
  PhaseProperties props;
  const double eta = 1e-6;
  const SymTensor eps{0.01, -0.004, 0.0, 0.006};
  PlasticPointState prev;

  const PlasticPointState next = return_map(eps, prev, 1.0, eta, props);
  ASSERT_GT(next.p, 0.0);

  // B = 0: the plastic strain swallows the whole deviatoric strain and the
  // residual deviatoric stress vanishes.
  const SymTensor resid = (eps - next.eps_p).deviator();
  EXPECT_LE(norm(resid), 1e-12);
  EXPECT_NEAR(std::abs(next.eps_p.trace()), 0.0, 1e-15);
}

TEST(ReturnMap, RejectsNonPositiveStiffnessScale) {
  PhaseProperties props;
  EXPECT_THROW(return_map(SymTensor{1, 0, 0, 0}, PlasticPointState{}, 1.0, 0.0, props),
               std::invalid_argument);
}

TEST(ReturnMap, RandomSamplesAgainstOracle) {
  const VerifyCheck check = check_return_map_oracle(250, 1e-8);
  EXPECT_TRUE(check.pass) << check.detail;
}

TEST(DerivedQuantities, NumericalToughness) {
  EXPECT_NEAR(numerical_toughness(1.0, 0.1, 0.25), 1.15, 1e-14);
  EXPECT_DOUBLE_EQ(numerical_toughness(1.0, 0.0, 0.25), 1.0);
  EXPECT_NEAR(numerical_toughness(2.0, 0.1, 0.25), 2.30, 1e-14);
}

TEST(DerivedQuantities, NucleationStressAndDuctility) {
  const double sigma_c = nucleation_stress(1.0, 0.2, 1.0, 0.25);
  EXPECT_NEAR(sigma_c, 1.25, 1e-12);
  EXPECT_NEAR(ductility_ratio(sigma_c, 0.625), 2.0, 1e-12);

  const double sigma_c2 = nucleation_stress(1.0, 0.2, 2.0, 0.25);
  EXPECT_NEAR(ductility_ratio(sigma_c2, 0.625), 2.8284, 1e-3);
  EXPECT_NEAR(ductility_ratio(sigma_c2, 0.883), 2.0, 0.01);
}
