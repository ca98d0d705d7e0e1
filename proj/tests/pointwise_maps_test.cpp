#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "holokit/errors.hpp"
#include "holokit/pointwise_maps.hpp"

using namespace holokit;

namespace {

Matrix near_identity(int n, double spread, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = normal(rng);
  return Matrix::Identity(n, n) + spread * r / r.norm();
}

const std::vector<std::pair<GroupTag, int>> kModels{
    {GroupTag::Spin7, 0}, {GroupTag::G2, 0}, {GroupTag::SU, 2}, {GroupTag::SU, 3}, {GroupTag::Sp, 1}, {GroupTag::Sp, 2}};

}  // namespace

TEST(InducedMetric, ModelsInduceTheEuclideanMetric) {
  for (const auto& [tag, p] : kModels) {
    const GStructureValue chi = model_form(tag, p);
    const int n = chi.ambient_dimension();
    EXPECT_LT((induced_metric(chi).entries() - Matrix::Identity(n, n)).norm(), 1e-12) << to_string(tag) << p;
  }
}

TEST(InducedMetric, Equivariance) {
  std::mt19937_64 rng(31);
  for (const auto& [tag, p] : kModels) {
    const GStructureValue chi0 = model_form(tag, p);
    const int n = chi0.ambient_dimension();
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix A = near_identity(n, 0.2, rng);
      const Matrix g = induced_metric(pullback(EndomorphismValue(A), chi0)).entries();
      const Matrix want = A.transpose() * A;
      EXPECT_LT((g - want).norm() / want.norm(), 1e-8) << to_string(tag) << p;
    }
  }
}

TEST(InducedMetric, ScaledAssociativeForm) {
  const GStructureValue phi = model_form(GroupTag::G2);
  const double s = 1.3;
  const GStructureValue scaled = phi.with_stacked(s * s * s * phi.stacked());
  EXPECT_LT((induced_metric(scaled).entries() - s * s * Matrix::Identity(7, 7)).norm(), 1e-10);
}

TEST(InducedMetric, OffOrbitInputIsRejected) {
  const GStructureValue phi = model_form(GroupTag::G2);
  EXPECT_THROW(induced_metric(phi.with_stacked(Vector::Zero(35))), OrbitError);
  const GStructureValue psi = model_form(GroupTag::Spin7);
  Vector v = psi.stacked();
  v[0] += 0.7;  // leaves the 43-dimensional orbit
  EXPECT_THROW(induced_metric(psi.with_stacked(v)), OrbitError);
}

TEST(OrbitSolve, RecoversTheTransformUpToTheStabilizer) {
  std::mt19937_64 rng(37);
  const GStructureValue chi0 = model_form(GroupTag::SU, 3);
  const Matrix A = near_identity(6, 0.3, rng);
  const GStructureValue chi = pullback(EndomorphismValue(A), chi0);
  const OrbitSolveResult r = solve_orbit(chi);
  ASSERT_TRUE(r.converged);
  EXPECT_LT((pullback(r.transform, chi0).stacked() - chi.stacked()).norm(), 1e-10);
}

TEST(MetricDerivative, Examples) {
  const GStructureValue phi = model_form(GroupTag::G2);
  const GStructureValue three_phi = phi.with_stacked(3.0 * phi.stacked());
  EXPECT_LT((dm(phi, three_phi).entries() - 2.0 * Matrix::Identity(7, 7)).norm(), 1e-12);

  std::mt19937_64 rng(41);
  const Matrix m = near_identity(8, 1.0, rng);
  const GStructureValue psi = model_form(GroupTag::Spin7);
  const GStructureValue rotation = gl_action(EndomorphismValue(m - m.transpose()), psi);
  EXPECT_LT(dm(psi, rotation).entries().norm(), 1e-12);
}

TEST(MetricDerivative, MatchesFiniteDifferencesOfTheMetricMap) {
  std::mt19937_64 rng(43);
  std::normal_distribution<double> normal;
  for (const auto& [tag, p] : kModels) {
    const GStructureValue chi0 = model_form(tag, p);
    const int n = chi0.ambient_dimension();
    const GStructureValue chi = pullback(EndomorphismValue(near_identity(n, 0.2, rng)), chi0);
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    const double t = 1e-5;
    const Matrix plus = induced_metric(pullback(EndomorphismValue((t * a).exp()), chi)).entries();
    const Matrix minus = induced_metric(pullback(EndomorphismValue((-t * a).exp()), chi)).entries();
    const Matrix fd = (plus - minus) / (2 * t);
    const Matrix analytic = dm(chi, gl_action(EndomorphismValue(a), chi)).entries();
    EXPECT_LT((fd - analytic).norm(), 1e-6 * (1 + fd.norm())) << to_string(tag) << p;
  }
}

TEST(MetricDerivative, RankIsSurjective) {
  for (const auto& [tag, p] : kModels) {
    const int n = ambient_dimension(tag, p);
    EXPECT_EQ(metric_derivative_rank(model_form(tag, p)), n * (n + 1) / 2) << to_string(tag) << p;
  }
}

TEST(MetricDerivative, NonTangentInputIsRejected) {
  const GStructureValue psi = model_form(GroupTag::Spin7);
  Vector v = Vector::Zero(70);
  v[0] = 1.0;  // dx^{1234} alone is not in E_psi
  EXPECT_THROW(dm(psi, psi.with_stacked(v)), TangentSpaceError);
}

TEST(OrbitMembership, Signs) {
  const FormValue phi = model_form(GroupTag::G2).form(0);
  EXPECT_EQ(orbit_membership(phi), OrbitSign::Positive);
  EXPECT_EQ(orbit_membership(-phi), OrbitSign::NonPositive);
  EXPECT_THROW(orbit_membership(FormValue(7, 3)), OrbitError);
  // B_phi0 = 6 I in the normalisation (u _| phi) ^ (v _| phi) ^ phi.
  EXPECT_LT((g2_bilinear_form(phi) - 6.0 * Matrix::Identity(7, 7)).norm(), 1e-12);
}

TEST(VolumeIdentity, ModelsAndScaledKahlerForm) {
  for (int n : {2, 3}) {
    const GStructureValue chi = model_form(GroupTag::SU, n);
    EXPECT_LT(volume_identity_residual(chi.form(0), chi.form(1)), 1e-12);
  }
  const GStructureValue chi = model_form(GroupTag::SU, 2);
  EXPECT_NEAR(volume_identity_residual(chi.form(0), 2.0 * chi.form(1)), 3.0, 1e-12);
}
