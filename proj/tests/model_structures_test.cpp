#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "holokit/errors.hpp"
#include "holokit/model_structures.hpp"
#include "support.hpp"

using namespace holokit;

namespace {

FormValue from_terms(int n, const std::vector<holokit::testing::Term>& terms) {
  FormValue out(n, int(terms.front().indices.size()));
  for (const auto& t : terms) {
    std::vector<int> idx;
    for (int i : t.indices) idx.push_back(i - 1);
    out += FormValue::monomial(n, idx, t.coefficient);
  }
  return out;
}

// Rank of a -> d/dt pullback(exp(t a), chi) at t = 0, built column by column
// from central differences of the group action (no use of the library's
// infinitesimal action).
int finite_difference_stabilizer_dimension(const GStructureValue& chi) {
  const int n = chi.ambient_dimension();
  Matrix M(chi.stacked_size(), n * n);
  const double t = 1e-6;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      Matrix e = Matrix::Zero(n, n);
      e(i, j) = 1.0;
      const Vector plus = pullback(EndomorphismValue((t * e).exp()), chi).stacked();
      const Vector minus = pullback(EndomorphismValue((-t * e).exp()), chi).stacked();
      M.col(i * n + j) = (plus - minus) / (2 * t);
    }
  }
  Eigen::JacobiSVD<Matrix> svd(M);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s[k] > 1e-6 * s[0]) ++rank;
  return n * n - rank;
}

}  // namespace

TEST(ModelForm, ExceptionalFormsMatchThePrintedExpansions) {
  EXPECT_EQ(model_form(GroupTag::Spin7).form(0), from_terms(8, holokit::testing::cayley_terms()));
  EXPECT_EQ(model_form(GroupTag::G2).form(0), from_terms(7, holokit::testing::associative_terms()));
}

TEST(ModelForm, SpecialUnitaryPairInRealCoordinates) {
  // z^k = x^{2k-1} + i x^{2k}
  const GStructureValue chi = model_form(GroupTag::SU, 2);
  const FormValue dz1 = FormValue::complex(FormValue::monomial(4, {0}), FormValue::monomial(4, {1}));
  const FormValue dz2 = FormValue::complex(FormValue::monomial(4, {2}), FormValue::monomial(4, {3}));
  EXPECT_TRUE(approx_equal(chi.form(0), wedge(dz1, dz2)));
  EXPECT_TRUE(approx_equal(chi.form(1), FormValue::monomial(4, {0, 1}) + FormValue::monomial(4, {2, 3})));
}

TEST(ModelForm, RejectsBadShapes) {
  EXPECT_THROW(parse_group_tag("e8"), ShapeError);
  EXPECT_THROW(model_form(GroupTag::SU, 5), ShapeError);
  EXPECT_THROW(GStructureValue(GroupTag::G2, 0, {FormValue(7, 4)}), ShapeError);
  EXPECT_EQ(parse_group_tag("Spin7"), GroupTag::Spin7);
}

struct StabilizerCase {
  GroupTag tag;
  int parameter;
  int dim;
  int tangent;
};

class Stabilizer : public ::testing::TestWithParam<StabilizerCase> {};

TEST_P(Stabilizer, DimensionClosureAndAnnihilation) {
  const auto c = GetParam();
  const GStructureValue chi = model_form(c.tag, c.parameter);
  const StabilizerAlgebra h = stabilizer_algebra(chi);
  EXPECT_EQ(h.dim(), c.dim);
  EXPECT_EQ(finite_difference_stabilizer_dimension(chi), c.dim);
  EXPECT_LT(h.closure_residual(), 1e-9);
  EXPECT_LT(h.antisymmetry_residual(), 1e-9);
  for (const auto& b : h.basis()) {
    EXPECT_LT(gl_action(b, chi).stacked().norm(), 1e-10);
    EXPECT_NEAR((b.entries().transpose() * b.entries()).trace(), 1.0, 1e-10);
  }
  EXPECT_EQ(tangent_space(chi).dim(), c.tangent);
}

INSTANTIATE_TEST_SUITE_P(Models, Stabilizer,
                         ::testing::Values(StabilizerCase{GroupTag::Spin7, 0, 21, 43},
                                           StabilizerCase{GroupTag::G2, 0, 14, 35},
                                           StabilizerCase{GroupTag::SU, 2, 3, 13},
                                           StabilizerCase{GroupTag::SU, 3, 8, 28},
                                           StabilizerCase{GroupTag::Sp, 1, 3, 13},
                                           StabilizerCase{GroupTag::Sp, 2, 10, 54}));

TEST(Isotypic, ExceptionalDecompositions) {
  auto dims = [](GroupTag tag, int degree) {
    std::vector<int> d;
    for (const auto& c : model_isotypic_decomposition(tag, 0, degree)) d.push_back(c.dim);
    std::sort(d.begin(), d.end());
    return d;
  };
  EXPECT_EQ(dims(GroupTag::Spin7, 4), (std::vector<int>{1, 7, 27, 35}));
  EXPECT_EQ(dims(GroupTag::G2, 2), (std::vector<int>{7, 14}));
  EXPECT_EQ(dims(GroupTag::G2, 3), (std::vector<int>{1, 7, 27}));
  EXPECT_EQ(dims(GroupTag::Spin7, 2), (std::vector<int>{7, 21}));
}

TEST(Isotypic, ProjectorsAreEquivariantOrthogonalAndComplete) {
  const GStructureValue chi = model_form(GroupTag::G2);
  const StabilizerAlgebra h = stabilizer_algebra(chi);
  for (int degree : {2, 3}) {
    const auto parts = isotypic_decomposition(h, degree);
    Matrix sum = Matrix::Zero(binomial(7, degree), binomial(7, degree));
    for (const auto& p : parts) {
      sum += p.projector;
      EXPECT_LT((p.projector * p.projector - p.projector).norm(), 1e-10);
      EXPECT_LT((p.projector - p.projector.transpose()).norm(), 1e-10);
      EXPECT_NEAR(p.projector.trace(), p.dim, 1e-10);
      for (const auto& b : h.basis()) {
        const Matrix rho = representation_matrix(b.entries(), degree);
        EXPECT_LT((rho * p.projector - p.projector * rho).norm(), 1e-10);
      }
    }
    EXPECT_LT((sum - Matrix::Identity(sum.rows(), sum.cols())).norm(), 1e-10);
    // Ordered by decreasing Casimir eigenvalue, trivial component first.
    for (std::size_t i = 1; i < parts.size(); ++i)
      EXPECT_GT(parts[i - 1].casimir_eigenvalue, parts[i].casimir_eigenvalue);
  }
}

TEST(Isotypic, SevenDimensionalPieceOfTwoFormsIsInteriorOfPhi) {
  // Lambda^2_7 = { v _| phi_0 }
  const FormValue phi = model_form(GroupTag::G2).form(0);
  Matrix span(21, 7);
  for (int i = 0; i < 7; ++i) {
    Vector e = Vector::Zero(7);
    e[i] = 1.0;
    span.col(i) = interior(e, phi).coefficients();
  }
  for (const auto& c : model_isotypic_decomposition(GroupTag::G2, 0, 2)) {
    if (c.dim != 7) continue;
    EXPECT_LT(subspace_distance(orthonormal_range(c.projector), orthonormal_range(span)), 1e-10);
  }
}

TEST(TangentSpace, ContainsTheOrbitAndIsOrthonormal) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  const GStructureValue chi = model_form(GroupTag::Spin7);
  const TangentSubspace E = tangent_space(chi);
  EXPECT_LT((E.basis().transpose() * E.basis() - Matrix::Identity(E.dim(), E.dim())).norm(), 1e-10);
  Matrix a(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) a(i, j) = normal(rng);
  EXPECT_LT(E.distance(gl_action(EndomorphismValue(a), chi).stacked()), 1e-10);
  // Lambda^4_- = Lambda^4_35 sits inside E = 1 + 7 + 35.
  const Matrix star = hodge_star_matrix(MetricValue::euclidean(8), 4, OrientedFrame(8));
  Vector x(70);
  for (auto& v : x) v = normal(rng);
  const Vector asd = 0.5 * (x - star * x);
  EXPECT_LT(E.distance(asd), 1e-10 * asd.norm());
}

TEST(Subspaces, DistanceBasics) {
  Matrix a = Matrix::Zero(3, 1), b = Matrix::Zero(3, 1);
  a(0, 0) = 1.0;
  b(1, 0) = 1.0;
  EXPECT_NEAR(subspace_distance(a, a), 0.0, 1e-15);
  EXPECT_NEAR(subspace_distance(a, b), 1.0, 1e-15);
  EXPECT_EQ(subspace_distance(a, Matrix::Identity(3, 2)), 1.0);
}
