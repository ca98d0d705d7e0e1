#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "holokit/errors.hpp"
#include "holokit/exterior_algebra.hpp"
#include "support.hpp"

using namespace holokit;
using holokit::testing::Term;

namespace {

FormValue from_terms(int n, const std::vector<Term>& terms) {
  FormValue out(n, int(terms.front().indices.size()));
  for (const auto& t : terms) {
    std::vector<int> zero_based;
    for (int i : t.indices) zero_based.push_back(i - 1);
    out += FormValue::monomial(n, zero_based, t.coefficient);
  }
  return out;
}

FormValue random_form(int n, int p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector c(binomial(n, p));
  for (auto& v : c) v = normal(rng);
  return FormValue(n, p, c);
}

Matrix random_matrix(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = scale * normal(rng);
  return m;
}

IndexMask mask_of(std::initializer_list<int> one_based) {
  IndexMask m = 0;
  for (int i : one_based) m |= IndexMask(1u << (i - 1));
  return m;
}

}  // namespace

TEST(Wedge, BasisProducts) {
  const FormValue dx1 = FormValue::monomial(4, {0});
  const FormValue dx2 = FormValue::monomial(4, {1});
  const FormValue w = wedge(dx1, dx2);
  EXPECT_EQ(w.degree(), 2);
  EXPECT_DOUBLE_EQ(w.coefficient(mask_of({1, 2})), 1.0);
  EXPECT_DOUBLE_EQ(wedge(dx2, dx1).coefficient(mask_of({1, 2})), -1.0);
  EXPECT_EQ(wedge(dx1, dx1).norm(), 0.0);
}

TEST(Wedge, CayleySquareMatchesBruteForceExpansion) {
  const auto terms = holokit::testing::cayley_terms();
  const double expected = holokit::testing::brute_wedge_coefficient(terms, terms, {1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_DOUBLE_EQ(expected, 14.0);
  const FormValue psi = from_terms(8, terms);
  EXPECT_DOUBLE_EQ(wedge(psi, psi).coefficient(0xFF), expected);
}

TEST(Wedge, AgreesWithBruteForceOnRandomMonomialSums) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  const std::vector<Term> a{{normal(rng), {1, 3}}, {normal(rng), {2, 5}}, {normal(rng), {4, 6}}};
  const std::vector<Term> b{{normal(rng), {2, 4, 6}}, {normal(rng), {1, 5, 6}}, {normal(rng), {3, 4, 5}}};
  const FormValue w = wedge(from_terms(6, a), from_terms(6, b));
  for (IndexMask m : subsets(6, 5)) {
    std::vector<int> idx;
    for (int i : mask_indices(m)) idx.push_back(i + 1);
    EXPECT_NEAR(w.coefficient(m), holokit::testing::brute_wedge_coefficient(a, b, idx), 1e-14);
  }
}

TEST(Wedge, GradedCommutativityAndAssociativity) {
  std::mt19937_64 rng(11);
  const FormValue a = random_form(7, 2, rng), b = random_form(7, 3, rng), c = random_form(7, 1, rng);
  EXPECT_TRUE(approx_equal(wedge(a, b), wedge(b, a)));
  EXPECT_TRUE(approx_equal(wedge(b, c), -1.0 * wedge(c, b)));
  EXPECT_TRUE(approx_equal(wedge(wedge(a, b), c), wedge(a, wedge(b, c)), 1e-12));
}

TEST(Wedge, RejectsMismatchedDimensions) {
  EXPECT_THROW(wedge(FormValue::monomial(4, {0}), FormValue::monomial(5, {0})), ShapeError);
  EXPECT_THROW(wedge(FormValue(4, 3), FormValue(4, 2)), ShapeError);
}

TEST(HodgeStar, VolumeOfUnitFunction) {
  const FormValue one(3, 0, Vector::Ones(1));
  const FormValue vol = hodge_star(one, MetricValue::euclidean(3), OrientedFrame(3));
  EXPECT_DOUBLE_EQ(vol.coefficient(mask_of({1, 2, 3})), 1.0);
}

TEST(HodgeStar, CayleyFormIsSelfDual) {
  const FormValue psi = from_terms(8, holokit::testing::cayley_terms());
  const FormValue star = hodge_star(psi, MetricValue::euclidean(8), OrientedFrame(8));
  EXPECT_EQ((star.coefficients() - psi.coefficients()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(HodgeStar, AssociativeFormStarTwice) {
  const FormValue phi = from_terms(7, holokit::testing::associative_terms());
  const MetricValue g = MetricValue::euclidean(7);
  EXPECT_TRUE(approx_equal(hodge_star(hodge_star(phi, g, OrientedFrame(7)), g, OrientedFrame(7)), phi));
}

TEST(HodgeStar, WedgeWithStarIsInnerProductTimesVolume) {
  std::mt19937_64 rng(3);
  for (int n : {4, 5, 7}) {
    const Matrix a = Matrix::Identity(n, n) + 0.3 * random_matrix(n, rng) / std::sqrt(double(n));
    const MetricValue g(a.transpose() * a);
    for (int p = 0; p <= n; ++p) {
      const FormValue x = random_form(n, p, rng), y = random_form(n, p, rng);
      const FormValue lhs = wedge(x, hodge_star(y, g, OrientedFrame(n)));
      const FormValue vol = volume_form(g, OrientedFrame(n));
      const IndexMask top = IndexMask((1u << n) - 1);
      EXPECT_NEAR(lhs.coefficient(top), form_inner_product(x, y, g) * vol.coefficient(top), 1e-11)
          << "n=" << n << " p=" << p;
    }
  }
}

TEST(HodgeStar, OrientationReversalFlipsSign) {
  std::mt19937_64 rng(5);
  const FormValue x = random_form(5, 2, rng);
  const MetricValue g = MetricValue::euclidean(5);
  EXPECT_TRUE(approx_equal(hodge_star(x, g, OrientedFrame(5, -1)), -1.0 * hodge_star(x, g, OrientedFrame(5))));
}

TEST(Interior, Examples) {
  Vector e1 = Vector::Zero(4);
  e1[0] = 1.0;
  const FormValue r = interior(e1, FormValue::monomial(4, {0, 1}));
  EXPECT_TRUE(approx_equal(r, FormValue::monomial(4, {1})));

  const FormValue phi = from_terms(7, holokit::testing::associative_terms());
  Vector v = Vector::Zero(7);
  v[0] = 1.0;
  const FormValue expected = from_terms(7, {{1, {2, 3}}, {1, {4, 5}}, {1, {6, 7}}});
  EXPECT_TRUE(approx_equal(interior(v, phi), expected));

  const FormValue phi8 = from_terms(8, holokit::testing::associative_terms());
  Vector e8 = Vector::Zero(8);
  e8[7] = 1.0;
  EXPECT_EQ(interior(e8, phi8).norm(), 0.0);
  EXPECT_THROW(interior(e8, FormValue(8, 0)), ShapeError);
}

TEST(Interior, IsAnAntiderivation) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  Vector v(6);
  for (auto& c : v) c = normal(rng);
  const FormValue a = random_form(6, 2, rng), b = random_form(6, 3, rng);
  const FormValue lhs = interior(v, wedge(a, b));
  const FormValue rhs = wedge(interior(v, a), b) + wedge(a, interior(v, b));
  EXPECT_TRUE(approx_equal(lhs, rhs, 1e-12));
}

TEST(InnerProduct, Examples) {
  const MetricValue g8 = MetricValue::euclidean(8);
  EXPECT_DOUBLE_EQ(form_inner_product(FormValue::monomial(8, {0}), FormValue::monomial(8, {0}), g8), 1.0);
  const FormValue psi = from_terms(8, holokit::testing::cayley_terms());
  EXPECT_DOUBLE_EQ(form_inner_product(psi, psi, g8), 14.0);
  const FormValue phi = from_terms(7, holokit::testing::associative_terms());
  EXPECT_DOUBLE_EQ(form_inner_product(phi, phi, MetricValue::euclidean(7)), 7.0);
}

TEST(InnerProduct, TransformsLikeThePullbackMetric) {
  // <A^* x, A^* y>_{A^T g A} = <x, y>_g
  std::mt19937_64 rng(13);
  const int n = 5;
  const Matrix A = Matrix::Identity(n, n) + 0.2 * random_matrix(n, rng);
  const MetricValue g(Matrix::Identity(n, n));
  const MetricValue pulled(A.transpose() * A);
  const FormValue x = random_form(n, 2, rng), y = random_form(n, 2, rng);
  EXPECT_NEAR(form_inner_product(pullback(EndomorphismValue(A), x), pullback(EndomorphismValue(A), y), pulled),
              form_inner_product(x, y, g), 1e-11);
}

TEST(GlAction, Examples) {
  std::mt19937_64 rng(17);
  const FormValue x = random_form(6, 3, rng);
  EXPECT_TRUE(approx_equal(gl_action(EndomorphismValue::identity(6), x), 3.0 * x));

  const Matrix m = random_matrix(5, rng);
  const SymTensorValue g0(Matrix::Identity(5, 5));
  const SymTensorValue rotated = gl_action(EndomorphismValue(m - m.transpose()), g0);
  EXPECT_LT(rotated.entries().cwiseAbs().maxCoeff(), 1e-14);

  const FormValue moved = gl_action(EndomorphismValue::elementary(4, 0, 1), FormValue::monomial(4, {0}));
  EXPECT_TRUE(approx_equal(moved, FormValue::monomial(4, {1})));
}

TEST(GlAction, IsTheDerivativeOfThePullback) {
  std::mt19937_64 rng(19);
  for (int p = 1; p <= 4; ++p) {
    const Matrix a = random_matrix(6, rng);
    const FormValue x = random_form(6, p, rng);
    const double t = 1e-5;
    const FormValue plus = pullback(EndomorphismValue((t * a).exp()), x);
    const FormValue minus = pullback(EndomorphismValue((-t * a).exp()), x);
    const Vector fd = (plus.coefficients() - minus.coefficients()) / (2 * t);
    EXPECT_LT((fd - gl_action(EndomorphismValue(a), x).coefficients()).norm(), 1e-7 * (1 + fd.norm()));
  }
}

TEST(Pullback, Examples) {
  std::mt19937_64 rng(23);
  const FormValue x = random_form(5, 2, rng);
  EXPECT_TRUE(approx_equal(pullback(EndomorphismValue::identity(5), x), x));

  const FormValue phi = from_terms(7, holokit::testing::associative_terms());
  EXPECT_TRUE(approx_equal(pullback(EndomorphismValue(1.5 * Matrix::Identity(7, 7)), phi), 3.375 * phi));

  Matrix d = Matrix::Identity(6, 6);
  d(0, 0) = 2.0;
  const FormValue vol = FormValue::monomial(6, {0, 1, 2, 3, 4, 5});
  EXPECT_TRUE(approx_equal(pullback(EndomorphismValue(d), vol), 2.0 * vol));
}

TEST(Pullback, ComposesContravariantlyAndRespectsWedge) {
  std::mt19937_64 rng(29);
  const int n = 6;
  const Matrix A = Matrix::Identity(n, n) + 0.3 * random_matrix(n, rng);
  const Matrix B = Matrix::Identity(n, n) + 0.3 * random_matrix(n, rng);
  const FormValue x = random_form(n, 3, rng), y = random_form(n, 2, rng);
  EXPECT_TRUE(approx_equal(pullback(EndomorphismValue(A * B), x),
                           pullback(EndomorphismValue(B), pullback(EndomorphismValue(A), x)), 1e-12));
  EXPECT_TRUE(approx_equal(pullback(EndomorphismValue(A), wedge(x, y)),
                           wedge(pullback(EndomorphismValue(A), x), pullback(EndomorphismValue(A), y)), 1e-12));
}

TEST(Pullback, SingularMatrixIsRejected) {
  EXPECT_THROW(pullback(EndomorphismValue(Matrix::Zero(3, 3)), FormValue::monomial(3, {0})), NumericalError);
}

TEST(Complex, HolomorphicVolumeCoefficients) {
  // (dx1 + i dx2) ^ (dx3 + i dx4)
  const FormValue dz1 = FormValue::complex(FormValue::monomial(4, {0}), FormValue::monomial(4, {1}));
  const FormValue dz2 = FormValue::complex(FormValue::monomial(4, {2}), FormValue::monomial(4, {3}));
  const FormValue omega = wedge(dz1, dz2);
  EXPECT_EQ(omega.complex_coefficient(mask_of({1, 3})), std::complex<double>(1, 0));
  EXPECT_EQ(omega.complex_coefficient(mask_of({1, 4})), std::complex<double>(0, 1));
  EXPECT_EQ(omega.complex_coefficient(mask_of({2, 3})), std::complex<double>(0, 1));
  EXPECT_EQ(omega.complex_coefficient(mask_of({2, 4})), std::complex<double>(-1, 0));
  EXPECT_TRUE(approx_equal(omega.conjugate().conjugate(), omega));
}

TEST(Metric, RejectsIndefiniteAndAsymmetric) {
  Matrix m = Matrix::Identity(3, 3);
  m(2, 2) = -1.0;
  EXPECT_FALSE(MetricValue(m).is_positive_definite());
  EXPECT_THROW(MetricValue(m).require_positive_definite(), MetricError);
  Matrix asym = Matrix::Identity(3, 3);
  asym(0, 1) = 0.5;
  EXPECT_THROW(MetricValue{asym}, ShapeError);
}

TEST(Combinatorics, SubsetsAreLexicographicAndCounted) {
  for (int n = 1; n <= 8; ++n) {
    int total = 0;
    for (int p = 0; p <= n; ++p) {
      const auto& s = subsets(n, p);
      EXPECT_EQ(int(s.size()), binomial(n, p));
      for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(subset_position(n, s[i]), int(i));
      total += int(s.size());
    }
    EXPECT_EQ(total, 1 << n);
  }
}
