#pragma once

// Dense exterior algebra on a single fiber R^n, 1 <= n <= 8.
//
// A p-form is stored by its coefficients on the monomials dx^I, I running
// over the strictly increasing multi-indices of length p in lexicographic
// order. Multi-indices are handled internally as bitmasks.
//
// GL(n) conventions (used by every module):
//   pullback:  (A^* x)(v_1, ..., v_p) = x(A v_1, ..., A v_p)
//   action:    a . x = d/dt|_0 (exp(t a))^* x
// so that pullback(A B, x) = pullback(B, pullback(A, x)), E_12 . dx^1 = dx^2
// and a . g = a^T g + g a on bilinear forms.

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace holokit {

inline constexpr int kMaxDimension = 8;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using IndexMask = std::uint16_t;

// --- multi-index tables ----------------------------------------------------

/// Binomial coefficient C(n, k) for 0 <= k <= n <= kMaxDimension.
int binomial(int n, int k);

/// Bitmasks of the size-p subsets of {0..n-1} in lexicographic order.
const std::vector<IndexMask>& subsets(int n, int p);

/// Position of `mask` in subsets(n, popcount(mask)).
int subset_position(int n, IndexMask mask);

/// Sign (+1/-1) of the permutation sorting the concatenation of I and J,
/// or 0 when I and J intersect.
int merge_sign(IndexMask first, IndexMask second);

/// Zero-based indices contained in `mask`, increasing.
std::vector<int> mask_indices(IndexMask mask);

// --- value types ------------------------------------------------------------

class FormValue {
 public:
  FormValue(int dimension, int degree, bool complexified = false);
  FormValue(int dimension, int degree, Vector coefficients,
            bool complexified = false);

  /// coefficient * dx^{i_1} ^ ... ^ dx^{i_p}; indices are zero based and need
  /// not be sorted (the sorting sign is applied).
  static FormValue monomial(int dimension, std::initializer_list<int> indices,
                            double coefficient = 1.0);
  static FormValue monomial(int dimension, std::span<const int> indices,
                            double coefficient = 1.0);

  /// Complexified form from separate real and imaginary parts.
  static FormValue complex(const FormValue& real, const FormValue& imag);

  int dimension() const { return dimension_; }
  int degree() const { return degree_; }
  bool complexified() const { return complexified_; }
  /// Number of monomials C(n, p).
  int size() const { return binomial(dimension_, degree_); }

  /// Raw coefficients; interleaved (re, im) pairs when complexified.
  const Vector& coefficients() const { return coefficients_; }

  double coefficient(IndexMask mask) const;
  std::complex<double> complex_coefficient(IndexMask mask) const;

  FormValue real_part() const;
  FormValue imag_part() const;
  FormValue conjugate() const;
  FormValue as_complex() const;

  FormValue operator-() const;
  FormValue& operator+=(const FormValue& other);
  FormValue& operator-=(const FormValue& other);
  FormValue& operator*=(double scale);
  FormValue scaled(std::complex<double> scale) const;

  friend FormValue operator+(FormValue a, const FormValue& b) { return a += b; }
  friend FormValue operator-(FormValue a, const FormValue& b) { return a -= b; }
  friend FormValue operator*(double s, FormValue a) { return a *= s; }
  friend FormValue operator*(FormValue a, double s) { return a *= s; }

  /// Exact equality of shape and coefficients.
  friend bool operator==(const FormValue& a, const FormValue& b);

  double norm() const { return coefficients_.norm(); }

 private:
  int dimension_;
  int degree_;
  bool complexified_;
  Vector coefficients_;
};

/// Entrywise comparison with relative tolerance on the coefficient vector.
bool approx_equal(const FormValue& a, const FormValue& b, double rtol = 1e-12);

/// Symmetric bilinear form on R^n, not necessarily definite.
class SymTensorValue {
 public:
  explicit SymTensorValue(Matrix entries);
  static SymTensorValue zero(int dimension);

  int dimension() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }

  /// Upper triangle, row major: n(n+1)/2 values.
  Vector packed() const;
  static SymTensorValue from_packed(int dimension, const Vector& packed);

 private:
  Matrix entries_;
};

/// Riemannian metric candidate. Symmetry is checked on construction;
/// positive definiteness is checked by the operations that need it.
class MetricValue {
 public:
  explicit MetricValue(Matrix entries);
  static MetricValue euclidean(int dimension);

  int dimension() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }

  bool is_positive_definite() const;
  /// Throws MetricError unless positive definite.
  void require_positive_definite() const;

  Matrix inverse() const;
  double determinant() const { return entries_.determinant(); }

 private:
  Matrix entries_;
};

class EndomorphismValue {
 public:
  explicit EndomorphismValue(Matrix entries);
  static EndomorphismValue identity(int dimension);
  /// Elementary matrix with a single 1 at (row, col).
  static EndomorphismValue elementary(int dimension, int row, int col);

  int dimension() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }

 private:
  Matrix entries_;
};

class OrientedFrame {
 public:
  explicit OrientedFrame(int dimension, int sign = 1);
  int dimension() const { return dimension_; }
  int sign() const { return sign_; }

 private:
  int dimension_;
  int sign_;
};

// --- operations -------------------------------------------------------------

FormValue wedge(const FormValue& a, const FormValue& b);

/// Interior product v _| a.
FormValue interior(const Vector& v, const FormValue& a);

FormValue hodge_star(const FormValue& a, const MetricValue& g,
                     const OrientedFrame& frame);

/// sqrt(det g) dx^{1..n}, times the frame orientation.
FormValue volume_form(const MetricValue& g, const OrientedFrame& frame);

double form_inner_product(const FormValue& a, const FormValue& b,
                          const MetricValue& g);

FormValue gl_action(const EndomorphismValue& a, const FormValue& x);
SymTensorValue gl_action(const EndomorphismValue& a, const SymTensorValue& h);

/// Throws NumericalError for singular A.
FormValue pullback(const EndomorphismValue& A, const FormValue& x);
SymTensorValue pullback(const EndomorphismValue& A, const SymTensorValue& h);

// --- matrix forms of the operations (real coefficient spaces) --------------

/// R(a) on Lambda^p(R^n): coefficients of a.x = R(a) * coefficients of x.
Matrix representation_matrix(const Matrix& a, int degree);

/// Column (i*n + j) holds E_ij . x, i.e. the linear map a -> a.x with a
/// flattened row major. Complexified forms contribute (re, im) rows.
Matrix action_matrix(const FormValue& x);

/// Pullback matrix on Lambda^p: entry (J, I) = det A[I, J].
Matrix pullback_matrix(const Matrix& A, int degree);

/// Gram matrix of the induced inner product on Lambda^p from g.
Matrix gram_matrix(const MetricValue& g, int degree);

/// Matrix of the Hodge star Lambda^p -> Lambda^{n-p}.
Matrix hodge_star_matrix(const MetricValue& g, int degree,
                         const OrientedFrame& frame);

/// Matrix of a -> a.g on packed symmetric tensors (columns as in
/// action_matrix).
Matrix metric_action_matrix(const SymTensorValue& g);

}  // namespace holokit
