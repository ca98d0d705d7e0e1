#include "holokit/exterior_algebra.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <sstream>

#include "holokit/errors.hpp"

namespace holokit {

namespace {

struct IndexTables {
  // by_degree[n][p] = masks of size-p subsets of {0..n-1}, lexicographic.
  std::array<std::array<std::vector<IndexMask>, kMaxDimension + 1>,
             kMaxDimension + 1>
      by_degree;
  // position[n][mask] = position of mask within its degree.
  std::array<std::array<int, 1 << kMaxDimension>, kMaxDimension + 1> position{};

  IndexTables() {
    for (int n = 0; n <= kMaxDimension; ++n) {
      for (int p = 0; p <= n; ++p) {
        auto& out = by_degree[n][p];
        std::vector<int> combo(p);
        for (int i = 0; i < p; ++i) combo[i] = i;
        while (true) {
          IndexMask mask = 0;
          for (int i : combo) mask |= IndexMask(1u << i);
          position[n][mask] = static_cast<int>(out.size());
          out.push_back(mask);
          int k = p - 1;
          while (k >= 0 && combo[k] == n - p + k) --k;
          if (k < 0) break;
          ++combo[k];
          for (int j = k + 1; j < p; ++j) combo[j] = combo[j - 1] + 1;
        }
      }
    }
  }
};

const IndexTables& tables() {
  static const IndexTables t;
  return t;
}

void check_dimension(int n) {
  if (n < 1 || n > kMaxDimension) {
    throw ShapeError("dimension must lie in 1.." +
                     std::to_string(kMaxDimension) + ", got " +
                     std::to_string(n));
  }
}

void check_same_dimension(int a, int b, const char* what) {
  if (a != b) {
    std::ostringstream msg;
    msg << what << ": dimension mismatch (" << a << " vs " << b << ")";
    throw ShapeError(msg.str());
  }
}

int bit_count(IndexMask mask) { return std::popcount(unsigned(mask)); }

// Accumulates scale * (E_ij . x) into out; x and out are real coefficient
// vectors on Lambda^p(R^n). E_ij . dx^I replaces dx^i by dx^j.
void accumulate_elementary(int n, int p, int i, int j, double scale,
                           const double* x, double* out) {
  const auto& masks = subsets(n, p);
  const IndexMask bit_i = IndexMask(1u << i);
  const IndexMask bit_j = IndexMask(1u << j);
  for (std::size_t c = 0; c < masks.size(); ++c) {
    const IndexMask mask = masks[c];
    if (!(mask & bit_i) || x[c] == 0.0) continue;
    const IndexMask rest = mask & ~bit_i;
    if (rest & bit_j) continue;
    // dx^I = (-1)^{#elements of I below i} dx^i ^ dx^{I \ i}
    const int slot = bit_count(mask & IndexMask(bit_i - 1));
    const int sign = ((slot % 2) ? -1 : 1) * merge_sign(bit_j, rest);
    out[subset_position(n, rest | bit_j)] += scale * sign * x[c];
  }
}

// Applies a real-linear map given on real coefficient vectors to a possibly
// complexified coefficient vector.
template <typename Fn>
Vector apply_real_linear(const FormValue& x, int out_size, Fn&& fn) {
  if (!x.complexified()) {
    Vector out = Vector::Zero(out_size);
    fn(x.coefficients(), out);
    return out;
  }
  const int m = x.size();
  Vector re(m), im(m);
  for (int c = 0; c < m; ++c) {
    re[c] = x.coefficients()[2 * c];
    im[c] = x.coefficients()[2 * c + 1];
  }
  Vector out_re = Vector::Zero(out_size), out_im = Vector::Zero(out_size);
  fn(re, out_re);
  fn(im, out_im);
  Vector out(2 * out_size);
  for (int c = 0; c < out_size; ++c) {
    out[2 * c] = out_re[c];
    out[2 * c + 1] = out_im[c];
  }
  return out;
}

double minor_determinant(const Matrix& m, IndexMask rows, IndexMask cols) {
  const auto r = mask_indices(rows);
  const auto c = mask_indices(cols);
  const int k = static_cast<int>(r.size());
  if (k == 0) return 1.0;
  if (k == 1) return m(r[0], c[0]);
  if (k == 2) return m(r[0], c[0]) * m(r[1], c[1]) - m(r[0], c[1]) * m(r[1], c[0]);
  Matrix sub(k, k);
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) sub(a, b) = m(r[a], c[b]);
  return sub.determinant();
}

Matrix symmetrized_checked(Matrix entries, const char* what) {
  if (entries.rows() != entries.cols()) {
    throw ShapeError(std::string(what) + ": matrix must be square");
  }
  check_dimension(static_cast<int>(entries.rows()));
  const double scale = std::max(1.0, entries.cwiseAbs().maxCoeff());
  if ((entries - entries.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ShapeError(std::string(what) + ": matrix is not symmetric");
  }
  return 0.5 * (entries + entries.transpose());
}

}  // namespace

// --- multi-index tables ----------------------------------------------------

int binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  int r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

const std::vector<IndexMask>& subsets(int n, int p) {
  if (n < 0 || n > kMaxDimension || p < 0 || p > n) {
    throw ShapeError("no multi-indices of length " + std::to_string(p) +
                     " in dimension " + std::to_string(n));
  }
  return tables().by_degree[n][p];
}

int subset_position(int n, IndexMask mask) { return tables().position[n][mask]; }

int merge_sign(IndexMask first, IndexMask second) {
  if (first & second) return 0;
  int inversions = 0;
  for (IndexMask rest = second; rest; rest &= IndexMask(rest - 1)) {
    const int j = std::countr_zero(unsigned(rest));
    inversions += bit_count(first & IndexMask(~((1u << (j + 1)) - 1)));
  }
  return (inversions % 2) ? -1 : 1;
}

std::vector<int> mask_indices(IndexMask mask) {
  std::vector<int> out;
  for (; mask; mask &= IndexMask(mask - 1)) out.push_back(std::countr_zero(unsigned(mask)));
  return out;
}

// --- FormValue ----------------------------------------------------------------

FormValue::FormValue(int dimension, int degree, bool complexified)
    : dimension_(dimension), degree_(degree), complexified_(complexified) {
  check_dimension(dimension);
  if (degree < 0 || degree > dimension) {
    throw ShapeError("degree " + std::to_string(degree) +
                     " out of range for dimension " + std::to_string(dimension));
  }
  coefficients_ = Vector::Zero(binomial(dimension, degree) * (complexified ? 2 : 1));
}

FormValue::FormValue(int dimension, int degree, Vector coefficients,
                     bool complexified)
    : FormValue(dimension, degree, complexified) {
  if (coefficients.size() != coefficients_.size()) {
    throw ShapeError("expected " + std::to_string(coefficients_.size()) +
                     " coefficients, got " + std::to_string(coefficients.size()));
  }
  coefficients_ = std::move(coefficients);
}

FormValue FormValue::monomial(int dimension, std::initializer_list<int> indices,
                              double coefficient) {
  return monomial(dimension, std::span<const int>(indices.begin(), indices.size()),
                  coefficient);
}

FormValue FormValue::monomial(int dimension, std::span<const int> indices,
                              double coefficient) {
  FormValue out(dimension, static_cast<int>(indices.size()));
  IndexMask mask = 0;
  int sign = 1;
  for (int i : indices) {
    if (i < 0 || i >= dimension) throw ShapeError("monomial index out of range");
    const IndexMask bit = IndexMask(1u << i);
    const int s = merge_sign(mask, bit);
    if (s == 0) return out;
    sign *= s;
    mask |= bit;
  }
  out.coefficients_[subset_position(dimension, mask)] = sign * coefficient;
  return out;
}

FormValue FormValue::complex(const FormValue& real, const FormValue& imag) {
  if (real.complexified() || imag.complexified() ||
      real.dimension() != imag.dimension() || real.degree() != imag.degree()) {
    throw ShapeError("complex(): parts must be real forms of equal shape");
  }
  FormValue out(real.dimension(), real.degree(), true);
  for (int c = 0; c < real.size(); ++c) {
    out.coefficients_[2 * c] = real.coefficients_[c];
    out.coefficients_[2 * c + 1] = imag.coefficients_[c];
  }
  return out;
}

double FormValue::coefficient(IndexMask mask) const {
  const int pos = subset_position(dimension_, mask);
  return complexified_ ? coefficients_[2 * pos] : coefficients_[pos];
}

std::complex<double> FormValue::complex_coefficient(IndexMask mask) const {
  const int pos = subset_position(dimension_, mask);
  if (!complexified_) return {coefficients_[pos], 0.0};
  return {coefficients_[2 * pos], coefficients_[2 * pos + 1]};
}

FormValue FormValue::real_part() const {
  if (!complexified_) return *this;
  FormValue out(dimension_, degree_);
  for (int c = 0; c < size(); ++c) out.coefficients_[c] = coefficients_[2 * c];
  return out;
}

FormValue FormValue::imag_part() const {
  FormValue out(dimension_, degree_);
  if (!complexified_) return out;
  for (int c = 0; c < size(); ++c) out.coefficients_[c] = coefficients_[2 * c + 1];
  return out;
}

FormValue FormValue::conjugate() const {
  FormValue out = *this;
  if (complexified_) {
    for (int c = 0; c < size(); ++c) out.coefficients_[2 * c + 1] *= -1.0;
  }
  return out;
}

FormValue FormValue::as_complex() const {
  if (complexified_) return *this;
  return complex(*this, FormValue(dimension_, degree_));
}

FormValue FormValue::operator-() const {
  FormValue out = *this;
  out.coefficients_ = -out.coefficients_;
  return out;
}

FormValue& FormValue::operator+=(const FormValue& other) {
  if (dimension_ != other.dimension_ || degree_ != other.degree_) {
    throw ShapeError("form addition: shape mismatch");
  }
  if (complexified_ != other.complexified_) {
    *this = as_complex();
    coefficients_ += other.as_complex().coefficients_;
  } else {
    coefficients_ += other.coefficients_;
  }
  return *this;
}

FormValue& FormValue::operator-=(const FormValue& other) { return *this += -other; }

FormValue& FormValue::operator*=(double scale) {
  coefficients_ *= scale;
  return *this;
}

FormValue FormValue::scaled(std::complex<double> scale) const {
  if (scale.imag() == 0.0) return *this * scale.real();
  FormValue out = as_complex();
  for (int c = 0; c < size(); ++c) {
    const std::complex<double> z(out.coefficients_[2 * c], out.coefficients_[2 * c + 1]);
    const auto w = z * scale;
    out.coefficients_[2 * c] = w.real();
    out.coefficients_[2 * c + 1] = w.imag();
  }
  return out;
}

bool operator==(const FormValue& a, const FormValue& b) {
  return a.dimension_ == b.dimension_ && a.degree_ == b.degree_ &&
         a.complexified_ == b.complexified_ && a.coefficients_ == b.coefficients_;
}

bool approx_equal(const FormValue& a, const FormValue& b, double rtol) {
  if (a.dimension() != b.dimension() || a.degree() != b.degree() ||
      a.complexified() != b.complexified()) {
    return false;
  }
  const double scale = std::max({1.0, a.norm(), b.norm()});
  return (a.coefficients() - b.coefficients()).norm() <= rtol * scale;
}

// --- tensors and matrices -----------------------------------------------------

SymTensorValue::SymTensorValue(Matrix entries)
    : entries_(symmetrized_checked(std::move(entries), "SymTensorValue")) {}

SymTensorValue SymTensorValue::zero(int dimension) {
  return SymTensorValue(Matrix::Zero(dimension, dimension));
}

Vector SymTensorValue::packed() const {
  const int n = dimension();
  Vector out(n * (n + 1) / 2);
  int c = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out[c++] = entries_(i, j);
  return out;
}

SymTensorValue SymTensorValue::from_packed(int dimension, const Vector& packed) {
  if (packed.size() != dimension * (dimension + 1) / 2) {
    throw ShapeError("packed symmetric tensor has wrong length");
  }
  Matrix m(dimension, dimension);
  int c = 0;
  for (int i = 0; i < dimension; ++i)
    for (int j = i; j < dimension; ++j) m(i, j) = m(j, i) = packed[c++];
  return SymTensorValue(std::move(m));
}

MetricValue::MetricValue(Matrix entries)
    : entries_(symmetrized_checked(std::move(entries), "MetricValue")) {}

MetricValue MetricValue::euclidean(int dimension) {
  return MetricValue(Matrix::Identity(dimension, dimension));
}

bool MetricValue::is_positive_definite() const {
  Eigen::LLT<Matrix> llt(entries_);
  if (llt.info() != Eigen::Success) return false;
  return llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 0.0;
}

void MetricValue::require_positive_definite() const {
  if (!is_positive_definite()) throw MetricError("metric is not positive definite");
}

Matrix MetricValue::inverse() const {
  require_positive_definite();
  return entries_.llt().solve(Matrix::Identity(dimension(), dimension()));
}

EndomorphismValue::EndomorphismValue(Matrix entries) : entries_(std::move(entries)) {
  if (entries_.rows() != entries_.cols()) {
    throw ShapeError("EndomorphismValue: matrix must be square");
  }
  check_dimension(static_cast<int>(entries_.rows()));
}

EndomorphismValue EndomorphismValue::identity(int dimension) {
  return EndomorphismValue(Matrix::Identity(dimension, dimension));
}

EndomorphismValue EndomorphismValue::elementary(int dimension, int row, int col) {
  Matrix m = Matrix::Zero(dimension, dimension);
  m(row, col) = 1.0;
  return EndomorphismValue(std::move(m));
}

OrientedFrame::OrientedFrame(int dimension, int sign)
    : dimension_(dimension), sign_(sign) {
  check_dimension(dimension);
  if (sign != 1 && sign != -1) throw ShapeError("orientation sign must be +1 or -1");
}

// --- operations ----------------------------------------------------------------

FormValue wedge(const FormValue& a, const FormValue& b) {
  check_same_dimension(a.dimension(), b.dimension(), "wedge");
  const int n = a.dimension();
  const int p = a.degree(), q = b.degree();
  if (p + q > n) {
    throw ShapeError("wedge: degree " + std::to_string(p + q) +
                     " exceeds dimension " + std::to_string(n));
  }
  const auto& ma = subsets(n, p);
  const auto& mb = subsets(n, q);
  if (!a.complexified() && !b.complexified()) {
    FormValue out(n, p + q);
    Vector c = Vector::Zero(out.size());
    for (std::size_t i = 0; i < ma.size(); ++i) {
      const double x = a.coefficients()[i];
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < mb.size(); ++j) {
        const double y = b.coefficients()[j];
        if (y == 0.0) continue;
        const int s = merge_sign(ma[i], mb[j]);
        if (s) c[subset_position(n, ma[i] | mb[j])] += s * x * y;
      }
    }
    return FormValue(n, p + q, std::move(c));
  }
  const FormValue ac = a.as_complex(), bc = b.as_complex();
  Vector c = Vector::Zero(2 * binomial(n, p + q));
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const std::complex<double> x(ac.coefficients()[2 * i], ac.coefficients()[2 * i + 1]);
    if (x == 0.0) continue;
    for (std::size_t j = 0; j < mb.size(); ++j) {
      const std::complex<double> y(bc.coefficients()[2 * j], bc.coefficients()[2 * j + 1]);
      if (y == 0.0) continue;
      const int s = merge_sign(ma[i], mb[j]);
      if (!s) continue;
      const auto z = double(s) * x * y;
      const int pos = subset_position(n, ma[i] | mb[j]);
      c[2 * pos] += z.real();
      c[2 * pos + 1] += z.imag();
    }
  }
  return FormValue(n, p + q, std::move(c), true);
}

FormValue interior(const Vector& v, const FormValue& a) {
  check_same_dimension(static_cast<int>(v.size()), a.dimension(), "interior");
  if (a.degree() == 0) throw ShapeError("interior: degree zero input");
  const int n = a.dimension(), p = a.degree();
  const auto& masks = subsets(n, p);
  const Vector c = apply_real_linear(a, binomial(n, p - 1), [&](const Vector& x, Vector& out) {
    for (std::size_t k = 0; k < masks.size(); ++k) {
      if (x[k] == 0.0) continue;
      int slot = 0;
      for (int i : mask_indices(masks[k])) {
        const double s = (slot % 2) ? -1.0 : 1.0;
        out[subset_position(n, masks[k] & IndexMask(~(1u << i)))] += s * v[i] * x[k];
        ++slot;
      }
    }
  });
  return FormValue(n, p - 1, c, a.complexified());
}

Matrix gram_matrix(const MetricValue& g, int degree) {
  const int n = g.dimension();
  const Matrix inv = g.inverse();
  const auto& masks = subsets(n, degree);
  const int m = static_cast<int>(masks.size());
  Matrix out(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j)
      out(i, j) = out(j, i) = minor_determinant(inv, masks[i], masks[j]);
  return out;
}

Matrix hodge_star_matrix(const MetricValue& g, int degree, const OrientedFrame& frame) {
  check_same_dimension(g.dimension(), frame.dimension(), "hodge_star");
  g.require_positive_definite();
  const int n = g.dimension();
  const IndexMask all = IndexMask((1u << n) - 1);
  const auto& masks = subsets(n, degree);
  Matrix perm = Matrix::Zero(binomial(n, n - degree), masks.size());
  for (std::size_t i = 0; i < masks.size(); ++i) {
    const IndexMask complement = all & IndexMask(~masks[i]);
    perm(subset_position(n, complement), i) = merge_sign(masks[i], complement);
  }
  const double volume = std::sqrt(g.determinant()) * frame.sign();
  return volume * perm * gram_matrix(g, degree);
}

FormValue hodge_star(const FormValue& a, const MetricValue& g, const OrientedFrame& frame) {
  check_same_dimension(a.dimension(), g.dimension(), "hodge_star");
  const Matrix star = hodge_star_matrix(g, a.degree(), frame);
  const Vector c = apply_real_linear(a, static_cast<int>(star.rows()),
                                     [&](const Vector& x, Vector& out) { out = star * x; });
  return FormValue(a.dimension(), a.dimension() - a.degree(), c, a.complexified());
}

FormValue volume_form(const MetricValue& g, const OrientedFrame& frame) {
  check_same_dimension(g.dimension(), frame.dimension(), "volume_form");
  g.require_positive_definite();
  Vector c(1);
  c[0] = std::sqrt(g.determinant()) * frame.sign();
  return FormValue(g.dimension(), g.dimension(), c);
}

double form_inner_product(const FormValue& a, const FormValue& b, const MetricValue& g) {
  check_same_dimension(a.dimension(), b.dimension(), "form_inner_product");
  check_same_dimension(a.dimension(), g.dimension(), "form_inner_product");
  if (a.degree() != b.degree()) throw ShapeError("form_inner_product: degree mismatch");
  const Matrix gram = gram_matrix(g, a.degree());
  const FormValue ac = a.complexified() || b.complexified() ? a.as_complex() : a;
  const FormValue bc = a.complexified() || b.complexified() ? b.as_complex() : b;
  return ac.real_part().coefficients().dot(gram * bc.real_part().coefficients()) +
         ac.imag_part().coefficients().dot(gram * bc.imag_part().coefficients());
}

Matrix representation_matrix(const Matrix& a, int degree) {
  const int n = static_cast<int>(a.rows());
  check_dimension(n);
  const int m = binomial(n, degree);
  Matrix out = Matrix::Zero(m, m);
  Vector unit = Vector::Zero(m);
  for (int col = 0; col < m; ++col) {
    unit.setZero();
    unit[col] = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (a(i, j) != 0.0)
          accumulate_elementary(n, degree, i, j, a(i, j), unit.data(), out.col(col).data());
  }
  return out;
}

FormValue gl_action(const EndomorphismValue& a, const FormValue& x) {
  check_same_dimension(a.dimension(), x.dimension(), "gl_action");
  const int n = x.dimension(), p = x.degree();
  const Matrix& m = a.entries();
  const Vector c = apply_real_linear(x, x.size(), [&](const Vector& in, Vector& out) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (m(i, j) != 0.0) accumulate_elementary(n, p, i, j, m(i, j), in.data(), out.data());
  });
  return FormValue(n, p, c, x.complexified());
}

SymTensorValue gl_action(const EndomorphismValue& a, const SymTensorValue& h) {
  check_same_dimension(a.dimension(), h.dimension(), "gl_action");
  const Matrix& m = a.entries();
  const Matrix r = m.transpose() * h.entries() + h.entries() * m;
  return SymTensorValue(0.5 * (r + r.transpose()));
}

Matrix action_matrix(const FormValue& x) {
  const int n = x.dimension(), p = x.degree();
  const int rows = static_cast<int>(x.coefficients().size());
  Matrix out = Matrix::Zero(rows, n * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Vector col = apply_real_linear(x, x.size(), [&](const Vector& in, Vector& o) {
        accumulate_elementary(n, p, i, j, 1.0, in.data(), o.data());
      });
      out.col(i * n + j) = col;
    }
  }
  return out;
}

Matrix metric_action_matrix(const SymTensorValue& g) {
  const int n = g.dimension();
  Matrix out(n * (n + 1) / 2, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.col(i * n + j) = gl_action(EndomorphismValue::elementary(n, i, j), g).packed();
  return out;
}

Matrix pullback_matrix(const Matrix& A, int degree) {
  const int n = static_cast<int>(A.rows());
  const auto& masks = subsets(n, degree);
  const int m = static_cast<int>(masks.size());
  Matrix out(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out(j, i) = minor_determinant(A, masks[i], masks[j]);
  return out;
}

namespace {
void require_invertible(const Matrix& A) {
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  const double det = A.determinant();
  if (!std::isfinite(det) || std::abs(det) <= 1e-14 * std::pow(scale, A.rows())) {
    throw NumericalError("pullback: matrix is singular");
  }
}
}  // namespace

FormValue pullback(const EndomorphismValue& A, const FormValue& x) {
  check_same_dimension(A.dimension(), x.dimension(), "pullback");
  require_invertible(A.entries());
  const Matrix pb = pullback_matrix(A.entries(), x.degree());
  const Vector c = apply_real_linear(x, x.size(), [&](const Vector& in, Vector& out) { out = pb * in; });
  return FormValue(x.dimension(), x.degree(), c, x.complexified());
}

SymTensorValue pullback(const EndomorphismValue& A, const SymTensorValue& h) {
  check_same_dimension(A.dimension(), h.dimension(), "pullback");
  require_invertible(A.entries());
  const Matrix r = A.entries().transpose() * h.entries() * A.entries();
  return SymTensorValue(0.5 * (r + r.transpose()));
}

}  // namespace holokit
