#include "holokit/model_structures.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <tuple>

#include "holokit/errors.hpp"

namespace holokit {

namespace {

using Term = std::pair<double, const char*>;

// Builds a real form from terms written as 1-based digit strings, "1234".
FormValue form_from_terms(int dimension, int degree, std::initializer_list<Term> terms) {
  FormValue out(dimension, degree);
  for (const auto& [coefficient, digits] : terms) {
    std::vector<int> indices;
    for (const char* c = digits; *c; ++c) indices.push_back(*c - '1');
    out += FormValue::monomial(dimension, indices, coefficient);
  }
  return out;
}

FormValue spin7_form() {
  return form_from_terms(8, 4, {{+1, "1234"}, {+1, "1256"}, {+1, "1278"}, {+1, "1357"},
                                {-1, "1368"}, {-1, "1458"}, {-1, "1467"}, {-1, "2358"},
                                {-1, "2367"}, {-1, "2457"}, {+1, "2468"}, {+1, "3456"},
                                {+1, "3478"}, {+1, "5678"}});
}

FormValue g2_form() {
  return form_from_terms(7, 3, {{+1, "123"}, {+1, "145"}, {+1, "167"}, {+1, "246"},
                                {-1, "257"}, {-1, "347"}, {-1, "356"}});
}

// dz^k = dx^{2k-1} + i dx^{2k}, k zero based here.
FormValue complex_coordinate(int dimension, int k) {
  return FormValue::complex(FormValue::monomial(dimension, {2 * k}),
                            FormValue::monomial(dimension, {2 * k + 1}));
}

std::vector<FormValue> su_forms(int n) {
  const int dim = 2 * n;
  FormValue holomorphic = complex_coordinate(dim, 0);
  for (int k = 1; k < n; ++k) holomorphic = wedge(holomorphic, complex_coordinate(dim, k));
  FormValue kahler(dim, 2, true);
  for (int k = 0; k < n; ++k) {
    const FormValue dz = complex_coordinate(dim, k);
    kahler += wedge(dz, dz.conjugate());
  }
  kahler = kahler.scaled({0.0, 0.5});
  if (kahler.imag_part().norm() != 0.0) {
    throw NumericalError("Kahler form has a non-zero imaginary part");
  }
  return {holomorphic, kahler.real_part()};
}

struct Quaternion {
  double w, x, y, z;
  Quaternion operator*(const Quaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z, w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x, w * o.z + x * o.y - y * o.x + z * o.w};
  }
  Quaternion operator-(const Quaternion& o) const {
    return {w - o.w, x - o.x, y - o.y, z - o.z};
  }
  Quaternion conj() const { return {w, -x, -y, -z}; }
};

// dq^1 ^ d(q^1)bar + ... = -2(i w^I + j w^J + k w^K), q^k = x^{4k-3} + i x^{4k-2}
// + j x^{4k-1} + k x^{4k}. The coefficient of dx^{ab} (a < b) in dq ^ dqbar
// is e_a conj(e_b) - e_b conj(e_a).
std::vector<FormValue> sp_forms(int n) {
  const int dim = 4 * n;
  const std::array<Quaternion, 4> units{{{1, 0, 0, 0}, {0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
  std::vector<FormValue> triple(3, FormValue(dim, 2));
  for (int block = 0; block < n; ++block) {
    for (int a = 0; a < 4; ++a) {
      for (int b = a + 1; b < 4; ++b) {
        const Quaternion c = units[a] * units[b].conj() - units[b] * units[a].conj();
        const int ia = 4 * block + a, ib = 4 * block + b;
        if (c.w != 0.0) throw NumericalError("quaternionic 2-form has a real part");
        triple[0] += FormValue::monomial(dim, {ia, ib}, -0.5 * c.x);
        triple[1] += FormValue::monomial(dim, {ia, ib}, -0.5 * c.y);
        triple[2] += FormValue::monomial(dim, {ia, ib}, -0.5 * c.z);
      }
    }
  }
  return triple;
}

Matrix vec_to_matrix(const Vector& v, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = v[i * n + j];
  return m;
}

Vector matrix_to_vec(const Matrix& m) {
  const int n = static_cast<int>(m.rows());
  Vector v(n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) v[i * n + j] = m(i, j);
  return v;
}

// Rank of a matrix from its singular values with the ambiguity check.
int decide_rank(const Vector& singular_values) {
  if (singular_values.size() == 0) return 0;
  const double top = singular_values.maxCoeff();
  if (top == 0.0) return 0;
  int rank = 0;
  for (int i = 0; i < singular_values.size(); ++i) {
    const double rel = singular_values[i] / top;
    if (rel > kAmbiguousLow && rel < kAmbiguousHigh) {
      throw NumericalError("numerically ambiguous rank: relative singular value " +
                           std::to_string(rel));
    }
    if (rel > kRankThreshold) ++rank;
  }
  return rank;
}

}  // namespace

std::string to_string(GroupTag tag) {
  switch (tag) {
    case GroupTag::Spin7: return "spin7";
    case GroupTag::G2: return "g2";
    case GroupTag::SU: return "su";
    case GroupTag::Sp: return "sp";
  }
  return "unknown";
}

GroupTag parse_group_tag(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "spin7") return GroupTag::Spin7;
  if (lower == "g2") return GroupTag::G2;
  if (lower == "su") return GroupTag::SU;
  if (lower == "sp") return GroupTag::Sp;
  throw ShapeError("unknown group tag '" + std::string(name) + "'");
}

int ambient_dimension(GroupTag tag, int parameter) {
  switch (tag) {
    case GroupTag::Spin7: return 8;
    case GroupTag::G2: return 7;
    case GroupTag::SU: return 2 * parameter;
    case GroupTag::Sp: return 4 * parameter;
  }
  return 0;
}

GStructureValue::GStructureValue(GroupTag tag, int parameter, std::vector<FormValue> forms)
    : tag_(tag), parameter_(parameter), forms_(std::move(forms)) {
  if (tag == GroupTag::Spin7 || tag == GroupTag::G2) parameter_ = 0;
  const int dim = holokit::ambient_dimension(tag, parameter_);
  auto fail = [&](const std::string& why) {
    throw ShapeError("malformed " + to_string(tag) + " structure: " + why);
  };
  if (dim < 1 || dim > kMaxDimension) fail("unsupported dimension");
  for (const auto& f : forms_)
    if (f.dimension() != dim) fail("form dimension does not match ambient dimension");
  switch (tag) {
    case GroupTag::Spin7:
      if (forms_.size() != 1 || forms_[0].degree() != 4 || forms_[0].complexified())
        fail("expected one real 4-form");
      break;
    case GroupTag::G2:
      if (forms_.size() != 1 || forms_[0].degree() != 3 || forms_[0].complexified())
        fail("expected one real 3-form");
      break;
    case GroupTag::SU:
      if (forms_.size() != 2 || forms_[0].degree() != parameter_ || !forms_[0].complexified() ||
          forms_[1].degree() != 2 || forms_[1].complexified())
        fail("expected a complex n-form and a real 2-form");
      break;
    case GroupTag::Sp:
      if (forms_.size() != 3) fail("expected three 2-forms");
      for (const auto& f : forms_)
        if (f.degree() != 2 || f.complexified()) fail("expected three real 2-forms");
      break;
  }
}

Vector GStructureValue::stacked() const {
  Vector out(stacked_size());
  int offset = 0;
  for (const auto& f : forms_) {
    out.segment(offset, f.coefficients().size()) = f.coefficients();
    offset += static_cast<int>(f.coefficients().size());
  }
  return out;
}

int GStructureValue::stacked_size() const {
  int total = 0;
  for (const auto& f : forms_) total += static_cast<int>(f.coefficients().size());
  return total;
}

GStructureValue GStructureValue::with_stacked(const Vector& coefficients) const {
  if (coefficients.size() != stacked_size()) throw ShapeError("stacked vector has wrong length");
  std::vector<FormValue> forms;
  int offset = 0;
  for (const auto& f : forms_) {
    const int len = static_cast<int>(f.coefficients().size());
    forms.emplace_back(f.dimension(), f.degree(), Vector(coefficients.segment(offset, len)),
                       f.complexified());
    offset += len;
  }
  return GStructureValue(tag_, parameter_, std::move(forms));
}

GStructureValue model_form(GroupTag tag, int parameter) {
  switch (tag) {
    case GroupTag::Spin7: return GStructureValue(tag, 0, {spin7_form()});
    case GroupTag::G2: return GStructureValue(tag, 0, {g2_form()});
    case GroupTag::SU:
      if (parameter < 1 || 2 * parameter > kMaxDimension)
        throw ShapeError("SU(n) model requires 1 <= n <= 4");
      return GStructureValue(tag, parameter, su_forms(parameter));
    case GroupTag::Sp:
      if (parameter < 1 || 4 * parameter > kMaxDimension)
        throw ShapeError("Sp(n) model requires 1 <= n <= 2");
      return GStructureValue(tag, parameter, sp_forms(parameter));
  }
  throw ShapeError("unsupported group tag");
}

GStructureValue pullback(const EndomorphismValue& A, const GStructureValue& chi) {
  std::vector<FormValue> forms;
  for (const auto& f : chi.forms()) forms.push_back(pullback(A, f));
  return GStructureValue(chi.tag(), chi.parameter(), std::move(forms));
}

GStructureValue gl_action(const EndomorphismValue& a, const GStructureValue& chi) {
  std::vector<FormValue> forms;
  for (const auto& f : chi.forms()) forms.push_back(gl_action(a, f));
  return GStructureValue(chi.tag(), chi.parameter(), std::move(forms));
}

Matrix action_matrix(const GStructureValue& chi) {
  const int n = chi.ambient_dimension();
  Matrix out(chi.stacked_size(), n * n);
  int offset = 0;
  for (const auto& f : chi.forms()) {
    const Matrix block = action_matrix(f);
    out.middleRows(offset, block.rows()) = block;
    offset += static_cast<int>(block.rows());
  }
  return out;
}

// --- stabiliser ---------------------------------------------------------------

StabilizerAlgebra::StabilizerAlgebra(int ambient_dimension, std::vector<EndomorphismValue> basis)
    : ambient_dimension_(ambient_dimension), basis_(std::move(basis)) {
  for (const auto& e : basis_)
    if (e.dimension() != ambient_dimension_) throw ShapeError("stabilizer basis dimension mismatch");
}

Matrix StabilizerAlgebra::projector() const {
  const int n = ambient_dimension_;
  Matrix q(n * n, dim());
  for (int a = 0; a < dim(); ++a) q.col(a) = matrix_to_vec(basis_[a].entries());
  return q * q.transpose();
}

double StabilizerAlgebra::closure_residual() const {
  const Matrix p = projector();
  double worst = 0.0;
  for (int a = 0; a < dim(); ++a) {
    for (int b = a + 1; b < dim(); ++b) {
      const Matrix& x = basis_[a].entries();
      const Matrix& y = basis_[b].entries();
      const Vector bracket = matrix_to_vec(x * y - y * x);
      worst = std::max(worst, (bracket - p * bracket).norm());
    }
  }
  return worst;
}

double StabilizerAlgebra::antisymmetry_residual() const {
  double worst = 0.0;
  for (const auto& e : basis_)
    worst = std::max(worst, (e.entries() + e.entries().transpose()).norm());
  return worst;
}

StabilizerAlgebra stabilizer_algebra(const GStructureValue& chi) {
  const int n = chi.ambient_dimension();
  const Matrix m = action_matrix(chi);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  const int rank = decide_rank(svd.singularValues());
  std::vector<EndomorphismValue> basis;
  for (int c = rank; c < n * n; ++c)
    basis.emplace_back(vec_to_matrix(svd.matrixV().col(c), n));
  return StabilizerAlgebra(n, std::move(basis));
}

// --- isotypic decomposition -----------------------------------------------------

std::vector<IsotypicComponent> isotypic_decomposition(const StabilizerAlgebra& h, int degree) {
  const int n = h.ambient_dimension();
  if (h.antisymmetry_residual() > 1e-9) {
    throw ShapeError("isotypic_decomposition: stabilizer is not contained in so(n)");
  }
  const int m = binomial(n, degree);
  if (m == 0) throw ShapeError("isotypic_decomposition: degree out of range");
  Matrix casimir = Matrix::Zero(m, m);
  for (const auto& e : h.basis()) {
    const Matrix rho = representation_matrix(e.entries(), degree);
    casimir += rho * rho;
  }
  casimir = 0.5 * (casimir + casimir.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(casimir);
  const Vector& values = eig.eigenvalues();
  const Matrix& vectors = eig.eigenvectors();
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());

  std::vector<IsotypicComponent> out;
  int end = m;  // walk from the largest eigenvalue down
  while (end > 0) {
    int begin = end - 1;
    while (begin > 0) {
      const double gap = values[begin] - values[begin - 1];
      if (gap <= 1e-9 * scale) {
        --begin;
        continue;
      }
      if (gap < kCasimirSeparation) {
        throw NumericalError("Casimir eigenvalues " + std::to_string(values[begin - 1]) +
                             " and " + std::to_string(values[begin]) +
                             " are too close to separate");
      }
      break;
    }
    const Matrix block = vectors.middleCols(begin, end - begin);
    out.push_back({end - begin, block * block.transpose(), values.segment(begin, end - begin).mean()});
    end = begin;
  }
  return out;
}

const std::vector<IsotypicComponent>& model_isotypic_decomposition(GroupTag tag, int parameter,
                                                                   int degree) {
  using Key = std::tuple<GroupTag, int, int>;
  static std::shared_mutex mutex;
  static std::map<Key, std::vector<IsotypicComponent>> cache;
  const Key key{tag, parameter, degree};
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto components = isotypic_decomposition(stabilizer_algebra(model_form(tag, parameter)), degree);
  std::unique_lock lock(mutex);
  return cache.try_emplace(key, std::move(components)).first->second;
}

// --- tangent spaces ---------------------------------------------------------------

Matrix orthonormal_range(const Matrix& m) {
  if (m.cols() == 0 || m.rows() == 0) return Matrix(m.rows(), 0);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU);
  const int rank = decide_rank(svd.singularValues());
  return svd.matrixU().leftCols(rank);
}

double subspace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("subspace_distance: ambient size mismatch");
  if (a.cols() != b.cols()) return 1.0;
  const Matrix diff = a * a.transpose() - b * b.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(diff, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

TangentSubspace::TangentSubspace(GStructureValue shape, Matrix basis)
    : shape_(std::move(shape)), basis_(std::move(basis)) {
  if (basis_.rows() != shape_.stacked_size()) throw ShapeError("tangent basis has wrong row count");
}

GStructureValue TangentSubspace::element(int i) const { return shape_.with_stacked(basis_.col(i)); }

double TangentSubspace::distance(const Vector& stacked) const {
  return (stacked - basis_ * (basis_.transpose() * stacked)).norm();
}

TangentSubspace tangent_space(const GStructureValue& chi) {
  return TangentSubspace(chi, orthonormal_range(action_matrix(chi)));
}

}  // namespace holokit
