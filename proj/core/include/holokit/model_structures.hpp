#pragma once

// The four model G-structures with Ricci-flat holonomy, their stabiliser
// Lie algebras, orbit tangent spaces and Casimir decompositions.

#include <string>
#include <string_view>
#include <vector>

#include "holokit/exterior_algebra.hpp"

namespace holokit {

enum class GroupTag { Spin7, G2, SU, Sp };

std::string to_string(GroupTag tag);
/// Accepts "spin7", "g2", "su", "sp" (case-insensitive).
GroupTag parse_group_tag(std::string_view name);

/// A tuple of defining forms. Multi-form structures are treated as a single
/// vector in the direct sum of the form spaces ("stacked" coordinates).
class GStructureValue {
 public:
  GStructureValue(GroupTag tag, int parameter, std::vector<FormValue> forms);

  GroupTag tag() const { return tag_; }
  /// n for SU(n) and Sp(n); 0 for Spin(7) and G2.
  int parameter() const { return parameter_; }
  int ambient_dimension() const { return forms_.front().dimension(); }
  const std::vector<FormValue>& forms() const { return forms_; }
  const FormValue& form(std::size_t i) const { return forms_.at(i); }

  /// Concatenated raw coefficients of every defining form.
  Vector stacked() const;
  int stacked_size() const;
  /// Same shape, new stacked coefficients.
  GStructureValue with_stacked(const Vector& coefficients) const;

  friend bool operator==(const GStructureValue& a, const GStructureValue& b) {
    return a.tag_ == b.tag_ && a.parameter_ == b.parameter_ && a.forms_ == b.forms_;
  }

 private:
  GroupTag tag_;
  int parameter_;
  std::vector<FormValue> forms_;
};

/// Expected ambient dimension for a tag (8, 7, 2n, 4n).
int ambient_dimension(GroupTag tag, int parameter);

/// The model structure: psi_0, phi_0, (Omega_0, omega_0), or the hyperkahler
/// triple. Throws ShapeError for unsupported combinations.
GStructureValue model_form(GroupTag tag, int parameter = 0);

GStructureValue pullback(const EndomorphismValue& A, const GStructureValue& chi);
GStructureValue gl_action(const EndomorphismValue& a, const GStructureValue& chi);

/// Stacked action matrix of a -> a.chi (rows: stacked coordinates, columns:
/// a flattened row major).
Matrix action_matrix(const GStructureValue& chi);

class StabilizerAlgebra {
 public:
  StabilizerAlgebra(int ambient_dimension, std::vector<EndomorphismValue> basis);

  int ambient_dimension() const { return ambient_dimension_; }
  int dim() const { return static_cast<int>(basis_.size()); }
  const std::vector<EndomorphismValue>& basis() const { return basis_; }

  /// Largest component of [e_a, e_b] orthogonal to the algebra.
  double closure_residual() const;
  /// max_a ||e_a + e_a^T||.
  double antisymmetry_residual() const;
  /// Orthogonal projector onto the algebra inside gl(n) (row-major vec).
  Matrix projector() const;

 private:
  int ambient_dimension_;
  std::vector<EndomorphismValue> basis_;
};

/// Relative threshold below which singular values count as zero, and the
/// band inside which a rank decision is considered ambiguous.
inline constexpr double kRankThreshold = 1e-9;
inline constexpr double kAmbiguousLow = 1e-11;
inline constexpr double kAmbiguousHigh = 1e-7;

/// Null space of a -> a.chi, trace-orthonormal basis. Throws NumericalError
/// when a singular value falls in the ambiguity band.
StabilizerAlgebra stabilizer_algebra(const GStructureValue& chi);

struct IsotypicComponent {
  int dim;
  Matrix projector;
  double casimir_eigenvalue;
};

/// Minimum gap between Casimir eigenvalues of distinct components.
inline constexpr double kCasimirSeparation = 1e-6;

/// Spectral projectors of C = sum_a rho(e_a) rho(e_a) on Lambda^degree,
/// ordered by decreasing eigenvalue (the trivial component, if any, first).
std::vector<IsotypicComponent> isotypic_decomposition(const StabilizerAlgebra& h,
                                                      int degree);

/// Memoised decomposition of the model structure; safe for concurrent use.
const std::vector<IsotypicComponent>& model_isotypic_decomposition(GroupTag tag,
                                                                   int parameter,
                                                                   int degree);

class TangentSubspace {
 public:
  TangentSubspace(GStructureValue shape, Matrix basis);

  int dim() const { return static_cast<int>(basis_.cols()); }
  /// Orthonormal columns in stacked coordinates.
  const Matrix& basis() const { return basis_; }
  /// Basis element i as a tuple of forms.
  GStructureValue element(int i) const;
  /// Norm of the component of a stacked vector orthogonal to the subspace.
  double distance(const Vector& stacked) const;

 private:
  GStructureValue shape_;
  Matrix basis_;
};

/// E_chi = gl(n).chi with an orthonormal basis.
TangentSubspace tangent_space(const GStructureValue& chi);

/// Orthonormal basis for the column span of `m` (rank by kRankThreshold).
Matrix orthonormal_range(const Matrix& m);

/// Spectral-norm distance between the orthogonal projectors onto the spans
/// of two orthonormal column sets (1 when the dimensions differ).
double subspace_distance(const Matrix& a, const Matrix& b);

}  // namespace holokit
