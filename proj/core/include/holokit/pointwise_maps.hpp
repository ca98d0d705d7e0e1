#pragma once

// The structure-to-metric map chi -> g_chi at a single fiber, its derivative
// on the orbit tangent space, orbit membership and the SU(n) volume identity.

#include "holokit/exterior_algebra.hpp"
#include "holokit/model_structures.hpp"

namespace holokit {

struct OrbitSolveResult {
  EndomorphismValue transform;  // pullback(transform, chi_0) ~ chi
  double residual;
  bool converged;
  int iterations;
};

inline constexpr double kOrbitTolerance = 1e-10;

/// Newton iteration for pullback(A, chi_0) = chi starting at A = I. Each step
/// solves b . (A^* chi_0) = chi - A^* chi_0 by minimum-norm least squares and
/// sets A <- A exp(b). Never throws for non-convergence.
OrbitSolveResult solve_orbit(const GStructureValue& chi, int max_iterations = 60);

/// g_chi = A^T A for a converged orbit solve. Throws OrbitError otherwise.
MetricValue induced_metric(const GStructureValue& chi);

/// Derivative of the metric map at chi, as a linear map from stacked
/// tangent vectors to packed symmetric tensors.
class MetricDerivative {
 public:
  explicit MetricDerivative(const GStructureValue& chi);
  MetricDerivative(const GStructureValue& chi, const MetricValue& metric);

  const MetricValue& metric() const { return metric_; }

  /// a . g_chi, for any a in gl(n).
  SymTensorValue from_algebra(const EndomorphismValue& a) const;
  /// Solves a . chi = e (least squares) and returns a . g_chi. Throws
  /// TangentSpaceError if the residual exceeds 1e-6.
  SymTensorValue apply(const Vector& stacked_tangent) const;
  SymTensorValue apply(const GStructureValue& tangent) const;
  /// The minimum-norm solution a of a . chi = e.
  EndomorphismValue algebra_preimage(const Vector& stacked_tangent) const;

  /// Packed-sym2 x stacked matrix of the map (valid on E_chi).
  const Matrix& matrix() const { return matrix_; }

 private:
  MetricValue metric_;
  Matrix action_;
  Matrix pseudo_inverse_;
  Matrix matrix_;
};

inline constexpr double kTangentResidualTolerance = 1e-6;

/// Convenience wrapper: MetricDerivative(chi).apply(e).
SymTensorValue dm(const GStructureValue& chi, const GStructureValue& tangent);

/// Rank of Dm restricted to E_chi.
int metric_derivative_rank(const GStructureValue& chi);

enum class OrbitSign { Positive, NonPositive };

/// B_x(u, v) = top coefficient of (u _| x) ^ (v _| x) ^ x, a 7x7 matrix.
Matrix g2_bilinear_form(const FormValue& x);

/// Whether a 3-form on R^7 lies in the open orbit of phi_0 (same sign of
/// definiteness as B_{phi_0}). Throws OrbitError if |det B| < 1e-12.
OrbitSign orbit_membership(const FormValue& x);

/// |(-1)^{n(n-1)/2} (i/2)^n Omega ^ conj(Omega) - omega^n / n!| on the top
/// coefficient.
double volume_identity_residual(const FormValue& holomorphic, const FormValue& kahler);

}  // namespace holokit
