#include "holokit/pointwise_maps.hpp"

#include <cmath>
#include <complex>

#include <unsupported/Eigen/MatrixFunctions>

#include "holokit/errors.hpp"

namespace holokit {

namespace {

Matrix vec_to_matrix(const Vector& v, int n) {
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = v[i * n + j];
  return m;
}

Vector least_squares(const Matrix& m, const Vector& rhs) {
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(kRankThreshold);
  return svd.solve(rhs);
}

}  // namespace

OrbitSolveResult solve_orbit(const GStructureValue& chi, int max_iterations) {
  const GStructureValue model = model_form(chi.tag(), chi.parameter());
  const int n = model.ambient_dimension();
  if (chi.stacked_size() != model.stacked_size()) {
    throw ShapeError("solve_orbit: structure shape does not match the model");
  }
  const Vector target = chi.stacked();
  const double tolerance = kOrbitTolerance * std::max(1.0, target.norm());

  Matrix A = Matrix::Identity(n, n);
  GStructureValue current = model;
  double residual = (target - current.stacked()).norm();
  int iteration = 0;
  while (residual > tolerance && iteration < max_iterations) {
    if (!std::isfinite(residual) || residual > 1e8) break;
    const Vector step = least_squares(action_matrix(current), target - current.stacked());
    A = A * vec_to_matrix(step, n).exp();
    // Chasing a degenerate target (e.g. zero) collapses A; that is non-convergence.
    if (!(std::abs(A.determinant()) > 1e-12)) break;
    current = pullback(EndomorphismValue(A), model);
    residual = (target - current.stacked()).norm();
    ++iteration;
  }
  const bool converged =
      std::isfinite(residual) && residual <= tolerance && A.determinant() > 0.0;
  return {EndomorphismValue(A), residual, converged, iteration};
}

MetricValue induced_metric(const GStructureValue& chi) {
  const OrbitSolveResult solve = solve_orbit(chi);
  if (!solve.converged) {
    throw OrbitError("induced_metric: orbit solve did not converge (residual " +
                     std::to_string(solve.residual) + " after " +
                     std::to_string(solve.iterations) + " iterations)");
  }
  const Matrix& A = solve.transform.entries();
  const Matrix g = A.transpose() * A;
  return MetricValue(0.5 * (g + g.transpose()));
}

// --- derivative -------------------------------------------------------------

MetricDerivative::MetricDerivative(const GStructureValue& chi)
    : MetricDerivative(chi, induced_metric(chi)) {}

MetricDerivative::MetricDerivative(const GStructureValue& chi, const MetricValue& metric)
    : metric_(metric), action_(action_matrix(chi)) {
  Eigen::JacobiSVD<Matrix> svd(action_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = kRankThreshold * (s.size() ? s.maxCoeff() : 0.0);
  Vector inv = Vector::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > cutoff) inv[i] = 1.0 / s[i];
  pseudo_inverse_ = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  matrix_ = metric_action_matrix(SymTensorValue(metric_.entries())) * pseudo_inverse_;
}

SymTensorValue MetricDerivative::from_algebra(const EndomorphismValue& a) const {
  return gl_action(a, SymTensorValue(metric_.entries()));
}

EndomorphismValue MetricDerivative::algebra_preimage(const Vector& stacked_tangent) const {
  if (stacked_tangent.size() != action_.rows()) {
    throw ShapeError("tangent vector has wrong length");
  }
  const Vector a = pseudo_inverse_ * stacked_tangent;
  const double residual = (action_ * a - stacked_tangent).norm();
  if (residual > kTangentResidualTolerance * std::max(1.0, stacked_tangent.norm())) {
    throw TangentSpaceError("tangent vector is not in E_chi (residual " +
                            std::to_string(residual) + ")");
  }
  return EndomorphismValue(vec_to_matrix(a, metric_.dimension()));
}

SymTensorValue MetricDerivative::apply(const Vector& stacked_tangent) const {
  return from_algebra(algebra_preimage(stacked_tangent));
}

SymTensorValue MetricDerivative::apply(const GStructureValue& tangent) const {
  return apply(tangent.stacked());
}

SymTensorValue dm(const GStructureValue& chi, const GStructureValue& tangent) {
  return MetricDerivative(chi).apply(tangent);
}

int metric_derivative_rank(const GStructureValue& chi) {
  const MetricDerivative derivative(chi);
  const TangentSubspace tangent = tangent_space(chi);
  return static_cast<int>(orthonormal_range(derivative.matrix() * tangent.basis()).cols());
}

// --- G2 membership ----------------------------------------------------------

Matrix g2_bilinear_form(const FormValue& x) {
  if (x.dimension() != 7 || x.degree() != 3 || x.complexified()) {
    throw ShapeError("g2_bilinear_form: expected a real 3-form on R^7");
  }
  std::vector<FormValue> contracted;
  for (int i = 0; i < 7; ++i) contracted.push_back(interior(Vector::Unit(7, i), x));
  Matrix b(7, 7);
  for (int i = 0; i < 7; ++i) {
    for (int j = i; j < 7; ++j) {
      b(i, j) = b(j, i) = wedge(wedge(contracted[i], contracted[j]), x).coefficients()[0];
    }
  }
  return b;
}

OrbitSign orbit_membership(const FormValue& x) {
  static const double model_sign = [] {
    const Matrix b = g2_bilinear_form(model_form(GroupTag::G2).form(0));
    return b(0, 0) > 0 ? 1.0 : -1.0;
  }();
  const Matrix b = g2_bilinear_form(x);
  if (std::abs(b.determinant()) < 1e-12) {
    throw OrbitError("orbit_membership: degenerate 3-form (det B below 1e-12)");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(model_sign * b, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 0.0 ? OrbitSign::Positive : OrbitSign::NonPositive;
}

// --- SU(n) volume identity ------------------------------------------------------

double volume_identity_residual(const FormValue& holomorphic, const FormValue& kahler) {
  const int n = holomorphic.degree();
  const int dim = holomorphic.dimension();
  if (2 * n != dim || kahler.dimension() != dim || kahler.degree() != 2) {
    throw ShapeError("volume_identity_residual: expected an n-form and a 2-form on R^{2n}");
  }
  const FormValue omega = holomorphic.as_complex();
  const FormValue product = wedge(omega, omega.conjugate());
  const std::complex<double> prefactor =
      ((n * (n - 1) / 2) % 2 ? -1.0 : 1.0) * std::pow(std::complex<double>(0.0, 0.5), n);
  const std::complex<double> lhs = prefactor * product.complex_coefficient(IndexMask((1u << dim) - 1));

  FormValue power = kahler.real_part();
  double factorial = 1.0;
  for (int k = 2; k <= n; ++k) {
    power = wedge(power, kahler.real_part());
    factorial *= k;
  }
  const double rhs = power.coefficients()[0] / factorial;
  return std::abs(lhs - rhs);
}

}  // namespace holokit
