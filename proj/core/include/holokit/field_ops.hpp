#pragma once

// Spectral differential operators on band-limited bundle-valued fields over
// flat tori.
//
// Sign conventions: delta is the formal L2 adjoint of d on forms and of
// delta* = Sym(nabla) on 1-forms, so (delta h)_j = -g^{ik} nabla_k h_ij and the
// Hodge Laplacian d delta + delta d is positive semidefinite: on a single mode
// e^{ik.x} it multiplies by |k|^2_g.
//
// Operators without a metric-field argument use the domain's constant
// metric. Overloads taking a Metric-kind field use Christoffel symbols
// computed spectrally from it.

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "holokit/pointwise_maps.hpp"
#include "holokit/spectral.hpp"
#include "holokit/torus_domain.hpp"

namespace holokit {

/// Worker threads used for per-component transforms. Results do not depend
/// on the thread count.
void set_thread_count(int threads);
int thread_count();

// --- spectral primitives -------------------------------------------------------

/// Component-wise partial derivative along an ambient axis (zero along
/// inactive axes).
BundleField partial_derivative(const BundleField& f, int axis);

/// Zero-frequency part of every component: the L2 projection onto the
/// harmonic fields of the flat torus.
BundleField harmonic_projection(const BundleField& f);

/// Component-wise -g^{ab} d_a d_b with the domain metric.
BundleField rough_laplacian(const BundleField& f);

/// Band-limited random field. Each component is a real trigonometric
/// polynomial with frequencies in [-band_limit, band_limit]^active, Gaussian
/// coefficients drawn in a resolution-independent order, scaled so that the
/// l1 norm of its coefficients (a bound on its sup norm) equals `amplitude`.
BundleField random_band_limited(const TorusDomain& domain, FiberKind fiber, int band_limit,
                                double amplitude, std::mt19937_64& rng);

/// Domain metric plus a random band-limited symmetric perturbation whose
/// entries are bounded by `amplitude`. Throws MetricError if not SPD.
BundleField random_metric(const TorusDomain& domain, int band_limit, double amplitude,
                          std::mt19937_64& rng);

/// The domain's constant metric as a Metric-kind field.
BundleField constant_metric_field(const TorusDomain& domain);

/// Applies a constant linear map to the fiber at every node.
BundleField apply_fiber_map(const Matrix& map, const BundleField& f, FiberKind out_fiber);

/// Evaluates the Fourier interpolant of a field at arbitrary points.
class FieldInterpolator {
 public:
  explicit FieldInterpolator(const BundleField& f);
  /// `point` holds all ambient coordinates; only active ones are used.
  Vector operator()(const Vector& point) const;

 private:
  TorusDomain domain_;
  int fiber_size_;
  std::vector<std::vector<int>> frequencies_;   // retained modes
  std::vector<std::vector<std::complex<double>>> coefficients_;  // per mode, per component
};

// --- exterior calculus -------------------------------------------------------------

BundleField exterior_d(const BundleField& f);

/// Forms: (-1)^{n(k+1)+1} * d * on k-forms. Sym2: -g^{ik} d_k h_ij.
BundleField codifferential(const BundleField& f);
BundleField codifferential(const BundleField& f, const BundleField& metric);

/// d delta + delta d on forms (constant metric only). Structure fields are
/// treated as a tuple of forms.
BundleField hodge_laplacian(const BundleField& f);
/// Throws MetricError if the metric field is not constant.
BundleField hodge_laplacian(const BundleField& f, const BundleField& metric);

// --- symmetric tensors -------------------------------------------------------------

/// nabla^* nabla on symmetric 2-tensors at a flat constant metric.
BundleField lichnerowicz_laplacian(const BundleField& h);
BundleField lichnerowicz_laplacian(const BundleField& h, const BundleField& metric);

/// Sym(nabla xi).
BundleField delta_star(const BundleField& xi);
BundleField delta_star(const BundleField& xi, const BundleField& metric);

/// g^{ij} h_ij as a scalar field.
BundleField metric_trace(const BundleField& h);
BundleField metric_trace(const BundleField& h, const BundleField& metric);

/// (2 delta + d tr) h.
BundleField bianchi_operator(const BundleField& h);
BundleField bianchi_operator(const BundleField& h, const BundleField& metric);

/// The two terms of the Bianchi operator separately (for relative residuals).
struct BianchiTerms {
  BundleField divergence;  // 2 delta h
  BundleField gradient;    // d tr h
};
BianchiTerms bianchi_terms(const BundleField& h, const BundleField& metric);

/// Products in the Ricci pipeline are quadratic in the metric band; the
/// metric band limit may not exceed resolution/4.
BundleField ricci(const BundleField& metric);

/// Ric(g) and the Bianchi terms of Ric(g) at g, sharing one Christoffel
/// computation.
struct RicciBianchi {
  BundleField ricci;
  BianchiTerms terms;
};
RicciBianchi ricci_with_bianchi(const BundleField& metric);

/// Linearisation of Ric at the domain's flat constant metric:
/// (DRic) h = 1/2 (Delta_L h - delta*(2 delta + d tr) h).
BundleField linearized_ricci(const BundleField& h);

// --- structures ----------------------------------------------------------------------

/// Per-node Dm_chi for a constant structure chi; s must take values in E_chi.
BundleField dm_field(const GStructureValue& chi, const BundleField& s);

/// Metric field induced pointwise by a structure field.
BundleField induced_metric_field(const BundleField& structure);

/// Form `index` of a structure field as its own form field (complexified
/// forms produce two fields: real then imaginary part).
std::vector<BundleField> structure_form_fields(const BundleField& structure);

/// Inverse of structure_form_fields: packs form fields back into the stacked
/// fiber of `like` (whose domain, fiber and band limit are reused).
BundleField structure_from_form_fields(const BundleField& like, const std::vector<BundleField>& parts);

struct TorsionResidual {
  std::string condition;
  double residual;  // grid L2 (rms) norm
};

struct TorsionReport {
  GroupTag group;
  std::vector<TorsionResidual> residuals;
  bool torsion_free(double tolerance) const;
  double max_residual() const;
};

/// Node coordinates are reported in the message of the OrbitError thrown
/// when a node leaves the model orbit.
TorsionReport torsion_residuals(const BundleField& structure);

// --- mode-space rank oracle ------------------------------------------------------------

using FieldOperator = std::function<BundleField(const BundleField&)>;

/// Dimension of the kernel of `op` restricted to real band-limited fields
/// (frequencies in [-band_limit, band_limit]^active) of the given fiber.
int kernel_dimension(const TorusDomain& domain, FiberKind fiber, int band_limit,
                     const FieldOperator& op);

}  // namespace holokit
