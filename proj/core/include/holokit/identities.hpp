#pragma once

// Numerical verification of the pointwise and field-level identities. Each
// check returns IdentityReports; pass is always `residual <= tolerance`.
// Checks whose natural statement is a lower bound or a window report a
// normalised margin instead (documented per check).

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "holokit/field_ops.hpp"

namespace holokit {

struct IdentityReport {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  nlohmann::json metadata = nlohmann::json::object();
};

IdentityReport make_report(std::string name, double residual, double tolerance,
                           nlohmann::json metadata = nlohmann::json::object());

/// Seeded generator for sub-stream `stream` of `seed`; independent of the
/// order in which checks run.
std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream);

/// Random SPD matrix I + noise scaled so the condition number stays modest.
Matrix random_spd(int n, std::mt19937_64& rng);

/// Torus used by the Ricci-side checks.
struct TorusOptions {
  int dimension = 4;
  std::vector<int> active_axes;  // empty: the first min(n, 4) axes
  int resolution = 16;
  int band_limit = 1;
  std::uint64_t seed = 0;

  TorusDomain domain() const;
  TorusDomain domain(const MetricValue& metric) const;
  nlohmann::json describe() const;
};

// --- pointwise ---------------------------------------------------------------------

/// Stabilizer dimension against the dimension of the compact group, plus
/// closure and antisymmetry of the computed basis.
std::vector<IdentityReport> check_stabilizer(GroupTag tag, int parameter);

/// Isotypic component dimensions of the model stabilizer on Lambda^degree.
/// For Spin(7) on Lambda^4 also compares the 35-dimensional component with
/// the anti-self-dual eigenspace of the Hodge star.
std::vector<IdentityReport> check_isotypic_dimensions(GroupTag tag, int parameter, int degree,
                                                      const std::vector<int>& expected);

/// star psi_0 = psi_0 and psi_0 ^ psi_0 = 14 vol.
std::vector<IdentityReport> check_cayley_self_duality();

/// dim E_chi, rank of Dm on E_chi, and invariance of Dm under adding a
/// stabilizer element to the algebra preimage.
std::vector<IdentityReport> check_metric_derivative(GroupTag tag, int parameter, std::uint64_t seed);

/// induced_metric(A^* chi_0) = A^T A for random A near the identity.
IdentityReport check_induced_metric_equivariance(GroupTag tag, int parameter, std::uint64_t seed,
                                                 int samples = 20, double spread = 0.2,
                                                 double tolerance = 1e-8);

IdentityReport check_volume_identity(int n, double tolerance = 1e-12);

// --- fields ------------------------------------------------------------------------------

/// (2 delta + d tr) delta* xi = Delta xi over `samples` random 1-forms at the
/// domain's constant metric, and tr delta* xi = -delta xi.
std::vector<IdentityReport> check_bianchi_delta_star(const TorusOptions& opts, const MetricValue& metric,
                                                     int samples = 20, double tolerance = 1e-8);

/// (2 delta + d tr) Ric(g) = 0 for random near-flat metrics at the configured
/// resolution and at twice that resolution. The second report's residual is
/// the worst fine/coarse ratio (tolerance 0.5: the residual at least halves).
std::vector<IdentityReport> check_contracted_bianchi(const TorusOptions& opts, int metrics = 10,
                                                     double amplitude = 0.1, double tolerance = 1e-6);

/// Central differences of Ric against the linearisation at steps t and t/2.
/// The Richardson report's residual is |ratio - 4| / 4, so the window
/// [3.2, 4.8] corresponds to tolerance 0.2. Also checks that pure-gauge
/// directions delta* xi are annihilated.
std::vector<IdentityReport> check_linearized_ricci(const TorusOptions& opts, double step = 1e-3,
                                                   double window = 0.2, double tolerance = 1e-6);

/// Ric of the pullback of the flat metric under x -> x + eps V(x).
IdentityReport check_diffeomorphism_ricci(const TorusOptions& opts, double epsilon = 0.1,
                                          double tolerance = 1e-7);

/// L_V g from a numerically integrated flow against 2 delta*_g V^flat.
IdentityReport check_lie_derivative(const TorusOptions& opts, double tolerance = 1e-6);

/// Delta_L(Dm s) = Dm(Delta s) for random band-limited s in E_chi over a
/// constant model structure.
IdentityReport check_dm_commutation(GroupTag tag, int parameter, const TorusOptions& opts,
                                    double tolerance = 1e-8);

/// Fibrewise isotypic projectors commute with Delta and with the harmonic
/// projection on forms of the given degree.
std::vector<IdentityReport> check_isotypic_commutation(GroupTag tag, int parameter, int degree,
                                                       const TorusOptions& opts, double tolerance = 1e-10);

/// Mode-space kernel dimensions: Delta on k-forms, Delta_L on sym2, harmonic
/// 1-forms, Killing 1-forms; delta* of constant 1-forms. Residuals of the
/// dimension reports are |computed - expected| with tolerance 0.
std::vector<IdentityReport> check_kernels(int dimension = 4, int resolution = 4, int band_limit = 1);

/// Adjointness of d/delta on every degree and of delta*/delta on sym2, plus
/// d^2 = 0 and delta^2 = 0.
std::vector<IdentityReport> check_adjointness(const TorusOptions& opts, int pairs = 50,
                                              double tolerance = 1e-10);

/// Constant model structures are torsion free; adding eps times a random
/// non-closed perturbation is detected. The detection report's residual is
/// threshold / measured torsion (pass when the torsion exceeds the threshold).
std::vector<IdentityReport> check_torsion_detection(GroupTag tag, int parameter, const TorusOptions& opts,
                                                    double epsilon = 1e-2, double threshold = 1e-5);

/// G2: phi_0 + eps d(beta) stays closed but is generically not coclosed.
std::vector<IdentityReport> check_closed_g2_perturbation(const TorusOptions& opts, double epsilon = 1e-2);

/// Structure field phi_0 + eps d(beta) (closed) or phi_0 + eps gamma (generic).
BundleField perturbed_structure(GroupTag tag, int parameter, const TorusDomain& domain, int band_limit,
                                double epsilon, bool closed, std::uint64_t seed);

}  // namespace holokit
