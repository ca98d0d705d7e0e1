#include "holokit/identities.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "holokit/errors.hpp"

namespace holokit {

namespace {

int compact_group_dimension(GroupTag tag, int parameter) {
  switch (tag) {
    case GroupTag::Spin7: return 21;
    case GroupTag::G2: return 14;
    case GroupTag::SU: return parameter * parameter - 1;
    case GroupTag::Sp: return parameter * (2 * parameter + 1);
  }
  return 0;
}

nlohmann::json group_json(GroupTag tag, int parameter) {
  nlohmann::json j{{"group", to_string(tag)}};
  if (tag == GroupTag::SU || tag == GroupTag::Sp) j["n"] = parameter;
  return j;
}

nlohmann::json matrix_json(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

BundleField metric_from_values(const TorusDomain& domain, int band_limit, std::vector<double> values) {
  return BundleField(domain, FiberKind::metric(), band_limit, std::move(values));
}

// g0 + t h as a metric field.
BundleField shifted_metric(const BundleField& g0, const BundleField& h, double t) {
  std::vector<double> v(g0.values().begin(), g0.values().end());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] += t * h.values()[k];
  return metric_from_values(g0.domain(), std::max(g0.band_limit(), h.band_limit()), std::move(v));
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : num; }

TorusDomain structure_domain(GroupTag tag, int parameter, const TorusOptions& opts) {
  TorusOptions o = opts;
  o.dimension = ambient_dimension(tag, parameter);
  return o.domain();
}

}  // namespace

IdentityReport make_report(std::string name, double residual, double tolerance, nlohmann::json metadata) {
  IdentityReport r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.pass = std::isfinite(residual) && residual <= tolerance;
  r.metadata = std::move(metadata);
  return r;
}

std::mt19937_64 seeded_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                    std::uint32_t(stream >> 32)};
  return std::mt19937_64(seq);
}

Matrix random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = normal(rng);
  const Matrix a = Matrix::Identity(n, n) + (0.3 / std::sqrt(double(n))) * m;
  Matrix g = a.transpose() * a;
  return 0.5 * (g + g.transpose());
}

TorusDomain TorusOptions::domain() const { return domain(MetricValue::euclidean(dimension)); }

TorusDomain TorusOptions::domain(const MetricValue& metric) const {
  std::vector<int> axes = active_axes;
  if (axes.empty())
    for (int a = 0; a < std::min(dimension, 4); ++a) axes.push_back(a);
  return TorusDomain(dimension, axes, resolution, metric);
}

nlohmann::json TorusOptions::describe() const {
  const TorusDomain d = domain();
  return {{"dimension", dimension},
          {"active_axes", d.active_axes()},
          {"resolution", resolution},
          {"band_limit", band_limit},
          {"seed", seed}};
}

// --- pointwise ---------------------------------------------------------------------

std::vector<IdentityReport> check_stabilizer(GroupTag tag, int parameter) {
  const GStructureValue chi = model_form(tag, parameter);
  const StabilizerAlgebra h = stabilizer_algebra(chi);
  const int n = chi.ambient_dimension();
  const int expected = compact_group_dimension(tag, parameter);
  nlohmann::json meta = group_json(tag, parameter);
  meta["dim"] = h.dim();
  meta["expected_dim"] = expected;
  meta["E_dim"] = n * n - h.dim();
  return {make_report("stabilizer_dimension", std::abs(h.dim() - expected), 0.0, meta),
          make_report("stabilizer_closure", h.closure_residual(), 1e-9, group_json(tag, parameter)),
          make_report("stabilizer_antisymmetry", h.antisymmetry_residual(), 1e-9, group_json(tag, parameter))};
}

std::vector<IdentityReport> check_isotypic_dimensions(GroupTag tag, int parameter, int degree,
                                                      const std::vector<int>& expected) {
  const auto& parts = model_isotypic_decomposition(tag, parameter, degree);
  std::vector<int> dims;
  nlohmann::json components = nlohmann::json::array();
  for (const auto& c : parts) {
    dims.push_back(c.dim);
    components.push_back({{"dim", c.dim}, {"eigenvalue", c.casimir_eigenvalue}});
  }
  std::vector<int> sorted = dims, want = expected;
  std::sort(sorted.begin(), sorted.end());
  std::sort(want.begin(), want.end());
  int mismatch = 0;
  if (sorted.size() != want.size()) {
    mismatch = std::max<int>(1, std::abs(int(sorted.size()) - int(want.size())));
  } else {
    for (std::size_t i = 0; i < sorted.size(); ++i) mismatch += std::abs(sorted[i] - want[i]);
  }
  nlohmann::json meta = group_json(tag, parameter);
  meta["degree"] = degree;
  meta["dims"] = sorted;
  meta["expected"] = want;
  meta["components"] = components;
  std::vector<IdentityReport> out{make_report("isotypic_dimensions", mismatch, 0.0, meta)};

  if (tag == GroupTag::Spin7 && degree == 4) {
    const int n = 8;
    const Matrix star = hodge_star_matrix(MetricValue::euclidean(n), 4, OrientedFrame(n));
    const Matrix asd = 0.5 * (Matrix::Identity(star.rows(), star.cols()) - star);
    double distance = 1.0;
    for (const auto& c : parts) {
      if (c.dim == 35) distance = subspace_distance(orthonormal_range(c.projector), orthonormal_range(asd));
    }
    out.push_back(make_report("anti_self_dual_component", distance, 1e-8, group_json(tag, parameter)));
  }
  return out;
}

std::vector<IdentityReport> check_cayley_self_duality() {
  const FormValue psi = model_form(GroupTag::Spin7).form(0);
  const FormValue star = hodge_star(psi, MetricValue::euclidean(8), OrientedFrame(8));
  const double self_dual = (star.coefficients() - psi.coefficients()).cwiseAbs().maxCoeff();
  const FormValue top = wedge(psi, psi);
  const double volume = std::abs(top.coefficient(IndexMask(0xFF)) - 14.0);
  return {make_report("cayley_self_dual", self_dual, 0.0, {{"group", "spin7"}}),
          make_report("cayley_square_volume", volume, 0.0,
                      {{"group", "spin7"}, {"top_coefficient", top.coefficient(IndexMask(0xFF))}})};
}

std::vector<IdentityReport> check_metric_derivative(GroupTag tag, int parameter, std::uint64_t seed) {
  const GStructureValue chi = model_form(tag, parameter);
  const int n = chi.ambient_dimension();
  const TangentSubspace tangent = tangent_space(chi);
  const int stab = compact_group_dimension(tag, parameter);
  nlohmann::json meta = group_json(tag, parameter);
  meta["E_dim"] = tangent.dim();
  meta["expected_E_dim"] = n * n - stab;
  std::vector<IdentityReport> out;
  out.push_back(make_report("tangent_dimension", std::abs(tangent.dim() - (n * n - stab)), 0.0, meta));

  const int rank = metric_derivative_rank(chi);
  nlohmann::json rmeta = group_json(tag, parameter);
  rmeta["rank"] = rank;
  rmeta["expected_rank"] = n * (n + 1) / 2;
  out.push_back(make_report("dm_rank", std::abs(rank - n * (n + 1) / 2), 0.0, rmeta));

  // Dm(e) must not depend on which algebra preimage of e is used.
  auto rng = seeded_rng(seed, 100);
  std::normal_distribution<double> normal(0.0, 1.0);
  const MetricDerivative md(chi);
  const StabilizerAlgebra h = stabilizer_algebra(chi);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = normal(rng);
    Matrix k = Matrix::Zero(n, n);
    for (const auto& b : h.basis()) k += normal(rng) * b.entries();
    const Vector e = gl_action(EndomorphismValue(a), chi).stacked();
    const Vector base = md.apply(e).packed();
    const Vector shifted = md.from_algebra(EndomorphismValue(md.algebra_preimage(e).entries() + k)).packed();
    worst = std::max(worst, safe_ratio((shifted - base).norm(), base.norm()));
  }
  out.push_back(make_report("dm_gauge_invariance", worst, 1e-9, group_json(tag, parameter)));
  return out;
}

IdentityReport check_induced_metric_equivariance(GroupTag tag, int parameter, std::uint64_t seed, int samples,
                                                 double spread, double tolerance) {
  const GStructureValue chi = model_form(tag, parameter);
  const int n = chi.ambient_dimension();
  auto rng = seeded_rng(seed, 200);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Matrix r(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = normal(rng);
    const double norm = Eigen::JacobiSVD<Matrix>(r).singularValues()[0];
    const Matrix A = Matrix::Identity(n, n) + (spread * uniform(rng) / norm) * r;
    const MetricValue g = induced_metric(pullback(EndomorphismValue(A), chi));
    const Matrix want = A.transpose() * A;
    worst = std::max(worst, (g.entries() - want).norm() / want.norm());
  }
  nlohmann::json meta = group_json(tag, parameter);
  meta["samples"] = samples;
  meta["seed"] = seed;
  return make_report("induced_metric_equivariance", worst, tolerance, meta);
}

IdentityReport check_volume_identity(int n, double tolerance) {
  const GStructureValue chi = model_form(GroupTag::SU, n);
  const double r = volume_identity_residual(chi.form(0), chi.form(1));
  return make_report("volume_identity", r, tolerance, group_json(GroupTag::SU, n));
}

// --- fields ------------------------------------------------------------------------------

std::vector<IdentityReport> check_bianchi_delta_star(const TorusOptions& opts, const MetricValue& metric,
                                                     int samples, double tolerance) {
  const TorusDomain domain = opts.domain(metric);
  double worst = 0.0, worst_trace = 0.0;
  for (int s = 0; s < samples; ++s) {
    auto rng = seeded_rng(opts.seed, 1000 + std::uint64_t(s));
    const BundleField xi = random_band_limited(domain, FiberKind::one_form(), opts.band_limit, 1.0, rng);
    const BundleField ds = delta_star(xi);
    const BundleField lap = hodge_laplacian(xi);
    worst = std::max(worst, safe_ratio(l2_norm(bianchi_operator(ds) - lap), l2_norm(lap)));
    const BundleField div = codifferential(xi);
    worst_trace = std::max(worst_trace, safe_ratio(l2_norm(metric_trace(ds) + div), l2_norm(div)));
  }
  nlohmann::json meta = opts.describe();
  meta["samples"] = samples;
  meta["metric"] = matrix_json(metric.entries());
  return {make_report("bianchi_delta_star", worst, tolerance, meta),
          make_report("trace_delta_star", worst_trace, tolerance, meta)};
}

std::vector<IdentityReport> check_contracted_bianchi(const TorusOptions& opts, int metrics, double amplitude,
                                                     double tolerance) {
  double worst = 0.0, worst_ratio = 0.0;
  nlohmann::json per_metric = nlohmann::json::array();
  for (int i = 0; i < metrics; ++i) {
    double residual[2] = {0.0, 0.0};
    for (int level = 0; level < 2; ++level) {
      TorusOptions o = opts;
      o.resolution = opts.resolution << level;
      const TorusDomain domain = o.domain();
      auto rng = seeded_rng(opts.seed, 2000 + std::uint64_t(i));
      const BundleField g = random_metric(domain, opts.band_limit, amplitude, rng);
      const BianchiTerms terms = ricci_with_bianchi(g).terms;
      const double scale = std::max(rms(terms.divergence), rms(terms.gradient));
      residual[level] = safe_ratio(rms(terms.divergence + terms.gradient), scale);
    }
    worst = std::max(worst, residual[0]);
    worst_ratio = std::max(worst_ratio, safe_ratio(residual[1], residual[0]));
    per_metric.push_back({{"coarse", residual[0]}, {"fine", residual[1]}});
  }
  nlohmann::json meta = opts.describe();
  meta["metrics"] = metrics;
  meta["amplitude"] = amplitude;
  meta["fine_resolution"] = opts.resolution * 2;
  meta["residuals"] = per_metric;
  return {make_report("contracted_bianchi", worst, tolerance, meta),
          make_report("contracted_bianchi_refinement", worst_ratio, 0.5, meta)};
}

std::vector<IdentityReport> check_linearized_ricci(const TorusOptions& opts, double step, double window,
                                                   double tolerance) {
  const TorusDomain domain = opts.domain();
  const BundleField g0 = constant_metric_field(domain);
  auto rng = seeded_rng(opts.seed, 3000);
  // Unit amplitude keeps the O(t^2) truncation error well above the O(eps/t)
  // rounding floor at both steps; g0 +- t h stays within t of flat.
  const BundleField h = random_band_limited(domain, FiberKind::sym2(), opts.band_limit, 1.0, rng);
  const BundleField linear = linearized_ricci(h);

  auto fd_error = [&](const BundleField& dir, const BundleField& reference, double t) {
    BundleField fd = ricci(shifted_metric(g0, dir, t)) - ricci(shifted_metric(g0, dir, -t));
    fd *= 1.0 / (2.0 * t);
    return fd - reference;
  };
  const double e1 = rms(fd_error(h, linear, step)) / rms(linear);
  const double e2 = rms(fd_error(h, linear, step / 2)) / rms(linear);
  const double ratio = safe_ratio(e1, e2);

  nlohmann::json meta = opts.describe();
  meta["amplitude"] = 1.0;
  meta["steps"] = {step, step / 2};
  meta["errors"] = {e1, e2};
  meta["ratio"] = ratio;
  std::vector<IdentityReport> out;
  out.push_back(make_report("linearized_ricci_richardson", std::abs(ratio - 4.0) / 4.0, window, meta));
  out.push_back(make_report("linearized_ricci_fd", e1, tolerance, meta));

  // Pure gauge: DRic(delta* xi) = 0 at a flat metric.
  const BundleField xi = random_band_limited(domain, FiberKind::one_form(), opts.band_limit, 0.1, rng);
  const BundleField gauge = delta_star(xi);
  const double scale = rms(lichnerowicz_laplacian(gauge));
  const BundleField gauge_linear = linearized_ricci(gauge);
  nlohmann::json gmeta = opts.describe();
  out.push_back(make_report("linearized_ricci_gauge", rms(gauge_linear) / scale, 1e-8, gmeta));
  gmeta["step"] = step;
  out.push_back(make_report("linearized_ricci_gauge_fd", rms(fd_error(gauge, gauge_linear, step)) / scale,
                            tolerance, gmeta));
  return out;
}

IdentityReport check_diffeomorphism_ricci(const TorusOptions& opts, double epsilon, double tolerance) {
  const TorusDomain domain = opts.domain();
  const int n = domain.dimension();
  auto rng = seeded_rng(opts.seed, 4000);
  const BundleField V = random_band_limited(domain, FiberKind::one_form(), opts.band_limit, 1.0, rng);
  std::vector<BundleField> dV;
  for (int a = 0; a < n; ++a) dV.push_back(partial_derivative(V, a));
  const Matrix g0 = domain.metric().entries();
  const int m = n * (n + 1) / 2;
  std::vector<double> values(domain.node_count() * std::size_t(m));
  for (std::size_t k = 0; k < domain.node_count(); ++k) {
    Matrix J = Matrix::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) J(i, j) += epsilon * dV[std::size_t(j)].at(k, i);
    const Vector packed = SymTensorValue(J.transpose() * g0 * J).packed();
    std::copy(packed.data(), packed.data() + m, values.begin() + std::ptrdiff_t(k * std::size_t(m)));
  }
  const BundleField g = metric_from_values(domain, 2 * opts.band_limit, std::move(values));
  const double residual = rms(ricci(g));
  nlohmann::json meta = opts.describe();
  meta["epsilon"] = epsilon;
  meta["metric_band_limit"] = 2 * opts.band_limit;
  meta["metric_deviation"] = rms(g - constant_metric_field(domain).with_band_limit(g.band_limit()));
  return make_report("diffeomorphism_ricci", residual, tolerance, meta);
}

IdentityReport check_lie_derivative(const TorusOptions& opts, double tolerance) {
  const TorusDomain domain = opts.domain();
  const int n = domain.dimension();
  auto rng = seeded_rng(opts.seed, 4500);
  const BundleField g = random_metric(domain, opts.band_limit, 0.1, rng);
  const BundleField V = random_band_limited(domain, FiberKind::one_form(), opts.band_limit, 0.5, rng);

  // V^flat_i = g_ij V^j, a product of two band-limited fields.
  const int product_band = std::min(2 * opts.band_limit, domain.resolution() / 2 - 1);
  BundleField flat(domain, FiberKind::one_form(), product_band);
  for (std::size_t k = 0; k < domain.node_count(); ++k) {
    const Vector v = Eigen::Map<const Vector>(V.node(k).data(), n);
    const Vector f = g.metric_at(k) * v;
    for (int i = 0; i < n; ++i) flat.at(k, i) = f[i];
  }
  BundleField rhs = delta_star(flat, g.with_band_limit(product_band));
  rhs *= 2.0;

  // Independent path: flow of V by RK4, Jacobian by central differences in
  // space, metric sampled by Fourier interpolation, central difference in t.
  const FieldInterpolator Vi(V), gi(g);
  const double t = 1e-4, dx = 1e-4;
  auto flow = [&](const Vector& x, double dt) {
    const Vector k1 = Vi(x);
    const Vector k2 = Vi(x + 0.5 * dt * k1);
    const Vector k3 = Vi(x + 0.5 * dt * k2);
    const Vector k4 = Vi(x + dt * k3);
    return Vector(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
  };
  auto pulled_back = [&](const Vector& x, double dt) {
    Matrix D(n, n);
    for (int j = 0; j < n; ++j) {
      Vector e = Vector::Zero(n);
      e[j] = dx;
      D.col(j) = (flow(x + e, dt) - flow(x - e, dt)) / (2.0 * dx);
    }
    const Vector gp = gi(flow(x, dt));
    Matrix G(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) G(i, j) = G(j, i) = gp[sym_index(n, i, j)];
    return Matrix(D.transpose() * G * D);
  };

  const std::size_t samples = std::min<std::size_t>(256, domain.node_count());
  const std::size_t stride = domain.node_count() / samples;
  double err = 0.0, scale = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const std::size_t node = s * stride;
    const Vector x = domain.node_coordinates(node);
    const Matrix lie = (pulled_back(x, t) - pulled_back(x, -t)) / (2.0 * t);
    const Matrix want = rhs.tensor_at(node);
    err = std::max(err, (lie - want).cwiseAbs().maxCoeff());
    scale = std::max(scale, want.cwiseAbs().maxCoeff());
  }
  nlohmann::json meta = opts.describe();
  meta["samples"] = samples;
  meta["time_step"] = t;
  meta["space_step"] = dx;
  return make_report("lie_derivative", safe_ratio(err, scale), tolerance, meta);
}

IdentityReport check_dm_commutation(GroupTag tag, int parameter, const TorusOptions& opts, double tolerance) {
  const TorusDomain domain = structure_domain(tag, parameter, opts);
  const GStructureValue chi = model_form(tag, parameter);
  const TangentSubspace tangent = tangent_space(chi);
  const FiberKind fiber = FiberKind::structure(tag, parameter);
  auto rng = seeded_rng(opts.seed, 5000);
  BundleField s(domain, fiber, opts.band_limit);
  const int w = s.fiber_size();
  for (int j = 0; j < tangent.dim(); ++j) {
    const BundleField c = random_band_limited(domain, FiberKind::scalar(), opts.band_limit, 1.0, rng);
    for (std::size_t k = 0; k < domain.node_count(); ++k) {
      Eigen::Map<Vector>(s.mutable_values().data() + k * std::size_t(w), w) += c.at(k, 0) * tangent.basis().col(j);
    }
  }
  const BundleField lhs = lichnerowicz_laplacian(dm_field(chi, s));
  const BundleField rhs = dm_field(chi, hodge_laplacian(s));
  nlohmann::json meta = group_json(tag, parameter);
  meta.update(opts.describe());
  meta["dimension"] = domain.dimension();
  return make_report("dm_commutation", rms(lhs - rhs) / rms(s), tolerance, meta);
}

std::vector<IdentityReport> check_isotypic_commutation(GroupTag tag, int parameter, int degree,
                                                       const TorusOptions& opts, double tolerance) {
  const TorusDomain domain = structure_domain(tag, parameter, opts);
  auto rng = seeded_rng(opts.seed, 6000 + std::uint64_t(degree));
  const FiberKind fiber = FiberKind::form(degree);
  const BundleField f = random_band_limited(domain, fiber, opts.band_limit, 1.0, rng);
  const BundleField lap = hodge_laplacian(f);
  const BundleField harm = harmonic_projection(f);
  double worst_lap = 0.0, worst_harm = 0.0;
  for (const auto& c : model_isotypic_decomposition(tag, parameter, degree)) {
    const BundleField pf = apply_fiber_map(c.projector, f, fiber);
    worst_lap = std::max(worst_lap, rms(hodge_laplacian(pf) - apply_fiber_map(c.projector, lap, fiber)) / rms(f));
    worst_harm = std::max(
        worst_harm, rms(harmonic_projection(pf) - apply_fiber_map(c.projector, harm, fiber)) / rms(f));
  }
  nlohmann::json meta = group_json(tag, parameter);
  meta.update(opts.describe());
  meta["dimension"] = domain.dimension();
  meta["degree"] = degree;
  return {make_report("isotypic_laplacian_commutation", worst_lap, tolerance, meta),
          make_report("isotypic_harmonic_commutation", worst_harm, tolerance, meta)};
}

std::vector<IdentityReport> check_kernels(int dimension, int resolution, int band_limit) {
  TorusOptions o;
  o.dimension = dimension;
  o.resolution = resolution;
  o.band_limit = band_limit;
  const TorusDomain domain = o.domain();
  nlohmann::json base = o.describe();
  base.erase("seed");
  std::vector<IdentityReport> out;
  auto dimension_report = [&](const std::string& name, int got, int want) {
    nlohmann::json meta = base;
    meta["kernel_dim"] = got;
    meta["expected"] = want;
    out.push_back(make_report(name, std::abs(got - want), 0.0, meta));
  };
  for (int k = 0; k <= dimension; ++k) {
    const int got = kernel_dimension(domain, FiberKind::form(k), band_limit,
                                     [](const BundleField& f) { return hodge_laplacian(f); });
    dimension_report("hodge_kernel_degree_" + std::to_string(k), got, binomial(dimension, k));
  }
  dimension_report("lichnerowicz_kernel",
                   kernel_dimension(domain, FiberKind::sym2(), band_limit,
                                    [](const BundleField& h) { return lichnerowicz_laplacian(h); }),
                   dimension * (dimension + 1) / 2);

  // Harmonic 1-forms as the image of the harmonic projection.
  int modes = 1;
  for (int s = 0; s < domain.active_count(); ++s) modes *= 2 * band_limit + 1;
  const int columns = modes * dimension;
  const int projection_kernel = kernel_dimension(domain, FiberKind::one_form(), band_limit,
                                                 [](const BundleField& f) { return harmonic_projection(f); });
  dimension_report("harmonic_one_forms", columns - projection_kernel, dimension);
  dimension_report("killing_kernel",
                   kernel_dimension(domain, FiberKind::one_form(), band_limit,
                                    [](const BundleField& f) { return delta_star(f); }),
                   dimension);

  double worst = 0.0;
  for (int i = 0; i < dimension; ++i) {
    Vector e = Vector::Zero(dimension);
    e[i] = 1.0;
    worst = std::max(worst, rms(delta_star(constant_field(domain, FiberKind::one_form(), e))));
  }
  out.push_back(make_report("delta_star_constants", worst, 1e-12, base));
  return out;
}

std::vector<IdentityReport> check_adjointness(const TorusOptions& opts, int pairs, double tolerance) {
  auto metric_rng = seeded_rng(opts.seed, 7000);
  const TorusDomain domain = opts.domain(MetricValue(random_spd(opts.dimension, metric_rng)));
  const int n = domain.dimension();
  double worst_adj = 0.0, worst_d2 = 0.0, worst_delta2 = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int p = 0; p < pairs; ++p) {
      auto rng = seeded_rng(opts.seed, 7100 + std::uint64_t(k * pairs + p));
      const BundleField f = random_band_limited(domain, FiberKind::form(k), opts.band_limit, 1.0, rng);
      const BundleField h = random_band_limited(domain, FiberKind::form(k + 1), opts.band_limit, 1.0, rng);
      const BundleField df = exterior_d(f);
      const double lhs = l2_inner(df, h);
      const double rhs = l2_inner(f, codifferential(h));
      worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / (l2_norm(df) * l2_norm(h)));
      if (p == 0 && k + 2 <= n) worst_d2 = std::max(worst_d2, rms(exterior_d(df)) / rms(f));
      if (p == 0 && k + 1 >= 2) worst_delta2 = std::max(worst_delta2, rms(codifferential(codifferential(h))) / rms(h));
    }
  }
  double worst_sym = 0.0;
  for (int p = 0; p < pairs; ++p) {
    auto rng = seeded_rng(opts.seed, 7900 + std::uint64_t(p));
    const BundleField xi = random_band_limited(domain, FiberKind::one_form(), opts.band_limit, 1.0, rng);
    const BundleField h = random_band_limited(domain, FiberKind::sym2(), opts.band_limit, 1.0, rng);
    const BundleField ds = delta_star(xi);
    const double lhs = l2_inner(ds, h);
    const double rhs = l2_inner(xi, codifferential(h));
    worst_sym = std::max(worst_sym, std::abs(lhs - rhs) / (l2_norm(ds) * l2_norm(h)));
  }
  nlohmann::json meta = opts.describe();
  meta["pairs"] = pairs;
  meta["metric"] = matrix_json(domain.metric().entries());
  return {make_report("adjoint_d_delta", worst_adj, tolerance, meta),
          make_report("adjoint_delta_star", worst_sym, tolerance, meta),
          make_report("d_squared", worst_d2, 1e-12, meta),
          make_report("delta_squared", worst_delta2, 1e-12, meta)};
}

BundleField perturbed_structure(GroupTag tag, int parameter, const TorusDomain& domain, int band_limit,
                                double epsilon, bool closed, std::uint64_t seed) {
  const GStructureValue chi = model_form(tag, parameter);
  const BundleField base = constant_field(domain, FiberKind::structure(tag, parameter), chi.stacked(), band_limit);
  auto rng = seeded_rng(seed, 8000);
  if (closed) {
    std::vector<BundleField> parts = structure_form_fields(base);
    for (BundleField& part : parts) {
      BundleField delta = exterior_d(
          random_band_limited(domain, FiberKind::form(part.fiber().form_degree() - 1), band_limit, 1.0, rng));
      delta *= epsilon;
      part += delta;
    }
    return structure_from_form_fields(base, parts);
  }
  // Pointwise pullback by exp(eps a(x)): stays on the model orbit (which is
  // not open for Spin(7), SU(n), Sp(n)) and is generically not closed.
  const int n = domain.dimension();
  std::vector<BundleField> entries;
  for (int i = 0; i < n * n; ++i)
    entries.push_back(random_band_limited(domain, FiberKind::scalar(), band_limit, 1.0, rng));
  BundleField out = base;
  const int w = out.fiber_size();
  for (std::size_t k = 0; k < domain.node_count(); ++k) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = epsilon * entries[std::size_t(i * n + j)].at(k, 0);
    const Vector v = pullback(EndomorphismValue(a.exp()), chi).stacked();
    std::copy(v.data(), v.data() + w, out.mutable_values().begin() + std::ptrdiff_t(k * std::size_t(w)));
  }
  return out;
}

std::vector<IdentityReport> check_torsion_detection(GroupTag tag, int parameter, const TorusOptions& opts,
                                                    double epsilon, double threshold) {
  const TorusDomain domain = structure_domain(tag, parameter, opts);
  const GStructureValue chi = model_form(tag, parameter);
  const BundleField model = constant_field(domain, FiberKind::structure(tag, parameter), chi.stacked(), opts.band_limit);
  const TorsionReport clean = torsion_residuals(model);
  const TorsionReport dirty =
      torsion_residuals(perturbed_structure(tag, parameter, domain, opts.band_limit, epsilon, false, opts.seed));
  nlohmann::json meta = group_json(tag, parameter);
  meta.update(opts.describe());
  meta["dimension"] = domain.dimension();
  nlohmann::json dmeta = meta;
  dmeta["epsilon"] = epsilon;
  dmeta["threshold"] = threshold;
  dmeta["torsion"] = dirty.max_residual();
  return {make_report("torsion_model_zero", clean.max_residual(), 1e-12, meta),
          make_report("torsion_detection", safe_ratio(threshold, dirty.max_residual()), 1.0, dmeta)};
}

std::vector<IdentityReport> check_closed_g2_perturbation(const TorusOptions& opts, double epsilon) {
  const TorusDomain domain = structure_domain(GroupTag::G2, 0, opts);
  const TorsionReport report =
      torsion_residuals(perturbed_structure(GroupTag::G2, 0, domain, opts.band_limit, epsilon, true, opts.seed));
  double dphi = 0.0, dstar = 0.0;
  for (const auto& r : report.residuals) {
    if (r.condition == "dphi") dphi = r.residual;
    if (r.condition == "dstar_phi") dstar = r.residual;
  }
  nlohmann::json meta = group_json(GroupTag::G2, 0);
  meta.update(opts.describe());
  meta["epsilon"] = epsilon;
  meta["dstar_phi"] = dstar;
  return {make_report("closed_perturbation_dphi", dphi, 1e-12, meta),
          make_report("closed_perturbation_coclosed_defect", safe_ratio(1e-3 * epsilon, dstar), 1.0, meta)};
}

}  // namespace holokit
