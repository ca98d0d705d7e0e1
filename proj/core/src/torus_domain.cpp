#include "holokit/torus_domain.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "holokit/errors.hpp"

namespace holokit {

// --- TorusDomain --------------------------------------------------------------

TorusDomain::TorusDomain(int dimension, std::vector<int> active_axes, int resolution)
    : TorusDomain(dimension, std::move(active_axes), resolution,
                  MetricValue::euclidean(std::clamp(dimension, 1, kMaxDimension))) {}

TorusDomain::TorusDomain(int dimension, std::vector<int> active_axes, int resolution,
                         MetricValue metric)
    : dimension_(dimension),
      active_axes_(std::move(active_axes)),
      resolution_(resolution),
      metric_(std::move(metric)),
      node_count_(1) {
  if (dimension < 1 || dimension > kMaxDimension) throw ShapeError("torus dimension must lie in 1..8");
  if (active_axes_.size() > 4) throw ShapeError("at most four active axes are supported");
  std::sort(active_axes_.begin(), active_axes_.end());
  if (std::adjacent_find(active_axes_.begin(), active_axes_.end()) != active_axes_.end()) {
    throw ShapeError("active axes must be distinct");
  }
  for (int a : active_axes_)
    if (a < 0 || a >= dimension) throw ShapeError("active axis out of range");
  if (resolution < 4 || (resolution & (resolution - 1)) != 0) {
    throw ShapeError("resolution must be a power of two >= 4");
  }
  if (metric_.dimension() != dimension) throw ShapeError("background metric has wrong dimension");
  metric_.require_positive_definite();
  for (std::size_t i = 0; i < active_axes_.size(); ++i) node_count_ *= std::size_t(resolution);
}

bool TorusDomain::euclidean() const {
  return metric_.entries() == Matrix::Identity(dimension_, dimension_);
}

int TorusDomain::active_slot(int axis) const {
  auto it = std::find(active_axes_.begin(), active_axes_.end(), axis);
  return it == active_axes_.end() ? -1 : static_cast<int>(it - active_axes_.begin());
}

Vector TorusDomain::node_coordinates(std::size_t node) const {
  Vector x = Vector::Zero(dimension_);
  const double h = 2.0 * std::numbers::pi / resolution_;
  for (int s = active_count() - 1; s >= 0; --s) {
    x[active_axes_[s]] = h * double(node % resolution_);
    node /= resolution_;
  }
  return x;
}

TorusDomain TorusDomain::with_metric(MetricValue metric) const {
  return TorusDomain(dimension_, active_axes_, resolution_, std::move(metric));
}

bool operator==(const TorusDomain& a, const TorusDomain& b) {
  return a.dimension_ == b.dimension_ && a.active_axes_ == b.active_axes_ &&
         a.resolution_ == b.resolution_ && a.metric_.entries() == b.metric_.entries();
}

// --- FiberKind ------------------------------------------------------------------

FiberKind FiberKind::form(int degree) {
  if (degree == 0) return scalar();
  if (degree == 1) return one_form();
  return {Kind::Form, degree};
}

FiberKind FiberKind::structure(GroupTag tag, int parameter) {
  FiberKind f;
  f.kind = Kind::Structure;
  f.group = tag;
  f.group_parameter = (tag == GroupTag::SU || tag == GroupTag::Sp) ? parameter : 0;
  return f;
}

bool FiberKind::is_form() const {
  return kind == Kind::Scalar || kind == Kind::Form || kind == Kind::OneForm;
}

int FiberKind::form_degree() const {
  switch (kind) {
    case Kind::Scalar: return 0;
    case Kind::OneForm: return 1;
    case Kind::Form: return degree;
    default: throw ShapeError("fiber '" + name() + "' is not a form bundle");
  }
}

int FiberKind::size(int dimension) const {
  switch (kind) {
    case Kind::Scalar: return 1;
    case Kind::OneForm: return dimension;
    case Kind::Form: return binomial(dimension, degree);
    case Kind::Sym2:
    case Kind::Metric: return dimension * (dimension + 1) / 2;
    case Kind::Structure: {
      if (ambient_dimension(group, group_parameter) != dimension) {
        throw ShapeError("structure fiber does not match the torus dimension");
      }
      return model_form(group, group_parameter).stacked_size();
    }
  }
  return 0;
}

std::string FiberKind::name() const {
  switch (kind) {
    case Kind::Scalar: return "scalar";
    case Kind::OneForm: return "one_form";
    case Kind::Form: return "form";
    case Kind::Sym2: return "sym2";
    case Kind::Metric: return "metric";
    case Kind::Structure: return "structure";
  }
  return "unknown";
}

bool operator==(const FiberKind& a, const FiberKind& b) {
  if (a.is_form() && b.is_form()) return a.form_degree() == b.form_degree();
  if (a.kind != b.kind) return false;
  if (a.kind == FiberKind::Kind::Form) return a.degree == b.degree;
  if (a.kind == FiberKind::Kind::Structure)
    return a.group == b.group && a.group_parameter == b.group_parameter;
  return true;
}

// --- BundleField ----------------------------------------------------------------

BundleField::BundleField(TorusDomain domain, FiberKind fiber, int band_limit)
    : domain_(std::move(domain)),
      fiber_(fiber),
      band_limit_(band_limit),
      fiber_size_(fiber.size(domain_.dimension())) {
  if (fiber_.kind == FiberKind::Kind::Form &&
      (fiber_.degree < 0 || fiber_.degree > domain_.dimension())) {
    throw ShapeError("form degree out of range");
  }
  if (band_limit < 0 || band_limit > domain_.resolution() / 2 - 1) {
    throw ShapeError("band limit " + std::to_string(band_limit) +
                     " exceeds resolution/2 - 1 = " + std::to_string(domain_.resolution() / 2 - 1));
  }
  values_.assign(domain_.node_count() * std::size_t(fiber_size_), 0.0);
}

BundleField::BundleField(TorusDomain domain, FiberKind fiber, int band_limit,
                         std::vector<double> values)
    : BundleField(std::move(domain), fiber, band_limit) {
  if (values.size() != values_.size()) {
    throw ShapeError("field value array has " + std::to_string(values.size()) +
                     " entries, expected " + std::to_string(values_.size()));
  }
  values_ = std::move(values);
  if (fiber_.kind == FiberKind::Kind::Metric) validate_metric();
}

std::vector<double> BundleField::component(int c) const {
  std::vector<double> out(node_count());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = values_[k * fiber_size_ + c];
  return out;
}

void BundleField::set_component(int c, std::span<const double> data) {
  if (data.size() != node_count()) throw ShapeError("component length mismatch");
  for (std::size_t k = 0; k < data.size(); ++k) values_[k * fiber_size_ + c] = data[k];
}

BundleField BundleField::zeros_like(FiberKind fiber) const {
  return BundleField(domain_, fiber, band_limit_);
}

BundleField BundleField::relabeled(FiberKind fiber) const {
  if (fiber.size(domain_.dimension()) != fiber_size_) throw ShapeError("relabel: fiber size mismatch");
  BundleField out(domain_, fiber, band_limit_);
  out.values_ = values_;
  return out;
}

BundleField BundleField::with_band_limit(int band_limit) const {
  BundleField out(domain_, fiber_, band_limit);
  out.values_ = values_;
  return out;
}

Matrix BundleField::tensor_at(std::size_t node) const {
  if (!fiber_.is_symmetric()) throw ShapeError("tensor_at: field is not a symmetric tensor field");
  const int n = domain_.dimension();
  Matrix m(n, n);
  const double* v = values_.data() + node * fiber_size_;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) m(i, j) = m(j, i) = v[sym_index(n, i, j)];
  return m;
}

Matrix BundleField::metric_at(std::size_t node) const { return tensor_at(node); }

void BundleField::validate_metric() const {
  if (fiber_.kind != FiberKind::Kind::Metric) throw ShapeError("field is not a metric field");
  const int n = domain_.dimension();
  Matrix g(n, n);
  Eigen::LLT<Matrix> llt(n);
  for (std::size_t k = 0; k < node_count(); ++k) {
    const double* v = values_.data() + k * std::size_t(fiber_size());
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) g(i, j) = g(j, i) = v[sym_index(n, i, j)];
    llt.compute(g);
    if (llt.info() != Eigen::Success) {
      throw MetricError("metric field is not positive definite at node " + std::to_string(k));
    }
  }
}

BundleField& BundleField::operator+=(const BundleField& other) {
  if (!(domain_ == other.domain_) || !(fiber_ == other.fiber_)) {
    throw ShapeError("field addition: domain or fiber mismatch");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  band_limit_ = std::max(band_limit_, other.band_limit_);
  return *this;
}

BundleField& BundleField::operator-=(const BundleField& other) {
  if (!(domain_ == other.domain_) || !(fiber_ == other.fiber_)) {
    throw ShapeError("field subtraction: domain or fiber mismatch");
  }
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  band_limit_ = std::max(band_limit_, other.band_limit_);
  return *this;
}

BundleField& BundleField::operator*=(double scale) {
  for (double& v : values_) v *= scale;
  return *this;
}

BundleField constant_field(const TorusDomain& domain, FiberKind fiber, const Vector& value,
                           int band_limit) {
  BundleField out(domain, fiber, band_limit);
  if (value.size() != out.fiber_size()) throw ShapeError("constant_field: fiber value has wrong size");
  auto v = out.mutable_values();
  for (std::size_t k = 0; k < out.node_count(); ++k)
    for (int c = 0; c < out.fiber_size(); ++c) v[k * out.fiber_size() + c] = value[c];
  if (fiber.kind == FiberKind::Kind::Metric) out.validate_metric();
  return out;
}

// --- pairings -------------------------------------------------------------------

Matrix fiber_gram(const FiberKind& fiber, const MetricValue& g) {
  const int n = g.dimension();
  if (fiber.is_form()) return gram_matrix(g, fiber.form_degree());
  if (fiber.is_symmetric()) {
    const Matrix inv = g.inverse();
    const int m = n * (n + 1) / 2;
    std::vector<Matrix> units;
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        Matrix e = Matrix::Zero(n, n);
        e(i, j) = e(j, i) = 1.0;
        units.push_back(e);
      }
    }
    Matrix out(m, m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) out(a, b) = (inv * units[a] * inv * units[b]).trace();
    return out;
  }
  return Matrix::Identity(fiber.size(n), fiber.size(n));
}

double l2_inner(const BundleField& a, const BundleField& b) {
  if (!(a.domain() == b.domain()) || !(a.fiber() == b.fiber())) {
    throw ShapeError("l2_inner: domain or fiber mismatch");
  }
  const Matrix gram = fiber_gram(a.fiber(), a.domain().metric());
  const int m = a.fiber_size();
  double total = 0.0;
  for (std::size_t k = 0; k < a.node_count(); ++k) {
    const Eigen::Map<const Vector> x(a.node(k).data(), m);
    const Eigen::Map<const Vector> y(b.node(k).data(), m);
    total += x.dot(gram * y);
  }
  return total / double(a.node_count()) * std::sqrt(a.domain().metric().determinant());
}

double l2_norm(const BundleField& a) { return std::sqrt(std::max(0.0, l2_inner(a, a))); }

double rms(const BundleField& a) {
  double total = 0.0;
  for (double v : a.values()) total += v * v;
  return std::sqrt(total / double(a.node_count()));
}

}  // namespace holokit
