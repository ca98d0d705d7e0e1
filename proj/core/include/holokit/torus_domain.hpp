#pragma once

// Flat tori (R/2piZ)^n with fields that vary along a subset of "active" axes,
// and grid-sampled sections of form and tensor bundles over them.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "holokit/exterior_algebra.hpp"
#include "holokit/model_structures.hpp"

namespace holokit {

class TorusDomain {
 public:
  /// `active_axes` are zero-based ambient axes, at most four. `resolution` is
  /// the number of grid points per active axis (a power of two, >= 4).
  TorusDomain(int dimension, std::vector<int> active_axes, int resolution = 32);
  TorusDomain(int dimension, std::vector<int> active_axes, int resolution, MetricValue metric);

  int dimension() const { return dimension_; }
  const std::vector<int>& active_axes() const { return active_axes_; }
  int active_count() const { return static_cast<int>(active_axes_.size()); }
  int resolution() const { return resolution_; }
  const MetricValue& metric() const { return metric_; }
  bool euclidean() const;

  std::size_t node_count() const { return node_count_; }
  /// Slot of an ambient axis in active_axes(), or -1.
  int active_slot(int axis) const;
  /// Ambient coordinates (all n of them, inactive ones zero) of a node.
  Vector node_coordinates(std::size_t node) const;

  /// Same grid, different constant metric.
  TorusDomain with_metric(MetricValue metric) const;
  friend bool operator==(const TorusDomain& a, const TorusDomain& b);

 private:
  int dimension_;
  std::vector<int> active_axes_;
  int resolution_;
  MetricValue metric_;
  std::size_t node_count_;
};

struct FiberKind {
  enum class Kind { Scalar, Form, OneForm, Sym2, Metric, Structure };

  Kind kind = Kind::Scalar;
  int degree = 0;                   // Form
  GroupTag group = GroupTag::G2;    // Structure
  int group_parameter = 0;          // Structure (SU(n), Sp(n))

  static FiberKind scalar() { return {Kind::Scalar, 0}; }
  static FiberKind form(int degree);
  static FiberKind one_form() { return {Kind::OneForm, 1}; }
  static FiberKind sym2() { return {Kind::Sym2, 0}; }
  static FiberKind metric() { return {Kind::Metric, 0}; }
  static FiberKind structure(GroupTag tag, int parameter = 0);

  /// Scalar, OneForm and Form are all forms; this returns the degree.
  bool is_form() const;
  int form_degree() const;
  bool is_symmetric() const { return kind == Kind::Sym2 || kind == Kind::Metric; }

  int size(int dimension) const;
  std::string name() const;
  friend bool operator==(const FiberKind& a, const FiberKind& b);
};

/// Index of (i, j) in the packed upper triangle of a symmetric n x n tensor.
inline int sym_index(int n, int i, int j) {
  if (i > j) std::swap(i, j);
  return i * n - i * (i - 1) / 2 + (j - i);
}

class BundleField {
 public:
  /// Zero field.
  BundleField(TorusDomain domain, FiberKind fiber, int band_limit);
  /// Values in node-major, fiber-minor order.
  BundleField(TorusDomain domain, FiberKind fiber, int band_limit, std::vector<double> values);

  const TorusDomain& domain() const { return domain_; }
  const FiberKind& fiber() const { return fiber_; }
  int band_limit() const { return band_limit_; }
  int fiber_size() const { return fiber_size_; }
  std::size_t node_count() const { return domain_.node_count(); }

  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  double at(std::size_t node, int component) const {
    return values_[node * fiber_size_ + component];
  }
  double& at(std::size_t node, int component) { return values_[node * fiber_size_ + component]; }
  std::span<const double> node(std::size_t node) const {
    return std::span<const double>(values_).subspan(node * fiber_size_, fiber_size_);
  }

  std::vector<double> component(int c) const;
  void set_component(int c, std::span<const double> data);

  /// Same domain/band limit, other fiber, zero values.
  BundleField zeros_like(FiberKind fiber) const;
  BundleField relabeled(FiberKind fiber) const;
  BundleField with_band_limit(int band_limit) const;

  /// Metric at a node of a Metric-kind field.
  Matrix metric_at(std::size_t node) const;
  /// Symmetric tensor at a node of a Sym2/Metric field.
  Matrix tensor_at(std::size_t node) const;

  /// Throws MetricError unless a Metric-kind field is SPD at every node.
  void validate_metric() const;

  BundleField& operator+=(const BundleField& other);
  BundleField& operator-=(const BundleField& other);
  BundleField& operator*=(double scale);
  friend BundleField operator+(BundleField a, const BundleField& b) { return a += b; }
  friend BundleField operator-(BundleField a, const BundleField& b) { return a -= b; }
  friend BundleField operator*(double s, BundleField a) { return a *= s; }

 private:
  TorusDomain domain_;
  FiberKind fiber_;
  int band_limit_;
  int fiber_size_;
  std::vector<double> values_;
};

/// Constant field with the given fiber value at every node.
BundleField constant_field(const TorusDomain& domain, FiberKind fiber, const Vector& value,
                           int band_limit = 0);

/// Fiber Gram matrix used by L2 pairings: the induced inner product for
/// forms, Frobenius (tr(g^-1 a g^-1 b)) for symmetric tensors, identity for
/// structures.
Matrix fiber_gram(const FiberKind& fiber, const MetricValue& g);

/// Grid L2 inner product (mean over nodes) using the domain's constant metric.
double l2_inner(const BundleField& a, const BundleField& b);
double l2_norm(const BundleField& a);
/// Root mean square of raw values (no metric weights).
double rms(const BundleField& a);

}  // namespace holokit
