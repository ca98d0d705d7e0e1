#include "holokit/field_ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <Eigen/SVD>

#include "holokit/errors.hpp"

namespace holokit {

namespace {

std::atomic<int> g_threads{1};

// Runs fn(i) for i in [0, count). If several calls throw, the exception of
// the smallest index is rethrown so error messages do not depend on the
// thread count.
template <class Fn>
void parallel_for(std::size_t count, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(std::size_t(std::max(1, g_threads.load())), count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mutex;
  std::exception_ptr error;
  std::size_t error_index = count;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Node loops are split into blocks so the per-index overhead stays small.
template <class Fn>
void parallel_nodes(std::size_t nodes, Fn&& fn) {
  constexpr std::size_t kBlock = 4096;
  const std::size_t blocks = (nodes + kBlock - 1) / kBlock;
  parallel_for(blocks, [&](std::size_t b) {
    const std::size_t end = std::min(nodes, (b + 1) * kBlock);
    for (std::size_t k = b * kBlock; k < end; ++k) fn(k);
  });
}

std::shared_ptr<const SpectralGrid> grid_of(const TorusDomain& d) {
  return SpectralGrid::get(d.active_count(), d.resolution());
}

bool same_grid(const TorusDomain& a, const TorusDomain& b) {
  return a.dimension() == b.dimension() && a.active_axes() == b.active_axes() &&
         a.resolution() == b.resolution();
}

BundleField rehome(const BundleField& f, const TorusDomain& domain) {
  return BundleField(domain, f.fiber(), f.band_limit(),
                     std::vector<double>(f.values().begin(), f.values().end()));
}

std::string coordinates_text(const TorusDomain& d, std::size_t node) {
  const Vector x = d.node_coordinates(node);
  std::ostringstream os;
  os << "node " << node << " at x = (";
  for (int i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ")";
  return os.str();
}

// dst += coeff * (i k_slot) * src
void add_derivative(const SpectralGrid& grid, const Spectrum& src, int slot, double coeff,
                    Spectrum& dst) {
  for (std::size_t m = 0; m < src.size(); ++m) {
    const double k = coeff * grid.derivative_wavenumber(m, slot);
    dst[m] += std::complex<double>(-k * src[m].imag(), k * src[m].real());
  }
}

std::vector<double> derivative_values(const SpectralGrid& grid, const Spectrum& src, int slot) {
  Spectrum tmp(src.size(), 0.0);
  add_derivative(grid, src, slot, 1.0, tmp);
  return grid.inverse(tmp);
}

std::vector<Spectrum> component_spectra(const BundleField& f) {
  const auto grid = grid_of(f.domain());
  std::vector<Spectrum> out(std::size_t(f.fiber_size()));
  parallel_for(out.size(), [&](std::size_t c) { out[c] = grid->forward(f.component(int(c))); });
  return out;
}

Matrix constant_value(const BundleField& metric, double* deviation) {
  const Matrix g0 = metric.metric_at(0);
  const auto v = metric.values();
  const std::size_t w = std::size_t(metric.fiber_size());
  double dev = 0.0;
  for (std::size_t k = w; k < v.size(); ++k) dev = std::max(dev, std::abs(v[k] - v[k % w]));
  *deviation = dev;
  return g0;
}

void require_metric_field(const BundleField& f, const BundleField& metric) {
  if (metric.fiber().kind != FiberKind::Kind::Metric) {
    throw ShapeError("expected a metric field, got fiber '" + metric.fiber().name() + "'");
  }
  if (!same_grid(f.domain(), metric.domain())) throw ShapeError("field and metric live on different grids");
}

// Inverse metric and Christoffel symbols, either constant (Gamma = 0) or
// per node. Arrays are component-major so they feed FFTs directly.
struct Geometry {
  int n = 0;
  int m = 0;  // packed symmetric size
  bool constant = true;
  Matrix ginv0;
  std::vector<std::vector<double>> ginv;   // [sym(i,j)][node]
  std::vector<std::vector<double>> gamma;  // [k*m + sym(i,j)][node]
  std::vector<int> sym;                    // sym[i*n + j] = sym_index(n, i, j)

  double inv(std::size_t node, int i, int j) const {
    return constant ? ginv0(i, j) : ginv[std::size_t(sym_index(n, i, j))][node];
  }
  double christoffel(std::size_t node, int k, int i, int j) const {
    return constant ? 0.0 : gamma[std::size_t(k * m + sym_index(n, i, j))][node];
  }
};

Geometry constant_geometry(const MetricValue& g) {
  Geometry geo;
  geo.n = g.dimension();
  geo.m = geo.n * (geo.n + 1) / 2;
  geo.ginv0 = g.inverse();
  geo.sym.resize(std::size_t(geo.n * geo.n));
  for (int i = 0; i < geo.n; ++i)
    for (int j = 0; j < geo.n; ++j) geo.sym[std::size_t(i * geo.n + j)] = sym_index(geo.n, i, j);
  return geo;
}

Geometry field_geometry(const BundleField& metric) {
  metric.validate_metric();
  double deviation = 0.0;
  const Matrix g0 = constant_value(metric, &deviation);
  if (deviation == 0.0) return constant_geometry(MetricValue(g0));

  const TorusDomain& d = metric.domain();
  const auto grid = grid_of(d);
  const std::size_t nodes = metric.node_count();
  Geometry geo = constant_geometry(MetricValue(g0));
  geo.constant = false;
  const int n = geo.n, m = geo.m, s_count = d.active_count();
  const std::vector<int>& sym = geo.sym;

  geo.ginv.assign(std::size_t(m), std::vector<double>(nodes));
  const auto gv = metric.values();
  parallel_nodes(nodes, [&](std::size_t node) {
    thread_local Matrix g, inv;
    thread_local Eigen::LLT<Matrix> llt;
    g.resize(n, n);
    const double* v = gv.data() + node * std::size_t(m);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) g(i, j) = g(j, i) = v[sym[std::size_t(i * n + j)]];
    llt.compute(g);
    inv.setIdentity(n, n);
    llt.solveInPlace(inv);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) geo.ginv[std::size_t(sym[std::size_t(i * n + j)])][node] = inv(i, j);
  });

  // dg[s*m + c] = d_{axis(s)} g_c
  std::vector<std::vector<double>> dg(std::size_t(s_count * m));
  parallel_for(std::size_t(m), [&](std::size_t c) {
    const Spectrum spec = grid->forward(metric.component(int(c)));
    for (int s = 0; s < s_count; ++s) dg[std::size_t(s * m) + c] = derivative_values(*grid, spec, s);
  });
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  for (int s = 0; s < s_count; ++s) slot[std::size_t(d.active_axes()[std::size_t(s)])] = s;

  geo.gamma.assign(std::size_t(n * m), std::vector<double>(nodes));
  parallel_nodes(nodes, [&](std::size_t node) {
    thread_local std::vector<double> dl, first, ginv;
    dl.assign(std::size_t(n * m), 0.0);  // dl[axis*m + c]
    first.resize(std::size_t(n));
    ginv.resize(std::size_t(n * n));
    for (int a = 0; a < n; ++a) {
      const int s = slot[std::size_t(a)];
      if (s < 0) continue;
      for (int c = 0; c < m; ++c) dl[std::size_t(a * m + c)] = dg[std::size_t(s * m + c)][node];
    }
    for (int k = 0; k < n * n; ++k) ginv[std::size_t(k)] = geo.ginv[std::size_t(sym[std::size_t(k)])][node];
    auto dmetric = [&](int axis, int i, int j) { return dl[std::size_t(axis * m + sym[std::size_t(i * n + j)])]; };
    // first kind: G_lij = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        const int c = sym[std::size_t(i * n + j)];
        for (int l = 0; l < n; ++l)
          first[std::size_t(l)] = 0.5 * (dmetric(i, j, l) + dmetric(j, i, l) - dmetric(l, i, j));
        for (int k = 0; k < n; ++k) {
          double acc = 0.0;
          for (int l = 0; l < n; ++l) acc += ginv[std::size_t(k * n + l)] * first[std::size_t(l)];
          geo.gamma[std::size_t(k * m + c)][node] = acc;
        }
      }
    }
  });
  return geo;
}

// (delta h)_j = -g^{ik} (d_k h_ij - Gamma^l_ki h_lj - Gamma^l_kj h_il)
BundleField sym_divergence(const BundleField& h, const Geometry& geo) {
  if (!h.fiber().is_symmetric()) throw ShapeError("divergence expects a symmetric 2-tensor field");
  const TorusDomain& d = h.domain();
  const auto grid = grid_of(d);
  const int n = geo.n, m = geo.m;
  const std::size_t nodes = h.node_count();
  BundleField out = h.zeros_like(FiberKind::one_form());
  auto ov = out.mutable_values();

  std::vector<std::vector<std::vector<double>>> derivs(static_cast<std::size_t>(m));
  parallel_for(std::size_t(m), [&](std::size_t c) {
    const Spectrum spec = grid->forward(h.component(int(c)));
    derivs[c].resize(std::size_t(d.active_count()));
    for (int s = 0; s < d.active_count(); ++s) derivs[c][std::size_t(s)] = derivative_values(*grid, spec, s);
  });

  const std::vector<int>& sym = geo.sym;
  const auto hv = h.values();
  const int s_count = d.active_count();
  parallel_nodes(nodes, [&](std::size_t node) {
    thread_local std::vector<double> hm, gi, G;
    hm.resize(std::size_t(n * n));
    gi.resize(std::size_t(n * n));
    const double* hp = hv.data() + node * std::size_t(m);
    for (int k = 0; k < n * n; ++k) {
      hm[std::size_t(k)] = hp[sym[std::size_t(k)]];
      gi[std::size_t(k)] = geo.inv(node, k / n, k % n);
    }
    if (!geo.constant) {
      // G[(l*n + k)*n + i] = Gamma^l_ki
      G.resize(std::size_t(n * n * n));
      for (int l = 0; l < n; ++l)
        for (int k = 0; k < n * n; ++k)
          G[std::size_t(l * n * n + k)] = geo.gamma[std::size_t(l * m + sym[std::size_t(k)])][node];
    }
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        const int c = sym[std::size_t(i * n + j)];
        for (int s = 0; s < s_count; ++s) {
          const int k = d.active_axes()[std::size_t(s)];
          acc -= gi[std::size_t(i * n + k)] * derivs[std::size_t(c)][std::size_t(s)][node];
        }
        if (!geo.constant) {
          for (int k = 0; k < n; ++k) {
            const double gik = gi[std::size_t(i * n + k)];
            double t = 0.0;
            for (int l = 0; l < n; ++l) {
              t += G[std::size_t((l * n + k) * n + i)] * hm[std::size_t(l * n + j)] +
                   G[std::size_t((l * n + k) * n + j)] * hm[std::size_t(i * n + l)];
            }
            acc += gik * t;
          }
        }
      }
      ov[node * std::size_t(n) + std::size_t(j)] = acc;
    }
  });
  return out;
}

BundleField sym_trace(const BundleField& h, const Geometry& geo) {
  if (!h.fiber().is_symmetric()) throw ShapeError("trace expects a symmetric 2-tensor field");
  const int n = geo.n;
  BundleField out = h.zeros_like(FiberKind::scalar());
  auto ov = out.mutable_values();
  parallel_nodes(h.node_count(), [&](std::size_t node) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += geo.inv(node, i, j) * h.at(node, sym_index(n, i, j));
    ov[node] = acc;
  });
  return out;
}

BundleField sym_delta_star(const BundleField& xi, const Geometry& geo) {
  if (!xi.fiber().is_form() || xi.fiber().form_degree() != 1) {
    throw ShapeError("delta* expects a 1-form field");
  }
  const TorusDomain& d = xi.domain();
  const auto grid = grid_of(d);
  const int n = geo.n, m = geo.m;
  BundleField out = xi.zeros_like(FiberKind::sym2());
  // derivs[l][s] = d_{axis s} xi_l
  std::vector<std::vector<std::vector<double>>> derivs(static_cast<std::size_t>(n));
  parallel_for(std::size_t(n), [&](std::size_t l) {
    const Spectrum spec = grid->forward(xi.component(int(l)));
    derivs[l].resize(std::size_t(d.active_count()));
    for (int s = 0; s < d.active_count(); ++s) derivs[l][std::size_t(s)] = derivative_values(*grid, spec, s);
  });
  auto partial = [&](std::size_t node, int axis, int l) {
    const int s = d.active_slot(axis);
    return s < 0 ? 0.0 : derivs[std::size_t(l)][std::size_t(s)][node];
  };
  auto ov = out.mutable_values();
  parallel_nodes(xi.node_count(), [&](std::size_t node) {
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double v = 0.5 * (partial(node, i, j) + partial(node, j, i));
        if (!geo.constant)
          for (int l = 0; l < n; ++l) v -= geo.christoffel(node, l, i, j) * xi.at(node, l);
        ov[node * std::size_t(m) + std::size_t(sym_index(n, i, j))] = v;
      }
    }
  });
  return out;
}

// Applies a per-node (or constant, when maps.size() == 1) matrix to the fiber.
BundleField apply_node_maps(const std::vector<Matrix>& maps, const BundleField& f, FiberKind out_fiber) {
  BundleField out = f.zeros_like(out_fiber);
  const int rows = out.fiber_size(), cols = f.fiber_size();
  auto ov = out.mutable_values();
  parallel_nodes(f.node_count(), [&](std::size_t node) {
    const Matrix& a = maps.size() == 1 ? maps[0] : maps[node];
    if (a.rows() != rows || a.cols() != cols) throw ShapeError("fiber map has the wrong shape");
    const Eigen::Map<const Vector> x(f.node(node).data(), cols);
    Eigen::Map<Vector>(ov.data() + node * std::size_t(rows), rows) = a * x;
  });
  return out;
}

// delta = (-1)^{n(k+1)+1} * d * on k-forms, with one metric per node (or a
// single constant one).
BundleField form_codifferential(const BundleField& f, const std::vector<MetricValue>& metrics) {
  const int n = f.domain().dimension();
  const int k = f.fiber().form_degree();
  if (k == 0) throw ShapeError("the codifferential of a function is not defined");
  const OrientedFrame frame(n);
  std::vector<Matrix> first(metrics.size()), second(metrics.size());
  parallel_for(metrics.size(), [&](std::size_t i) {
    first[i] = hodge_star_matrix(metrics[i], k, frame);
    second[i] = hodge_star_matrix(metrics[i], n - k + 1, frame);
  });
  const BundleField u = apply_node_maps(first, f, FiberKind::form(n - k));
  const BundleField w = exterior_d(u);
  BundleField out = apply_node_maps(second, w, FiberKind::form(k - 1));
  const int sign = ((n * (k + 1) + 1) % 2 == 0) ? 1 : -1;
  if (sign < 0) out *= -1.0;
  return out;
}

std::vector<MetricValue> node_metrics(const BundleField& metric) {
  double deviation = 0.0;
  const Matrix g0 = constant_value(metric, &deviation);
  if (deviation == 0.0) return {MetricValue(g0)};
  std::vector<MetricValue> out;
  out.reserve(metric.node_count());
  for (std::size_t k = 0; k < metric.node_count(); ++k) out.emplace_back(metric.metric_at(k));
  return out;
}

MetricValue require_constant_metric(const BundleField& metric) {
  metric.validate_metric();
  double deviation = 0.0;
  const Matrix g0 = constant_value(metric, &deviation);
  if (deviation > 1e-12 * std::max(1.0, g0.cwiseAbs().maxCoeff())) {
    throw MetricError("operator is only implemented for constant (flat) metrics; metric field varies by " +
                      std::to_string(deviation));
  }
  return MetricValue(g0);
}

// Offsets of each defining form inside the stacked structure fiber.
struct FormSlot {
  int offset;
  int size;  // real coefficients of one part
  bool complexified;
  int degree;
};

std::vector<FormSlot> structure_slots(const FiberKind& fiber) {
  const GStructureValue shape = model_form(fiber.group, fiber.group_parameter);
  std::vector<FormSlot> out;
  int offset = 0;
  for (const FormValue& x : shape.forms()) {
    out.push_back({offset, x.size(), x.complexified(), x.degree()});
    offset += static_cast<int>(x.coefficients().size());
  }
  return out;
}

BundleField pack_structure(const BundleField& like, const std::vector<BundleField>& parts) {
  BundleField out(like.domain(), like.fiber(), like.band_limit());
  const auto slots = structure_slots(like.fiber());
  const int width = out.fiber_size();
  auto ov = out.mutable_values();
  std::size_t p = 0;
  for (const FormSlot& slot : slots) {
    const int parts_here = slot.complexified ? 2 : 1;
    for (int part = 0; part < parts_here; ++part, ++p) {
      const BundleField& src = parts.at(p);
      if (src.fiber_size() != slot.size || src.node_count() != out.node_count()) {
        throw ShapeError("structure part " + std::to_string(p) + " has the wrong shape");
      }
      for (std::size_t node = 0; node < out.node_count(); ++node) {
        for (int i = 0; i < slot.size; ++i) {
          const int dst = slot.complexified ? slot.offset + 2 * i + part : slot.offset + i;
          ov[node * std::size_t(width) + std::size_t(dst)] = src.at(node, i);
        }
      }
    }
  }
  return out;
}

Matrix active_inverse_metric(const TorusDomain& d, const MetricValue& g) {
  const Matrix inv = g.inverse();
  const int s = d.active_count();
  Matrix out(s, s);
  for (int a = 0; a < s; ++a)
    for (int b = 0; b < s; ++b) out(a, b) = inv(d.active_axes()[std::size_t(a)], d.active_axes()[std::size_t(b)]);
  return out;
}

}  // namespace

void set_thread_count(int threads) { g_threads.store(std::max(1, threads)); }
int thread_count() { return g_threads.load(); }

// --- spectral primitives -------------------------------------------------------

BundleField partial_derivative(const BundleField& f, int axis) {
  if (axis < 0 || axis >= f.domain().dimension()) throw ShapeError("partial_derivative: axis out of range");
  BundleField out = f.zeros_like(f.fiber());
  const int slot = f.domain().active_slot(axis);
  if (slot < 0) return out;
  const auto grid = grid_of(f.domain());
  std::vector<std::vector<double>> comps(std::size_t(f.fiber_size()));
  parallel_for(comps.size(), [&](std::size_t c) {
    comps[c] = derivative_values(*grid, grid->forward(f.component(int(c))), slot);
  });
  for (int c = 0; c < f.fiber_size(); ++c) out.set_component(c, comps[std::size_t(c)]);
  return out;
}

BundleField harmonic_projection(const BundleField& f) {
  BundleField out(f.domain(), f.fiber(), 0);
  const int w = f.fiber_size();
  Vector mean = Vector::Zero(w);
  for (std::size_t k = 0; k < f.node_count(); ++k)
    for (int c = 0; c < w; ++c) mean[c] += f.at(k, c);
  mean /= double(f.node_count());
  auto ov = out.mutable_values();
  for (std::size_t k = 0; k < f.node_count(); ++k)
    for (int c = 0; c < w; ++c) ov[k * std::size_t(w) + std::size_t(c)] = mean[c];
  return out;
}

BundleField rough_laplacian(const BundleField& f) {
  const TorusDomain& d = f.domain();
  const auto grid = grid_of(d);
  const Matrix ginv = active_inverse_metric(d, d.metric());
  const int s_count = d.active_count();
  std::vector<double> symbol(grid->mode_count());
  for (std::size_t m = 0; m < symbol.size(); ++m) {
    double acc = 0.0;
    for (int a = 0; a < s_count; ++a)
      for (int b = 0; b < s_count; ++b)
        acc += ginv(a, b) * grid->derivative_wavenumber(m, a) * grid->derivative_wavenumber(m, b);
    symbol[m] = acc;
  }
  BundleField out = f.zeros_like(f.fiber());
  std::vector<std::vector<double>> comps(std::size_t(f.fiber_size()));
  parallel_for(comps.size(), [&](std::size_t c) {
    Spectrum spec = grid->forward(f.component(int(c)));
    for (std::size_t m = 0; m < spec.size(); ++m) spec[m] *= symbol[m];
    comps[c] = grid->inverse(spec);
  });
  for (int c = 0; c < f.fiber_size(); ++c) out.set_component(c, comps[std::size_t(c)]);
  return out;
}

BundleField random_band_limited(const TorusDomain& domain, FiberKind fiber, int band_limit,
                                double amplitude, std::mt19937_64& rng) {
  BundleField out(domain, fiber, band_limit);
  const int s_count = domain.active_count();
  const auto grid = grid_of(domain);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Frequency box in lexicographic order; a mode is a representative when its
  // first non-zero entry is positive (or it is zero).
  std::vector<std::vector<int>> box;
  std::vector<int> k(static_cast<std::size_t>(s_count), -band_limit);
  for (;;) {
    box.push_back(k);
    int s = s_count - 1;
    while (s >= 0 && k[std::size_t(s)] == band_limit) k[std::size_t(s--)] = -band_limit;
    if (s < 0) break;
    ++k[std::size_t(s)];
  }
  auto representative = [](const std::vector<int>& f) {
    for (int v : f)
      if (v != 0) return v > 0;
    return true;
  };

  for (int c = 0; c < out.fiber_size(); ++c) {
    std::vector<std::pair<std::vector<int>, std::complex<double>>> coeffs;
    double l1 = 0.0;
    for (const auto& f : box) {
      if (!representative(f)) continue;
      const bool zero = std::all_of(f.begin(), f.end(), [](int v) { return v == 0; });
      const double a = normal(rng);
      const double b = zero ? 0.0 : normal(rng);
      // a cos + b sin = c e^{ikx} + conj(c) e^{-ikx} with c = (a - ib)/2
      const std::complex<double> ck = zero ? std::complex<double>(a, 0.0) : std::complex<double>(a, -b) * 0.5;
      l1 += zero ? std::abs(a) : std::hypot(a, b);
      coeffs.emplace_back(f, ck);
    }
    const double scale = l1 > 0.0 ? amplitude / l1 : 0.0;
    Spectrum spec(grid->mode_count(), 0.0);
    const double nodes = double(grid->node_count());
    for (const auto& [f, ck] : coeffs) {
      std::vector<int> neg(f.size());
      std::transform(f.begin(), f.end(), neg.begin(), [](int v) { return -v; });
      const std::size_t pos = grid->mode_index(f);
      const std::size_t npos = grid->mode_index(neg);
      if (pos != SpectralGrid::npos) spec[pos] += ck * scale * nodes;
      if (npos != SpectralGrid::npos && npos != pos) spec[npos] += std::conj(ck) * scale * nodes;
    }
    out.set_component(c, grid->inverse(spec));
  }
  return out;
}

BundleField random_metric(const TorusDomain& domain, int band_limit, double amplitude,
                          std::mt19937_64& rng) {
  const BundleField perturbation = random_band_limited(domain, FiberKind::sym2(), band_limit, amplitude, rng);
  const Vector g0 = SymTensorValue(domain.metric().entries()).packed();
  std::vector<double> values(perturbation.values().begin(), perturbation.values().end());
  const std::size_t m = std::size_t(g0.size());
  for (std::size_t k = 0; k < perturbation.node_count(); ++k)
    for (std::size_t c = 0; c < m; ++c) values[k * m + c] += g0[Eigen::Index(c)];
  return BundleField(domain, FiberKind::metric(), band_limit, std::move(values));
}

BundleField constant_metric_field(const TorusDomain& domain) {
  return constant_field(domain, FiberKind::metric(), SymTensorValue(domain.metric().entries()).packed());
}

BundleField apply_fiber_map(const Matrix& map, const BundleField& f, FiberKind out_fiber) {
  return apply_node_maps({map}, f, out_fiber);
}

FieldInterpolator::FieldInterpolator(const BundleField& f)
    : domain_(f.domain()), fiber_size_(f.fiber_size()) {
  const auto grid = grid_of(domain_);
  const auto spectra = component_spectra(f);
  const int s_count = domain_.active_count();
  const int nyquist = domain_.resolution() / 2;
  double peak = 0.0;
  for (const auto& s : spectra)
    for (const auto& v : s) peak = std::max(peak, std::abs(v));
  const double cutoff = 1e-14 * peak;
  const double nodes = double(grid->node_count());
  for (std::size_t m = 0; m < grid->mode_count(); ++m) {
    std::vector<int> freq(static_cast<std::size_t>(s_count));
    bool has_nyquist = false;
    for (int s = 0; s < s_count; ++s) {
      freq[std::size_t(s)] = grid->frequency(m, s);
      has_nyquist |= std::abs(freq[std::size_t(s)]) == nyquist;
    }
    if (has_nyquist) continue;
    bool keep = false;
    for (const auto& s : spectra) keep |= std::abs(s[m]) > cutoff;
    if (!keep) continue;
    // Modes with a positive last frequency stand for their conjugate too.
    const double weight = (s_count == 0 || freq.back() == 0) ? 1.0 : 2.0;
    std::vector<std::complex<double>> c(spectra.size());
    for (std::size_t i = 0; i < spectra.size(); ++i) c[i] = spectra[i][m] * (weight / nodes);
    frequencies_.push_back(std::move(freq));
    coefficients_.push_back(std::move(c));
  }
}

Vector FieldInterpolator::operator()(const Vector& point) const {
  if (point.size() != domain_.dimension()) throw ShapeError("interpolation point has the wrong dimension");
  Vector out = Vector::Zero(fiber_size_);
  for (std::size_t m = 0; m < frequencies_.size(); ++m) {
    double phase = 0.0;
    for (std::size_t s = 0; s < frequencies_[m].size(); ++s)
      phase += frequencies_[m][s] * point[domain_.active_axes()[s]];
    const std::complex<double> e(std::cos(phase), std::sin(phase));
    for (int c = 0; c < fiber_size_; ++c) out[c] += (coefficients_[m][std::size_t(c)] * e).real();
  }
  return out;
}

// --- exterior calculus -------------------------------------------------------------

BundleField exterior_d(const BundleField& f) {
  const int n = f.domain().dimension();
  const int k = f.fiber().form_degree();
  if (k >= n) throw ShapeError("exterior_d: degree " + std::to_string(k) + " is already top degree");
  const auto grid = grid_of(f.domain());
  const auto spectra = component_spectra(f);
  const auto& targets = subsets(n, k + 1);
  BundleField out = f.zeros_like(FiberKind::form(k + 1));
  std::vector<std::vector<double>> comps(targets.size());
  parallel_for(targets.size(), [&](std::size_t t) {
    const IndexMask J = targets[t];
    Spectrum acc(grid->mode_count(), 0.0);
    bool touched = false;
    for (int s = 0; s < f.domain().active_count(); ++s) {
      const int axis = f.domain().active_axes()[std::size_t(s)];
      const IndexMask bit = IndexMask(1u << axis);
      if (!(J & bit)) continue;
      const IndexMask I = J & IndexMask(~bit);
      // dx^a ^ dx^I = merge_sign(a, I) dx^J
      add_derivative(*grid, spectra[std::size_t(subset_position(n, I))], s, merge_sign(bit, I), acc);
      touched = true;
    }
    comps[t] = touched ? grid->inverse(acc) : std::vector<double>(grid->node_count(), 0.0);
  });
  for (std::size_t t = 0; t < targets.size(); ++t) out.set_component(int(t), comps[t]);
  return out;
}

BundleField codifferential(const BundleField& f) {
  if (f.fiber().is_symmetric()) return sym_divergence(f, constant_geometry(f.domain().metric()));
  return form_codifferential(f, {f.domain().metric()});
}

BundleField codifferential(const BundleField& f, const BundleField& metric) {
  require_metric_field(f, metric);
  if (f.fiber().is_symmetric()) return sym_divergence(f, field_geometry(metric));
  metric.validate_metric();
  return form_codifferential(f, node_metrics(metric));
}

BundleField hodge_laplacian(const BundleField& f) {
  if (f.fiber().kind == FiberKind::Kind::Structure) {
    std::vector<BundleField> parts = structure_form_fields(f);
    for (auto& p : parts) p = hodge_laplacian(p);
    return structure_from_form_fields(f, parts);
  }
  const int n = f.domain().dimension();
  const int k = f.fiber().form_degree();
  BundleField out = f.zeros_like(f.fiber());
  if (k > 0) out += exterior_d(codifferential(f));
  if (k < n) out += codifferential(exterior_d(f));
  return out.with_band_limit(f.band_limit());
}

BundleField hodge_laplacian(const BundleField& f, const BundleField& metric) {
  require_metric_field(f, metric);
  const TorusDomain flat = f.domain().with_metric(require_constant_metric(metric));
  return rehome(hodge_laplacian(rehome(f, flat)), f.domain());
}

// --- symmetric tensors -------------------------------------------------------------

BundleField lichnerowicz_laplacian(const BundleField& h) {
  if (!h.fiber().is_symmetric()) throw ShapeError("Lichnerowicz Laplacian expects a symmetric 2-tensor field");
  // At a flat metric the curvature terms vanish.
  return rough_laplacian(h.relabeled(FiberKind::sym2()));
}

BundleField lichnerowicz_laplacian(const BundleField& h, const BundleField& metric) {
  require_metric_field(h, metric);
  const TorusDomain flat = h.domain().with_metric(require_constant_metric(metric));
  return rehome(lichnerowicz_laplacian(rehome(h, flat)), h.domain());
}

BundleField delta_star(const BundleField& xi) {
  return sym_delta_star(xi, constant_geometry(xi.domain().metric()));
}

BundleField delta_star(const BundleField& xi, const BundleField& metric) {
  require_metric_field(xi, metric);
  return sym_delta_star(xi, field_geometry(metric));
}

BundleField metric_trace(const BundleField& h) {
  return sym_trace(h, constant_geometry(h.domain().metric()));
}

BundleField metric_trace(const BundleField& h, const BundleField& metric) {
  require_metric_field(h, metric);
  return sym_trace(h, field_geometry(metric));
}

namespace {
BianchiTerms bianchi_terms_with(const BundleField& h, const Geometry& geo) {
  BianchiTerms out{2.0 * sym_divergence(h, geo), BundleField(h.domain(), FiberKind::one_form(), h.band_limit())};
  const BundleField tr = sym_trace(h, geo);
  const auto grid = grid_of(h.domain());
  const Spectrum spec = grid->forward(tr.component(0));
  for (int s = 0; s < h.domain().active_count(); ++s) {
    out.gradient.set_component(h.domain().active_axes()[std::size_t(s)], derivative_values(*grid, spec, s));
  }
  return out;
}
}  // namespace

BundleField bianchi_operator(const BundleField& h) {
  BianchiTerms t = bianchi_terms_with(h, constant_geometry(h.domain().metric()));
  return t.divergence + t.gradient;
}

BundleField bianchi_operator(const BundleField& h, const BundleField& metric) {
  BianchiTerms t = bianchi_terms(h, metric);
  return t.divergence + t.gradient;
}

BianchiTerms bianchi_terms(const BundleField& h, const BundleField& metric) {
  require_metric_field(h, metric);
  return bianchi_terms_with(h, field_geometry(metric));
}

namespace {

void require_ricci_input(const BundleField& metric) {
  if (metric.fiber().kind != FiberKind::Kind::Metric) throw ShapeError("ricci expects a metric field");
  const TorusDomain& d = metric.domain();
  if (metric.band_limit() > d.resolution() / 4) {
    throw NumericalError("metric band limit " + std::to_string(metric.band_limit()) +
                         " exceeds the aliasing budget resolution/4 = " + std::to_string(d.resolution() / 4));
  }
}

BundleField ricci_with(const BundleField& metric, const Geometry& geo) {
  const TorusDomain& d = metric.domain();
  const int n = geo.n, m = geo.m;
  BundleField out = metric.zeros_like(FiberKind::sym2());
  if (geo.constant) return out;

  const auto grid = grid_of(d);
  const std::size_t nodes = metric.node_count();
  const int s_count = d.active_count();

  // V_i = Gamma^k_ik
  std::vector<std::vector<double>> trace_gamma(static_cast<std::size_t>(n), std::vector<double>(nodes, 0.0));
  parallel_for(std::size_t(n), [&](std::size_t i) {
    for (int k = 0; k < n; ++k) {
      const auto& g = geo.gamma[std::size_t(k * m + sym_index(n, int(i), k))];
      for (std::size_t node = 0; node < nodes; ++node) trace_gamma[i][node] += g[node];
    }
  });
  std::vector<Spectrum> trace_spec(static_cast<std::size_t>(n));
  parallel_for(std::size_t(n), [&](std::size_t i) { trace_spec[i] = grid->forward(trace_gamma[i]); });

  // Linear part: d_k Gamma^k_ij - 1/2 (d_j V_i + d_i V_j), accumulated spectrally.
  std::vector<std::vector<double>> linear(static_cast<std::size_t>(m));
  parallel_for(std::size_t(m), [&](std::size_t c) {
    int i = 0, j = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        if (sym_index(n, a, b) == int(c)) i = a, j = b;
    Spectrum acc(grid->mode_count(), 0.0);
    for (int s = 0; s < s_count; ++s) {
      const int k = d.active_axes()[std::size_t(s)];
      add_derivative(*grid, grid->forward(geo.gamma[std::size_t(k * m) + c]), s, 1.0, acc);
    }
    const int sj = d.active_slot(j), si = d.active_slot(i);
    if (sj >= 0) add_derivative(*grid, trace_spec[std::size_t(i)], sj, -0.5, acc);
    if (si >= 0) add_derivative(*grid, trace_spec[std::size_t(j)], si, -0.5, acc);
    linear[c] = grid->inverse(acc);
  });

  auto ov = out.mutable_values();
  parallel_nodes(nodes, [&](std::size_t node) {
    thread_local std::vector<double> G, V;
    G.resize(std::size_t(n * n * n));
    auto at = [&](int k, int i, int j) -> double& { return G[std::size_t((k * n + i) * n + j)]; };
    for (int k = 0; k < n; ++k)
      for (int ij = 0; ij < n * n; ++ij)
        G[std::size_t(k * n * n + ij)] = geo.gamma[std::size_t(k * m + geo.sym[std::size_t(ij)])][node];
    V.assign(std::size_t(n), 0.0);
    for (int l = 0; l < n; ++l)
      for (int k = 0; k < n; ++k) V[std::size_t(l)] += at(k, k, l);
    for (int i = 0; i < n; ++i) {
      for (int j = i; j < n; ++j) {
        double q = 0.0;
        for (int l = 0; l < n; ++l) {
          q += V[std::size_t(l)] * at(l, i, j);
          for (int k = 0; k < n; ++k) q -= at(k, j, l) * at(l, i, k);
        }
        const int c = sym_index(n, i, j);
        ov[node * std::size_t(m) + std::size_t(c)] = linear[std::size_t(c)][node] + q;
      }
    }
  });
  return out;
}

}  // namespace

BundleField ricci(const BundleField& metric) {
  require_ricci_input(metric);
  return ricci_with(metric, field_geometry(metric));
}

RicciBianchi ricci_with_bianchi(const BundleField& metric) {
  require_ricci_input(metric);
  const Geometry geo = field_geometry(metric);
  BundleField ric = ricci_with(metric, geo);
  BianchiTerms terms = bianchi_terms_with(ric, geo);
  return {std::move(ric), std::move(terms)};
}

BundleField linearized_ricci(const BundleField& h) {
  BundleField out = lichnerowicz_laplacian(h);
  out -= delta_star(bianchi_operator(h));
  out *= 0.5;
  return out;
}

// --- structures ----------------------------------------------------------------------

BundleField dm_field(const GStructureValue& chi, const BundleField& s) {
  const FiberKind expected = FiberKind::structure(chi.tag(), chi.parameter());
  if (!(s.fiber() == expected)) throw ShapeError("dm_field: field fiber does not match the structure");
  const MetricDerivative md(chi);
  const TangentSubspace tangent = tangent_space(chi);
  const int w = s.fiber_size();
  const int n = s.domain().dimension();
  BundleField out = s.zeros_like(FiberKind::sym2());
  auto ov = out.mutable_values();
  const Matrix& map = md.matrix();
  parallel_nodes(s.node_count(), [&](std::size_t node) {
    const Eigen::Map<const Vector> e(s.node(node).data(), w);
    const double dist = tangent.distance(e);
    if (dist > 1e-8 * std::max(1.0, e.norm())) {
      throw TangentSpaceError("field value at " + coordinates_text(s.domain(), node) +
                              " is not tangent to the orbit (distance " + std::to_string(dist) + ")");
    }
    Eigen::Map<Vector>(ov.data() + node * std::size_t(n * (n + 1) / 2), map.rows()) = map * e;
  });
  return out;
}

BundleField induced_metric_field(const BundleField& structure) {
  if (structure.fiber().kind != FiberKind::Kind::Structure) throw ShapeError("expected a structure field");
  const GStructureValue shape = model_form(structure.fiber().group, structure.fiber().group_parameter);
  const int n = structure.domain().dimension();
  const int w = structure.fiber_size();
  const std::size_t m = std::size_t(n * (n + 1) / 2);
  std::vector<double> values(structure.node_count() * m);
  parallel_for(structure.node_count(), [&](std::size_t node) {
    const GStructureValue chi = shape.with_stacked(Eigen::Map<const Vector>(structure.node(node).data(), w));
    const OrbitSolveResult r = solve_orbit(chi);
    if (!r.converged) {
      throw OrbitError("structure leaves the model orbit at " + coordinates_text(structure.domain(), node) +
                       " (residual " + std::to_string(r.residual) + ")");
    }
    const Matrix& A = r.transform.entries();
    const Vector g = SymTensorValue(A.transpose() * A).packed();
    std::copy(g.data(), g.data() + m, values.begin() + std::ptrdiff_t(node * m));
  });
  return BundleField(structure.domain(), FiberKind::metric(), structure.band_limit(), std::move(values));
}

std::vector<BundleField> structure_form_fields(const BundleField& structure) {
  if (structure.fiber().kind != FiberKind::Kind::Structure) throw ShapeError("expected a structure field");
  std::vector<BundleField> out;
  const int width = structure.fiber_size();
  const auto sv = structure.values();
  for (const FormSlot& slot : structure_slots(structure.fiber())) {
    const int parts = slot.complexified ? 2 : 1;
    for (int part = 0; part < parts; ++part) {
      BundleField f = structure.zeros_like(FiberKind::form(slot.degree));
      auto fv = f.mutable_values();
      for (std::size_t node = 0; node < structure.node_count(); ++node) {
        for (int i = 0; i < slot.size; ++i) {
          const int src = slot.complexified ? slot.offset + 2 * i + part : slot.offset + i;
          fv[node * std::size_t(slot.size) + std::size_t(i)] = sv[node * std::size_t(width) + std::size_t(src)];
        }
      }
      out.push_back(std::move(f));
    }
  }
  return out;
}

BundleField structure_from_form_fields(const BundleField& like, const std::vector<BundleField>& parts) {
  if (like.fiber().kind != FiberKind::Kind::Structure) throw ShapeError("expected a structure field");
  return pack_structure(like, parts);
}

bool TorsionReport::torsion_free(double tolerance) const {
  return std::all_of(residuals.begin(), residuals.end(),
                     [&](const TorsionResidual& r) { return r.residual <= tolerance; });
}

double TorsionReport::max_residual() const {
  double out = 0.0;
  for (const auto& r : residuals) out = std::max(out, r.residual);
  return out;
}

TorsionReport torsion_residuals(const BundleField& structure) {
  if (structure.fiber().kind != FiberKind::Kind::Structure) throw ShapeError("expected a structure field");
  const GroupTag tag = structure.fiber().group;
  const std::vector<BundleField> forms = structure_form_fields(structure);
  TorsionReport report{tag, {}};

  if (tag == GroupTag::G2) {
    // The sign test is cheaper and sharper than the orbit solve for 3-forms.
    const std::size_t size = std::size_t(forms[0].fiber_size());
    parallel_for(structure.node_count(), [&](std::size_t node) {
      const FormValue x(7, 3, Eigen::Map<const Vector>(forms[0].node(node).data(), Eigen::Index(size)));
      OrbitSign sign;
      try {
        sign = orbit_membership(x);
      } catch (const OrbitError& e) {
        throw OrbitError(std::string(e.what()) + " at " + coordinates_text(structure.domain(), node));
      }
      if (sign != OrbitSign::Positive) {
        throw OrbitError("3-form is not positive at " + coordinates_text(structure.domain(), node));
      }
    });
  }
  // Throws OrbitError with node coordinates when a node leaves the orbit.
  const BundleField metric = induced_metric_field(structure);

  switch (tag) {
    case GroupTag::Spin7:
      report.residuals.push_back({"dpsi", rms(exterior_d(forms[0]))});
      break;
    case GroupTag::G2:
      report.residuals.push_back({"dphi", rms(exterior_d(forms[0]))});
      report.residuals.push_back({"dstar_phi", rms(codifferential(forms[0], metric))});
      break;
    case GroupTag::SU:
      report.residuals.push_back({"dRe_Omega", rms(exterior_d(forms[0]))});
      report.residuals.push_back({"dIm_Omega", rms(exterior_d(forms[1]))});
      report.residuals.push_back({"domega", rms(exterior_d(forms[2]))});
      break;
    case GroupTag::Sp:
      report.residuals.push_back({"domega_I", rms(exterior_d(forms[0]))});
      report.residuals.push_back({"domega_J", rms(exterior_d(forms[1]))});
      report.residuals.push_back({"domega_K", rms(exterior_d(forms[2]))});
      break;
  }
  return report;
}

// --- mode-space rank oracle ------------------------------------------------------------

int kernel_dimension(const TorusDomain& domain, FiberKind fiber, int band_limit, const FieldOperator& op) {
  const int s_count = domain.active_count();
  std::vector<std::vector<int>> reps;
  std::vector<int> k(static_cast<std::size_t>(s_count), -band_limit);
  for (;;) {
    bool rep = true;
    for (int v : k)
      if (v != 0) {
        rep = v > 0;
        break;
      }
    if (rep) reps.push_back(k);
    int s = s_count - 1;
    while (s >= 0 && k[std::size_t(s)] == band_limit) k[std::size_t(s--)] = -band_limit;
    if (s < 0) break;
    ++k[std::size_t(s)];
  }

  const BundleField probe(domain, fiber, band_limit);
  const int width = probe.fiber_size();
  const std::size_t nodes = domain.node_count();
  // Real trigonometric basis functions on the grid.
  std::vector<std::vector<double>> functions;
  for (const auto& f : reps) {
    std::vector<double> c(nodes), s(nodes);
    bool zero = std::all_of(f.begin(), f.end(), [](int v) { return v == 0; });
    for (std::size_t node = 0; node < nodes; ++node) {
      const Vector x = domain.node_coordinates(node);
      double phase = 0.0;
      for (int a = 0; a < s_count; ++a) phase += f[std::size_t(a)] * x[domain.active_axes()[std::size_t(a)]];
      c[node] = std::cos(phase);
      s[node] = std::sin(phase);
    }
    functions.push_back(std::move(c));
    if (!zero) functions.push_back(std::move(s));
  }

  const std::size_t columns = functions.size() * std::size_t(width);
  std::vector<Vector> images(columns);
  parallel_for(columns, [&](std::size_t col) {
    BundleField basis(domain, fiber, band_limit);
    basis.set_component(int(col % std::size_t(width)), functions[col / std::size_t(width)]);
    const BundleField image = op(basis);
    images[col] = Eigen::Map<const Vector>(image.values().data(), Eigen::Index(image.values().size()));
  });
  const Eigen::Index rows = images.empty() ? 0 : images[0].size();
  Matrix M(rows, Eigen::Index(columns));
  for (std::size_t col = 0; col < columns; ++col) {
    if (images[col].size() != rows) throw ShapeError("kernel_dimension: operator output size varies");
    M.col(Eigen::Index(col)) = images[col];
  }
  if (rows == 0) return int(columns);
  const Eigen::BDCSVD<Matrix> svd(M);
  const Vector sv = svd.singularValues();
  const double top = sv.size() ? sv[0] : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-9 * std::max(top, 1e-300)) ++rank;
  if (top == 0.0) rank = 0;
  return int(columns) - rank;
}

}  // namespace holokit
