#include "holokit/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <mutex>

#include "holokit/errors.hpp"

namespace holokit {

namespace {
// The FFTW planner is not thread safe; execution with the new-array
// interface is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct SpectralGrid::Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

std::shared_ptr<const SpectralGrid> SpectralGrid::get(int active_count, int resolution) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, std::shared_ptr<const SpectralGrid>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[{active_count, resolution}];
  if (!slot) slot = std::make_shared<const SpectralGrid>(active_count, resolution);
  return slot;
}

SpectralGrid::SpectralGrid(int active_count, int resolution)
    : active_count_(active_count),
      resolution_(resolution),
      node_count_(1),
      mode_count_(1),
      plans_(std::make_unique<Plans>()) {
  if (active_count < 0 || active_count > 4) throw ShapeError("SpectralGrid: 0..4 active axes");
  if (resolution < 2 || (resolution & (resolution - 1))) {
    throw ShapeError("SpectralGrid: resolution must be a power of two");
  }
  if (active_count == 0) return;
  for (int s = 0; s < active_count; ++s) node_count_ *= std::size_t(resolution);
  mode_count_ = node_count_ / std::size_t(resolution) * std::size_t(resolution / 2 + 1);

  wavenumbers_.resize(mode_count_ * std::size_t(active_count));
  for (std::size_t m = 0; m < mode_count_; ++m) {
    for (int s = 0; s < active_count; ++s) {
      const int k = frequency(m, s);
      wavenumbers_[m * std::size_t(active_count) + std::size_t(s)] =
          (std::abs(k) == resolution / 2) ? 0.0 : double(k);
    }
  }

  std::vector<int> dims(active_count, resolution);
  std::vector<double> real(node_count_);
  std::vector<std::complex<double>> complex(mode_count_);
  auto* cplx = reinterpret_cast<fftw_complex*>(complex.data());
  std::lock_guard lock(planner_mutex());
  plans_->forward = fftw_plan_dft_r2c(active_count, dims.data(), real.data(), cplx,
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
  plans_->inverse = fftw_plan_dft_c2r(active_count, dims.data(), cplx, real.data(),
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (!plans_->forward || !plans_->inverse) throw NumericalError("FFTW planning failed");
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard lock(planner_mutex());
  if (plans_->forward) fftw_destroy_plan(plans_->forward);
  if (plans_->inverse) fftw_destroy_plan(plans_->inverse);
}

int SpectralGrid::frequency(std::size_t mode, int slot) const {
  const std::size_t half = std::size_t(resolution_ / 2 + 1);
  std::size_t digit;
  if (slot == active_count_ - 1) {
    digit = mode % half;
  } else {
    std::size_t rest = mode / half;
    for (int s = active_count_ - 2; s > slot; --s) rest /= std::size_t(resolution_);
    digit = rest % std::size_t(resolution_);
  }
  const int i = static_cast<int>(digit);
  return i <= resolution_ / 2 ? i : i - resolution_;
}

int SpectralGrid::max_frequency(std::size_t mode) const {
  int out = 0;
  for (int s = 0; s < active_count_; ++s) out = std::max(out, std::abs(frequency(mode, s)));
  return out;
}

std::size_t SpectralGrid::mode_index(std::span<const int> frequencies) const {
  if (int(frequencies.size()) != active_count_) throw ShapeError("mode_index: wrong rank");
  if (active_count_ == 0) return 0;
  const int n = resolution_;
  std::size_t index = 0;
  for (int s = 0; s < active_count_ - 1; ++s) {
    index = index * std::size_t(n) + std::size_t(((frequencies[s] % n) + n) % n);
  }
  const int last = ((frequencies[active_count_ - 1] % n) + n) % n;
  if (last > n / 2) return npos;
  return index * std::size_t(n / 2 + 1) + std::size_t(last);
}

void SpectralGrid::forward(std::span<const double> values,
                           std::span<std::complex<double>> spectrum) const {
  if (values.size() != node_count_ || spectrum.size() != mode_count_) {
    throw ShapeError("SpectralGrid::forward: size mismatch");
  }
  if (active_count_ == 0) {
    spectrum[0] = values[0];
    return;
  }
  // r2c does not modify its input, but the FFTW signature is non-const.
  fftw_execute_dft_r2c(plans_->forward, const_cast<double*>(values.data()),
                       reinterpret_cast<fftw_complex*>(spectrum.data()));
}

void SpectralGrid::inverse(std::span<const std::complex<double>> spectrum,
                           std::span<double> values) const {
  if (values.size() != node_count_ || spectrum.size() != mode_count_) {
    throw ShapeError("SpectralGrid::inverse: size mismatch");
  }
  if (active_count_ == 0) {
    values[0] = spectrum[0].real();
    return;
  }
  // c2r destroys its input.
  std::vector<std::complex<double>> scratch(spectrum.begin(), spectrum.end());
  fftw_execute_dft_c2r(plans_->inverse, reinterpret_cast<fftw_complex*>(scratch.data()),
                       values.data());
  const double scale = 1.0 / double(node_count_);
  for (double& v : values) v *= scale;
}

Spectrum SpectralGrid::forward(std::span<const double> values) const {
  Spectrum out(mode_count_);
  forward(values, out);
  return out;
}

std::vector<double> SpectralGrid::inverse(const Spectrum& spectrum) const {
  std::vector<double> out(node_count_);
  inverse(spectrum, out);
  return out;
}

}  // namespace holokit
