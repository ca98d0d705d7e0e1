#pragma once

// Real-to-complex FFTs over the active axes of a torus grid and the
// associated Fourier multipliers. Backed by FFTW.

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include "holokit/torus_domain.hpp"

namespace holokit {

using Spectrum = std::vector<std::complex<double>>;

class SpectralGrid {
 public:
  /// Shared, cached instance for (active axis count, resolution).
  static std::shared_ptr<const SpectralGrid> get(int active_count, int resolution);

  SpectralGrid(int active_count, int resolution);
  ~SpectralGrid();
  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  int active_count() const { return active_count_; }
  int resolution() const { return resolution_; }
  std::size_t node_count() const { return node_count_; }
  /// Length of the half spectrum.
  std::size_t mode_count() const { return mode_count_; }

  /// Signed integer frequency of a half-spectrum mode along an active slot.
  int frequency(std::size_t mode, int slot) const;
  /// Frequency used for differentiation: the Nyquist frequency maps to 0.
  double derivative_wavenumber(std::size_t mode, int slot) const {
    return wavenumbers_[mode * std::size_t(active_count_) + std::size_t(slot)];
  }
  /// Largest |frequency| over slots.
  int max_frequency(std::size_t mode) const;
  /// Half-spectrum position of an integer frequency vector, or npos when it
  /// is not stored (last slot negative). Frequencies are taken mod N.
  std::size_t mode_index(std::span<const int> frequencies) const;
  static constexpr std::size_t npos = std::size_t(-1);

  void forward(std::span<const double> values, std::span<std::complex<double>> spectrum) const;
  /// Normalised inverse (forward then inverse is the identity).
  void inverse(std::span<const std::complex<double>> spectrum, std::span<double> values) const;

  Spectrum forward(std::span<const double> values) const;
  std::vector<double> inverse(const Spectrum& spectrum) const;

 private:
  struct Plans;
  int active_count_;
  int resolution_;
  std::size_t node_count_;
  std::size_t mode_count_;
  std::vector<double> wavenumbers_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace holokit
