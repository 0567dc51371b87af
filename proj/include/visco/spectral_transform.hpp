#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <vector>

#include "visco/spectral_basis.hpp"

typedef struct fftw_plan_s* fftw_plan;

namespace visco {

/// Real-to-half-complex FFT on the G^N collocation grid plus the lookup from
/// basis wavevectors to half-spectrum slots. `forward` returns Fourier
/// coefficients (scaled by 1/G^N); `backward` is the unscaled inverse and
/// overwrites its input.
class SpectralTransform {
 public:
  struct Wave {
    std::array<int, 3> xi{};
    double lambda = 0.0;
    std::size_t first_mode = 0;
    std::size_t index = 0;       // half-spectrum slot of xi or -xi
    bool flip = false;           // slot holds -xi, so the value is conjugated
    std::ptrdiff_t partner = -1; // slot of -xi when both lie in the stored half
  };

  SpectralTransform(int N, int G, const std::vector<WaveMode>& modes);
  ~SpectralTransform();
  SpectralTransform(const SpectralTransform&) = delete;
  SpectralTransform& operator=(const SpectralTransform&) = delete;

  std::size_t real_size() const { return real_size_; }
  std::size_t complex_size() const { return complex_size_; }
  const std::vector<Wave>& waves() const { return waves_; }

  void forward(const double* in, std::complex<double>* out) const;
  void backward(std::complex<double>* in, double* out) const;

  std::complex<double> get(const std::complex<double>* half, const Wave& w) const;
  void set(std::complex<double>* half, const Wave& w, std::complex<double> v) const;

  /// Signed wavenumber of a half-spectrum slot.
  std::array<int, 3> wavenumber(std::size_t flat) const;
  bool is_nyquist(const std::array<int, 3>& k) const;

 private:
  std::size_t flat_index(const std::array<int, 3>& k) const;

  int N_;
  int G_;
  int half_last_ = 0;
  std::size_t real_size_ = 0;
  std::size_t complex_size_ = 0;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
  std::vector<Wave> waves_;
};

}  // namespace visco
