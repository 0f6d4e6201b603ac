#pragma once

// Owning 2D complex FFT on an FFTW-aligned buffer. Plans are created with
// FFTW_ESTIMATE so transforms are reproducible bit-for-bit for a given size.

#include <complex>
#include <cstddef>
#include <mutex>
#include <new>
#include <span>
#include <stdexcept>

#include <fftw3.h>

namespace hexcav {

namespace detail {
// FFTW's planner is not reentrant.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

class Fft2d {
 public:
  using cdouble = std::complex<double>;

  // Row-major layout: index = iy * nx + ix.
  Fft2d(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    data_ = static_cast<cdouble*>(fftw_malloc(sizeof(cdouble) * nx * ny));
    if (!data_) throw std::bad_alloc();
    auto* raw = reinterpret_cast<fftw_complex*>(data_);
    forward_ = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), raw, raw, FFTW_FORWARD,
                                FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), raw, raw,
                                 FFTW_BACKWARD, FFTW_ESTIMATE);
    if (!forward_ || !backward_) {
      destroy();
      throw std::runtime_error("FFTW plan creation failed");
    }
  }

  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;
  ~Fft2d() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    destroy();
  }

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return nx_ * ny_; }

  std::span<cdouble> buffer() noexcept { return {data_, size()}; }
  std::span<const cdouble> buffer() const noexcept { return {data_, size()}; }

  void forward() { fftw_execute(forward_); }

  // Normalized inverse.
  void backward() {
    fftw_execute(backward_);
    const double scale = 1.0 / static_cast<double>(size());
    for (std::size_t i = 0; i < size(); ++i) data_[i] *= scale;
  }

 private:
  // Caller holds the planner mutex.
  void destroy() {
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    if (data_) fftw_free(data_);
    forward_ = backward_ = nullptr;
    data_ = nullptr;
  }

  std::size_t nx_;
  std::size_t ny_;
  cdouble* data_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

/// Real-to-complex 2D FFT. The spectrum holds ny rows of nx/2 + 1 modes
/// (Hermitian half along x). Both transforms work out of place between the
/// real and spectral buffers; the inverse overwrites the spectral buffer.
class RealFft2d {
 public:
  using cdouble = std::complex<double>;

  RealFft2d(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny), nh_(nx / 2 + 1) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    real_ = static_cast<double*>(fftw_malloc(sizeof(double) * nx * ny));
    spec_ = static_cast<cdouble*>(fftw_malloc(sizeof(cdouble) * nh_ * ny));
    if (!real_ || !spec_) {
      destroy();
      throw std::bad_alloc();
    }
    auto* raw = reinterpret_cast<fftw_complex*>(spec_);
    forward_ = fftw_plan_dft_r2c_2d(static_cast<int>(ny), static_cast<int>(nx), real_, raw, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(static_cast<int>(ny), static_cast<int>(nx), raw, real_, FFTW_ESTIMATE);
    if (!forward_ || !backward_) {
      destroy();
      throw std::runtime_error("FFTW plan creation failed");
    }
  }

  RealFft2d(const RealFft2d&) = delete;
  RealFft2d& operator=(const RealFft2d&) = delete;
  ~RealFft2d() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    destroy();
  }

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t half() const noexcept { return nh_; }
  std::size_t spectrum_size() const noexcept { return nh_ * ny_; }

  std::span<double> real() noexcept { return {real_, nx_ * ny_}; }
  std::span<cdouble> spectrum() noexcept { return {spec_, spectrum_size()}; }

  void forward() { fftw_execute(forward_); }

  // Normalized inverse.
  void backward() {
    fftw_execute(backward_);
    const double scale = 1.0 / static_cast<double>(nx_ * ny_);
    for (std::size_t i = 0; i < nx_ * ny_; ++i) real_[i] *= scale;
  }

 private:
  void destroy() {
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
    if (real_) fftw_free(real_);
    if (spec_) fftw_free(spec_);
    forward_ = backward_ = nullptr;
    real_ = nullptr;
    spec_ = nullptr;
  }

  std::size_t nx_;
  std::size_t ny_;
  std::size_t nh_;
  double* real_ = nullptr;
  cdouble* spec_ = nullptr;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace hexcav
