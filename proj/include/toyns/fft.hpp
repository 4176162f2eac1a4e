#pragma once

// Thin RAII wrapper over FFTW's complex 3D transform. Plans use
// FFTW_ESTIMATE on fftw_malloc'd buffers so the chosen codelets, and hence
// the rounding, do not vary between runs.

#include <fftw3.h>

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>

namespace toyns {

class Fft3 {
public:
  /// n = {n0, n1, n2} with axis 0 fastest in memory.
  explicit Fft3(std::array<int, 3> n) : n_(n), size_(static_cast<std::size_t>(n[0]) * n[1] * n[2]) {
    buf_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * size_));
    std::lock_guard lock(planner_mutex());
    fwd_ = fftw_plan_dft_3d(n[2], n[1], n[0], buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_3d(n[2], n[1], n[0], buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft3() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  Fft3(const Fft3&) = delete;
  Fft3& operator=(const Fft3&) = delete;

  std::size_t size() const { return size_; }
  std::span<std::complex<double>> data() {
    return {reinterpret_cast<std::complex<double>*>(buf_), size_};
  }

  void forward() { fftw_execute(fwd_); }
  /// Unnormalized inverse; divide by size() to undo forward().
  void backward() { fftw_execute(bwd_); }

  /// Signed integer wavenumber of index c along an axis of length m.
  static int wavenumber(int c, int m) { return c <= m / 2 ? c : c - m; }

private:
  static std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
  }

  std::array<int, 3> n_;
  std::size_t size_;
  fftw_complex* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace toyns
