#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <span>

#include "egonoise/error.hpp"

namespace egonoise {

namespace detail {
// The FFTW planner is not re-entrant; plan execution is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};
struct FftwPlanDestroy {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};
using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, FftwPlanDestroy>;
}  // namespace detail

// Unnormalized one-sided real FFT of a fixed size and its inverse. Each
// instance owns aligned buffers and executes its plans only on them, so the
// result for a given input is bit-identical across calls.
class RealFft {
 public:
  explicit RealFft(std::size_t size)
      : size_(size),
        time_(static_cast<double*>(fftw_malloc(sizeof(double) * size))),
        freq_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (size / 2 + 1)))) {
    if (size < 2) throw InvalidArgument("FFT size must be at least 2");
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int n = static_cast<int>(size);
    forward_.reset(fftw_plan_dft_r2c_1d(n, time_.get(), freq_.get(), FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_c2r_1d(n, freq_.get(), time_.get(), FFTW_ESTIMATE));
  }

  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  RealFft(RealFft&&) noexcept = default;
  RealFft& operator=(RealFft&&) noexcept = default;

  std::size_t size() const noexcept { return size_; }
  std::size_t bins() const noexcept { return size_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<std::complex<double>> out) {
    std::copy(in.begin(), in.end(), time_.get());
    fftw_execute(forward_.get());
    for (std::size_t k = 0; k < bins(); ++k) out[k] = {freq_.get()[k][0], freq_.get()[k][1]};
  }

  // Includes the 1/N factor, so inverse(forward(x)) == x.
  void inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    for (std::size_t k = 0; k < bins(); ++k) {
      freq_.get()[k][0] = in[k].real();
      freq_.get()[k][1] = in[k].imag();
    }
    fftw_execute(inverse_.get());
    const double scale = 1.0 / static_cast<double>(size_);
    for (std::size_t n = 0; n < size_; ++n) out[n] = time_.get()[n] * scale;
  }

 private:
  std::size_t size_;
  std::unique_ptr<double, detail::FftwFree> time_;
  std::unique_ptr<fftw_complex, detail::FftwFree> freq_;
  detail::PlanPtr forward_;
  detail::PlanPtr inverse_;
};

}  // namespace egonoise
