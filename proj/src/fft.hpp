#pragma once

// Thin RAII wrappers around FFTW plans. Planning is serialized through a
// global mutex; execution uses the new-array interface and is thread-safe.

#include <fftw3.h>

#include <complex>
#include <mutex>

namespace edmloc::detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// Real-to-complex forward transform of length n (n/2+1 outputs).
class RealForwardFft {
 public:
  explicit RealForwardFft(int n) : n_(n) {
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    {
      std::lock_guard lock(fftw_planner_mutex());
      plan_ = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    fftw_free(in);
    fftw_free(out);
  }
  ~RealForwardFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealForwardFft(const RealForwardFft&) = delete;
  RealForwardFft& operator=(const RealForwardFft&) = delete;

  int size() const { return n_; }

  void operator()(const double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(plan_, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
  }

 private:
  int n_;
  fftw_plan plan_;
};

/// Complex-to-real inverse transform of length n (unnormalized).
/// FFTW may overwrite the input spectrum.
class RealInverseFft {
 public:
  explicit RealInverseFft(int n) : n_(n) {
    fftw_complex* in = fftw_alloc_complex(n / 2 + 1);
    double* out = fftw_alloc_real(n);
    {
      std::lock_guard lock(fftw_planner_mutex());
      plan_ = fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    fftw_free(in);
    fftw_free(out);
  }
  ~RealInverseFft() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  RealInverseFft(const RealInverseFft&) = delete;
  RealInverseFft& operator=(const RealInverseFft&) = delete;

  int size() const { return n_; }

  void operator()(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(plan_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  int n_;
  fftw_plan plan_;
};

}  // namespace edmloc::detail
