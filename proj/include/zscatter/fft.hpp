#pragma once

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <utility>
#include <vector>

#include "zscatter/grid.hpp"

namespace zscatter {

/// Allocator backed by fftw_malloc so every buffer has FFTW's SIMD alignment.
template <class T>
struct FftwAllocator {
  using value_type = T;

  FftwAllocator() = default;
  template <class U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

  template <class U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

using Complex = std::complex<double>;
using ComplexBuffer = std::vector<Complex, FftwAllocator<Complex>>;

namespace detail {

// In-place FFTW plans for one grid shape. FFTW_ESTIMATE keeps plan choice,
// and therefore rounding, independent of timing.
class FftPlans {
 public:
  FftPlans(int dim, int n) : n_total_(1) {
    std::vector<int> dims(static_cast<std::size_t>(dim), n);
    for (int d = 0; d < dim; ++d) n_total_ *= static_cast<std::size_t>(n);
    ComplexBuffer scratch(n_total_);
    auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
    forward_ = fftw_plan_dft(dim, dims.data(), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft(dim, dims.data(), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;
  ~FftPlans() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }

  void forward(Complex* data) const { execute(forward_, data); }
  void backward(Complex* data) const { execute(backward_, data); }

 private:
  void execute(fftw_plan plan, Complex* data) const {
    auto* p = reinterpret_cast<fftw_complex*>(data);
    if (fftw_alignment_of(reinterpret_cast<double*>(data)) == 0) {
      fftw_execute_dft(plan, p, p);
      return;
    }
    ComplexBuffer tmp(data, data + n_total_);
    auto* q = reinterpret_cast<fftw_complex*>(tmp.data());
    fftw_execute_dft(plan, q, q);
    std::copy(tmp.begin(), tmp.end(), data);
  }

  std::size_t n_total_;
  fftw_plan forward_{};
  fftw_plan backward_{};
};

inline std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace detail

/// Unnormalised FFTW transforms for a grid shape. Plans are created once per
/// shape under a lock; execution is thread safe.
inline const detail::FftPlans& fft_plans(const Grid& grid) {
  static std::map<std::pair<int, int>, std::unique_ptr<detail::FftPlans>> cache;
  std::lock_guard<std::mutex> lock(detail::plan_mutex());
  auto key = std::make_pair(grid.dim(), grid.points_per_axis());
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, std::make_unique<detail::FftPlans>(grid.dim(), grid.points_per_axis()))
             .first;
  }
  return *it->second;
}

}  // namespace zscatter
