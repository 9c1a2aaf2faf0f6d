#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <span>

namespace logeuler::fft {

using Complex = std::complex<double>;

/// fftw_malloc-backed array. Every buffer handed to a cached plan comes from
/// here, so all executions share the alignment the plans were created with.
template <class T>
class AlignedBuffer {
 public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(std::size_t n)
      : data_(static_cast<T*>(fftw_malloc(sizeof(T) * n))), size_(n) {
    if (n != 0 && data_ == nullptr) throw std::bad_alloc();
    for (std::size_t i = 0; i < n; ++i) data_.get()[i] = T{};
  }

  T* data() { return data_.get(); }
  const T* data() const { return data_.get(); }
  std::size_t size() const { return size_; }
  T& operator[](std::size_t i) { return data_.get()[i]; }
  const T& operator[](std::size_t i) const { return data_.get()[i]; }
  std::span<T> span() { return {data_.get(), size_}; }
  std::span<const T> span() const { return {data_.get(), size_}; }

 private:
  struct Deleter {
    void operator()(T* p) const { fftw_free(p); }
  };
  std::unique_ptr<T, Deleter> data_;
  std::size_t size_ = 0;
};

class PlanPair {
 public:
  explicit PlanPair(int n) : n_(n) {
    // Plans are created with FFTW_ESTIMATE: planning is then a pure function of
    // the size, which keeps repeated runs bit-identical.
    AlignedBuffer<double> real(static_cast<std::size_t>(n) * n);
    AlignedBuffer<Complex> spec(static_cast<std::size_t>(n) * (n / 2 + 1));
    auto* c = reinterpret_cast<fftw_complex*>(spec.data());
    forward_ = fftw_plan_dft_r2c_2d(n, n, real.data(), c, FFTW_ESTIMATE);
    backward_ = fftw_plan_dft_c2r_2d(n, n, c, real.data(), FFTW_ESTIMATE);
  }
  ~PlanPair() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(backward_);
  }
  PlanPair(const PlanPair&) = delete;
  PlanPair& operator=(const PlanPair&) = delete;

  int n() const { return n_; }

  // Unnormalized r2c. `in` is preserved.
  void forward(double* in, Complex* out) const {
    fftw_execute_dft_r2c(forward_, in, reinterpret_cast<fftw_complex*>(out));
  }
  // Unnormalized c2r. `in` is destroyed.
  void backward(Complex* in, double* out) const {
    fftw_execute_dft_c2r(backward_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  int n_;
  fftw_plan forward_;
  fftw_plan backward_;
};

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

/// Shared plans for an N x N transform. Planning is serialized; executing a
/// plan on fresh arrays is thread-safe in FFTW.
inline const PlanPair& plans(int n) {
  static std::map<int, std::unique_ptr<PlanPair>> cache;
  std::lock_guard<std::mutex> lock(planner_mutex());
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, std::make_unique<PlanPair>(n)).first;
  return *it->second;
}

}  // namespace logeuler::fft
