#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "logeuler/error.hpp"
#include "logeuler/fft.hpp"
#include "logeuler/grid.hpp"

namespace logeuler {

using Complex = std::complex<double>;

/// Fourier coefficients of a real field, f(x) = sum_k c(k) exp(2 pi i k.x),
/// stored as the r2c half plane: rows k1 in [-N/2, N/2), columns k2 in
/// [0, N/2]. Negative k2 are recovered through Hermitian symmetry.
class Spectrum {
 public:
  explicit Spectrum(GridSpec grid) : grid_(grid), data_(grid.spectral_size()) {}

  const GridSpec& grid() const { return grid_; }
  int n() const { return grid_.n(); }
  int columns() const { return grid_.spectral_columns(); }

  std::span<Complex> data() { return data_; }
  std::span<const Complex> data() const { return data_; }

  Complex& stored(int row, int col) {
    return data_[static_cast<std::size_t>(row) * columns() + col];
  }
  const Complex& stored(int row, int col) const {
    return data_[static_cast<std::size_t>(row) * columns() + col];
  }

  Complex coefficient(int k1, int k2) const {
    if (k2 >= 0 && k2 <= grid_.half()) return stored(grid_.wrap(k1), k2);
    return std::conj(stored(grid_.wrap(-k1), -k2));
  }

  // Writes c(k) and keeps c(-k) = conj(c(k)) consistent where both live in
  // the stored half plane.
  void set_mode(int k1, int k2, Complex value) {
    if (k2 < 0 || (k2 == 0 && k1 < 0)) {
      k1 = -k1;
      k2 = -k2;
      value = std::conj(value);
    }
    if (k2 > grid_.half()) throw DomainError("wavenumber outside the grid band");
    stored(grid_.wrap(k1), k2) = value;
    if (k2 == 0 || k2 == grid_.half()) stored(grid_.wrap(-k1), k2) = std::conj(value);
  }

  Complex mean() const { return data_[0]; }

  /// Calls fn(row, col, k1, k2, multiplicity) for every stored mode. The
  /// multiplicity counts how many lattice points of the full spectrum the
  /// stored entry stands for, so sums of |c(k)|^2 g(|k|) over Z^2 are
  /// sum(multiplicity * ...).
  template <class Fn>
  void for_each_mode(Fn&& fn) const {
    const int n = grid_.n();
    const int half = grid_.half();
    for (int row = 0; row < n; ++row) {
      const int k1 = grid_.wavenumber(row);
      for (int col = 0; col <= half; ++col) {
        const double mult = (col == 0 || col == half) ? 1.0 : 2.0;
        fn(row, col, k1, col, mult);
      }
    }
  }

  double energy() const {
    double s = 0.0;
    for_each_mode([&](int r, int c, int, int, double m) { s += m * std::norm(stored(r, c)); });
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : data_) m = std::max(m, std::abs(c));
    return m;
  }

 private:
  GridSpec grid_;
  std::vector<Complex> data_;
};

/// Real scalar field sampled on the grid nodes. The spectrum is computed on
/// first request and cached; call_once makes concurrent first access safe.
class ScalarField {
 public:
  explicit ScalarField(GridSpec grid)
      : grid_(grid), values_(grid.size(), 0.0), cache_(std::make_shared<Cache>()) {}

  ScalarField(GridSpec grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)), cache_(std::make_shared<Cache>()) {
    if (values_.size() != grid_.size()) {
      throw InvalidFieldError("value count does not match the grid");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw InvalidFieldError("field contains non-finite values");
    }
  }

  template <class Fn>
  static ScalarField from_function(GridSpec grid, Fn&& fn) {
    std::vector<double> v(grid.size());
    for (int i1 = 0; i1 < grid.n(); ++i1) {
      for (int i2 = 0; i2 < grid.n(); ++i2) {
        Point x = grid.node(i1, i2);
        v[grid.index(i1, i2)] = fn(x[0], x[1]);
      }
    }
    return ScalarField(grid, std::move(v));
  }

  static ScalarField constant(GridSpec grid, double c) {
    return ScalarField(grid, std::vector<double>(grid.size(), c));
  }

  const GridSpec& grid() const { return grid_; }
  int n() const { return grid_.n(); }
  std::span<const double> values() const { return values_; }

  double operator()(int i1, int i2) const { return values_[grid_.index(i1, i2)]; }

  void set(int i1, int i2, double v) {
    values_[grid_.index(i1, i2)] = v;
    cache_ = std::make_shared<Cache>();
  }

  // Mutable access drops the cached spectrum.
  std::span<double> mutable_values() {
    cache_ = std::make_shared<Cache>();
    return values_;
  }

  const Spectrum& spectrum() const;

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(values_.size());
  }

  bool has_zero_mean(double tol = 1e-13) const { return std::abs(spectrum().mean()) <= tol; }

  ScalarField& operator*=(double s) {
    for (double& v : mutable_values()) v *= s;
    return *this;
  }

 private:
  struct Cache {
    std::once_flag once;
    std::unique_ptr<Spectrum> spectrum;
  };

  GridSpec grid_;
  std::vector<double> values_;
  std::shared_ptr<Cache> cache_;
};

inline ScalarField operator*(double s, ScalarField f) {
  f *= s;
  return f;
}

inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw UsageError("fields live on different grids");
  std::vector<double> v(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] -= b.values()[i];
  return ScalarField(a.grid(), std::move(v));
}

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw UsageError("fields live on different grids");
  std::vector<double> v(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += b.values()[i];
  return ScalarField(a.grid(), std::move(v));
}

namespace detail {

inline Spectrum forward_raw(const GridSpec& grid, std::span<const double> values) {
  const auto& plan = fft::plans(grid.n());
  fft::AlignedBuffer<double> in(grid.size());
  std::copy(values.begin(), values.end(), in.data());
  fft::AlignedBuffer<Complex> out(grid.spectral_size());
  plan.forward(in.data(), out.data());
  Spectrum s(grid);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (std::size_t i = 0; i < grid.spectral_size(); ++i) s.data()[i] = out[i] * scale;
  return s;
}

inline std::vector<double> inverse_raw(const Spectrum& s) {
  const auto& grid = s.grid();
  const auto& plan = fft::plans(grid.n());
  fft::AlignedBuffer<Complex> in(grid.spectral_size());
  std::copy(s.data().begin(), s.data().end(), in.data());
  fft::AlignedBuffer<double> out(grid.size());
  plan.backward(in.data(), out.data());
  return std::vector<double>(out.data(), out.data() + grid.size());
}

}  // namespace detail

inline const Spectrum& ScalarField::spectrum() const {
  Cache& c = *cache_;
  std::call_once(c.once, [&] {
    c.spectrum = std::make_unique<Spectrum>(detail::forward_raw(grid_, values_));
  });
  return *c.spectrum;
}

inline Spectrum forward_transform(const ScalarField& f) { return f.spectrum(); }

inline ScalarField inverse_transform(const Spectrum& s) {
  return ScalarField(s.grid(), detail::inverse_raw(s));
}

/// (integral |f|^p)^(1/p) by grid quadrature; p = infinity gives max |f|.
inline double lp_norm(const ScalarField& f, double p) {
  if (!(p >= 1.0)) throw DomainError("p must be >= 1 for an L^p norm");
  auto v = f.values();
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  double s = 0.0;
  if (p == 2.0) {
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
  }
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s / static_cast<double>(v.size()), 1.0 / p);
}

/// C_f(z) = integral f(x+z) f(x) dx at every grid shift z, stored at node
/// (d1, d2). Computed as the inverse transform of |c(k)|^2.
inline ScalarField autocorrelation(const ScalarField& f) {
  Spectrum power(f.grid());
  const auto& s = f.spectrum();
  for (std::size_t i = 0; i < power.data().size(); ++i) power.data()[i] = std::norm(s.data()[i]);
  return inverse_transform(power);
}

/// ||f(.+z) - f||_{L^2}^2 for every grid shift z, from one autocorrelation.
class ShiftDifferences {
 public:
  explicit ShiftDifferences(const ScalarField& f) : corr_(::logeuler::autocorrelation(f)) {}

  const GridSpec& grid() const { return corr_.grid(); }

  double at(GridShift z) const {
    // 2 (C(0) - C(z)) is nonnegative analytically; clamp rounding noise.
    return std::max(0.0, 2.0 * (corr_(0, 0) - corr_(z.d1, z.d2)));
  }

  const ScalarField& autocorrelation() const { return corr_; }

 private:
  ScalarField corr_;
};

inline double shift_l2_difference(const ScalarField& f, GridShift z) {
  return ShiftDifferences(f).at(z);
}

/// Trigonometric interpolation onto another resolution. Modes shared by both
/// grids are copied; the Nyquist row and column of the source are dropped.
inline ScalarField resample(const ScalarField& f, GridSpec target) {
  const auto& src = f.spectrum();
  Spectrum out(target);
  const int keep = std::min(f.grid().half(), target.half()) - 1;
  for (int k1 = -keep; k1 <= keep; ++k1) {
    for (int k2 = 0; k2 <= keep; ++k2) out.set_mode(k1, k2, src.coefficient(k1, k2));
  }
  return inverse_transform(out);
}

/// Periodic bilinear interpolation at an arbitrary point.
inline double interpolate_bilinear(const ScalarField& f, const Point& x) {
  const int n = f.n();
  const double s1 = wrap_unit(x[0]) * n;
  const double s2 = wrap_unit(x[1]) * n;
  const int i1 = static_cast<int>(std::floor(s1));
  const int i2 = static_cast<int>(std::floor(s2));
  const double t1 = s1 - i1;
  const double t2 = s2 - i2;
  return (1 - t1) * ((1 - t2) * f(i1, i2) + t2 * f(i1, i2 + 1)) +
         t1 * ((1 - t2) * f(i1 + 1, i2) + t2 * f(i1 + 1, i2 + 1));
}

/// Evaluates the Fourier series at an arbitrary point. O(N^2) per call.
inline double evaluate_spectral(const Spectrum& s, const Point& x) {
  double acc = 0.0;
  s.for_each_mode([&](int r, int c, int k1, int k2, double m) {
    const double phase = 2.0 * std::numbers::pi * (k1 * x[0] + k2 * x[1]);
    const Complex v = s.stored(r, c);
    // Stored columns 0 and N/2 already hold both k and -k.
    const double w = (m == 1.0) ? 1.0 : 2.0;
    acc += w * (v.real() * std::cos(phase) - v.imag() * std::sin(phase));
  });
  return acc;
}

/// Two-component velocity; produced by biot_savart.
struct VelocityField {
  ScalarField u1;
  ScalarField u2;

  const GridSpec& grid() const { return u1.grid(); }

  // max_k |k . u(k)| relative to max_k |u(k)|.
  double divergence_defect() const {
    const auto& a = u1.spectrum();
    const auto& b = u2.spectrum();
    double worst = 0.0;
    double scale = 0.0;
    a.for_each_mode([&](int r, int c, int k1, int k2, double) {
      const Complex x = a.stored(r, c);
      const Complex y = b.stored(r, c);
      worst = std::max(worst, std::abs(double(k1) * x + double(k2) * y));
      scale = std::max(scale, std::hypot(std::abs(x), std::abs(y)));
    });
    return scale == 0.0 ? 0.0 : worst / scale;
  }

  double max_speed() const {
    double m = 0.0;
    for (std::size_t i = 0; i < u1.values().size(); ++i) {
      m = std::max(m, std::hypot(u1.values()[i], u2.values()[i]));
    }
    return m;
  }
};

inline bool is_nyquist_mode(const GridSpec& grid, int k1, int k2) {
  return std::abs(k1) == grid.half() || std::abs(k2) == grid.half();
}

/// u = grad^perp (-Delta)^{-1} omega, i.e. u(k) = i k^perp w(k) / (2 pi |k|^2)
/// with k^perp = (-k2, k1). Nyquist modes carry no derivative and are zeroed.
inline VelocityField biot_savart(const Spectrum& omega) {
  const auto& grid = omega.grid();
  const double scale = std::max(1.0, std::sqrt(omega.energy()));
  if (std::abs(omega.mean()) > 1e-12 * scale) {
    throw PreconditionError(
        "vorticity must have zero mean: the inverse Laplacian is undefined on the mean mode");
  }
  Spectrum a(grid);
  Spectrum b(grid);
  const Complex i{0.0, 1.0};
  omega.for_each_mode([&](int r, int c, int k1, int k2, double) {
    if ((k1 == 0 && k2 == 0) || is_nyquist_mode(grid, k1, k2)) return;
    const double k2norm = double(k1) * k1 + double(k2) * k2;
    const Complex w = omega.stored(r, c) / (2.0 * std::numbers::pi * k2norm);
    a.stored(r, c) = i * double(-k2) * w;
    b.stored(r, c) = i * double(k1) * w;
  });
  return {inverse_transform(a), inverse_transform(b)};
}

inline VelocityField biot_savart(const ScalarField& omega) { return biot_savart(omega.spectrum()); }

/// Spectral derivative d/dx_axis (axis 0 or 1); Nyquist modes zeroed.
inline Spectrum derivative(const Spectrum& s, int axis) {
  Spectrum d(s.grid());
  const Complex i{0.0, 1.0};
  s.for_each_mode([&](int r, int c, int k1, int k2, double) {
    if (is_nyquist_mode(s.grid(), k1, k2)) return;
    const double k = axis == 0 ? k1 : k2;
    d.stored(r, c) = 2.0 * std::numbers::pi * k * i * s.stored(r, c);
  });
  return d;
}

/// Left inverse of biot_savart: with k^perp = (-k2, k1) the velocity is
/// grad^perp psi for -Lap psi = omega, so omega = d2 u1 - d1 u2.
inline ScalarField curl(const VelocityField& u) {
  Spectrum a = derivative(u.u1.spectrum(), 1);
  const Spectrum b = derivative(u.u2.spectrum(), 0);
  for (std::size_t k = 0; k < a.data().size(); ++k) a.data()[k] -= b.data()[k];
  return inverse_transform(a);
}

/// ||grad u||_{L^2} (Frobenius), evaluated spectrally.
inline double gradient_l2_norm(const VelocityField& u) {
  double s = 0.0;
  const auto& a = u.u1.spectrum();
  const auto& b = u.u2.spectrum();
  const double tp2 = 4.0 * std::numbers::pi * std::numbers::pi;
  a.for_each_mode([&](int r, int c, int k1, int k2, double m) {
    if (is_nyquist_mode(a.grid(), k1, k2)) return;
    const double k2norm = double(k1) * k1 + double(k2) * k2;
    s += m * tp2 * k2norm * (std::norm(a.stored(r, c)) + std::norm(b.stored(r, c)));
  });
  return std::sqrt(s);
}

}  // namespace logeuler
