#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "logeuler/error.hpp"

namespace logeuler {

using Point = std::array<double, 2>;

/// Uniform N x N grid on the unit torus [0,1)^2. Node (i1, i2) sits at
/// x = (i1 / N, i2 / N); storage is row-major with i2 fastest.
class GridSpec {
 public:
  explicit GridSpec(int n) : n_(n) {
    if (n < 8 || n % 2 != 0) {
      throw ConfigurationError("grid resolution must be an even integer >= 8, got " +
                               std::to_string(n));
    }
  }

  int n() const { return n_; }
  double spacing() const { return 1.0 / n_; }
  std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  int half() const { return n_ / 2; }
  // Columns of the r2c half spectrum.
  int spectral_columns() const { return n_ / 2 + 1; }
  std::size_t spectral_size() const {
    return static_cast<std::size_t>(n_) * spectral_columns();
  }

  std::size_t index(int i1, int i2) const {
    return static_cast<std::size_t>(wrap(i1)) * n_ + static_cast<std::size_t>(wrap(i2));
  }
  int wrap(int i) const {
    int r = i % n_;
    return r < 0 ? r + n_ : r;
  }
  Point node(int i1, int i2) const { return {i1 * spacing(), i2 * spacing()}; }

  // Signed integer wavenumber of FFT row index i in [0, N): rows >= N/2 are
  // negative, so the Nyquist row maps to -N/2.
  int wavenumber(int i) const { return i < n_ / 2 ? i : i - n_; }

  bool operator==(const GridSpec& other) const { return n_ == other.n_; }

 private:
  int n_;
};

/// Displacement between grid nodes in units of the spacing.
struct GridShift {
  int d1 = 0;
  int d2 = 0;
};

inline double wrap_unit(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

inline Point wrap_point(Point p) { return {wrap_unit(p[0]), wrap_unit(p[1])}; }

// Component of the shortest periodic displacement, in (-1/2, 1/2].
inline double minimal_offset(double d) {
  double r = d - std::round(d);
  return r == -0.5 ? 0.5 : r;
}

inline double geodesic_distance(const Point& a, const Point& b) {
  return std::hypot(minimal_offset(a[0] - b[0]), minimal_offset(a[1] - b[1]));
}

/// Minimal signed displacement of a grid shift, as a point in (-1/2, 1/2]^2.
inline Point shift_vector(const GridSpec& grid, GridShift z) {
  int n = grid.n();
  auto fold = [n](int d) {
    int r = ((d % n) + n) % n;
    return r > n / 2 ? r - n : r;
  };
  return {fold(z.d1) * grid.spacing(), fold(z.d2) * grid.spacing()};
}

inline double shift_length(const GridSpec& grid, GridShift z) {
  Point v = shift_vector(grid, z);
  return std::hypot(v[0], v[1]);
}

}  // namespace logeuler
