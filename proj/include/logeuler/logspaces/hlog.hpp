#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "logeuler/field.hpp"
#include "logeuler/logspaces/report.hpp"
#include "logeuler/parallel.hpp"

namespace logeuler::logspaces {

inline constexpr double kDefaultShiftRadius = 1.0 / 3.0;

/// Midpoint rule over grid displacements 0 < |z| < radius for the
/// integral dz / (|z|^2 log(1/|z|)^(1-alpha)).
struct ShiftQuadrature {
  std::vector<GridShift> shifts;
  std::vector<double> weights;

  ShiftQuadrature(const GridSpec& grid, double alpha, double radius) {
    const int n = grid.n();
    const double cell = 1.0 / (double(n) * n);
    const int reach = static_cast<int>(std::ceil(radius * n));
    for (int d1 = -reach; d1 <= reach; ++d1) {
      for (int d2 = -reach; d2 <= reach; ++d2) {
        if (d1 == 0 && d2 == 0) continue;
        const double r = std::hypot(double(d1), double(d2)) / n;
        if (r >= radius) continue;
        shifts.push_back({d1, d2});
        weights.push_back(cell / (r * r * std::pow(std::log(1.0 / r), 1.0 - alpha)));
      }
    }
  }

  std::string describe() const {
    return "midpoint-shifts=" + std::to_string(shifts.size());
  }
};

inline void check_radius(double radius) {
  if (!(radius > 0.0 && radius <= kDefaultShiftRadius)) {
    throw DomainError("shift radius must lie in (0, 1/3]");
  }
}

/// sum_k log(2+|k|)^alpha |c(k)|^2 over the grid band, k = 0 included. The
/// square root is the reported value. alpha = 0 reduces to the L^2 norm.
inline SeminormReport hlog_fourier(const ScalarField& f, double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
  const auto& s = f.spectrum();
  double acc = 0.0;
  s.for_each_mode([&](int r, int c, int k1, int k2, double m) {
    const double k = std::hypot(double(k1), double(k2));
    acc += m * std::pow(std::log(2.0 + k), alpha) * std::norm(s.stored(r, c));
  });
  SeminormReport rep;
  rep.kind = SeminormKind::kHlogFourier;
  rep.order = alpha;
  rep.value = std::sqrt(acc);
  rep.n = f.n();
  rep.quadrature = "fourier-band";
  return rep;
}

/// Shift-difference form of the H^{log,alpha} semi-norm. The inner
/// x-integral is exact on the grid (autocorrelation); the h-integral is the
/// midpoint rule over grid displacements inside the shift ball.
inline SeminormReport hlog_physical(const ScalarField& f, double alpha,
                                    double shift_radius = kDefaultShiftRadius) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  check_radius(shift_radius);
  const ShiftDifferences diffs(f);
  const ShiftQuadrature quad(f.grid(), alpha, shift_radius);
  double acc = 0.0;
  for (std::size_t i = 0; i < quad.shifts.size(); ++i) acc += quad.weights[i] * diffs.at(quad.shifts[i]);
  SeminormReport rep;
  rep.kind = SeminormKind::kHlogPhysical;
  rep.order = alpha;
  rep.value = std::sqrt(acc);
  rep.n = f.n();
  rep.quadrature = "autocorrelation+" + quad.describe();
  return rep;
}

/// Pointwise square function L_alpha f on the same shift quadrature as
/// hlog_physical, so that ||L_alpha f||_{L^2} reproduces it.
///
/// Expanding the square gives
///   L^2(x) = (W * f^2)(x) - 2 f(x) (W * f)(x) + f(x)^2 sum(W),
/// with W the (symmetric) weight grid, so every term is one FFT convolution.
inline ScalarField l_alpha(const ScalarField& f, double alpha,
                           double shift_radius = kDefaultShiftRadius) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  check_radius(shift_radius);
  const GridSpec& grid = f.grid();
  const ShiftQuadrature quad(grid, alpha, shift_radius);
  ScalarField w(grid);
  double total = 0.0;
  {
    auto wv = w.mutable_values();
    for (std::size_t i = 0; i < quad.shifts.size(); ++i) {
      wv[grid.index(quad.shifts[i].d1, quad.shifts[i].d2)] += quad.weights[i];
      total += quad.weights[i];
    }
  }
  // L_alpha ignores constants; removing the mean first keeps the three-term
  // expansion from cancelling large numbers.
  const double mean = f.mean();
  std::vector<double> centred(grid.size()), sq(grid.size());
  for (std::size_t i = 0; i < sq.size(); ++i) {
    centred[i] = f.values()[i] - mean;
    sq[i] = centred[i] * centred[i];
  }
  const ScalarField fc(grid, std::move(centred));
  const ScalarField f2(grid, std::move(sq));

  // sum_y W(x - y) g(y) has coefficients N^2 * W(k) g(k).
  const double n2 = static_cast<double>(grid.size());
  auto convolve = [&](const ScalarField& g) {
    Spectrum out(grid);
    const auto& ws = w.spectrum();
    const auto& gs = g.spectrum();
    for (std::size_t k = 0; k < out.data().size(); ++k) out.data()[k] = n2 * ws.data()[k] * gs.data()[k];
    return inverse_transform(out);
  };
  const ScalarField wf2 = convolve(f2);
  const ScalarField wf = convolve(fc);

  std::vector<double> out(grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double v = fc.values()[i];
    const double sq_val = wf2.values()[i] - 2.0 * v * wf.values()[i] + v * v * total;
    out[i] = std::sqrt(std::max(0.0, sq_val));
  }
  return ScalarField(grid, std::move(out));
}

/// Non-Hilbertian variant with L^p shift differences:
///   value^p = sum_z (1/N^2) ||f(.+z) - f||_p^p / (|z|^2 log(1/|z|)^(1 - p gamma)).
inline SeminormReport xgp_seminorm(const ScalarField& f, double gamma, double p,
                                   double shift_radius = kDefaultShiftRadius) {
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  if (!(p > 0.0)) throw DomainError("p must be positive");
  check_radius(shift_radius);
  const GridSpec& grid = f.grid();
  const ShiftQuadrature quad(grid, p * gamma, shift_radius);
  const auto v = f.values();
  const int n = grid.n();
  std::vector<double> per_shift(quad.shifts.size());
  parallel_for(quad.shifts.size(), [&](std::size_t s) {
    const GridShift z = quad.shifts[s];
    double acc = 0.0;
    for (int i1 = 0; i1 < n; ++i1) {
      const std::size_t row = static_cast<std::size_t>(i1) * n;
      const std::size_t shifted_row = static_cast<std::size_t>(grid.wrap(i1 + z.d1)) * n;
      for (int i2 = 0; i2 < n; ++i2) {
        const double d = std::abs(v[shifted_row + grid.wrap(i2 + z.d2)] - v[row + i2]);
        acc += p == 2.0 ? d * d : std::pow(d, p);
      }
    }
    per_shift[s] = quad.weights[s] * acc / static_cast<double>(grid.size());
  });
  double total = 0.0;
  for (double x : per_shift) total += x;
  SeminormReport rep;
  rep.kind = SeminormKind::kXgp;
  rep.order = gamma;
  rep.p = p;
  rep.value = std::pow(total, 1.0 / p);
  rep.n = n;
  rep.quadrature = "direct+" + quad.describe();
  return rep;
}

}  // namespace logeuler::logspaces
