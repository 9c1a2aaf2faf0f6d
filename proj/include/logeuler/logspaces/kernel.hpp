#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <utility>
#include <vector>

#include "logeuler/field.hpp"
#include "logeuler/logspaces/report.hpp"

namespace logeuler::logspaces {

inline constexpr double kInnerCutoff = 0.5;
inline constexpr double kOuterCutoff = 2.0 / 3.0;

/// Parameters of the periodized kernel K_h on the 2-torus.
///
///   K_h(z) = 1 / (rho(r) + h psi(r))^2,  r = geodesic |z|
///
/// rho(r) = r and psi(r) = 1 for r <= 1/2. On [1/2, 2/3] both blend through
/// the quintic smoothstep s: psi = 1 - s and rho' = 1 - s, so rho flattens
/// to the constant 7/12 and psi reaches 0. Past 2/3 the kernel no longer
/// depends on h.
struct KernelSpec {
  double h = 0.25;

  void validate() const {
    if (!(h > 0.0 && h <= 0.5)) throw DomainError("kernel width h must lie in (0, 1/2]");
  }

  struct Profile {
    double rho, drho, psi, dpsi;
  };

  static Profile profile(double r) {
    if (r <= kInnerCutoff) return {r, 1.0, 1.0, 0.0};
    const double width = kOuterCutoff - kInnerCutoff;
    if (r >= kOuterCutoff) return {kInnerCutoff + 0.5 * width, 0.0, 0.0, 0.0};
    const double t = (r - kInnerCutoff) / width;
    const double t3 = t * t * t;
    const double s = t3 * (10.0 - 15.0 * t + 6.0 * t * t);
    const double ds = 30.0 * t * t * (1.0 - t) * (1.0 - t) / width;
    // integral_0^t (1 - s) = t - (t^6 - 3 t^5 + 5/2 t^4)
    const double int_s = t3 * t * (2.5 - 3.0 * t + t * t);
    return {kInnerCutoff + width * (t - int_s), 1.0 - s, 1.0 - s, -ds};
  }

  double value(double r) const {
    const auto p = profile(r);
    const double d = p.rho + h * p.psi;
    return 1.0 / (d * d);
  }

  // dK/dr
  double radial_derivative(double r) const {
    const auto p = profile(r);
    const double d = p.rho + h * p.psi;
    return -2.0 * (p.drho + h * p.dpsi) / (d * d * d);
  }
};

/// K_h and grad K_h sampled at every grid displacement (d1, d2).
struct KernelGrid {
  KernelSpec spec;
  ScalarField values;
  ScalarField grad1;
  ScalarField grad2;
};

/// Samples the kernel on the grid. The gradient is analytic, except on the
/// lines d_i = N/2 where the minimal displacement flips sign: there the two
/// one-sided values cancel and component i is set to zero, which keeps the
/// sampled gradient exactly antisymmetric.
inline KernelGrid build_kernel(const KernelSpec& spec, const GridSpec& grid) {
  spec.validate();
  const int n = grid.n();
  std::vector<double> k(grid.size()), g1(grid.size()), g2(grid.size());
  for (int d1 = 0; d1 < n; ++d1) {
    for (int d2 = 0; d2 < n; ++d2) {
      const Point z = shift_vector(grid, {d1, d2});
      const double r = std::hypot(z[0], z[1]);
      const std::size_t i = grid.index(d1, d2);
      k[i] = spec.value(r);
      if (r == 0.0) continue;
      const double dk = spec.radial_derivative(r);
      g1[i] = d1 == grid.half() ? 0.0 : dk * z[0] / r;
      g2[i] = d2 == grid.half() ? 0.0 : dk * z[1] / r;
    }
  }
  return {spec, ScalarField(grid, std::move(k)), ScalarField(grid, std::move(g1)),
          ScalarField(grid, std::move(g2))};
}

/// Memoized build_kernel keyed by (h, N).
inline std::shared_ptr<const KernelGrid> cached_kernel(const KernelSpec& spec, const GridSpec& grid) {
  static std::mutex mutex;
  static std::map<std::pair<double, int>, std::shared_ptr<const KernelGrid>> cache;
  const auto key = std::make_pair(spec.h, grid.n());
  {
    std::lock_guard<std::mutex> lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  auto built = std::make_shared<const KernelGrid>(build_kernel(spec, grid));
  std::lock_guard<std::mutex> lock(mutex);
  return cache.emplace(key, std::move(built)).first->second;
}

/// Dyadic widths 2^-j for j = 2..J with 2^-J >= 2/N.
///
/// j starts at 2 so that |log h| > 1 on the whole grid; with h = 1/2 the
/// factor |log h|^-theta would grow with theta and the semi-norms would no
/// longer be ordered in theta.
inline std::vector<double> default_h_grid(const GridSpec& grid) {
  std::vector<double> hs;
  for (int j = 2;; ++j) {
    const double h = std::ldexp(1.0, -j);
    if (h < 2.0 / grid.n()) break;
    hs.push_back(h);
  }
  return hs;
}

/// integral integral K_h(x-y) |f(x) - f(y)|^2 dx dy as sum_z K_h(z) D(z) / N^2.
inline double kernel_energy(const ShiftDifferences& diffs, const KernelGrid& kernel) {
  const GridSpec& grid = diffs.grid();
  const int n = grid.n();
  double acc = 0.0;
  for (int d1 = 0; d1 < n; ++d1) {
    for (int d2 = 0; d2 < n; ++d2) acc += kernel.values(d1, d2) * diffs.at({d1, d2});
  }
  return acc / static_cast<double>(grid.size());
}

/// [f]_theta^2 = max over h of |log h|^-theta * kernel_energy(f, h). The
/// reported value is the square root; report.h is the maximizing width.
inline SeminormReport wlog_seminorm(const ScalarField& f, double theta,
                                    std::optional<std::vector<double>> h_grid = std::nullopt) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("θ must lie in (0,1)");
  const GridSpec& grid = f.grid();
  const std::vector<double> hs = h_grid.value_or(default_h_grid(grid));
  if (hs.empty()) throw ConfigurationError("empty h grid");
  for (double h : hs) {
    if (!(h > 0.0 && h <= 0.5)) throw DomainError("kernel width h must lie in (0, 1/2]");
    if (h < 2.0 / grid.n()) {
      throw ConfigurationError("kernel width below grid resolution (h < 2/N) is not resolvable");
    }
  }
  const ShiftDifferences diffs(f);
  SeminormReport rep;
  rep.kind = SeminormKind::kWlog;
  rep.order = theta;
  rep.n = grid.n();
  double best = -1.0;
  for (double h : hs) {
    const auto kernel = cached_kernel({h}, grid);
    const double weighted = kernel_energy(diffs, *kernel) / std::pow(std::abs(std::log(h)), theta);
    rep.h_profile.emplace_back(h, weighted);
    if (weighted > best) {
      best = weighted;
      rep.h = h;
    }
  }
  rep.value = std::sqrt(best);
  rep.quadrature = "autocorrelation+dyadic-h=" + std::to_string(hs.size());
  return rep;
}

/// sum_k log(1+|k|)^(1-theta) |c(k)|^2, the Fourier-side upper quantity that
/// controls [f]_theta^2.
inline double wlog_fourier_upper(const ScalarField& f, double theta) {
  const auto& s = f.spectrum();
  double acc = 0.0;
  s.for_each_mode([&](int r, int c, int k1, int k2, double m) {
    const double k = std::hypot(double(k1), double(k2));
    acc += m * std::pow(std::log(1.0 + k), 1.0 - theta) * std::norm(s.stored(r, c));
  });
  return acc;
}

}  // namespace logeuler::logspaces
