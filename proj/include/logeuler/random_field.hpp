#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>

#include "logeuler/field.hpp"
#include "logeuler/random.hpp"

namespace logeuler {

struct RandomLogFieldOptions {
  double alpha = 1.0;
  double margin = 0.1;
  std::uint64_t seed = 0;
  // Keep only modes with max(|k1|, |k2|) <= k_cut; default is every mode
  // below the Nyquist frequency.
  std::optional<int> k_cut;
  // Rescale so that ||f||_{L^inf} = 1 on the grid.
  bool normalize = true;
};

/// Squared amplitude profile |c(k)|^2 = 1 / (|k|^2 log(2+|k|)^(1+alpha+margin)).
inline double log_profile_power(double k, double alpha, double margin) {
  return 1.0 / (k * k * std::pow(std::log(2.0 + k), 1.0 + alpha + margin));
}

/// Zero-mean real field with the log-tail power profile and independent
/// uniform phases. Phases are keyed by (seed, k), so two resolutions share
/// every mode they both carry.
inline ScalarField random_log_field(GridSpec grid, const RandomLogFieldOptions& opt) {
  if (!(opt.alpha > 0.0)) throw DomainError("alpha must be positive");
  if (!(opt.margin > 0.0)) throw DomainError("margin must be positive");
  const int kmax = std::min(opt.k_cut.value_or(grid.half() - 1), grid.half() - 1);
  if (kmax < 1) throw DomainError("k_cut must admit at least one mode");

  rng::KeyedRandom random(opt.seed);
  Spectrum s(grid);
  for (int k1 = -kmax; k1 <= kmax; ++k1) {
    for (int k2 = 0; k2 <= kmax; ++k2) {
      // Half plane: k2 > 0, or k2 == 0 with k1 > 0.
      if (k2 == 0 && k1 <= 0) continue;
      const double k = std::hypot(double(k1), double(k2));
      const double amp = std::sqrt(log_profile_power(k, opt.alpha, opt.margin));
      const auto [u, _] = random.uniforms(rng::Stream::kFieldPhase,
                                          static_cast<std::uint32_t>(k1 + (1 << 20)),
                                          static_cast<std::uint32_t>(k2), 0);
      const double phase = 2.0 * std::numbers::pi * u;
      s.set_mode(k1, k2, std::polar(amp, phase));
    }
  }
  ScalarField f = inverse_transform(s);
  if (opt.normalize) {
    const double m = lp_norm(f, std::numeric_limits<double>::infinity());
    f *= 1.0 / m;
  }
  return f;
}

}  // namespace logeuler
