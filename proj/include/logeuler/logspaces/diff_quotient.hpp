#pragma once

#include <cmath>
#include <cstdint>

#include "logeuler/logspaces/hlog.hpp"
#include "logeuler/random.hpp"

namespace logeuler::logspaces {

inline constexpr double kDiffQuotientReach = 1.0 / 36.0;
inline constexpr double kDiffQuotientFloor = 1e-14;

struct DiffQuotientResult {
  double max_ratio = 0.0;
  int valid_pairs = 0;
  int skipped_pairs = 0;
};

/// Empirical constant in
///   |f(x) - f(y)| <= C log(1/|x-y|)^(-alpha/2) (L_alpha f(x) + L_alpha f(y))
/// over n_pairs random node pairs at geodesic distance in (2/N, 1/36).
/// Pairs whose right-hand factor falls below 1e-14 are skipped and counted.
inline DiffQuotientResult diff_quotient_check(const ScalarField& f, double alpha, int n_pairs,
                                              std::uint64_t seed) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  if (n_pairs < 1) throw DomainError("n_pairs must be positive");
  const GridSpec& grid = f.grid();
  const int n = grid.n();
  if (n < 80) {
    throw ConfigurationError("grid too coarse for pairs closer than 1/36 (need N >= 80)");
  }
  const ScalarField lf = l_alpha(f, alpha);
  const int reach = static_cast<int>(std::floor(kDiffQuotientReach * n));
  const rng::KeyedRandom random(seed);

  DiffQuotientResult out;
  for (int pair = 0; pair < n_pairs; ++pair) {
    int i1 = 0, i2 = 0, d1 = 0, d2 = 0;
    double r = 0.0;
    for (std::uint32_t attempt = 0;; ++attempt) {
      const auto w = random.words(rng::Stream::kPairSampling, static_cast<std::uint32_t>(pair), attempt, 0);
      i1 = static_cast<int>(w[0] % static_cast<std::uint32_t>(n));
      i2 = static_cast<int>(w[1] % static_cast<std::uint32_t>(n));
      d1 = static_cast<int>(w[2] % static_cast<std::uint32_t>(2 * reach + 1)) - reach;
      d2 = static_cast<int>(w[3] % static_cast<std::uint32_t>(2 * reach + 1)) - reach;
      r = std::hypot(double(d1), double(d2)) / n;
      if (r > 2.0 / n && r < kDiffQuotientReach) break;
    }
    const double numerator = std::abs(f(i1 + d1, i2 + d2) - f(i1, i2));
    const double denominator =
        std::pow(std::log(1.0 / r), -alpha / 2.0) * (lf(i1, i2) + lf(i1 + d1, i2 + d2));
    if (denominator < kDiffQuotientFloor) {
      ++out.skipped_pairs;
      continue;
    }
    ++out.valid_pairs;
    out.max_ratio = std::max(out.max_ratio, numerator / denominator);
  }
  return out;
}

}  // namespace logeuler::logspaces
