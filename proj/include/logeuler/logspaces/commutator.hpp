#pragma once

#include <cmath>

#include "logeuler/field.hpp"
#include "logeuler/logspaces/kernel.hpp"

namespace logeuler::logspaces {

inline constexpr double kDivergenceTolerance = 1e-10;

namespace detail {

// B(F, G) = (1/N^4) sum_x sum_y dK(x - y) F(x) G(y) = sum_k conj(F(k)) dK(k) G(k).
inline double bilinear(const Spectrum& f, const Spectrum& dk, const Spectrum& g) {
  double acc = 0.0;
  f.for_each_mode([&](int r, int c, int, int, double m) {
    acc += m * (std::conj(f.stored(r, c)) * dk.stored(r, c) * g.stored(r, c)).real();
  });
  return acc;
}

inline ScalarField product(const ScalarField& a, const ScalarField& b) {
  std::vector<double> v(a.values().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = a.values()[i] * b.values()[i];
  return ScalarField(a.grid(), std::move(v));
}

}  // namespace detail

/// integral integral grad K_h(x-y) . (a(x) - a(y)) |g(x) - g(y)|^2 dx dy.
///
/// With B antisymmetric in its arguments (grad K_h is odd) and the row sums
/// of grad K_h vanishing, the six expanded terms collapse to
///   sum_i 2 B_i(a_i, g^2) - 4 B_i(a_i g, g),
/// each a single spectral convolution.
inline double commutator_functional(const VelocityField& a, const ScalarField& g, double h) {
  KernelSpec spec{h};
  spec.validate();
  if (!(a.grid() == g.grid())) throw UsageError("velocity and scalar live on different grids");
  if (a.divergence_defect() > kDivergenceTolerance) {
    throw PreconditionError("commutator_functional requires a divergence-free vector field");
  }
  const auto kernel = cached_kernel(spec, g.grid());
  const ScalarField g2 = detail::product(g, g);
  const auto& gs = g.spectrum();
  const auto& g2s = g2.spectrum();
  double total = 0.0;
  for (int i = 0; i < 2; ++i) {
    const ScalarField& ai = i == 0 ? a.u1 : a.u2;
    const Spectrum& dk = (i == 0 ? kernel->grad1 : kernel->grad2).spectrum();
    const ScalarField aig = detail::product(ai, g);
    total += 2.0 * detail::bilinear(ai.spectrum(), dk, g2s) - 4.0 * detail::bilinear(aig.spectrum(), dk, gs);
  }
  return total;
}

}  // namespace logeuler::logspaces
