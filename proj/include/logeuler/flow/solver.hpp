#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "logeuler/fft.hpp"
#include "logeuler/field.hpp"
#include "logeuler/snapshot_io.hpp"

namespace logeuler::flow {

struct SolverConfig {
  double nu = 0.0;  // 0 selects Euler
  double dt = 1e-2;  // upper bound; the CFL condition may shorten steps
  double T = 1.0;
  bool dealias = true;  // two-thirds rule
  double cfl = 0.5;
  std::vector<double> snapshot_times;  // empty means {T}

  std::vector<double> resolved_snapshot_times() const {
    return snapshot_times.empty() ? std::vector<double>{T} : snapshot_times;
  }

  void validate() const {
    if (!(nu >= 0.0)) throw DomainError("viscosity must be nonnegative");
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("final time must be finite and nonnegative");
    if (!(cfl > 0.0 && cfl <= 1.0)) throw DomainError("CFL number must lie in (0, 1]");
    double prev = -1.0;
    for (double t : resolved_snapshot_times()) {
      if (!(t >= 0.0 && t <= T)) throw DomainError("snapshot times must lie in [0, T]");
      if (!(t > prev)) throw DomainError("snapshot times must be strictly increasing");
      prev = t;
    }
  }
};

/// Uniform snapshot grid {0, T/count, ..., T}.
inline std::vector<double> uniform_times(double T, int count) {
  std::vector<double> ts;
  for (int i = 0; i <= count; ++i) ts.push_back(T * i / count);
  return ts;
}

struct Diagnostics {
  double t;
  double l2;
  double l4;
  double linf;
  double energy;  // (1/2) ||u||_{L^2}^2
};

struct Snapshot {
  double t;
  ScalarField omega;
};

struct Trajectory {
  SolverConfig config;
  ScalarField initial;
  std::vector<Snapshot> snapshots;
  std::vector<Diagnostics> diagnostics;
  long steps = 0;

  const ScalarField& at(double t) const {
    for (const auto& s : snapshots) {
      if (s.t == t) return s.omega;
    }
    throw UsageError("no snapshot at the requested time");
  }
};

inline double kinetic_energy(const Spectrum& omega) {
  double e = 0.0;
  const double tp2 = 4.0 * std::numbers::pi * std::numbers::pi;
  omega.for_each_mode([&](int r, int c, int k1, int k2, double m) {
    if (k1 == 0 && k2 == 0) return;
    e += m * std::norm(omega.stored(r, c)) / (tp2 * (double(k1) * k1 + double(k2) * k2));
  });
  return 0.5 * e;
}

inline Diagnostics diagnose(double t, const ScalarField& w) {
  return {t, lp_norm(w, 2.0), lp_norm(w, 4.0), lp_norm(w, std::numeric_limits<double>::infinity()),
          kinetic_energy(w.spectrum())};
}

/// Share of ||w||^2 carried by the outer half of the retained band,
/// N/6 < max(|k1|,|k2|). Large values mean the run is under-resolved.
inline double spectral_tail_fraction(const Spectrum& w) {
  const int n = w.n();
  double tail = 0.0, total = 0.0;
  w.for_each_mode([&](int r, int c, int k1, int k2, double m) {
    const double e = m * std::norm(w.stored(r, c));
    total += e;
    if (6 * std::max(std::abs(k1), std::abs(k2)) > n) tail += e;
  });
  return total == 0.0 ? 0.0 : tail / total;
}

/// Pseudo-spectral integrator for d w/dt + u.grad w = nu Lap w on the unit
/// torus. Owns its FFT workspace; one instance is used by one thread.
class SpectralSolver {
 public:
  SpectralSolver(GridSpec grid, bool dealias)
      : grid_(grid),
        plans_(fft::plans(grid.n())),
        modes_(grid.spectral_size()),
        kx_(modes_),
        ky_(modes_),
        inv_k2_(modes_),
        lap_(modes_),
        mask_(modes_),
        spec_(4),
        phys_(4),
        prod_(grid.size()),
        prod_spec_(modes_) {
    for (auto& b : spec_) b = fft::AlignedBuffer<Complex>(modes_);
    for (auto& b : phys_) b = fft::AlignedBuffer<double>(grid.size());
    const int n = grid.n();
    const int cols = grid.spectral_columns();
    const double tp = 2.0 * std::numbers::pi;
    for (int r = 0; r < n; ++r) {
      const int k1 = grid.wavenumber(r);
      for (int c = 0; c < cols; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * cols + c;
        const int k2 = c;
        const bool nyquist = is_nyquist_mode(grid, k1, k2);
        const bool kept = !nyquist && (!dealias || (3 * std::abs(k1) < n && 3 * std::abs(k2) < n));
        mask_[i] = kept ? 1.0 : 0.0;
        kx_[i] = nyquist ? 0.0 : tp * k1;
        ky_[i] = nyquist ? 0.0 : tp * k2;
        const double ksq = double(k1) * k1 + double(k2) * k2;
        inv_k2_[i] = (ksq == 0.0 || nyquist) ? 0.0 : 1.0 / (tp * tp * ksq);
        lap_[i] = tp * tp * ksq;
      }
    }
    mask_[0] = 0.0;  // mean mode
  }

  const GridSpec& grid() const { return grid_; }

  /// Projects onto the retained band (dealias mask, zero mean).
  void project(std::vector<Complex>& w) const {
    for (std::size_t i = 0; i < modes_; ++i) w[i] *= mask_[i];
  }

  /// Spectrum of u.grad w with u = Biot-Savart(w), dealiased and zero-mean.
  /// Returns max |u| over the grid.
  double advection(const std::vector<Complex>& w, std::vector<Complex>& out) {
    const Complex i{0.0, 1.0};
    for (std::size_t m = 0; m < modes_; ++m) {
      const Complex psi = w[m] * inv_k2_[m];  // stream function, -Lap psi = w
      spec_[0][m] = -i * ky_[m] * psi;        // u1 = -d2 psi
      spec_[1][m] = i * kx_[m] * psi;         // u2 = d1 psi
      spec_[2][m] = i * kx_[m] * w[m];
      spec_[3][m] = i * ky_[m] * w[m];
    }
    for (int b = 0; b < 4; ++b) plans_.backward(spec_[b].data(), phys_[b].data());
    double vmax2 = 0.0;
    const std::size_t np = grid_.size();
    for (std::size_t p = 0; p < np; ++p) {
      const double u1 = phys_[0][p], u2 = phys_[1][p];
      vmax2 = std::max(vmax2, u1 * u1 + u2 * u2);
      prod_[p] = u1 * phys_[2][p] + u2 * phys_[3][p];
    }
    plans_.forward(prod_.data(), prod_spec_.data());
    const double scale = 1.0 / static_cast<double>(np);
    for (std::size_t m = 0; m < modes_; ++m) out[m] = prod_spec_[m] * (scale * mask_[m]);
    return std::sqrt(vmax2);
  }

  double max_speed(const std::vector<Complex>& w) {
    std::vector<Complex> scratch(modes_);
    return advection(w, scratch);
  }

  /// One integrating-factor RK4 step of size dt. `a` must already hold
  /// advection(w) (the first stage), which lets callers pick dt from the CFL
  /// speed computed in that stage.
  void rk4_step(std::vector<Complex>& w, const std::vector<Complex>& a, double dt, double nu) {
    prepare_factors(dt, nu);
    std::vector<Complex>& b = stage_[0];
    std::vector<Complex>& c = stage_[1];
    std::vector<Complex>& d = stage_[2];
    std::vector<Complex>& tmp = stage_[3];
    // Stages use N(w) = -advection(w).
    for (std::size_t m = 0; m < modes_; ++m) tmp[m] = e_half_[m] * (w[m] - 0.5 * dt * a[m]);
    advection(tmp, b);
    for (std::size_t m = 0; m < modes_; ++m) tmp[m] = e_half_[m] * w[m] - 0.5 * dt * b[m];
    advection(tmp, c);
    for (std::size_t m = 0; m < modes_; ++m) tmp[m] = e_full_[m] * w[m] - dt * e_half_[m] * c[m];
    advection(tmp, d);
    for (std::size_t m = 0; m < modes_; ++m) {
      w[m] = e_full_[m] * w[m] -
             dt / 6.0 * (e_full_[m] * a[m] + 2.0 * e_half_[m] * (b[m] + c[m]) + d[m]);
    }
  }

 private:
  void prepare_factors(double dt, double nu) {
    if (stage_.empty()) stage_.assign(4, std::vector<Complex>(modes_));
    if (dt == factor_dt_ && nu == factor_nu_) return;
    e_full_.resize(modes_);
    e_half_.resize(modes_);
    for (std::size_t m = 0; m < modes_; ++m) {
      e_full_[m] = std::exp(-nu * lap_[m] * dt);
      e_half_[m] = std::exp(-nu * lap_[m] * 0.5 * dt);
    }
    factor_dt_ = dt;
    factor_nu_ = nu;
  }

  GridSpec grid_;
  const fft::PlanPair& plans_;
  std::size_t modes_;
  std::vector<double> kx_, ky_, inv_k2_, lap_, mask_;
  std::vector<fft::AlignedBuffer<Complex>> spec_;
  std::vector<fft::AlignedBuffer<double>> phys_;
  fft::AlignedBuffer<double> prod_;
  fft::AlignedBuffer<Complex> prod_spec_;
  std::vector<std::vector<Complex>> stage_;
  std::vector<double> e_full_, e_half_;
  double factor_dt_ = -1.0, factor_nu_ = -1.0;
};

namespace detail {

inline std::vector<Complex> to_vector(const Spectrum& s) {
  return std::vector<Complex>(s.data().begin(), s.data().end());
}

inline Spectrum to_spectrum(const GridSpec& grid, const std::vector<Complex>& v) {
  Spectrum s(grid);
  std::copy(v.begin(), v.end(), s.data().begin());
  return s;
}

inline void require_zero_mean(const Spectrum& w) {
  const double scale = std::max(1.0, std::sqrt(w.energy()));
  if (std::abs(w.mean()) > 1e-12 * scale) throw PreconditionError("vorticity must have zero mean");
}

}  // namespace detail

/// Spectrum of u.grad w, u = biot_savart(w); two-thirds dealiased, zero mean.
inline Spectrum nonlinear_term(const Spectrum& w, bool dealias = true) {
  detail::require_zero_mean(w);
  SpectralSolver solver(w.grid(), dealias);
  std::vector<Complex> out(w.data().size());
  solver.advection(detail::to_vector(w), out);
  return detail::to_spectrum(w.grid(), out);
}

/// One IF-RK4 step of size config.dt. The mean is dropped exactly. Throws
/// StepSizeError if config.dt exceeds CFL * (1/N) / max|u|.
inline Spectrum step(const Spectrum& w, const SolverConfig& config) {
  detail::require_zero_mean(w);
  SpectralSolver solver(w.grid(), config.dealias);
  std::vector<Complex> state = detail::to_vector(w);
  state[0] = 0.0;
  std::vector<Complex> a(state.size());
  const double vmax = solver.advection(state, a);
  if (vmax > 0.0 && config.dt > config.cfl * w.grid().spacing() / vmax) {
    throw StepSizeError("time step violates the CFL bound; refine dt");
  }
  solver.rk4_step(state, a, config.dt, config.nu);
  return detail::to_spectrum(w.grid(), state);
}

inline constexpr double kBlowUpFactor = 1e3;

/// Integrates from w0 to config.T. The initial datum is first projected onto
/// the retained band; Trajectory::initial holds that projection.
inline Trajectory simulate(const ScalarField& w0, const SolverConfig& config) {
  config.validate();
  const GridSpec grid = w0.grid();
  detail::require_zero_mean(w0.spectrum());
  SpectralSolver solver(grid, config.dealias);
  std::vector<Complex> state = detail::to_vector(w0.spectrum());
  solver.project(state);

  Trajectory traj{config, inverse_transform(detail::to_spectrum(grid, state)), {}, {}, 0};
  const double linf0 = lp_norm(traj.initial, std::numeric_limits<double>::infinity());
  const double guard = kBlowUpFactor * std::max(linf0, 1e-300);

  std::vector<Complex> a(state.size());
  double t = 0.0;
  for (double target : config.resolved_snapshot_times()) {
    while (t < target) {
      const double vmax = solver.advection(state, a);
      double dt = config.dt;
      if (vmax > 0.0) dt = std::min(dt, config.cfl * grid.spacing() / vmax);
      bool last = false;
      if (t + dt * (1.0 + 1e-12) >= target) {
        dt = target - t;
        last = true;
      }
      solver.rk4_step(state, a, dt, config.nu);
      t = last ? target : t + dt;
      ++traj.steps;
      for (const auto& c : state) {
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag())) {
          throw InstabilityError("non-finite vorticity during time stepping");
        }
      }
      if (lp_norm(inverse_transform(detail::to_spectrum(grid, state)),
                  std::numeric_limits<double>::infinity()) > guard) {
        throw InstabilityError("vorticity exceeded 1e3 times its initial sup norm");
      }
    }
    ScalarField snap = inverse_transform(detail::to_spectrum(grid, state));
    traj.diagnostics.push_back(diagnose(target, snap));
    traj.snapshots.push_back({target, std::move(snap)});
  }
  return traj;
}

inline void write_diagnostics_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,l2,l4,linf,energy\n";
  for (const auto& d : traj.diagnostics) {
    out << io::format_double(d.t) << ',' << io::format_double(d.l2) << ',' << io::format_double(d.l4)
        << ',' << io::format_double(d.linf) << ',' << io::format_double(d.energy) << '\n';
  }
}

}  // namespace logeuler::flow
