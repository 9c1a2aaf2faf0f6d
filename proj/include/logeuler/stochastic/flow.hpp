#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "logeuler/field.hpp"
#include "logeuler/flow/solver.hpp"
#include "logeuler/parallel.hpp"
#include "logeuler/random.hpp"
#include "logeuler/snapshot_io.hpp"

namespace logeuler::stochastic {

enum class Interpolation { kBilinear, kSpectral };

struct EnsembleConfig {
  int M = 1;
  double sde_dt = 1e-2;
  std::uint64_t seed = 0;
  Interpolation interpolation = Interpolation::kBilinear;
  // Explicit start points; when empty every node of a grid_n x grid_n grid
  // is used (grid_n defaults to the trajectory resolution).
  std::vector<Point> start_points;
  std::optional<int> grid_n;

  void validate() const {
    if (M < 1) throw DomainError("ensemble size M must be >= 1");
    if (!(sde_dt > 0.0)) throw DomainError("SDE step must be positive");
  }
};

/// Terminal positions X_{t,0}(x; j) for every start point x and sample j,
/// stored at index point * M + j and wrapped to [0,1)^2.
struct FlowEnsemble {
  double t = 0.0;
  double nu = 0.0;
  int M = 1;
  std::uint64_t seed = 0;
  std::vector<Point> starts;
  std::vector<Point> positions;
  // Set when starts enumerate a full grid in node order.
  std::optional<int> grid_n;

  const Point& position(std::size_t point, int sample) const {
    return positions[point * static_cast<std::size_t>(M) + sample];
  }
};

namespace detail {

/// Velocity snapshots with linear interpolation in time.
class VelocityHistory {
 public:
  VelocityHistory(const flow::Trajectory& traj, double t, double sde_dt, Interpolation interp)
      : interp_(interp) {
    bool have_zero = false;
    for (const auto& s : traj.snapshots) have_zero |= s.t == 0.0;
    if (!have_zero) push(0.0, traj.initial);
    for (const auto& s : traj.snapshots) {
      push(s.t, s.omega);
      if (s.t >= t) break;
    }
    if (times_.back() < t) throw InsufficientDataError("trajectory does not reach the flow time");
    for (std::size_t i = 1; i < times_.size(); ++i) {
      if (times_[i] - times_[i - 1] > 10.0 * sde_dt * (1.0 + 1e-12)) {
        throw InsufficientDataError("velocity snapshots are more than 10 SDE steps apart");
      }
    }
  }

  struct Bracket {
    std::size_t lo = 0;
    double weight = 0.0;  // of snapshot lo + 1
  };

  Bracket bracket(double s) const {
    std::size_t hi = 1;
    while (hi + 1 < times_.size() && times_[hi] < s) ++hi;
    const double t0 = times_[hi - 1], t1 = times_[hi];
    return {hi - 1, t1 > t0 ? std::clamp((s - t0) / (t1 - t0), 0.0, 1.0) : 0.0};
  }

  Point velocity(const Bracket& b, const Point& x) const {
    const Point lo = eval(b.lo, x);
    if (b.weight == 0.0) return lo;
    const Point hi = eval(b.lo + 1, x);
    const double w = b.weight;
    return {(1 - w) * lo[0] + w * hi[0], (1 - w) * lo[1] + w * hi[1]};
  }

  bool zero_velocity() const { return zero_; }

 private:
  void push(double t, const ScalarField& omega) {
    times_.push_back(t);
    fields_.push_back(biot_savart(omega));
    zero_ = zero_ && fields_.back().max_speed() == 0.0;
  }

  Point eval(std::size_t i, const Point& x) const {
    const auto& u = fields_[i];
    if (interp_ == Interpolation::kSpectral) {
      return {evaluate_spectral(u.u1.spectrum(), x), evaluate_spectral(u.u2.spectrum(), x)};
    }
    return {interpolate_bilinear(u.u1, x), interpolate_bilinear(u.u2, x)};
  }

  Interpolation interp_;
  std::vector<double> times_;
  std::vector<VelocityField> fields_;
  bool zero_ = true;
};

inline std::vector<Point> grid_points(int n) {
  GridSpec grid(n);
  std::vector<Point> pts;
  pts.reserve(grid.size());
  for (int i1 = 0; i1 < n; ++i1) {
    for (int i2 = 0; i2 < n; ++i2) pts.push_back(grid.node(i1, i2));
  }
  return pts;
}

}  // namespace detail

/// Integrates the backward flow from s = t down to s = 0 in the reversed
/// time tau = t - s:
///   X <- X - u(s, X) d + sqrt(2 nu d) xi,   xi ~ N(0, I),
/// with xi addressed by (seed, point, sample, step). For nu = 0 the noise
/// drops out and the characteristics use a midpoint (RK2) step.
inline FlowEnsemble backward_flow(const flow::Trajectory& traj, double t, const EnsembleConfig& config) {
  config.validate();
  if (!(t >= 0.0)) throw DomainError("flow time must be nonnegative");
  const double nu = traj.config.nu;
  const detail::VelocityHistory history(traj, t, config.sde_dt, config.interpolation);

  FlowEnsemble ens;
  ens.t = t;
  ens.nu = nu;
  ens.M = config.M;
  ens.seed = config.seed;
  if (config.start_points.empty()) {
    const int n = config.grid_n.value_or(traj.initial.n());
    ens.starts = detail::grid_points(n);
    ens.grid_n = n;
  } else {
    ens.starts = config.start_points;
  }
  ens.positions.resize(ens.starts.size() * static_cast<std::size_t>(config.M));

  const int steps = t == 0.0 ? 0 : static_cast<int>(std::ceil(t / config.sde_dt * (1.0 - 1e-12)));
  const double d = steps == 0 ? 0.0 : t / steps;
  const double noise = std::sqrt(2.0 * nu * d);
  const rng::KeyedRandom random(config.seed);
  const bool still = history.zero_velocity();
  std::vector<detail::VelocityHistory::Bracket> at_step(steps), at_mid(steps);
  for (int k = 0; k < steps; ++k) {
    at_step[k] = history.bracket(t - k * d);
    at_mid[k] = history.bracket(t - (k + 0.5) * d);
  }

  parallel_for(ens.starts.size(), [&](std::size_t p) {
    for (int j = 0; j < config.M; ++j) {
      Point x = ens.starts[p];
      for (int k = 0; k < steps; ++k) {
        if (nu > 0.0) {
          if (!still) {
            const Point u = history.velocity(at_step[k], x);
            x[0] -= u[0] * d;
            x[1] -= u[1] * d;
          }
          const auto [g1, g2] = random.normals(rng::Stream::kBrownian, static_cast<std::uint32_t>(p),
                                               static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(k));
          x[0] += noise * g1;
          x[1] += noise * g2;
        } else if (!still) {
          const Point u0 = history.velocity(at_step[k], x);
          const Point mid = {x[0] - 0.5 * d * u0[0], x[1] - 0.5 * d * u0[1]};
          const Point um = history.velocity(at_mid[k], mid);
          x[0] -= d * um[0];
          x[1] -= d * um[1];
        }
        x = wrap_point(x);
      }
      ens.positions[p * static_cast<std::size_t>(config.M) + j] = wrap_point(x);
    }
  });
  return ens;
}

struct FeynmanKacResult {
  ScalarField mean;
  ScalarField std_error;     // per-point Monte Carlo standard error
  bool has_variance = false;  // false when M < 2
  double mean_std_error = 0.0;
};

/// w(t, x) ~ (1/M) sum_j w0(X_{t,0}(x; j)) on the ensemble's start grid.
inline FeynmanKacResult feynman_kac(const ScalarField& w0, const FlowEnsemble& ens,
                                    Interpolation interp = Interpolation::kBilinear) {
  if (!ens.grid_n) throw UsageError("Feynman-Kac reconstruction needs a full-grid ensemble");
  const GridSpec grid(*ens.grid_n);
  std::optional<Spectrum> spec;
  if (interp == Interpolation::kSpectral) spec = w0.spectrum();
  std::vector<double> mean(grid.size()), se(grid.size());
  const int M = ens.M;
  parallel_for(ens.starts.size(), [&](std::size_t p) {
    double s = 0.0, s2 = 0.0;
    for (int j = 0; j < M; ++j) {
      const Point& x = ens.position(p, j);
      const double v = spec ? evaluate_spectral(*spec, x) : interpolate_bilinear(w0, x);
      s += v;
      s2 += v * v;
    }
    const double m = s / M;
    mean[p] = m;
    if (M >= 2) {
      const double var = std::max(0.0, (s2 - M * m * m) / (M - 1));
      se[p] = std::sqrt(var / M);
    }
  });
  double mse = 0.0;
  for (double v : se) mse += v;
  mse /= static_cast<double>(se.size());
  return {ScalarField(grid, std::move(mean)), ScalarField(grid, std::move(se)), M >= 2, mse};
}

struct FlowDistance {
  double value = 0.0;      // (1/#x) sum_x (1/M) sum_j d(X^nu, X^0)^2
  double std_error = 0.0;  // across samples j of the per-sample spatial means
};

inline FlowDistance flow_l2_distance_stats(const FlowEnsemble& stochastic, const FlowEnsemble& deterministic) {
  if (deterministic.nu != 0.0) throw UsageError("reference flow must be deterministic (nu = 0)");
  if (stochastic.t != deterministic.t) throw UsageError("flows evaluated at different times");
  if (stochastic.starts.size() != deterministic.starts.size()) throw UsageError("start point sets differ");
  for (std::size_t p = 0; p < stochastic.starts.size(); ++p) {
    if (stochastic.starts[p] != deterministic.starts[p]) throw UsageError("start point sets differ");
  }
  const int M = stochastic.M;
  const std::size_t points = stochastic.starts.size();
  std::vector<double> per_sample(M, 0.0);
  for (int j = 0; j < M; ++j) {
    const int jd = deterministic.M == M ? j : 0;
    double acc = 0.0;
    for (std::size_t p = 0; p < points; ++p) {
      const double dist = geodesic_distance(stochastic.position(p, j), deterministic.position(p, jd));
      acc += dist * dist;
    }
    per_sample[j] = acc / static_cast<double>(points);
  }
  FlowDistance out;
  for (double v : per_sample) out.value += v;
  out.value /= M;
  if (M >= 2) {
    double var = 0.0;
    for (double v : per_sample) var += (v - out.value) * (v - out.value);
    out.std_error = std::sqrt(var / (M - 1) / M);
  }
  return out;
}

inline double flow_l2_distance(const FlowEnsemble& stochastic, const FlowEnsemble& deterministic) {
  return flow_l2_distance_stats(stochastic, deterministic).value;
}

/// Summary rows (x1, x2, mean X1, mean X2, var, M). Means are start + mean
/// minimal displacement, wrapped; var is the total variance of the
/// displacement (both components).
inline void write_ensemble_summary_csv(std::ostream& out, const FlowEnsemble& ens) {
  out << "x1,x2,mean_X1,mean_X2,var,M\n";
  for (std::size_t p = 0; p < ens.starts.size(); ++p) {
    const Point& x = ens.starts[p];
    double m1 = 0.0, m2 = 0.0, s = 0.0;
    for (int j = 0; j < ens.M; ++j) {
      const Point& y = ens.position(p, j);
      const double d1 = minimal_offset(y[0] - x[0]), d2 = minimal_offset(y[1] - x[1]);
      m1 += d1;
      m2 += d2;
      s += d1 * d1 + d2 * d2;
    }
    m1 /= ens.M;
    m2 /= ens.M;
    const double var = s / ens.M - (m1 * m1 + m2 * m2);
    out << io::format_double(x[0]) << ',' << io::format_double(x[1]) << ','
        << io::format_double(wrap_unit(x[0] + m1)) << ',' << io::format_double(wrap_unit(x[1] + m2)) << ','
        << io::format_double(std::max(0.0, var)) << ',' << ens.M << '\n';
  }
}

/// Full ensemble dump: per sample, one X1 layer and one X2 layer.
inline void write_ensemble_snapshot(const std::string& path, const FlowEnsemble& ens) {
  if (!ens.grid_n) throw UsageError("ensemble dumps need full-grid start points");
  const GridSpec grid(*ens.grid_n);
  std::vector<io::SnapshotRecord> records;
  for (int j = 0; j < ens.M; ++j) {
    std::vector<double> a(grid.size()), b(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) {
      a[p] = ens.position(p, j)[0];
      b[p] = ens.position(p, j)[1];
    }
    records.push_back({io::PayloadKind::kEnsembleX1, ScalarField(grid, std::move(a))});
    records.push_back({io::PayloadKind::kEnsembleX2, ScalarField(grid, std::move(b))});
  }
  io::write_snapshot(path, records);
}

}  // namespace logeuler::stochastic
