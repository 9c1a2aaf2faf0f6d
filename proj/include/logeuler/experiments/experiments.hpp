#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "logeuler/experiments/rate_fit.hpp"
#include "logeuler/flow/solver.hpp"
#include "logeuler/logspaces/hlog.hpp"
#include "logeuler/logspaces/kernel.hpp"
#include "logeuler/parallel.hpp"
#include "logeuler/stochastic/flow.hpp"

namespace logeuler::experiments {

inline constexpr double kTailFlagThreshold = 0.01;

// ---------------------------------------------------------------------------
// Propagation of W^2_{log,theta} regularity along Euler.

struct PropagationReport {
  double theta = 0.5;
  int n = 0;
  std::vector<double> h_grid;
  std::vector<double> times;
  std::vector<double> seminorm;      // [w(t)]_theta
  std::vector<double> argmax_h;      // width attaining the sup at each time
  std::vector<double> bound_growth;  // sqrt(t) ||w0||_2^(1/2) ||w0||_4
  std::vector<double> c_hat;         // ([w(t)]^2 - [w0]^2) / (t ||w0||_2 ||w0||_4^2)
  std::vector<double> tail_fraction;
  double c_hat_max = 0.0;
  bool under_resolved = false;
};

/// Runs Euler from w0 (config.nu is forced to 0) and tracks the W^2_{log,theta}
/// semi-norm at every snapshot. Ĉ(0) is defined as 0.
inline PropagationReport propagation_experiment(const ScalarField& w0, flow::SolverConfig config,
                                                double theta = 0.5,
                                                std::optional<std::vector<double>> h_grid = std::nullopt) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("θ must lie in (0,1)");
  config.nu = 0.0;
  const auto traj = flow::simulate(w0, config);
  const ScalarField& init = traj.initial;
  const auto hs = h_grid.value_or(logspaces::default_h_grid(init.grid()));
  const double l2 = lp_norm(init, 2.0);
  const double l4 = lp_norm(init, 4.0);
  const double base = logspaces::wlog_seminorm(init, theta, hs).value;

  PropagationReport rep;
  rep.theta = theta;
  rep.n = init.n();
  rep.h_grid = hs;
  rep.c_hat_max = -std::numeric_limits<double>::infinity();
  for (const auto& snap : traj.snapshots) {
    const auto s = snap.t == 0.0 ? logspaces::wlog_seminorm(init, theta, hs)
                                 : logspaces::wlog_seminorm(snap.omega, theta, hs);
    rep.times.push_back(snap.t);
    rep.seminorm.push_back(s.value);
    rep.argmax_h.push_back(s.h);
    rep.bound_growth.push_back(std::sqrt(snap.t * l2) * l4);
    const double denom = snap.t * l2 * l4 * l4;
    const double c = (snap.t == 0.0 || denom == 0.0) ? 0.0 : (s.value * s.value - base * base) / denom;
    rep.c_hat.push_back(c);
    rep.c_hat_max = std::max(rep.c_hat_max, c);
    const double tail = flow::spectral_tail_fraction(snap.omega.spectrum());
    rep.tail_fraction.push_back(tail);
    rep.under_resolved |= tail > kTailFlagThreshold;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// H^{log,p} propagation for bounded vorticity.

struct YudovichReport {
  double p = 2.0;
  std::vector<double> times;
  std::vector<double> lhs;        // [w(t)]_{H^{log,p}} (Fourier form)
  std::vector<double> rhs_shape;  // t^(p/2) ||w0||_inf^(1+p/2)
  std::vector<double> prefactor;  // (lhs - [w0]) / rhs_shape, 0 at t = 0
  double base = 0.0;              // [w0]_{H^{log,p}}
  double prefactor_max = 0.0;
};

inline YudovichReport yudovich_propagation_experiment(const ScalarField& w0, double p,
                                                      flow::SolverConfig config) {
  if (!(p > 1.0)) throw DomainError("p must be > 1");
  config.nu = 0.0;
  const auto traj = flow::simulate(w0, config);
  const double linf = lp_norm(traj.initial, std::numeric_limits<double>::infinity());
  YudovichReport rep;
  rep.p = p;
  rep.base = logspaces::hlog_fourier(traj.initial, p).value;
  for (const auto& snap : traj.snapshots) {
    const double lhs = logspaces::hlog_fourier(snap.omega, p).value;
    const double shape = std::pow(snap.t, p / 2.0) * std::pow(linf, 1.0 + p / 2.0);
    rep.times.push_back(snap.t);
    rep.lhs.push_back(lhs);
    rep.rhs_shape.push_back(shape);
    const double pre = (snap.t == 0.0 || shape == 0.0) ? 0.0 : (lhs - rep.base) / shape;
    rep.prefactor.push_back(pre);
    rep.prefactor_max = std::max(rep.prefactor_max, pre);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Inviscid limit sweeps.

/// max over shared snapshot times of ||a(t) - b(t)||_{L^q}.
inline double max_lq_difference(const flow::Trajectory& a, const flow::Trajectory& b, double q) {
  if (a.snapshots.size() != b.snapshots.size()) throw UsageError("trajectories have different snapshot grids");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.snapshots.size(); ++i) {
    if (a.snapshots[i].t != b.snapshots[i].t) throw UsageError("trajectories have different snapshot grids");
    worst = std::max(worst, lp_norm(a.snapshots[i].omega - b.snapshots[i].omega, q));
  }
  return worst;
}

/// Exponent of the L^q rate, min(alpha/2, alpha/q).
inline double lq_rate_exponent(double alpha, double q) {
  if (!(q >= 1.0) || std::isinf(q)) throw DomainError("q must lie in [1, inf)");
  return std::min(alpha / 2.0, alpha / q);
}

struct SweepRow {
  double nu;
  double error;          // E(nu)
  double product;        // E(nu) |log nu|^exponent
  double tail_fraction;  // of the final NS snapshot
  bool under_resolved;
};

struct InviscidLimitReport {
  double alpha = 1.0;
  double q = 2.0;
  double exponent = 0.5;  // f(alpha, q)
  std::vector<SweepRow> rows;
  RateFit fit;            // loglog model on (nu, E)
  bool fit_available = false;
  double c_hat = 0.0;     // max product
  bool monotone = true;   // E non-increasing as nu decreases
  bool any_under_resolved = false;
};

inline void check_nu_list(const std::vector<double>& nus) {
  if (nus.empty()) throw DomainError("empty viscosity list");
  for (std::size_t i = 0; i < nus.size(); ++i) {
    if (!(nus[i] > 0.0 && nus[i] < 1.0)) throw DomainError("viscosities must lie in (0, 1)");
    if (i > 0 && !(nus[i] < nus[i - 1])) throw DomainError("viscosity list must be strictly decreasing");
  }
}

/// NS at each nu and Euler from the same w0 on the same grid and step
/// bound; E(nu) = max_t ||w^nu(t) - w(t)||_{L^q}. All runs are independent
/// and go through parallel_for; the report is assembled in nu order.
inline InviscidLimitReport lq_rate_experiment(const ScalarField& w0, double alpha,
                                              const std::vector<double>& nus,
                                              const flow::SolverConfig& config, double q) {
  if (!(alpha > 0.0)) throw DomainError("alpha must be positive");
  const double f = lq_rate_exponent(alpha, q);
  check_nu_list(nus);
  config.validate();

  std::vector<std::optional<flow::Trajectory>> runs(nus.size() + 1);
  parallel_for(runs.size(), [&](std::size_t i) {
    flow::SolverConfig c = config;
    c.nu = i == 0 ? 0.0 : nus[i - 1];
    runs[i] = flow::simulate(w0, c);
  });

  InviscidLimitReport rep;
  rep.alpha = alpha;
  rep.q = q;
  rep.exponent = f;
  std::vector<std::pair<double, double>> table;
  for (std::size_t i = 0; i < nus.size(); ++i) {
    const auto& ns = *runs[i + 1];
    const double e = max_lq_difference(ns, *runs[0], q);
    const double tail = flow::spectral_tail_fraction(ns.snapshots.back().omega.spectrum());
    const double prod = e * std::pow(std::abs(std::log(nus[i])), f);
    rep.rows.push_back({nus[i], e, prod, tail, tail > kTailFlagThreshold});
    rep.c_hat = std::max(rep.c_hat, prod);
    rep.any_under_resolved |= tail > kTailFlagThreshold;
    if (i > 0 && e > rep.rows[i - 1].error) rep.monotone = false;
    if (e > 0.0) table.emplace_back(nus[i], e);
  }
  if (table.size() >= 3) {
    rep.fit = fit_rate(table, RateModel::kLogLog);
    rep.fit_available = true;
  }
  return rep;
}

inline InviscidLimitReport inviscid_limit_experiment(const ScalarField& w0, double alpha,
                                                     const std::vector<double>& nus,
                                                     const flow::SolverConfig& config) {
  return lq_rate_experiment(w0, alpha, nus, config, 2.0);
}

// ---------------------------------------------------------------------------
// Zero-noise convergence of the stochastic flow.

struct FlowSweepRow {
  double nu;
  double distance;
  double std_error;
};

struct FlowConvergenceReport {
  std::vector<FlowSweepRow> rows;
  RateFit fit;  // power model
  bool fit_available = false;
  bool monotone = true;
  bool inconclusive = false;  // MC error above 25% of the smallest distance
};

/// Flow distance at (t, s) = (T, 0) for each nu against the Euler
/// characteristics. Snapshot times default to a uniform grid with spacing
/// ensemble.sde_dt.
inline FlowConvergenceReport flow_convergence_experiment(const ScalarField& w0, const std::vector<double>& nus,
                                                         flow::SolverConfig config,
                                                         const stochastic::EnsembleConfig& ensemble) {
  check_nu_list(nus);
  ensemble.validate();
  if (config.snapshot_times.empty()) {
    const int count = std::max(1, static_cast<int>(std::ceil(config.T / ensemble.sde_dt - 1e-9)));
    config.snapshot_times = flow::uniform_times(config.T, count);
  }
  config.validate();

  std::vector<std::optional<flow::Trajectory>> runs(nus.size() + 1);
  parallel_for(runs.size(), [&](std::size_t i) {
    flow::SolverConfig c = config;
    c.nu = i == 0 ? 0.0 : nus[i - 1];
    runs[i] = flow::simulate(w0, c);
  });

  stochastic::EnsembleConfig det = ensemble;
  det.M = 1;
  const auto reference = stochastic::backward_flow(*runs[0], config.T, det);

  FlowConvergenceReport rep;
  std::vector<std::pair<double, double>> table;
  for (std::size_t i = 0; i < nus.size(); ++i) {
    const auto ens = stochastic::backward_flow(*runs[i + 1], config.T, ensemble);
    const auto d = stochastic::flow_l2_distance_stats(ens, reference);
    rep.rows.push_back({nus[i], d.value, d.std_error});
    if (i > 0 && d.value > rep.rows[i - 1].distance) rep.monotone = false;
    if (d.value > 0.0) table.emplace_back(nus[i], d.value);
  }
  const auto smallest = std::min_element(rep.rows.begin(), rep.rows.end(),
                                         [](const auto& a, const auto& b) { return a.distance < b.distance; });
  rep.inconclusive = smallest->std_error > 0.25 * smallest->distance;
  if (table.size() >= 3) {
    rep.fit = fit_rate(table, RateModel::kPower);
    rep.fit_available = true;
  }
  return rep;
}

}  // namespace logeuler::experiments
