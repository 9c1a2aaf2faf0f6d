#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "logeuler/flow/solver.hpp"
#include "logeuler/random_field.hpp"

using namespace logeuler;
using namespace logeuler::flow;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * kPi;

struct Mode {
  int k1, k2;
  double amp, phase;
};

// w = sum a cos(2 pi k.x + phi). Velocity and gradient are written out
// term by term from -Lap psi = w and u = (-d2 psi, d1 psi).
struct ModeSum {
  std::vector<Mode> modes;

  double omega(double x1, double x2) const {
    double s = 0.0;
    for (const auto& m : modes) s += m.amp * std::cos(kTwoPi * (m.k1 * x1 + m.k2 * x2) + m.phase);
    return s;
  }

  double advection(double x1, double x2) const {
    double u1 = 0, u2 = 0, g1 = 0, g2 = 0;
    for (const auto& m : modes) {
      const double th = kTwoPi * (m.k1 * x1 + m.k2 * x2) + m.phase;
      const double ksq = double(m.k1) * m.k1 + double(m.k2) * m.k2;
      // d_i psi = -a 2 pi k_i sin(th) / (4 pi^2 |k|^2)
      const double dpsi1 = -m.amp * kTwoPi * m.k1 * std::sin(th) / (kTwoPi * kTwoPi * ksq);
      const double dpsi2 = -m.amp * kTwoPi * m.k2 * std::sin(th) / (kTwoPi * kTwoPi * ksq);
      u1 += -dpsi2;
      u2 += dpsi1;
      g1 += -m.amp * kTwoPi * m.k1 * std::sin(th);
      g2 += -m.amp * kTwoPi * m.k2 * std::sin(th);
    }
    return u1 * g1 + u2 * g2;
  }

  ScalarField field(int n) const {
    return ScalarField::from_function(GridSpec(n), [this](double a, double b) { return omega(a, b); });
  }
};

ScalarField cos_x1(int n) {
  return ScalarField::from_function(GridSpec(n), [](double x1, double) { return std::cos(kTwoPi * x1); });
}

ScalarField three_mode(int n) {
  return ScalarField::from_function(GridSpec(n), [](double x1, double x2) {
    return std::cos(kTwoPi * x1) + std::cos(kTwoPi * x2) + std::sin(kTwoPi * (x1 + x2));
  });
}

double rel_l2(const ScalarField& a, const ScalarField& b) { return lp_norm(a - b, 2.0) / lp_norm(b, 2.0); }

}  // namespace

TEST(NonlinearTerm, ShearAndZeroVanish) {
  const auto n = nonlinear_term(cos_x1(32).spectrum());
  EXPECT_LT(n.max_abs(), 1e-14);
  EXPECT_EQ(nonlinear_term(ScalarField(GridSpec(32)).spectrum()).max_abs(), 0.0);
}

TEST(NonlinearTerm, MatchesSymbolicExpansion) {
  const std::vector<ModeSum> cases{
      {{{1, 0, 1.0, 0.0}, {0, 1, 1.0, 0.0}}},
      {{{1, 0, 1.0, 0.0}, {0, 2, 1.0, 0.0}}},
      {{{1, 0, 1.0, 0.0}, {0, 1, 1.0, 0.0}, {1, 1, 1.0, -kPi / 2}}},
      {{{2, -1, 0.7, 0.3}, {1, 3, -0.4, 1.1}, {0, 2, 0.5, 0.0}, {3, 1, 0.2, -0.6}}},
  };
  const int n = 32;
  for (const auto& c : cases) {
    const auto w = c.field(n);
    const auto adv = inverse_transform(nonlinear_term(w.spectrum()));
    GridSpec g(n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const Point x = g.node(i, j);
        ASSERT_NEAR(adv(i, j), c.advection(x[0], x[1]), 1e-11);
      }
  }
  // The second case has the closed form 3/2 sin(2 pi x1) sin(4 pi x2).
  EXPECT_NEAR(cases[1].advection(0.1, 0.2), 1.5 * std::sin(kTwoPi * 0.1) * std::sin(2 * kTwoPi * 0.2), 1e-14);
}

TEST(NonlinearTerm, RejectsNonzeroMean) {
  EXPECT_THROW(nonlinear_term(ScalarField::constant(GridSpec(16), 1.0).spectrum()), PreconditionError);
}

TEST(Step, SteadyShearAndHeatDecay) {
  const auto w = cos_x1(32);
  SolverConfig c;
  c.dt = 0.01;
  const auto euler = inverse_transform(step(w.spectrum(), c));
  EXPECT_LT(lp_norm(euler - w, INFINITY), 1e-12);
  c.nu = 0.05;
  const auto ns = inverse_transform(step(w.spectrum(), c));
  const double f = std::exp(-4 * kPi * kPi * c.nu * c.dt);
  EXPECT_LT(lp_norm(ns - f * w, INFINITY), 1e-12);
  EXPECT_EQ(step(ScalarField(GridSpec(16)).spectrum(), c).max_abs(), 0.0);
}

TEST(Step, CflViolationIsReported) {
  SolverConfig c;
  c.dt = 1.0;
  EXPECT_THROW(step(three_mode(32).spectrum(), c), StepSizeError);
}

TEST(Simulate, AnalyticShearSolution) {
  for (double nu : {0.0, 0.01}) {
    SolverConfig c;
    c.nu = nu;
    c.T = 1.0;
    c.snapshot_times = uniform_times(1.0, 4);
    const auto traj = simulate(cos_x1(64), c);
    ASSERT_EQ(traj.snapshots.size(), 5u);
    for (const auto& s : traj.snapshots) {
      const auto exact = std::exp(-4 * kPi * kPi * nu * s.t) * cos_x1(64);
      EXPECT_LT(rel_l2(s.omega, exact), 1e-8) << nu << ' ' << s.t;
    }
  }
}

TEST(Simulate, ZeroStaysZero) {
  SolverConfig c;
  c.T = 0.5;
  const auto traj = simulate(ScalarField(GridSpec(16)), c);
  EXPECT_EQ(lp_norm(traj.snapshots.back().omega, INFINITY), 0.0);
}

TEST(Simulate, EulerConservesNorms) {
  SolverConfig c;
  c.T = 1.0;
  c.snapshot_times = uniform_times(1.0, 4);
  const auto traj = simulate(three_mode(128), c);
  const auto& d0 = traj.diagnostics.front();
  for (const auto& d : traj.diagnostics) {
    EXPECT_LT(std::abs(d.l2 - d0.l2) / d0.l2, 1e-6);
    EXPECT_LT(std::abs(d.l4 - d0.l4) / d0.l4, 1e-6);
    EXPECT_LT(std::abs(d.energy - d0.energy) / d0.energy, 1e-6);
  }
  EXPECT_LT(std::abs(traj.snapshots.back().omega.spectrum().mean()), 1e-15);
}

TEST(Simulate, NavierStokesNormsDoNotGrow) {
  SolverConfig c;
  c.nu = 1e-2;
  c.T = 0.5;
  c.snapshot_times = uniform_times(0.5, 10);
  const auto traj = simulate(three_mode(64), c);
  for (std::size_t i = 1; i < traj.diagnostics.size(); ++i) {
    EXPECT_LE(traj.diagnostics[i].l2, traj.diagnostics[i - 1].l2 * (1 + 1e-8));
    EXPECT_LE(traj.diagnostics[i].linf, traj.diagnostics[0].linf * (1 + 1e-8));
  }
}

TEST(Simulate, ResolutionDoublingChangesLittle) {
  SolverConfig c;
  c.T = 0.5;
  const double a = lp_norm(simulate(three_mode(64), c).snapshots.back().omega, 2.0);
  const double b = lp_norm(simulate(three_mode(128), c).snapshots.back().omega, 2.0);
  EXPECT_LT(std::abs(a - b) / b, 1e-4);
}

TEST(Simulate, BitwiseDeterministic) {
  RandomLogFieldOptions o;
  o.k_cut = 8;
  const auto w0 = random_log_field(GridSpec(32), o);
  SolverConfig c;
  c.nu = 1e-3;
  c.T = 0.2;
  const auto a = simulate(w0, c);
  const auto b = simulate(w0, c);
  ASSERT_EQ(a.steps, b.steps);
  for (std::size_t i = 0; i < a.snapshots.back().omega.values().size(); ++i) {
    ASSERT_EQ(a.snapshots.back().omega.values()[i], b.snapshots.back().omega.values()[i]);
  }
}

TEST(Simulate, SnapshotsLandOnRequestedTimes) {
  SolverConfig c;
  c.T = 0.3;
  c.dt = 0.07;
  c.snapshot_times = {0.0, 0.1, 0.25, 0.3};
  const auto traj = simulate(three_mode(32), c);
  ASSERT_EQ(traj.snapshots.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(traj.snapshots[i].t, c.snapshot_times[i]);
  EXPECT_EQ(&traj.at(0.25), &traj.snapshots[2].omega);
  EXPECT_THROW(traj.at(0.2), UsageError);
}

TEST(Simulate, ProjectsInitialDatumOntoRetainedBand) {
  RandomLogFieldOptions o;
  const auto w0 = random_log_field(GridSpec(32), o);
  SolverConfig c;
  c.T = 0.0;
  const auto traj = simulate(w0, c);
  traj.initial.spectrum().for_each_mode([&](int r, int col, int k1, int k2, double) {
    if (3 * std::abs(k1) >= 32 || 3 * std::abs(k2) >= 32) {
      EXPECT_LT(std::abs(traj.initial.spectrum().stored(r, col)), 1e-16);
    }
  });
}

TEST(Config, ValidationErrors) {
  SolverConfig c;
  c.nu = -1;
  EXPECT_THROW(c.validate(), DomainError);
  c = SolverConfig{};
  c.snapshot_times = {0.5, 0.2};
  EXPECT_THROW(c.validate(), DomainError);
  c.snapshot_times = {2.0};
  EXPECT_THROW(c.validate(), DomainError);
  c = SolverConfig{};
  c.dt = 0.0;
  EXPECT_THROW(c.validate(), DomainError);
  EXPECT_THROW(simulate(ScalarField::constant(GridSpec(16), 1.0), SolverConfig{}), PreconditionError);
}

TEST(Diagnostics, TailFractionAndCsv) {
  EXPECT_LT(spectral_tail_fraction(three_mode(64).spectrum()), 1e-20);
  RandomLogFieldOptions o;
  EXPECT_GT(spectral_tail_fraction(random_log_field(GridSpec(64), o).spectrum()), 0.01);
  SolverConfig c;
  c.T = 0.1;
  std::ostringstream out;
  write_diagnostics_csv(out, simulate(three_mode(16), c));
  EXPECT_EQ(out.str().substr(0, 20), "t,l2,l4,linf,energy\n");
}

TEST(Diagnostics, KineticEnergyOfShear) {
  // u2 = -sin(2 pi x1) / (2 pi): (1/2) * (1/2) / (4 pi^2)
  EXPECT_NEAR(kinetic_energy(cos_x1(32).spectrum()), 1.0 / (16 * kPi * kPi), 1e-15);
}
