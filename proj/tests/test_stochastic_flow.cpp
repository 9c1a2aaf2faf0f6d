#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "logeuler/stochastic/flow.hpp"

using namespace logeuler;
using namespace logeuler::stochastic;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ScalarField cos_x1(int n) {
  return ScalarField::from_function(GridSpec(n), [](double x1, double) { return std::cos(kTwoPi * x1); });
}

ScalarField three_mode(int n) {
  return ScalarField::from_function(GridSpec(n), [](double x1, double x2) {
    return std::cos(kTwoPi * x1) + std::cos(kTwoPi * x2) + std::sin(kTwoPi * (x1 + x2));
  });
}

flow::Trajectory run(const ScalarField& w0, double nu, double T, int snaps) {
  flow::SolverConfig c;
  c.nu = nu;
  c.T = T;
  c.snapshot_times = flow::uniform_times(T, snaps);
  return flow::simulate(w0, c);
}

// RAII guard for the global thread cap.
struct ThreadCap {
  unsigned saved;
  explicit ThreadCap(unsigned n) : saved(thread_cap()) { thread_cap() = n; }
  ~ThreadCap() { thread_cap() = saved; }
};

}  // namespace

TEST(BackwardFlow, StillFluidWithoutNoiseIsIdentity) {
  const auto traj = run(ScalarField(GridSpec(16)), 0.0, 0.5, 10);
  EnsembleConfig c;
  c.sde_dt = 0.05;
  const auto ens = backward_flow(traj, 0.5, c);
  ASSERT_EQ(ens.positions.size(), 256u);
  for (std::size_t p = 0; p < ens.starts.size(); ++p) EXPECT_EQ(ens.position(p, 0), ens.starts[p]);
}

TEST(BackwardFlow, ShearCharacteristicsAreExplicit) {
  const double t = 0.5;
  const auto traj = run(cos_x1(64), 0.0, t, 20);
  for (auto interp : {Interpolation::kSpectral, Interpolation::kBilinear}) {
    EnsembleConfig c;
    c.sde_dt = 0.025;
    c.interpolation = interp;
    c.start_points = {{0.1, 0.2}, {0.33, 0.9}, {0.77, 0.5}, {0.5, 0.01}};
    const auto ens = backward_flow(traj, t, c);
    const double tol = interp == Interpolation::kSpectral ? 1e-12 : 1e-4;
    for (std::size_t p = 0; p < c.start_points.size(); ++p) {
      const Point x = c.start_points[p];
      const Point expect = wrap_point({x[0], x[1] + t * std::sin(kTwoPi * x[0]) / kTwoPi});
      EXPECT_LT(geodesic_distance(ens.position(p, 0), expect), tol);
    }
  }
}

TEST(BackwardFlow, MidpointStepIsSecondOrderInTime) {
  // A time-dependent flow: halving sde_dt should cut the error by about 4.
  const double t = 0.4;
  const auto traj = run(three_mode(32), 0.0, t, 40);
  EnsembleConfig c;
  c.interpolation = Interpolation::kSpectral;
  c.start_points = {{0.1, 0.2}, {0.6, 0.3}, {0.45, 0.85}};
  auto at = [&](double dt) {
    c.sde_dt = dt;
    return backward_flow(traj, t, c);
  };
  const auto ref = at(0.0025);
  const auto coarse = at(0.02), fine = at(0.01);
  double ec = 0, ef = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    ec = std::max(ec, geodesic_distance(coarse.position(p, 0), ref.position(p, 0)));
    ef = std::max(ef, geodesic_distance(fine.position(p, 0), ref.position(p, 0)));
  }
  EXPECT_GT(ec / ef, 2.5);
}

TEST(BackwardFlow, BrownianVarianceMatches) {
  const double nu = 0.01, t = 0.5;
  const auto traj = run(ScalarField(GridSpec(16)), nu, t, 10);
  EnsembleConfig c;
  c.M = 10000;
  c.sde_dt = 0.05;
  c.seed = 99;
  c.start_points = {{0.5, 0.5}, {0.25, 0.75}};
  const auto ens = backward_flow(traj, t, c);
  const double expected = 2.0 * nu * t;
  for (std::size_t p = 0; p < 2; ++p) {
    for (int comp = 0; comp < 2; ++comp) {
      double s = 0.0, s2 = 0.0;
      for (int j = 0; j < c.M; ++j) {
        const double d = minimal_offset(ens.position(p, j)[comp] - c.start_points[p][comp]);
        s += d;
        s2 += d * d;
      }
      const double m = s / c.M;
      const double var = (s2 - c.M * m * m) / (c.M - 1);
      // Sample variance of M normals has standard deviation sigma^2 sqrt(2/(M-1)).
      EXPECT_LT(std::abs(var - expected), 4.0 * expected * std::sqrt(2.0 / (c.M - 1)));
      EXPECT_LT(std::abs(m), 4.0 * std::sqrt(expected / c.M));
    }
  }
}

TEST(BackwardFlow, IdenticalUnderAnyThreadCount) {
  const auto traj = run(three_mode(32), 0.02, 0.3, 12);
  EnsembleConfig c;
  c.M = 8;
  c.sde_dt = 0.025;
  c.seed = 5;
  std::vector<Point> a, b;
  {
    ThreadCap cap(1);
    a = backward_flow(traj, 0.3, c).positions;
  }
  {
    ThreadCap cap(5);
    b = backward_flow(traj, 0.3, c).positions;
  }
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_EQ(a[i], b[i]);
}

TEST(BackwardFlow, DeterministicFlowPreservesMeasure) {
  const auto traj = run(three_mode(64), 0.0, 0.5, 20);
  EnsembleConfig c;
  c.sde_dt = 0.025;
  c.grid_n = 128;
  const auto ens = backward_flow(traj, 0.5, c);
  std::vector<int> bins(256, 0);
  for (const auto& x : ens.positions) {
    const int b1 = std::min(15, static_cast<int>(x[0] * 16));
    const int b2 = std::min(15, static_cast<int>(x[1] * 16));
    ++bins[b1 * 16 + b2];
  }
  const double n = static_cast<double>(ens.positions.size());
  const double mean = n / 256.0;
  const double sigma = std::sqrt(n * (1.0 / 256.0) * (1.0 - 1.0 / 256.0));
  for (int v : bins) EXPECT_LT(std::abs(v - mean), 4.0 * sigma);
}

TEST(BackwardFlow, InsufficientSnapshotsAreRejected) {
  const auto sparse = run(three_mode(16), 0.0, 1.0, 2);
  EnsembleConfig c;
  c.sde_dt = 0.01;
  EXPECT_THROW(backward_flow(sparse, 1.0, c), InsufficientDataError);
  const auto short_run = run(three_mode(16), 0.0, 0.1, 2);
  EXPECT_THROW(backward_flow(short_run, 0.5, c), InsufficientDataError);
  c.M = 0;
  EXPECT_THROW(backward_flow(short_run, 0.1, c), DomainError);
}

TEST(FeynmanKac, ConstantDatumIsExact) {
  const auto traj = run(three_mode(16), 0.05, 0.2, 8);
  EnsembleConfig c;
  c.M = 4;
  c.sde_dt = 0.05;
  const auto ens = backward_flow(traj, 0.2, c);
  const auto r = feynman_kac(ScalarField::constant(GridSpec(16), 2.5), ens);
  for (double v : r.mean.values()) EXPECT_NEAR(v, 2.5, 1e-14);
  EXPECT_TRUE(r.has_variance);
  EXPECT_NEAR(r.mean_std_error, 0.0, 1e-14);
}

TEST(FeynmanKac, SingleDeterministicSampleIsComposition) {
  const auto w0 = three_mode(32);
  const auto traj = run(w0, 0.0, 0.2, 8);
  EnsembleConfig c;
  c.sde_dt = 0.025;
  const auto ens = backward_flow(traj, 0.2, c);
  const auto r = feynman_kac(w0, ens);
  EXPECT_FALSE(r.has_variance);
  for (std::size_t p = 0; p < ens.starts.size(); ++p) {
    EXPECT_EQ(r.mean.values()[p], interpolate_bilinear(w0, ens.position(p, 0)));
  }
}

TEST(FeynmanKac, ShearReconstructionMatchesSolver) {
  const double nu = 0.01, t = 0.5;
  const auto traj = run(cos_x1(32), nu, t, 10);
  EnsembleConfig c;
  c.M = 2000;
  c.sde_dt = 0.05;
  c.seed = 3;
  const auto ens = backward_flow(traj, t, c);
  const auto r = feynman_kac(cos_x1(32), ens);
  const double err = lp_norm(r.mean - traj.snapshots.back().omega, 2.0);
  EXPECT_LT(err, 3.0 * r.mean_std_error);
  // Mean preservation within Monte Carlo error.
  EXPECT_LT(std::abs(r.mean.mean()), 4.0 * r.mean_std_error);
}

TEST(FlowDistance, SelfDistanceAndStillFluid) {
  const auto euler = run(three_mode(16), 0.0, 0.2, 8);
  EnsembleConfig c;
  c.sde_dt = 0.025;
  const auto det = backward_flow(euler, 0.2, c);
  EXPECT_EQ(flow_l2_distance(det, det), 0.0);

  const double nu = 0.005, t = 0.4;
  const auto still_ns = run(ScalarField(GridSpec(16)), nu, t, 8);
  const auto still_e = run(ScalarField(GridSpec(16)), 0.0, t, 8);
  c.M = 200;
  c.sde_dt = 0.05;
  const auto ens = backward_flow(still_ns, t, c);
  EnsembleConfig single;
  single.sde_dt = 0.05;
  const auto ref = backward_flow(still_e, t, single);
  const auto d = flow_l2_distance_stats(ens, ref);
  EXPECT_LT(std::abs(d.value - 4.0 * nu * t), 4.0 * d.std_error);
  EXPECT_GT(d.std_error, 0.0);
}

TEST(FlowDistance, MismatchesAreUsageErrors) {
  const auto euler = run(three_mode(16), 0.0, 0.2, 8);
  const auto ns = run(three_mode(16), 0.01, 0.2, 8);
  EnsembleConfig c;
  c.sde_dt = 0.025;
  const auto det = backward_flow(euler, 0.2, c);
  const auto sto = backward_flow(ns, 0.2, c);
  EXPECT_THROW(flow_l2_distance(det, sto), UsageError);
  EXPECT_THROW(flow_l2_distance(sto, backward_flow(euler, 0.1, c)), UsageError);
  c.grid_n = 8;
  EXPECT_THROW(flow_l2_distance(backward_flow(ns, 0.2, c), det), UsageError);
}

TEST(EnsembleOutput, SummaryCsvAndSnapshotLayers) {
  const auto ns = run(three_mode(8), 0.01, 0.1, 4);
  EnsembleConfig c;
  c.M = 3;
  c.sde_dt = 0.05;
  const auto ens = backward_flow(ns, 0.1, c);
  std::ostringstream out;
  write_ensemble_summary_csv(out, ens);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "x1,x2,mean_X1,mean_X2,var,M");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 64);
  const auto path = (std::filesystem::temp_directory_path() / "logeuler_ensemble.fld").string();
  write_ensemble_snapshot(path, ens);
  const auto recs = io::read_snapshot(path);
  ASSERT_EQ(recs.size(), 6u);
  EXPECT_EQ(recs[4].kind, io::PayloadKind::kEnsembleX1);
  EXPECT_EQ(recs[4].field.values()[5], ens.position(5, 2)[0]);
}
