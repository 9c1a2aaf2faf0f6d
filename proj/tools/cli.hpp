#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "logeuler/logeuler.hpp"

namespace logeuler::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline const std::vector<std::string> kCommands = {
    "simulate", "seminorm", "propagation", "inviscid-limit", "lq-rate", "flow-convergence", "feynman-kac"};

inline constexpr const char* kManifestFormat = "logeuler-manifest/1";

/// Fully resolved parameter set of one run. Everything here is recorded in
/// manifest.json; the output directory and thread cap are not, since neither
/// changes any output byte.
struct RunConfig {
  std::string command;
  int N = 128;
  double nu = 0.0;
  std::vector<double> nu_list{1e-2, 1e-3, 1e-4};
  double alpha = 1.0;
  double init_alpha = 0.0;  // 0 means "same as alpha"
  double margin = 0.1;
  double theta = 0.5;
  double gamma = 0.5;
  double p = 2.0;
  double q = 2.0;
  double T = 1.0;
  double dt = 1e-2;
  int snapshots = 4;
  int M = 100;
  double sde_dt = 0.025;
  std::uint64_t seed = 0;
  int k_cut = 0;   // 0 keeps every mode below Nyquist
  int grid_n = 0;  // ensemble start grid; 0 uses N
  std::string kind;
  std::vector<double> h;  // empty selects the default dyadic grid
  std::string init = "random-log";

  // Not part of the manifest.
  std::string out;
  unsigned threads = 0;
};

inline void to_json(json& j, const RunConfig& c) {
  j = json{{"format", kManifestFormat}, {"command", c.command}, {"N", c.N}, {"nu", c.nu},
           {"nu_list", c.nu_list}, {"alpha", c.alpha}, {"init_alpha", c.init_alpha},
           {"margin", c.margin}, {"theta", c.theta}, {"gamma", c.gamma}, {"p", c.p}, {"q", c.q},
           {"T", c.T}, {"dt", c.dt}, {"snapshots", c.snapshots}, {"M", c.M}, {"sde_dt", c.sde_dt},
           {"seed", c.seed}, {"k_cut", c.k_cut}, {"grid_n", c.grid_n}, {"kind", c.kind}, {"h", c.h},
           {"init", c.init}};
}

inline RunConfig config_from_manifest(const json& j) {
  try {
    if (j.at("format").get<std::string>() != kManifestFormat) {
      throw ConfigurationError("unsupported manifest format");
    }
    RunConfig c;
    j.at("command").get_to(c.command);
    j.at("N").get_to(c.N);
    j.at("nu").get_to(c.nu);
    j.at("nu_list").get_to(c.nu_list);
    j.at("alpha").get_to(c.alpha);
    j.at("init_alpha").get_to(c.init_alpha);
    j.at("margin").get_to(c.margin);
    j.at("theta").get_to(c.theta);
    j.at("gamma").get_to(c.gamma);
    j.at("p").get_to(c.p);
    j.at("q").get_to(c.q);
    j.at("T").get_to(c.T);
    j.at("dt").get_to(c.dt);
    j.at("snapshots").get_to(c.snapshots);
    j.at("M").get_to(c.M);
    j.at("sde_dt").get_to(c.sde_dt);
    j.at("seed").get_to(c.seed);
    j.at("k_cut").get_to(c.k_cut);
    j.at("grid_n").get_to(c.grid_n);
    j.at("kind").get_to(c.kind);
    j.at("h").get_to(c.h);
    j.at("init").get_to(c.init);
    return c;
  } catch (const json::exception& e) {
    throw ConfigurationError(std::string("malformed manifest: ") + e.what());
  }
}

inline std::vector<double> parse_list(const std::vector<std::string>& items, const std::string& flag) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ConfigurationError("--" + flag + ": not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

/// Fills in command-dependent defaults and checks every precondition the
/// selected operation will impose, so a bad flag fails before any compute.
inline void resolve_and_validate(RunConfig& c) {
  if (c.init_alpha == 0.0) c.init_alpha = c.alpha;
  if (c.kind.empty()) {
    if (c.command == "seminorm" || c.command == "propagation") c.kind = "wlog";
  }
  GridSpec grid(c.N);
  if (!(c.T >= 0.0) || !std::isfinite(c.T)) throw DomainError("T must be finite and nonnegative");
  if (!(c.dt > 0.0)) throw DomainError("dt must be positive");
  if (c.snapshots < 1) throw DomainError("snapshots must be >= 1");
  if (!(c.nu >= 0.0)) throw DomainError("viscosity must be nonnegative");
  if (c.k_cut < 0) throw DomainError("k-cut must be nonnegative");
  if (c.init == "random-log") {
    if (!(c.init_alpha > 0.0)) throw DomainError("alpha must be positive");
    if (!(c.margin > 0.0)) throw DomainError("margin must be positive");
  }

  const std::string& cmd = c.command;
  if (cmd == "seminorm") {
    if (c.kind == "wlog") {
      if (!(c.theta > 0.0 && c.theta < 1.0)) throw DomainError("θ must lie in (0,1)");
    } else if (c.kind == "hlog-fourier") {
      if (!(c.alpha >= 0.0)) throw DomainError("alpha must be nonnegative");
    } else if (c.kind == "hlog-physical") {
      if (!(c.alpha > 0.0)) throw DomainError("alpha must be positive");
    } else if (c.kind == "xgp") {
      if (!(c.gamma > 0.0)) throw DomainError("gamma must be positive");
      if (!(c.p > 0.0)) throw DomainError("p must be positive");
    } else if (c.kind == "commutator") {
      if (c.h.size() > 1) throw ConfigurationError("commutator takes a single --h");
    } else {
      throw ConfigurationError("unknown seminorm kind '" + c.kind +
                               "' (wlog, hlog-fourier, hlog-physical, xgp, commutator)");
    }
    for (double h : c.h) {
      if (!(h > 0.0 && h <= 0.5)) throw DomainError("kernel width h must lie in (0, 1/2]");
    }
  } else if (cmd == "propagation") {
    if (c.kind == "wlog") {
      if (!(c.theta > 0.0 && c.theta < 1.0)) throw DomainError("θ must lie in (0,1)");
    } else if (c.kind == "hlog") {
      if (!(c.p > 1.0)) throw DomainError("p must be > 1");
    } else {
      throw ConfigurationError("unknown propagation kind '" + c.kind + "' (wlog, hlog)");
    }
  } else if (cmd == "inviscid-limit" || cmd == "lq-rate") {
    if (!(c.alpha > 0.0)) throw DomainError("alpha must be positive");
    experiments::check_nu_list(c.nu_list);
    if (cmd == "lq-rate") experiments::lq_rate_exponent(c.alpha, c.q);
  } else if (cmd == "flow-convergence" || cmd == "feynman-kac") {
    if (cmd == "flow-convergence") experiments::check_nu_list(c.nu_list);
    if (c.M < 1) throw DomainError("ensemble size M must be >= 1");
    if (!(c.sde_dt > 0.0)) throw DomainError("SDE step must be positive");
    if (c.grid_n != 0) GridSpec check(c.grid_n);
  } else if (cmd != "simulate") {
    throw ConfigurationError("unknown command '" + cmd + "'");
  }
}

inline ScalarField load_initial(const RunConfig& c) {
  const GridSpec grid(c.N);
  constexpr double tau = 2.0 * std::numbers::pi;
  if (c.init == "shear") {
    return ScalarField::from_function(grid, [](double x1, double) { return std::cos(tau * x1); });
  }
  if (c.init == "three-mode") {
    return ScalarField::from_function(grid, [](double x1, double x2) {
      return std::cos(tau * x1) + std::cos(tau * x2) + std::sin(tau * (x1 + x2));
    });
  }
  if (c.init == "zero") return ScalarField(grid);
  if (c.init == "random-log") {
    RandomLogFieldOptions o;
    o.alpha = c.init_alpha;
    o.margin = c.margin;
    o.seed = c.seed;
    if (c.k_cut > 0) o.k_cut = c.k_cut;
    return random_log_field(grid, o);
  }
  if (c.init.rfind("file:", 0) == 0) {
    const std::string path = c.init.substr(5);
    for (const auto& rec : io::read_snapshot(path)) {
      if (rec.kind == io::PayloadKind::kScalar) {
        return rec.field.n() == c.N ? rec.field : resample(rec.field, grid);
      }
    }
    throw IoError("no scalar field record in snapshot file: " + path);
  }
  throw ConfigurationError("unknown --init '" + c.init + "' (shear, three-mode, zero, random-log, file:PATH)");
}

/// Output directory with whole-file writes.
class Bundle {
 public:
  explicit Bundle(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw IoError("cannot create output directory: " + dir_.string());
  }

  const fs::path& dir() const { return dir_; }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write(const std::string& name, const std::string& content) const {
    std::ofstream out(path(name), std::ios::binary | std::ios::trunc);
    out << content;
    if (!out) throw IoError("cannot write " + path(name));
  }

  void write_json(const std::string& name, const json& j) const { write(name, j.dump(2) + "\n"); }

 private:
  fs::path dir_;
};

inline std::string num(double v) { return io::format_double(v); }

inline flow::SolverConfig solver_config(const RunConfig& c) {
  flow::SolverConfig s;
  s.nu = c.nu;
  s.dt = c.dt;
  s.T = c.T;
  s.snapshot_times = flow::uniform_times(c.T, c.snapshots);
  return s;
}

inline json fit_json(const experiments::RateFit& fit, bool available) {
  if (!available) return nullptr;
  return {{"model", experiments::to_string(fit.model)}, {"C", fit.C}, {"exponent", fit.exponent},
          {"residual", fit.residual}};
}

inline int run_simulate(const RunConfig& c, const ScalarField& w0, const Bundle& out) {
  const auto traj = flow::simulate(w0, solver_config(c));
  std::ostringstream csv;
  flow::write_diagnostics_csv(csv, traj);
  out.write("diagnostics.csv", csv.str());
  std::vector<io::SnapshotRecord> recs;
  json times = json::array();
  for (const auto& s : traj.snapshots) {
    recs.push_back({io::PayloadKind::kScalar, s.omega});
    times.push_back(s.t);
  }
  io::write_snapshot(out.path("trajectory.fld"), recs);
  const auto& last = traj.diagnostics.back();
  out.write_json("summary.json",
                 {{"command", c.command},
                  {"steps", traj.steps},
                  {"snapshot_times", times},
                  {"final", {{"l2", last.l2}, {"l4", last.l4}, {"linf", last.linf}, {"energy", last.energy}}},
                  {"tail_fraction", flow::spectral_tail_fraction(traj.snapshots.back().omega.spectrum())}});
  return 0;
}

inline int run_seminorm(const RunConfig& c, const ScalarField& f, const Bundle& out) {
  using namespace logspaces;
  SeminormReport rep;
  if (c.kind == "wlog") {
    rep = wlog_seminorm(f, c.theta, c.h.empty() ? std::nullopt : std::optional(c.h));
  } else if (c.kind == "hlog-fourier") {
    rep = hlog_fourier(f, c.alpha);
  } else if (c.kind == "hlog-physical") {
    rep = hlog_physical(f, c.alpha);
  } else if (c.kind == "xgp") {
    rep = xgp_seminorm(f, c.gamma, c.p);
  } else {
    const double h = c.h.empty() ? 0.25 : c.h.front();
    rep.kind = SeminormKind::kCommutator;
    rep.h = h;
    rep.n = f.n();
    rep.value = commutator_functional(biot_savart(f), f, h);
    rep.quadrature = "spectral-convolution";
  }
  std::ostringstream csv;
  write_report_csv_header(csv);
  write_report_csv_row(csv, rep);
  out.write("seminorm.csv", csv.str());
  if (!rep.h_profile.empty()) {
    std::ostringstream prof;
    prof << "h,weighted_energy\n";
    for (const auto& [h, v] : rep.h_profile) prof << num(h) << ',' << num(v) << '\n';
    out.write("h_profile.csv", prof.str());
  }
  auto opt = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  out.write_json("summary.json", {{"command", c.command},
                                  {"kind", to_string(rep.kind)},
                                  {"value", rep.value},
                                  {"order", opt(rep.order)},
                                  {"p", opt(rep.p)},
                                  {"h", opt(rep.h)},
                                  {"N", rep.n},
                                  {"quadrature", rep.quadrature}});
  return 0;
}

inline int run_propagation(const RunConfig& c, const ScalarField& w0, const Bundle& out) {
  const auto sc = solver_config(c);
  std::ostringstream csv;
  json summary{{"command", c.command}, {"kind", c.kind}};
  if (c.kind == "wlog") {
    const auto rep = experiments::propagation_experiment(w0, sc, c.theta,
                                                         c.h.empty() ? std::nullopt : std::optional(c.h));
    csv << "t,seminorm,argmax_h,bound_growth,c_hat,tail_fraction\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      csv << num(rep.times[i]) << ',' << num(rep.seminorm[i]) << ',' << num(rep.argmax_h[i]) << ','
          << num(rep.bound_growth[i]) << ',' << num(rep.c_hat[i]) << ',' << num(rep.tail_fraction[i]) << '\n';
    }
    summary["theta"] = rep.theta;
    summary["h_grid"] = rep.h_grid;
    summary["c_hat_max"] = rep.c_hat_max;
    summary["under_resolved"] = rep.under_resolved;
  } else {
    const auto rep = experiments::yudovich_propagation_experiment(w0, c.p, sc);
    csv << "t,lhs,rhs_shape,prefactor\n";
    for (std::size_t i = 0; i < rep.times.size(); ++i) {
      csv << num(rep.times[i]) << ',' << num(rep.lhs[i]) << ',' << num(rep.rhs_shape[i]) << ','
          << num(rep.prefactor[i]) << '\n';
    }
    summary["p"] = rep.p;
    summary["base"] = rep.base;
    summary["prefactor_max"] = rep.prefactor_max;
  }
  out.write("propagation.csv", csv.str());
  out.write_json("summary.json", summary);
  return 0;
}

inline int run_sweep(const RunConfig& c, const ScalarField& w0, const Bundle& out, std::ostream& err) {
  const auto sc = solver_config(c);
  const double q = c.command == "lq-rate" ? c.q : 2.0;
  const auto rep = experiments::lq_rate_experiment(w0, c.alpha, c.nu_list, sc, q);
  std::ostringstream csv;
  csv << "nu,error,product,tail_fraction,under_resolved\n";
  for (const auto& r : rep.rows) {
    csv << num(r.nu) << ',' << num(r.error) << ',' << num(r.product) << ',' << num(r.tail_fraction) << ','
        << (r.under_resolved ? 1 : 0) << '\n';
  }
  const std::string stem = c.command == "lq-rate" ? "lq_rate" : "inviscid_limit";
  out.write(stem + ".csv", csv.str());
  out.write_json("summary.json", {{"command", c.command},
                                  {"alpha", rep.alpha},
                                  {"q", rep.q},
                                  {"exponent", rep.exponent},
                                  {"c_hat", rep.c_hat},
                                  {"monotone", rep.monotone},
                                  {"any_under_resolved", rep.any_under_resolved},
                                  {"fit", fit_json(rep.fit, rep.fit_available)}});
  if (rep.any_under_resolved) err << "warning: spectral tail above threshold; increase --N\n";
  return 0;
}

inline stochastic::EnsembleConfig ensemble_config(const RunConfig& c) {
  stochastic::EnsembleConfig e;
  e.M = c.M;
  e.sde_dt = c.sde_dt;
  e.seed = c.seed;
  if (c.grid_n > 0) e.grid_n = c.grid_n;
  return e;
}

inline int run_flow_convergence(const RunConfig& c, const ScalarField& w0, const Bundle& out,
                                std::ostream& err) {
  flow::SolverConfig sc;
  sc.dt = c.dt;
  sc.T = c.T;
  const auto rep = experiments::flow_convergence_experiment(w0, c.nu_list, sc, ensemble_config(c));
  std::ostringstream csv;
  csv << "nu,distance,std_error\n";
  for (const auto& r : rep.rows) csv << num(r.nu) << ',' << num(r.distance) << ',' << num(r.std_error) << '\n';
  out.write("flow_convergence.csv", csv.str());
  out.write_json("summary.json", {{"command", c.command},
                                  {"monotone", rep.monotone},
                                  {"inconclusive", rep.inconclusive},
                                  {"fit", fit_json(rep.fit, rep.fit_available)}});
  if (rep.inconclusive) {
    err << "error: Monte Carlo error exceeds 25% of the smallest distance; increase --M\n";
    return 1;
  }
  return 0;
}

inline int run_feynman_kac(const RunConfig& c, const ScalarField& w0, const Bundle& out) {
  flow::SolverConfig sc;
  sc.nu = c.nu;
  sc.dt = c.dt;
  sc.T = c.T;
  sc.snapshot_times = flow::uniform_times(c.T, std::max(1, static_cast<int>(std::ceil(c.T / c.sde_dt - 1e-9))));
  const auto traj = flow::simulate(w0, sc);
  const auto ens = stochastic::backward_flow(traj, c.T, ensemble_config(c));
  const auto fk = stochastic::feynman_kac(traj.initial, ens);
  const ScalarField& spectral = traj.snapshots.back().omega;
  const ScalarField reference = fk.mean.n() == spectral.n() ? spectral : resample(spectral, fk.mean.grid());
  const double err_l2 = lp_norm(fk.mean - reference, 2.0);

  std::ostringstream csv;
  csv << "x1,x2,mc_mean,std_error,spectral\n";
  const GridSpec& g = fk.mean.grid();
  for (int i = 0; i < g.n(); ++i) {
    for (int j = 0; j < g.n(); ++j) {
      const Point x = g.node(i, j);
      csv << num(x[0]) << ',' << num(x[1]) << ',' << num(fk.mean(i, j)) << ',' << num(fk.std_error(i, j))
          << ',' << num(reference(i, j)) << '\n';
    }
  }
  out.write("feynman_kac.csv", csv.str());
  io::write_snapshot(out.path("feynman_kac.fld"), {{io::PayloadKind::kScalar, fk.mean},
                                                   {io::PayloadKind::kScalar, fk.std_error},
                                                   {io::PayloadKind::kScalar, reference}});
  out.write_json("summary.json", {{"command", c.command},
                                  {"l2_error", err_l2},
                                  {"mean_std_error", fk.mean_std_error},
                                  {"error_over_std_error", fk.has_variance && fk.mean_std_error > 0.0
                                                               ? json(err_l2 / fk.mean_std_error)
                                                               : json(nullptr)}});
  return 0;
}

inline int run(RunConfig c, std::ostream& err) {
  resolve_and_validate(c);
  const ScalarField w0 = load_initial(c);
  std::string dir = c.out;
  if (dir.empty()) {
    const char* env = std::getenv("LOGEULER_OUT");
    dir = env && *env ? env : "logeuler-out";
  }
  const Bundle out(dir);
  out.write_json("manifest.json", json(c));

  if (c.command == "simulate") return run_simulate(c, w0, out);
  if (c.command == "seminorm") return run_seminorm(c, w0, out);
  if (c.command == "propagation") return run_propagation(c, w0, out);
  if (c.command == "inviscid-limit" || c.command == "lq-rate") return run_sweep(c, w0, out, err);
  if (c.command == "flow-convergence") return run_flow_convergence(c, w0, out, err);
  return run_feynman_kac(c, w0, out);
}

/// Restores the process-wide thread cap on scope exit.
struct ThreadCapGuard {
  unsigned saved = thread_cap();
  ~ThreadCapGuard() { thread_cap() = saved; }
};

/// Exit status: 0 success, 2 validation or usage error, 1 runtime failure.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  RunConfig c;
  std::vector<std::string> nu_list, h_list;
  std::string manifest;

  CLI::App app{"Numerical experiments for 2D Euler and Navier-Stokes with log-regular vorticity", "logeuler"};
  app.set_help_flag("--help", "print this help and exit");
  app.set_config("--config", "", "flat key = value file; keys are flag names");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--N", c.N, "grid resolution");
  app.add_option("--nu", c.nu, "viscosity (0 selects Euler)");
  app.add_option("--nu-list", nu_list, "comma-separated, strictly decreasing viscosities")->delimiter(',');
  app.add_option("--alpha", c.alpha, "log-regularity order");
  app.add_option("--init-alpha", c.init_alpha, "order of the random-log datum (defaults to --alpha)");
  app.add_option("--margin", c.margin, "random-log spectral margin");
  app.add_option("--theta", c.theta, "W^2_{log,theta} order");
  app.add_option("--gamma", c.gamma, "xgp order");
  app.add_option("--p", c.p, "integrability or H^{log,p} order");
  app.add_option("--q", c.q, "L^q exponent for lq-rate");
  app.add_option("--T", c.T, "final time");
  app.add_option("--dt", c.dt, "time-step upper bound");
  app.add_option("--snapshots", c.snapshots, "number of snapshot intervals on [0, T]");
  app.add_option("--M", c.M, "Monte Carlo samples");
  app.add_option("--sde-dt", c.sde_dt, "SDE step");
  app.add_option("--seed", c.seed, "master seed");
  app.add_option("--k-cut", c.k_cut, "random-log mode cutoff (0: none)");
  app.add_option("--grid-n", c.grid_n, "ensemble start grid (0: N)");
  app.add_option("--kind", c.kind, "seminorm: wlog|hlog-fourier|hlog-physical|xgp|commutator; propagation: wlog|hlog");
  app.add_option("--h", h_list, "comma-separated kernel widths")->delimiter(',');
  app.add_option("--init", c.init, "shear|three-mode|zero|random-log|file:PATH");
  app.add_option("--out", c.out, "output directory (default $LOGEULER_OUT)");
  app.add_option("--threads", c.threads, "worker thread cap");
  for (const auto& name : kCommands) app.add_subcommand(name, "run " + name);
  auto* replay = app.add_subcommand("replay", "re-run a manifest.json");
  replay->add_option("manifest", manifest, "path to manifest.json")->required();

  ThreadCapGuard guard;
  try {
    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      if (e.get_exit_code() == 0) {
        app.exit(e, out, err);
        return 0;
      }
      err << "error: " << e.what() << '\n';
      return 2;
    }

    if (replay->parsed()) {
      std::ifstream in(manifest);
      if (!in) throw IoError("cannot read manifest: " + manifest);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigurationError("malformed manifest: " + std::string(e.what()));
      }
      RunConfig r = config_from_manifest(j);
      r.out = c.out;
      r.threads = c.threads;
      c = std::move(r);
    } else {
      c.command = app.get_subcommands().front()->get_name();
      if (!nu_list.empty()) c.nu_list = parse_list(nu_list, "nu-list");
      if (!h_list.empty()) c.h = parse_list(h_list, "h");
    }
    if (c.threads > 0) thread_cap() = c.threads;
    return run(std::move(c), err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace logeuler::cli
