// Command-line front end: generates a scenario, runs one scheme (optionally
// swept over a parameter grid) and emits CSV results plus per-run traces.
//
// Exit codes: 0 all runs feasible, 2 at least one infeasible outcome,
// 1 configuration or I/O error.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prmo/experiment.hpp"
#include "prmo/gradients.hpp"

namespace {

struct SweepArg {
  std::string key;
  std::vector<double> values;
};

SweepArg parse_sweep_arg(const std::string& text) {
  const size_t eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 >= text.size())
    throw prmo::ConfigError("--sweep expects key=v1,v2,... got '" + text + "'");
  SweepArg arg;
  arg.key = text.substr(0, eq);
  std::string rest = text.substr(eq + 1);
  size_t pos = 0;
  while (pos <= rest.size()) {
    const size_t comma = rest.find(',', pos);
    const std::string tok =
        rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) throw prmo::ConfigError("--sweep has an empty value in '" + text + "'");
    size_t used = 0;
    arg.values.push_back(std::stod(tok, &used));
    if (used != tok.size())
      throw prmo::ConfigError("--sweep value '" + tok + "' is not a number");
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return arg;
}

// Finite-difference audit of the analytic gradient on the requested scenario.
//
// The probe point is drawn at random rather than taken from the solver's
// starting point: initialisation rescales the beamformer until the worst
// constraint is exactly tight, which parks the residuals on the penalty
// knees where the objective is only piecewise smooth and finite differences
// straddle the branch. Draws are rejected until every residual clears both
// knees for all audited knee widths and at least one echo constraint is
// genuinely violated, so all four blocks carry real derivative content.
bool audit_gradients(const prmo::ScenarioConfig& cfg, uint64_t seed) {
  const prmo::Scenario sc = prmo::generate_scenario(cfg, seed);
  const double margin = 1e-4;
  const double knees[2] = {1.0, 0.1};

  std::mt19937_64 rng(seed ^ 0xa0761d6478bd642fULL);
  prmo::ProductPoint X;
  bool found = false;
  for (int tries = 0; tries < 500 && !found; ++tries) {
    X = prmo::random_point(sc.M, sc.K_c, sc.K_t, sc.N, sc.n_ctrl(), rng);
    const prmo::ConstraintValues cv = prmo::constraint_values(sc, X);
    auto clear = [&](double h) {
      for (double u : knees) {
        if (std::abs(h) < margin || std::abs(h - u) < margin) return false;
      }
      return true;
    };
    found = true;
    for (Eigen::Index i = 0; i < cv.comm.size(); ++i) found = found && clear(cv.comm[i]);
    for (Eigen::Index i = 0; i < cv.sense.size(); ++i) found = found && clear(cv.sense[i]);
    for (Eigen::Index i = 0; i < cv.dist.size(); ++i) found = found && clear(cv.dist[i]);
    if (cv.sense.size() > 0) {
      found = found && cv.sense.maxCoeff() > margin;
    } else if (cv.comm.size() > 0) {
      found = found && cv.comm.maxCoeff() > margin;
    }
  }
  if (!found) {
    std::cout << "gradient check FAILED (no admissible probe point found)\n";
    return false;
  }

  bool ok = true;
  std::cout << "block analytic numeric rel_err\n";
  for (const prmo::PenaltyParams p : {prmo::PenaltyParams{1.0, 1.0},
                                      prmo::PenaltyParams{10.0, 0.1}}) {
    std::cout << "# rho=" << p.rho << " u=" << p.u << "\n";
    const auto rows = prmo::check_gradient_fd(sc, X, p, 2, 1e-6, seed);
    for (const auto& r : rows) {
      std::cout << r.block << ' ' << r.analytic << ' ' << r.numeric << ' ' << r.rel_err
                << "\n";
      ok = ok && r.rel_err < 1e-5;
    }
  }
  std::cout << (ok ? "gradient check passed" : "gradient check FAILED") << "\n";
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint beamforming / reflection / element-position optimizer"};
  app.require_subcommand(1);
  CLI::App* run = app.add_subcommand("run", "Run one scheme, optionally over a sweep");

  std::string scenario_path;
  std::string scheme_name;
  uint64_t seed = 0;
  bool seed_given = false;
  int a_override = 0;
  std::string sweep_text;
  std::string out_dir;
  bool full_scale = false;
  bool check_gradients = false;
  int jobs = 1;
  bool verbose = false;

  run->add_option("--scenario", scenario_path, "Scenario config file (key = value lines)");
  run->add_option("--scheme", scheme_name,
                  "Scheme: mirs-ec, mirs-ac, fpa-irs, bf-only or sep")
      ->required();
  run->add_option("--seed", seed, "Scenario/initialisation seed")
      ->each([&seed_given](const std::string&) { seed_given = true; });
  run->add_option("--a", a_override, "Sub-array edge length a (a >= 2 moves rigid a x a blocks)")
      ->check(CLI::PositiveNumber);
  run->add_option("--sweep", sweep_text, "Parameter grid, e.g. gamma=2,3,4 (keys: gamma, chi, N, A, a)");
  run->add_option("--out", out_dir, "Output directory for results.csv and trace files");
  run->add_flag("--full-scale", full_scale, "Use the large default configuration");
  run->add_flag("--check-gradients", check_gradients,
                "Audit analytic gradients against finite differences and exit");
  run->add_option("--jobs", jobs, "Parallel runs for sweeps")->check(CLI::PositiveNumber);
  run->add_flag("--verbose", verbose, "Write per-iteration inner traces");

  CLI11_PARSE(app, argc, argv);

  try {
    prmo::RunSpec base;
    base.scheme = prmo::parse_scheme(scheme_name);
    base.config = full_scale ? prmo::ScenarioConfig::full_scale()
                             : prmo::ScenarioConfig::desk();
    if (!scenario_path.empty()) base.config = prmo::load_scenario_config(scenario_path);
    if (a_override > 0) base.config.a = a_override;
    base.seed = seed_given ? seed : base.config.seed;

    if (check_gradients) return audit_gradients(base.config, base.seed) ? 0 : 1;

    std::vector<prmo::RunSpec> specs;
    if (!sweep_text.empty()) {
      const SweepArg sweep = parse_sweep_arg(sweep_text);
      specs = prmo::expand_sweep(base, sweep.key, sweep.values);
    } else {
      specs.push_back(base);
    }

    prmo::SweepOptions opt;
    opt.jobs = jobs;
    opt.verbose_trace = verbose;
    if (!out_dir.empty()) {
      opt.csv_path = out_dir + "/results.csv";
      opt.trace_dir = out_dir;
    }
    const std::vector<prmo::RunOutput> outs = prmo::run_sweep(specs, opt);

    prmo::write_csv_header(std::cout);
    bool all_feasible = true;
    for (const auto& o : outs) {
      prmo::write_csv_row(std::cout, o.row);
      if (!o.error.empty()) std::cerr << "run failed: " << o.error << "\n";
      all_feasible = all_feasible && o.row.feasible;
    }
    return all_feasible ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
