#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "prmo/init.hpp"
#include "prmo/penalty.hpp"

namespace prmo {

// Geometry and requirement knobs from which random scenario instances are
// drawn. Defaults are the CI-friendly desk scale; full_scale() matches the
// reference large configuration.
struct ScenarioConfig {
  int M = 4;
  int N = 8;
  int a = 1;
  int K_c = 1;
  int K_t = 1;
  int L = 3;
  double A_over_lambda = 6.0;
  double carrier_GHz = 2.0;
  Eigen::Vector3d bs_xyz{0.0, 0.0, 0.0};
  Eigen::Vector3d irs_xyz{30.0, 10.0, 5.0};
  Eigen::Vector4d cu_region{50.0, 55.0, 0.0, 5.0};  // x_min x_max y_min y_max
  Eigen::VectorXd gamma_bps = Eigen::VectorXd::Constant(1, 2.0);   // 1 or K_c
  Eigen::VectorXd chi_dB = Eigen::VectorXd::Constant(1, 6.0);      // 1 or K_t
  Eigen::VectorXd sigma_c_dBm = Eigen::VectorXd::Constant(1, -120.0);
  double sigma_S_dBm = -110.0;
  double T = 1024.0;
  uint64_t seed = 1;

  static ScenarioConfig desk() { return {}; }
  static ScenarioConfig full_scale();
};

// Flat "key = value" text files; '#' starts a comment. Vector-valued keys
// take whitespace- or comma-separated numbers; per-user keys accept a single
// value that broadcasts. Unknown keys and malformed numbers raise ConfigError
// with file and line context.
ScenarioConfig load_scenario_config(const std::string& path);
void save_scenario_config(const ScenarioConfig& cfg, const std::string& path);

double dBm_to_watts(double dBm);
double dB_to_linear(double dB);
// Free-space attenuation -38 - 20 log10(d) dB as a linear power gain.
double path_loss_linear(double distance_m);

// Draws a full physical instance. The draw order is fixed (propagation
// angles, user positions, target positions, target angles, per-path
// responses) so a seed pins the physics regardless of N, a or thresholds.
Scenario generate_scenario(const ScenarioConfig& cfg, uint64_t seed);

enum class Scheme { MirsEc, MirsAc, FpaIrs, BfOnly, Sep };

Scheme parse_scheme(const std::string& name);  // throws ConfigError on unknown names
std::string scheme_name(Scheme s);

// One solver invocation: scheme + scenario knobs + seed (+ optional sweep
// coordinates for bookkeeping).
struct RunSpec {
  Scheme scheme = Scheme::MirsEc;
  ScenarioConfig config;
  uint64_t seed = 1;
  OuterOptions outer;
  InitConfig init;
  std::string sweep_key;
  std::string sweep_value;
};

struct ResultRow {
  std::string scheme;
  uint64_t seed = 0;
  std::string sweep_key;
  std::string sweep_value;
  double power_dBm = 0.0;
  bool feasible = false;
  int outer_iters = 0;
  int inner_iters = 0;
  double wall_time_s = 0.0;
};

struct RunOutput {
  ResultRow row;
  SolveReport report;
  std::string error;  // non-empty when the run aborted and was recorded infeasible
};

// Applies the scheme (element-wise forces a = 1; fpa-irs freezes positions;
// bf-only freezes positions and reflection coefficients; sep runs the
// three-stage separate pipeline), draws the scenario, initialises and solves.
// Initialisation/solver failures are recorded as infeasible rows, not thrown.
RunOutput run_scheme(const RunSpec& spec);

// Sweepable scenario knobs: "gamma", "chi", "N", "A", "a".
void apply_sweep_value(ScenarioConfig& cfg, const std::string& key, double value);
std::vector<RunSpec> expand_sweep(const RunSpec& base, const std::string& key,
                                  const std::vector<double>& values);

inline constexpr const char* kCsvHeader =
    "scheme,seed,sweep_key,sweep_value,power_dBm,feasible,outer_iters,inner_iters,"
    "wall_time_s";

void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const ResultRow& row);

struct SweepOptions {
  int jobs = 1;
  std::string csv_path;    // empty: no CSV written
  std::string trace_dir;   // empty: no trace files
  bool verbose_trace = false;  // include per-iteration inner records
};

// Runs all specs (parallel over runs, each with its own RNG streams) and
// serialises results in spec order through a single writer. Returns the rows;
// I/O failures throw with the offending path.
std::vector<RunOutput> run_sweep(const std::vector<RunSpec>& specs,
                                 const SweepOptions& opt);

}  // namespace prmo
