#include "prmo/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "prmo/gradients.hpp"

namespace prmo {

namespace {
constexpr double kSpeedOfLight = 2.998e8;  // m/s

// Distinct deterministic RNG streams derived from the run seed.
constexpr uint64_t kInitStream = 0x9e3779b97f4a7c15ULL;
constexpr uint64_t kSepStream = 0xc2b2ae3d27d4eb4fULL;
}  // namespace

ScenarioConfig ScenarioConfig::full_scale() {
  ScenarioConfig cfg;
  cfg.M = 8;
  cfg.N = 20;
  cfg.K_c = 2;
  cfg.K_t = 2;
  cfg.L = 6;
  cfg.gamma_bps = Eigen::VectorXd::Constant(1, 4.0);
  cfg.chi_dB = Eigen::VectorXd::Constant(1, 12.0);
  return cfg;
}

double dBm_to_watts(double dBm) { return std::pow(10.0, (dBm - 30.0) / 10.0); }

double dB_to_linear(double dB) { return std::pow(10.0, dB / 10.0); }

double path_loss_linear(double distance_m) {
  if (!(distance_m > 0.0)) throw ConfigError("path loss requires a positive distance");
  return dB_to_linear(-38.0 - 20.0 * std::log10(distance_m));
}

// ---------------------------------------------------------------------------
// Config file I/O
// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_numbers(const std::string& text, const std::string& ctx) {
  std::string cleaned = text;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream iss(cleaned);
  std::vector<double> vals;
  std::string tok;
  while (iss >> tok) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw ConfigError(ctx + ": cannot parse number '" + tok + "'");
    }
    if (used != tok.size()) throw ConfigError(ctx + ": trailing junk in number '" + tok + "'");
    vals.push_back(v);
  }
  if (vals.empty()) throw ConfigError(ctx + ": missing value");
  return vals;
}

double parse_scalar(const std::string& text, const std::string& ctx) {
  const std::vector<double> v = parse_numbers(text, ctx);
  if (v.size() != 1) throw ConfigError(ctx + ": expected a single value");
  return v[0];
}

int parse_int(const std::string& text, const std::string& ctx) {
  const double v = parse_scalar(text, ctx);
  if (v != std::floor(v)) throw ConfigError(ctx + ": expected an integer");
  return static_cast<int>(v);
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::VectorXd parse_fixed(const std::string& text, int n, const std::string& ctx) {
  const std::vector<double> v = parse_numbers(text, ctx);
  if (static_cast<int>(v.size()) != n)
    throw ConfigError(ctx + ": expected " + std::to_string(n) + " values, got " +
                      std::to_string(v.size()));
  return to_vector(v);
}

}  // namespace

ScenarioConfig load_scenario_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario config: " + path);
  ScenarioConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string ctx = path + ":" + std::to_string(line_no);
    const size_t eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(ctx + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key == "M") cfg.M = parse_int(val, ctx);
    else if (key == "N") cfg.N = parse_int(val, ctx);
    else if (key == "a") cfg.a = parse_int(val, ctx);
    else if (key == "K_c") cfg.K_c = parse_int(val, ctx);
    else if (key == "K_t") cfg.K_t = parse_int(val, ctx);
    else if (key == "L") cfg.L = parse_int(val, ctx);
    else if (key == "A_over_lambda") cfg.A_over_lambda = parse_scalar(val, ctx);
    else if (key == "carrier_GHz") cfg.carrier_GHz = parse_scalar(val, ctx);
    else if (key == "bs_xyz") cfg.bs_xyz = parse_fixed(val, 3, ctx);
    else if (key == "irs_xyz") cfg.irs_xyz = parse_fixed(val, 3, ctx);
    else if (key == "cu_region") cfg.cu_region = parse_fixed(val, 4, ctx);
    else if (key == "gamma_bps") cfg.gamma_bps = to_vector(parse_numbers(val, ctx));
    else if (key == "chi_dB") cfg.chi_dB = to_vector(parse_numbers(val, ctx));
    else if (key == "sigma_c_dBm") cfg.sigma_c_dBm = to_vector(parse_numbers(val, ctx));
    else if (key == "sigma_S_dBm") cfg.sigma_S_dBm = parse_scalar(val, ctx);
    else if (key == "T") cfg.T = parse_scalar(val, ctx);
    else if (key == "seed") cfg.seed = static_cast<uint64_t>(parse_scalar(val, ctx));
    else throw ConfigError(ctx + ": unknown key '" + key + "'");
  }
  return cfg;
}

namespace {

void write_values(std::ostream& os, const char* key, const Eigen::VectorXd& v) {
  os << key << " = ";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v[i];
  os << "\n";
}

}  // namespace

void save_scenario_config(const ScenarioConfig& cfg, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write scenario config: " + path);
  os << "M = " << cfg.M << "\nN = " << cfg.N << "\na = " << cfg.a
     << "\nK_c = " << cfg.K_c << "\nK_t = " << cfg.K_t << "\nL = " << cfg.L
     << "\nA_over_lambda = " << cfg.A_over_lambda
     << "\ncarrier_GHz = " << cfg.carrier_GHz << "\n";
  write_values(os, "bs_xyz", cfg.bs_xyz);
  write_values(os, "irs_xyz", cfg.irs_xyz);
  write_values(os, "cu_region", cfg.cu_region);
  write_values(os, "gamma_bps", cfg.gamma_bps);
  write_values(os, "chi_dB", cfg.chi_dB);
  write_values(os, "sigma_c_dBm", cfg.sigma_c_dBm);
  os << "sigma_S_dBm = " << cfg.sigma_S_dBm << "\nT = " << cfg.T
     << "\nseed = " << cfg.seed << "\n";
  if (!os) throw ConfigError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Scenario generation
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd broadcast(const Eigen::VectorXd& v, int n, const char* key) {
  if (v.size() == n) return v;
  if (v.size() == 1) return Eigen::VectorXd::Constant(n, v[0]);
  throw ConfigError(std::string(key) + ": expected 1 or " + std::to_string(n) +
                    " values, got " + std::to_string(v.size()));
}

cxd draw_cn(std::mt19937_64& rng, std::normal_distribution<double>& gauss, double var) {
  const double s = std::sqrt(var / 2.0);
  const double re = gauss(rng);
  const double im = gauss(rng);
  return cxd(s * re, s * im);
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& cfg, uint64_t seed) {
  Scenario sc;
  sc.M = cfg.M;
  sc.N = cfg.N;
  sc.a = cfg.a;
  sc.K_c = cfg.K_c;
  sc.K_t = cfg.K_t;
  sc.L = cfg.L;
  sc.lambda = kSpeedOfLight / (cfg.carrier_GHz * 1e9);
  sc.A = cfg.A_over_lambda * sc.lambda;
  sc.b = 0.5 * sc.lambda *
         Eigen::VectorXd::LinSpaced(cfg.M, 0.0, static_cast<double>(cfg.M - 1));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> upi(0.0, M_PI);
  std::uniform_real_distribution<double> ux(cfg.cu_region[0], cfg.cu_region[1]);
  std::uniform_real_distribution<double> uy(cfg.cu_region[2], cfg.cu_region[3]);

  // 1. Propagation angles of the BS->surface paths.
  sc.rho_t.resize(cfg.L);
  sc.rho_r.resize(2, cfg.L);
  for (int l = 0; l < cfg.L; ++l) {
    sc.rho_t[l] = std::cos(upi(rng));
    const double theta = upi(rng);
    const double phi = upi(rng);
    sc.rho_r.col(l) = Eigen::Vector2d(std::sin(theta) * std::cos(phi), std::cos(theta));
  }

  // 2. User positions at ground level fix the surface->user hop losses.
  Eigen::VectorXd mu_f(cfg.K_c);
  for (int k = 0; k < cfg.K_c; ++k) {
    const Eigen::Vector3d p(ux(rng), uy(rng), 0.0);
    mu_f[k] = path_loss_linear((p - cfg.irs_xyz).norm());
  }

  // 3. Target positions (same box) fix the direct and reflected hop gains.
  sc.alpha_d.resize(cfg.K_t);
  sc.alpha_r.resize(cfg.K_t);
  for (int k = 0; k < cfg.K_t; ++k) {
    const Eigen::Vector3d p(ux(rng), uy(rng), 0.0);
    sc.alpha_d[k] = path_loss_linear((p - cfg.bs_xyz).norm());
    sc.alpha_r[k] = path_loss_linear((p - cfg.irs_xyz).norm());
  }

  // 4. Target direction data at both arrays.
  sc.rho_B.resize(cfg.K_t);
  sc.rho_I.resize(2, cfg.K_t);
  for (int k = 0; k < cfg.K_t; ++k) {
    sc.rho_B[k] = std::cos(upi(rng));
    const double theta = upi(rng);
    const double phi = upi(rng);
    sc.rho_I.col(k) = Eigen::Vector2d(std::sin(theta) * std::cos(phi), std::cos(theta));
  }

  // 5. Per-path responses.
  const double mu_G = path_loss_linear((cfg.irs_xyz - cfg.bs_xyz).norm());
  sc.sigma_G.resize(cfg.L);
  for (int l = 0; l < cfg.L; ++l) sc.sigma_G[l] = draw_cn(rng, gauss, mu_G / cfg.L);
  sc.sigma_f.resize(cfg.K_c);
  for (int k = 0; k < cfg.K_c; ++k) {
    sc.sigma_f[k].resize(cfg.L);
    for (int l = 0; l < cfg.L; ++l) sc.sigma_f[k][l] = draw_cn(rng, gauss, mu_f[k] / cfg.L);
  }

  sc.rcs = Eigen::VectorXd::Ones(cfg.K_t);
  sc.gamma_rate = broadcast(cfg.gamma_bps, cfg.K_c, "gamma_bps");
  sc.chi = broadcast(cfg.chi_dB, cfg.K_t, "chi_dB").unaryExpr(&dB_to_linear);
  sc.sigma_c2 = broadcast(cfg.sigma_c_dBm, cfg.K_c, "sigma_c_dBm").unaryExpr(&dBm_to_watts);
  sc.sigma_S2 = dBm_to_watts(cfg.sigma_S_dBm);
  sc.T = cfg.T;
  sc.validate();
  return sc;
}

// ---------------------------------------------------------------------------
// Schemes
// ---------------------------------------------------------------------------

Scheme parse_scheme(const std::string& name) {
  if (name == "mirs-ec") return Scheme::MirsEc;
  if (name == "mirs-ac") return Scheme::MirsAc;
  if (name == "fpa-irs") return Scheme::FpaIrs;
  if (name == "bf-only") return Scheme::BfOnly;
  if (name == "sep") return Scheme::Sep;
  throw ConfigError("unknown scheme '" + name +
                    "' (expected mirs-ec, mirs-ac, fpa-irs, bf-only or sep)");
}

std::string scheme_name(Scheme s) {
  switch (s) {
    case Scheme::MirsEc: return "mirs-ec";
    case Scheme::MirsAc: return "mirs-ac";
    case Scheme::FpaIrs: return "fpa-irs";
    case Scheme::BfOnly: return "bf-only";
    case Scheme::Sep: return "sep";
  }
  throw std::logic_error("unreachable scheme");
}

namespace {

// --- Stage 1 of the separate baseline: reflection/position ascent ----------
//
// Minimises  f(X) = -gain_scale * sum_k ||h_C,k||^2 + rho_d * sum_p P(h_p, u_d)
// over (phi, u_raw) only. The gain is normalised by its starting value so the
// line search operates on O(1) quantities; the separation penalty weight is
// large enough that any constraint overshoot stays far below the feasibility
// tolerance.
struct SepGainProblem {
  const Scenario& sc;
  double gain_scale = 1.0;
  static constexpr double kRhoDist = 1e4;
  static constexpr double kKneeDist = 1e-4;

  double raw_gain(const ProductPoint& X) const {
    const ChannelSet ch = build_channels(sc, X);
    double gain = 0.0;
    for (int k = 0; k < sc.K_c; ++k) gain += ch.h_C[k].squaredNorm();
    return gain;
  }

  Evaluation eval(const ProductPoint& X) const {
    Evaluation ev;
    ev.power = X.W.squaredNorm();
    double penalty = 0.0;
    double worst = -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd centers = position_projection(X.u_raw, sc.A);
    const double d_min = min_center_distance(sc.a, sc.lambda);
    const int n_ctrl = sc.n_ctrl();
    for (int i = 0; i < n_ctrl; ++i) {
      for (int j = i + 1; j < n_ctrl; ++j) {
        const double h =
            d_min - (centers.segment<2>(2 * i) - centers.segment<2>(2 * j)).norm();
        worst = std::max(worst, h);
        penalty += lq_penalty(h, kKneeDist);
      }
    }
    ev.g = -gain_scale * raw_gain(X) + kRhoDist * penalty;
    ev.max_violation = n_ctrl > 1 ? worst : 0.0;
    return ev;
  }

  TangentVector grad(const ProductPoint& X) const {
    TangentVector g = zero_like(X);
    const ChannelSet ch = build_channels(sc, X);
    const Eigen::VectorXd elems = element_positions(sc, X.u_raw);

    // Reflection block: d||h||^2 / d phi* = 2 diag(conj f) G h.
    for (int k = 0; k < sc.K_c; ++k)
      g.phi -= gain_scale * 2.0 *
               (ch.f[k].conjugate().asDiagonal() * (ch.G * ch.h_C[k]));

    // Position block, via the per-element channel derivative tables.
    Eigen::VectorXd t_grad = Eigen::VectorXd::Zero(2 * sc.N);
    for (int n = 0; n < sc.N; ++n) {
      const ElementPositionDerivatives d = element_position_derivatives(sc, elems, n);
      for (int k = 0; k < sc.K_c; ++k) {
        const cxd gh = ch.G.row(n) * ch.h_C[k];  // sum_m G[n,m] h[m]
        const Eigen::RowVector2cd hg = ch.h_C[k].transpose() * d.dG;
        for (int c = 0; c < 2; ++c) {
          const cxd term =
              ch.f[k][n] * X.phi[n] * std::conj(hg[c]) + X.phi[n] * std::conj(gh) * d.df[k][c];
          t_grad[2 * n + c] -= gain_scale * 2.0 * term.real();
        }
      }
    }

    // Separation penalty on the centres.
    const int n_ctrl = sc.n_ctrl();
    const Eigen::VectorXd centers = position_projection(X.u_raw, sc.A);
    const double d_min = min_center_distance(sc.a, sc.lambda);
    Eigen::VectorXd c_grad = Eigen::VectorXd::Zero(2 * n_ctrl);
    for (int i = 0; i < n_ctrl; ++i) {
      for (int j = i + 1; j < n_ctrl; ++j) {
        const Eigen::Vector2d ci = centers.segment<2>(2 * i);
        const Eigen::Vector2d cj = centers.segment<2>(2 * j);
        const double pd = kRhoDist * lq_penalty_derivative(d_min - (ci - cj).norm(), kKneeDist);
        if (pd == 0.0) continue;
        Eigen::Vector2d gi, gj;
        distance_pair_gradient(ci, cj, &gi, &gj);
        c_grad.segment<2>(2 * i) += pd * gi;
        c_grad.segment<2>(2 * j) += pd * gj;
      }
    }

    g.u_raw = (c_grad + reduce_element_gradient(t_grad, sc.a))
                  .cwiseProduct(position_projection_derivative(X.u_raw, sc.A));
    return g;
  }
};

// Matched-filter directions with unit columns (no power scaling): enough
// structure to define the per-target quadratic forms of stage 2.
Eigen::MatrixXcd unit_matched_filter(const Scenario& sc, const ChannelSet& ch) {
  const int K = sc.K_c + sc.M;
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(sc.M, K);
  for (int k = 0; k < sc.K_c; ++k) {
    const double nrm = ch.h_C[k].norm();
    W.col(k) = nrm > 0.0 ? (ch.h_C[k] / nrm).eval() : Eigen::VectorXcd::Unit(sc.M, 0).eval();
  }
  for (int i = 0; i < sc.M; ++i) {
    if (sc.K_t > 0) {
      const Eigen::VectorXcd& hs = ch.h_S[i % sc.K_t];
      const double nrm = hs.norm();
      W.col(sc.K_c + i) =
          nrm > 0.0 ? (hs / nrm).eval() : Eigen::VectorXcd::Unit(sc.M, i % sc.M).eval();
    } else {
      W(i % sc.M, sc.K_c + i) = 1.0;
    }
  }
  return W;
}

// --- Stage 2: per-target receive filters ------------------------------------
//
// For target k the echo SINR is a generalised Rayleigh quotient
// (v^H A_k v)/(v^H B_k v) with rank-one numerator A_k ~ m_k m_k^H, so the
// maximiser is v_k ~ B_k^{-1} m_k.
Eigen::MatrixXcd rayleigh_filters(const Scenario& sc, const ChannelSet& ch,
                                  const Eigen::MatrixXcd& W) {
  const int K = sc.K_c + sc.M;
  const int D = sc.M * K;
  std::vector<Eigen::VectorXcd> m(sc.K_t);
  for (int j = 0; j < sc.K_t; ++j) {
    m[j].resize(D);
    for (int c = 0; c < K; ++c) m[j].segment(c * sc.M, sc.M) = ch.H_S[j] * W.col(c);
  }
  Eigen::MatrixXcd V(D, sc.K_t);
  for (int k = 0; k < sc.K_t; ++k) {
    Eigen::MatrixXcd B = static_cast<double>(sc.K_t) * sc.sigma_S2 *
                         Eigen::MatrixXcd::Identity(D, D);
    for (int j = 0; j < sc.K_t; ++j) {
      if (j == k) continue;
      B += sc.T * sc.rcs[j] * sc.rcs[j] * (m[j] * m[j].adjoint());
    }
    Eigen::VectorXcd v = B.ldlt().solve(m[k]);
    const double nrm = v.norm();
    V.col(k) = nrm > 0.0 ? (v / nrm).eval() : Eigen::VectorXcd::Unit(D, 0).eval();
  }
  return V;
}

SolveReport run_sep_pipeline(const Scenario& sc, const InitConfig& init,
                             const OuterOptions& outer) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveReport rep;

  // Same starting positions/phases/filters as the joint schemes, but no
  // beamformer yet: stage 3 is the one place this pipeline computes W.
  sc.validate();
  ProductPoint X;
  X.u_raw = init_positions(sc.n_ctrl(), sc.A, min_center_distance(sc.a, sc.lambda));
  std::mt19937_64 init_rng(init.seed);
  std::tie(X.phi, X.V) = init_phase_filters(sc.N, sc.M, sc.K_c, sc.K_t, init_rng);
  X.W = Eigen::MatrixXcd::Zero(sc.M, sc.K_c + sc.M);

  // Stage 1: move reflection coefficients and positions towards maximum
  // summed user-channel gain, keeping centres separated.
  SepGainProblem sep{sc};
  const double gain0 = sep.raw_gain(X);
  sep.gain_scale = 1.0 / std::max(gain0, 1e-300);
  InnerProblem prob;
  prob.eval = [&sep](const ProductPoint& P) { return sep.eval(P); };
  prob.euclidean_grad = [&sep](const ProductPoint& P) { return sep.grad(P); };
  InnerOptions iopt = outer.inner;
  iopt.eps = 1e-6;
  InnerResult stage1 = solve_inner(prob, X, iopt);
  X.phi = stage1.X.phi;
  X.u_raw = stage1.X.u_raw;

  // Stage 2: receive filters at the improved channels.
  const ChannelSet ch = build_channels(sc, X);
  X.V = rayleigh_filters(sc, ch, unit_matched_filter(sc, ch));

  // Stage 3: minimum-power beamformer by relaxation with many extraction
  // candidates.
  InitConfig bf = init;
  bf.sdr_randomizations = 500;
  std::mt19937_64 rng(init.seed ^ kSepStream);
  X.W = init_beamforming_sdr(sc, ch, X.V, bf, rng);

  const ConstraintValues cons = constraint_values(sc, X, build_channels(sc, X));
  rep.X = std::move(X);
  rep.power_watts = rep.X.W.squaredNorm();
  rep.power_dBm = watts_to_dBm(rep.power_watts);
  rep.max_violation = cons.max_violation();
  rep.feasible = cons.feasible(outer.feas_tol);
  rep.outer_iters = 1;
  rep.inner_iters_total = stage1.iters;
  rep.inner_traces.push_back(std::move(stage1.trace));
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace

RunOutput run_scheme(const RunSpec& spec) {
  RunOutput out;
  out.row.scheme = scheme_name(spec.scheme);
  out.row.seed = spec.seed;
  out.row.sweep_key = spec.sweep_key;
  out.row.sweep_value = spec.sweep_value;
  out.row.power_dBm = std::numeric_limits<double>::quiet_NaN();

  ScenarioConfig cfg = spec.config;
  if (spec.scheme == Scheme::MirsEc) cfg.a = 1;  // element-wise control

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Scenario sc = generate_scenario(cfg, spec.seed);
    InitConfig init = spec.init;
    init.seed = spec.seed ^ kInitStream;

    if (spec.scheme == Scheme::Sep) {
      out.report = run_sep_pipeline(sc, init, spec.outer);
    } else {
      FactorMask mask;
      if (spec.scheme == Scheme::FpaIrs) {
        mask.u = false;
      } else if (spec.scheme == Scheme::BfOnly) {
        mask.u = false;
        mask.phi = false;
      }
      out.report = solve_penalty(sc, initial_point(sc, init), spec.outer, mask);
    }
    out.row.power_dBm = out.report.power_dBm;
    out.row.feasible = out.report.feasible;
    out.row.outer_iters = out.report.outer_iters;
    out.row.inner_iters = out.report.inner_iters_total;
    // Solver time only (the SolveReport clock): scenario generation and the
    // starting-point construction are shared bookkeeping, not scheme cost.
    out.row.wall_time_s = out.report.wall_time_s;
  } catch (const std::exception& e) {
    out.error = e.what();
    out.row.feasible = false;
    out.row.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps and output
// ---------------------------------------------------------------------------

void apply_sweep_value(ScenarioConfig& cfg, const std::string& key, double value) {
  if (key == "gamma") {
    cfg.gamma_bps = Eigen::VectorXd::Constant(1, value);
  } else if (key == "chi") {
    cfg.chi_dB = Eigen::VectorXd::Constant(1, value);
  } else if (key == "N") {
    if (value != std::floor(value) || value <= 0.0)
      throw ConfigError("sweep N requires a positive integer");
    cfg.N = static_cast<int>(value);
  } else if (key == "A") {
    cfg.A_over_lambda = value;
  } else if (key == "a") {
    if (value != std::floor(value) || value <= 0.0)
      throw ConfigError("sweep a requires a positive integer");
    cfg.a = static_cast<int>(value);
  } else {
    throw ConfigError("unknown sweep key '" + key + "' (expected gamma, chi, N, A or a)");
  }
}

namespace {

std::string format_value(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace

std::vector<RunSpec> expand_sweep(const RunSpec& base, const std::string& key,
                                  const std::vector<double>& values) {
  std::vector<RunSpec> specs;
  specs.reserve(values.size());
  for (double v : values) {
    RunSpec s = base;
    apply_sweep_value(s.config, key, v);
    s.sweep_key = key;
    s.sweep_value = format_value(v);
    specs.push_back(std::move(s));
  }
  return specs;
}

void write_csv_header(std::ostream& os) { os << kCsvHeader << "\n"; }

void write_csv_row(std::ostream& os, const ResultRow& row) {
  os << row.scheme << ',' << row.seed << ',' << row.sweep_key << ',' << row.sweep_value
     << ',' << format_value(row.power_dBm) << ',' << (row.feasible ? 1 : 0) << ','
     << row.outer_iters << ',' << row.inner_iters << ',' << std::fixed
     << std::setprecision(3) << row.wall_time_s << "\n";
  os.unsetf(std::ios_base::floatfield);
}

namespace {

std::string trace_file_name(const ResultRow& row) {
  std::string name = row.scheme + "_seed" + std::to_string(row.seed);
  if (!row.sweep_key.empty()) name += "_" + row.sweep_key + "-" + row.sweep_value;
  return name + ".trace.txt";
}

void write_trace(const std::string& dir, const RunOutput& out, bool verbose) {
  const std::string path = dir + "/" + trace_file_name(out.row);
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write trace file: " + path);
  const ResultRow& r = out.row;
  os << "# scheme=" << r.scheme << " seed=" << r.seed;
  if (!r.sweep_key.empty()) os << " " << r.sweep_key << "=" << r.sweep_value;
  os << "\n# power_dBm=" << format_value(r.power_dBm) << " feasible=" << r.feasible
     << " outer_iters=" << r.outer_iters << " inner_iters=" << r.inner_iters
     << " wall_time_s=" << r.wall_time_s << "\n";
  if (!out.error.empty()) os << "# error: " << out.error << "\n";
  os << "round rho u eps inner_iters g power_watts max_violation feasible\n";
  for (const auto& rec : out.report.outer_trace) {
    os << rec.round << ' ' << rec.rho << ' ' << rec.u << ' ' << rec.eps << ' '
       << rec.inner_iters << ' ' << format_value(rec.g) << ' '
       << format_value(rec.power_watts) << ' ' << format_value(rec.max_violation) << ' '
       << rec.feasible << "\n";
  }
  if (verbose) {
    for (size_t round = 0; round < out.report.inner_traces.size(); ++round) {
      os << "# inner trace, round " << round + 1
         << ": iter g grad_norm alpha backtracks max_violation memory\n";
      for (const auto& it : out.report.inner_traces[round]) {
        os << it.iter << ' ' << format_value(it.g) << ' ' << format_value(it.grad_norm)
           << ' ' << it.alpha << ' ' << it.backtracks << ' '
           << format_value(it.max_violation) << ' ' << it.memory_size << "\n";
      }
    }
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::vector<RunOutput> run_sweep(const std::vector<RunSpec>& specs,
                                 const SweepOptions& opt) {
  std::vector<RunOutput> outs(specs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= specs.size()) break;
      outs[i] = run_scheme(specs[i]);
    }
  };
  const int jobs = std::max(1, opt.jobs);
  if (jobs == 1 || specs.size() <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(jobs));
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  // Single writer, spec order: results are independent of the job count.
  if (!opt.csv_path.empty()) {
    const std::filesystem::path parent = std::filesystem::path(opt.csv_path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream os(opt.csv_path);
    if (!os) throw std::runtime_error("cannot open results file: " + opt.csv_path);
    write_csv_header(os);
    for (const auto& o : outs) write_csv_row(os, o.row);
    if (!os) throw std::runtime_error("write failed: " + opt.csv_path);
  }
  if (!opt.trace_dir.empty()) {
    std::filesystem::create_directories(opt.trace_dir);
    for (const auto& o : outs) write_trace(opt.trace_dir, o, opt.verbose_trace);
  }
  return outs;
}

}  // namespace prmo
