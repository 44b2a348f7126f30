#pragma once

#include <random>
#include <utility>

#include "prmo/channel.hpp"
#include "prmo/sdr.hpp"

namespace prmo {

struct InitConfig {
  uint64_t seed = 0;
  bool sdr_enabled = true;
  int sdr_randomizations = 1;    // extraction candidates beyond the eigenvector
  double fallback_margin = 1.25; // feasibility headroom of the matched-filter path
  double power_cap_watts = 1e6;  // hard ceiling before giving up entirely
  SdpOptions sdp;
};

// Deterministic spaced placement of n_ctrl centres inside (0, A)^2 with all
// pairwise distances >= d_min: the largest hexagonal-lattice pitch that still
// fits n_ctrl points is found by bisection and the occupied bounding box is
// centred in the region. Returns raw (pre-sigmoid) coordinates, clamped to
// |u_raw| <= 30. Throws PackingInfeasible when even the tightest lattice
// cannot hold n_ctrl points.
Eigen::VectorXd init_positions(int n_ctrl, double A, double d_min);

// Random reflection coefficients (uniform phases) and receive filters
// (complex Gaussian, columns normalised).
std::pair<Eigen::VectorXcd, Eigen::MatrixXcd> init_phase_filters(int N, int M, int K_c,
                                                                 int K_t,
                                                                 std::mt19937_64& rng);

// Half-space data of the relaxed beamforming feasibility set over
// X = vec(W) vec(W)^H: one rate constraint per user, one echo-SINR
// constraint per target (at the given receive filters). Exposed separately
// so tests can exercise the relaxation directly.
std::vector<SdpConstraint> beamforming_sdp_constraints(const Scenario& sc,
                                                       const ChannelSet& ch,
                                                       const Eigen::MatrixXcd& V);

// Minimum-power beamformer meeting all rate and echo-SINR constraints at the
// given channels and filters: semidefinite relaxation + eigenvector /
// Gaussian-randomisation extraction with per-candidate power rescaling.
// Falls back to scaled matched-filter columns when the relaxation fails or is
// disabled. Throws InitFailure when no candidate under cfg.power_cap_watts
// exists.
Eigen::MatrixXcd init_beamforming_sdr(const Scenario& sc, const ChannelSet& ch,
                                      const Eigen::MatrixXcd& V, const InitConfig& cfg,
                                      std::mt19937_64& rng);

// Full starting point: packed positions, random phases/filters, then the
// beamformer against the channels those choices imply. Deterministic in
// cfg.seed.
ProductPoint initial_point(const Scenario& sc, const InitConfig& cfg);

}  // namespace prmo
