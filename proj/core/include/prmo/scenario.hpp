#pragma once

#include <vector>

#include "prmo/types.hpp"

namespace prmo {

// Fully drawn physical instance: array geometry, multipath responses,
// direction data, thresholds and noise levels. Produced by
// generate_scenario() (experiment.hpp) or assembled directly in tests.
struct Scenario {
  int M = 0;    // transmit antennas
  int N = 0;    // reflecting elements
  int a = 1;    // sub-array edge (a x a elements move rigidly)
  int K_c = 0;  // communication users
  int K_t = 0;  // sensing targets
  int L = 0;    // propagation paths on the BS-surface hop

  double lambda = 0.0;  // carrier wavelength (m)
  double A = 0.0;       // placement region edge (m); centres live in (0,A)^2

  Eigen::VectorXd b;  // M transmit-antenna positions along the BS axis (m)

  // BS -> surface hop: per-path complex responses and direction data.
  Eigen::VectorXcd sigma_G;  // L
  Eigen::VectorXd rho_t;     // L departure direction cosines at the BS
  Eigen::Matrix2Xd rho_r;    // 2 x L arrival direction vectors at the surface

  // Surface -> user hop: per-user, per-path complex responses (same arrival
  // geometry reused in departure with conjugated phases).
  std::vector<Eigen::VectorXcd> sigma_f;  // K_c entries, each length L

  // Sensing geometry: direct BS->target and surface->target line-of-sight.
  Eigen::VectorXd rho_B;    // K_t direction cosines at the BS
  Eigen::Matrix2Xd rho_I;   // 2 x K_t direction vectors at the surface
  Eigen::VectorXd alpha_d;  // K_t direct-hop power gains (linear)
  Eigen::VectorXd alpha_r;  // K_t reflected-hop power gains (linear)
  Eigen::VectorXd rcs;      // K_t reflection amplitude factors

  // Requirements and noise.
  Eigen::VectorXd gamma_rate;  // K_c rate thresholds (bits/s/Hz)
  Eigen::VectorXd chi;         // K_t sensing SINR thresholds (linear)
  Eigen::VectorXd sigma_c2;    // K_c receiver noise powers (W)
  double sigma_S2 = 0.0;       // sensing noise power (W)
  double T = 0.0;              // coherent symbol count

  int n_ctrl() const { return N / (a * a); }
  double wavenumber() const { return 2.0 * M_PI / lambda; }

  // Throws ConfigError on inconsistent dimensions (N not divisible by a^2,
  // mismatched per-user vector lengths, non-positive physical parameters).
  void validate() const;
};

}  // namespace prmo
