#include "prmo/scenario.hpp"

#include <sstream>

namespace prmo {

void Scenario::validate() const {
  std::ostringstream why;
  auto fail = [&why](const std::string& msg) { throw ConfigError("scenario: " + msg); };

  if (M <= 0) fail("M must be positive");
  if (N <= 0) fail("N must be positive");
  if (a < 1) fail("sub-array edge a must be >= 1");
  if (N % (a * a) != 0) {
    why << "N = " << N << " is not divisible by a^2 = " << a * a;
    fail(why.str());
  }
  if (K_c < 0 || K_t < 0) fail("user/target counts must be non-negative");
  if (L <= 0) fail("path count L must be positive");
  if (lambda <= 0.0) fail("wavelength must be positive");
  if (A <= 0.0) fail("placement region edge must be positive");
  if (T <= 0.0) fail("symbol count T must be positive");
  if (sigma_S2 < 0.0) fail("sensing noise power must be non-negative");

  if (b.size() != M) fail("antenna position vector must have M entries");
  if (sigma_G.size() != L || rho_t.size() != L || rho_r.cols() != L)
    fail("path response/direction arrays must have L entries");
  if (static_cast<int>(sigma_f.size()) != K_c) fail("sigma_f must have K_c entries");
  for (const auto& s : sigma_f)
    if (s.size() != L) fail("each sigma_f entry must have L paths");
  if (rho_B.size() != K_t || rho_I.cols() != K_t || alpha_d.size() != K_t ||
      alpha_r.size() != K_t || rcs.size() != K_t || chi.size() != K_t)
    fail("target arrays must have K_t entries");
  if (gamma_rate.size() != K_c || sigma_c2.size() != K_c)
    fail("per-user threshold/noise arrays must have K_c entries");
  for (int k = 0; k < K_c; ++k)
    if (sigma_c2[k] <= 0.0) fail("receiver noise powers must be positive");
}

}  // namespace prmo
