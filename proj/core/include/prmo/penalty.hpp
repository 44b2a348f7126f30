#pragma once

#include "prmo/gradients.hpp"
#include "prmo/rbfgs.hpp"

namespace prmo {

// Which factors the inner solver is allowed to move. Frozen factors keep
// their ambient gradient zeroed, so the direction never touches them.
struct FactorMask {
  bool W = true;
  bool V = true;
  bool phi = true;
  bool u = true;
};

struct OuterOptions {
  double rho_init = 1.0;
  double theta_rho = 10.0;  // penalty growth on violation
  double u_init = 1.0;
  double theta_u = 0.25;  // knee-width decay
  double u_min = 1e-4;
  double eps_init = 1e-2;
  double theta_eps = 0.25;  // inner-tolerance decay
  double eps_min = 1e-6;
  double step_tol = 1e-5;  // outer displacement threshold
  double feas_tol = 1e-6;  // max constraint violation accepted as feasible
  int max_outer = 50;
  InnerOptions inner;
};

struct PenaltyState {
  double rho = 1.0;
  double u = 1.0;
  double eps = 1e-2;
};

// One update of the continuation parameters: rho grows iff `violated`;
// u and eps decay towards their floors unconditionally.
void update_parameters(PenaltyState& st, const OuterOptions& opt, bool violated);

struct OuterIterRecord {
  int round = 0;
  double rho = 0.0;
  double u = 0.0;
  double eps = 0.0;
  int inner_iters = 0;
  double g = 0.0;
  double power_watts = 0.0;
  double max_violation = 0.0;
  bool feasible = false;
};

struct SolveReport {
  ProductPoint X;
  double power_watts = 0.0;
  double power_dBm = 0.0;
  bool feasible = false;
  double max_violation = 0.0;
  int outer_iters = 0;
  int inner_iters_total = 0;
  double wall_time_s = 0.0;
  std::vector<OuterIterRecord> outer_trace;
  std::vector<std::vector<InnerIterRecord>> inner_traces;
};

double watts_to_dBm(double watts);

// Exact-penalty continuation around the inner quasi-Newton solver:
// repeatedly minimise ||W||^2 + rho sum P(h_i, u), escalate rho on violation,
// decay u and eps, and stop once the outer displacement falls below step_tol
// with all constraints within feas_tol and both continuation parameters at
// their floors. If feasibility is never reached the loop stops at max_outer
// and reports feasible = false.
SolveReport solve_penalty(const Scenario& sc, ProductPoint X0, const OuterOptions& opt,
                          const FactorMask& mask = {});

}  // namespace prmo
