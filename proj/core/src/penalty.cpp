#include "prmo/penalty.hpp"

#include <chrono>
#include <cmath>

namespace prmo {

void update_parameters(PenaltyState& st, const OuterOptions& opt, bool violated) {
  if (violated) st.rho *= opt.theta_rho;
  st.u = std::max(opt.theta_u * st.u, opt.u_min);
  st.eps = std::max(opt.theta_eps * st.eps, opt.eps_min);
}

double watts_to_dBm(double watts) {
  if (watts <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(watts * 1e3);
}

namespace {

void apply_mask(TangentVector& g, const FactorMask& mask) {
  if (!mask.W) g.W.setZero();
  if (!mask.V) g.V.setZero();
  if (!mask.phi) g.phi.setZero();
  if (!mask.u) g.u_raw.setZero();
}

}  // namespace

SolveReport solve_penalty(const Scenario& sc, ProductPoint X0, const OuterOptions& opt,
                          const FactorMask& mask) {
  const auto t0 = std::chrono::steady_clock::now();
  sc.validate();

  SolveReport rep;
  rep.X = std::move(X0);
  PenaltyState st{opt.rho_init, opt.u_init, opt.eps_init};

  for (int round = 1; round <= opt.max_outer; ++round) {
    const PenaltyParams params{st.rho, st.u};
    InnerProblem prob;
    prob.eval = [&sc, params](const ProductPoint& X) {
      return smoothed_objective(sc, X, params);
    };
    prob.euclidean_grad = [&sc, params, &mask](const ProductPoint& X) {
      TangentVector g = euclidean_gradient(sc, X, params);
      apply_mask(g, mask);
      return g;
    };

    InnerOptions inner = opt.inner;
    inner.eps = st.eps;
    InnerResult res = solve_inner(prob, rep.X, inner);

    const double outer_step = displacement(res.X, rep.X);
    const double max_violation = res.eval.max_violation;
    const bool violated = max_violation > opt.feas_tol;

    OuterIterRecord rec;
    rec.round = round;
    rec.rho = st.rho;
    rec.u = st.u;
    rec.eps = st.eps;
    rec.inner_iters = res.iters;
    rec.g = res.eval.g;
    rec.power_watts = res.eval.power;
    rec.max_violation = max_violation;
    rec.feasible = !violated;
    rep.outer_trace.push_back(rec);
    rep.inner_traces.push_back(std::move(res.trace));

    rep.X = std::move(res.X);
    rep.inner_iters_total += res.iters;
    rep.outer_iters = round;
    rep.power_watts = res.eval.power;
    rep.max_violation = max_violation;
    rep.feasible = !violated;

    // Stop only once the round that just ran already used floor values, so
    // the final inner solve is the tight one.
    const bool at_floors = st.u <= opt.u_min && st.eps <= opt.eps_min;
    update_parameters(st, opt, violated);
    if (outer_step < opt.step_tol && !violated && at_floors) {
      break;
    }
  }

  rep.power_dBm = watts_to_dBm(rep.power_watts);
  rep.wall_time_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace prmo
