#pragma once

#include <deque>
#include <functional>

#include "prmo/metrics.hpp"

namespace prmo {

// One stored curvature pair. s and y are normalised by ||s_raw|| at creation;
// delta = 1 / <s, y> is kept from creation even after later transports.
struct CorrectionPair {
  TangentVector s;
  TangentVector y;
  double delta = 0.0;
};

// FIFO bounded store of curvature pairs, all kept in the tangent space of the
// current iterate (transport_all() must be called after every step).
class CorrectionMemory {
 public:
  explicit CorrectionMemory(int capacity) : capacity_(capacity) {
    if (capacity < 0) throw std::invalid_argument("memory capacity must be >= 0");
  }

  // Re-express every stored pair in the tangent space at `target`.
  void transport_all(const ProductPoint& target);

  // Normalise (s_raw, y_raw) by ||s_raw||, apply the cautious curvature test
  //   <s, y> >= 1e-4 <s, s> ||grad_old||,
  // and store on success (evicting the oldest pair when full).
  // Returns whether the pair was stored.
  bool try_add(const TangentVector& s_raw, const TangentVector& y_raw,
               double grad_old_norm);

  const std::deque<CorrectionPair>& pairs() const { return pairs_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  int capacity() const { return capacity_; }
  void clear() { pairs_.clear(); }

  static constexpr double kCautiousFactor = 1e-4;

 private:
  std::deque<CorrectionPair> pairs_;  // front = oldest, back = newest
  int capacity_;
};

// Two-loop recursion: d = -H grad where H is the implicit inverse-Hessian
// approximation built from the stored pairs, with the initial operator scaled
// by <s,y>/<y,y> of the newest pair (identity scaling when empty).
TangentVector two_loop_direction(const TangentVector& grad, const CorrectionMemory& mem);

struct InnerOptions {
  double eps = 1e-2;             // gradient-norm stationarity threshold
  double stall_factor = 1e-3;    // also stop when a step moves less than eps*this
  int max_iters = 100;           // iteration cap
  double armijo_sigma = 1e-4;    // sufficient-decrease slope fraction
  double backtrack_factor = 0.5; // step shrink per backtrack
  int backtrack_cap = 50;        // max shrink count before declaring failure
  double tau_init = 1.0;         // initial trial step, reset every iteration
  int memory = 10;               // curvature-pair capacity
};

// The solver only sees the problem through these two callables, so the same
// machinery runs the physical objective and synthetic test problems alike.
struct InnerProblem {
  std::function<Evaluation(const ProductPoint&)> eval;
  std::function<TangentVector(const ProductPoint&)> euclidean_grad;
};

struct LineSearchResult {
  bool success = false;
  double alpha = 0.0;
  int backtracks = 0;
  ProductPoint X;
  Evaluation eval;
};

// Backtracking search for g(R_X(alpha d)) <= g0 + sigma * alpha * <grad, d>.
// Requires a descent direction (<grad, d> < 0); returns success=false once the
// backtrack cap is exhausted (the caller treats that as a stall). Degenerate
// retractions are counted as failed trials and shrink the step.
LineSearchResult armijo_search(const InnerProblem& prob, const ProductPoint& X,
                               double g0, const TangentVector& grad,
                               const TangentVector& d, const InnerOptions& opt);

struct InnerIterRecord {
  int iter = 0;
  double g = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;
  int backtracks = 0;
  double max_violation = 0.0;
  int memory_size = 0;
};

struct InnerResult {
  ProductPoint X;
  Evaluation eval;
  int iters = 0;
  bool stalled = false;  // line search failed before any stopping test fired
  std::vector<InnerIterRecord> trace;
};

// Limited-memory quasi-Newton descent until the tangent gradient norm drops
// below opt.eps, with a displacement-stall safeguard at opt.eps*opt.stall_factor
// (or the iteration cap / a line-search stall). The recorded objective trace is
// non-increasing by construction.
InnerResult solve_inner(const InnerProblem& prob, ProductPoint X0, const InnerOptions& opt);

}  // namespace prmo
