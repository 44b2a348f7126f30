#include "doctest.h"

#include "prmo/penalty.hpp"
#include "prmo/rbfgs.hpp"
#include "test_util.hpp"

using namespace prmo;

namespace {

// A strictly convex quadratic 0.5 (u - t)^T A (u - t) living entirely in the
// position factor; the other factors carry zero gradient.
struct EmbeddedQuadratic {
  Eigen::MatrixXd A;
  Eigen::VectorXd target;

  double value(const ProductPoint& X) const {
    const Eigen::VectorXd r = X.u_raw - target;
    return 0.5 * r.dot(A * r);
  }

  InnerProblem problem() const {
    InnerProblem p;
    p.eval = [this](const ProductPoint& X) {
      Evaluation e;
      e.g = value(X);
      e.power = e.g;
      e.max_violation = 0.0;
      return e;
    };
    p.euclidean_grad = [this](const ProductPoint& X) {
      TangentVector g = zero_like(X);
      g.u_raw = A * (X.u_raw - target);
      return g;
    };
    return p;
  }
};

EmbeddedQuadratic make_quadratic(int dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd B(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) B(i, j) = nd(rng);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(B).householderQ();
  Eigen::VectorXd eigs(dim);
  for (int i = 0; i < dim; ++i) eigs[i] = 1.0 + i;  // spectrum [1, dim]
  EmbeddedQuadratic q;
  q.A = Q * eigs.asDiagonal() * Q.transpose();
  q.target = Eigen::VectorXd::NullaryExpr(dim, [&](Eigen::Index) { return nd(rng); });
  return q;
}

// Shape whose position factor has the requested (even) dimension.
ProductPoint point_with_u_dim(int dim, uint64_t seed) {
  REQUIRE(dim % 2 == 0);
  std::mt19937_64 rng(seed);
  return random_point(1, 0, 1, dim / 2, dim / 2, rng);
}

TangentVector random_tangent_pair_part(const ProductPoint& X, std::mt19937_64& rng) {
  return project_tangent(X, random_ambient(X, rng));
}

void require_monotone(const std::vector<InnerIterRecord>& trace) {
  for (size_t i = 1; i < trace.size(); ++i) {
    REQUIRE(trace[i].g <= trace[i - 1].g + 1e-12 * std::abs(trace[i - 1].g));
  }
}

}  // namespace

TEST_CASE("pair store: construction, cautious filter, eviction") {
  CHECK_THROWS_AS(CorrectionMemory(-1), std::invalid_argument);

  std::mt19937_64 rng(1);
  const ProductPoint X = point_with_u_dim(6, 2);
  CorrectionMemory mem(3);

  // A pair with negative alignment is rejected and leaves the store alone.
  TangentVector s = random_tangent_pair_part(X, rng);
  TangentVector y = add_scaled(zero_like(X), -1.0, s);  // y = -s: <s,y> < 0
  CHECK_FALSE(mem.try_add(s, y, 1.0));
  CHECK(mem.size() == 0);

  // Aligned pairs pass, are normalised, and evict FIFO at capacity.
  std::vector<double> first_coord;
  int added = 0;
  while (added < 4) {
    TangentVector cand = random_tangent_pair_part(X, rng);
    TangentVector bent = add_scaled(cand, 0.3, random_tangent_pair_part(X, rng));
    if (inner(cand, bent) <= 1e-4 * inner(cand, cand)) continue;
    REQUIRE(mem.try_add(cand, bent, 1.0));
    first_coord.push_back(mem.pairs().back().s.u_raw[0]);
    ++added;
  }
  CHECK(mem.size() == 3);
  // Oldest (index 0 of the additions) was evicted; order of the rest holds.
  CHECK(mem.pairs()[0].s.u_raw[0] == doctest::Approx(first_coord[1]));
  CHECK(mem.pairs()[1].s.u_raw[0] == doctest::Approx(first_coord[2]));
  CHECK(mem.pairs()[2].s.u_raw[0] == doctest::Approx(first_coord[3]));

  for (const auto& pr : mem.pairs()) {
    CHECK(norm(pr.s) == doctest::Approx(1.0).epsilon(1e-12));  // normalised by ||s_raw||
    CHECK(inner(pr.s, pr.y) > 0.0);
    CHECK(pr.delta == doctest::Approx(1.0 / inner(pr.s, pr.y)).epsilon(1e-12));
  }
}

TEST_CASE("pair store: transported pairs stay tangent at the new point") {
  std::mt19937_64 rng(3);
  const ProductPoint X = point_with_u_dim(6, 4);
  CorrectionMemory mem(5);
  int added = 0;
  while (added < 5) {
    TangentVector cand = random_tangent_pair_part(X, rng);
    TangentVector bent = add_scaled(cand, 0.2, random_tangent_pair_part(X, rng));
    if (inner(cand, bent) <= 1e-4 * inner(cand, cand)) continue;
    mem.try_add(cand, bent, 1.0);
    ++added;
  }
  const ProductPoint Y = point_with_u_dim(6, 5);
  mem.transport_all(Y);
  for (const auto& pr : mem.pairs()) {
    CHECK(in_tangent_space(Y, pr.s, 1e-10));
    CHECK(in_tangent_space(Y, pr.y, 1e-10));
  }
}

TEST_CASE("two-loop: empty memory returns steepest descent exactly") {
  const ProductPoint X = point_with_u_dim(4, 6);
  const TangentVector g = testutil::random_tangent_at(X, 7);
  CorrectionMemory mem(10);
  const TangentVector d = two_loop_direction(g, mem);
  CHECK(norm(add_scaled(d, 1.0, g)) == 0.0);  // d + g = 0
}

TEST_CASE("two-loop: equals the dense recursion for one to three stored pairs") {
  std::mt19937_64 rng(8);
  const ProductPoint X = random_point(2, 1, 1, 3, 3, rng);  // small mixed shape
  CorrectionMemory mem(10);

  int stored = 0;
  while (stored < 3) {
    TangentVector s = random_tangent_pair_part(X, rng);
    TangentVector y = add_scaled(random_tangent_pair_part(X, rng), 2.0, s);
    if (inner(s, y) <= 1e-4 * inner(s, s)) continue;
    REQUIRE(mem.try_add(s, y, 1.0));
    ++stored;

    const TangentVector g = random_tangent_pair_part(X, rng);
    const TangentVector fast = two_loop_direction(g, mem);
    const Eigen::VectorXd dense = testutil::dense_quasi_newton_direction(mem, g, X);
    const Eigen::VectorXd fast_flat = testutil::flatten_tangent(fast);
    INFO("stored pairs: ", stored);
    REQUIRE((fast_flat - dense).norm() <= 1e-10 * std::max(1.0, dense.norm()));
  }
}

TEST_CASE("two-loop: descent whenever the gradient is nonzero") {
  std::mt19937_64 rng(9);
  const ProductPoint X = random_point(2, 1, 1, 4, 4, rng);
  CorrectionMemory mem(10);
  int stored = 0;
  while (stored < 6) {
    TangentVector s = random_tangent_pair_part(X, rng);
    TangentVector y = add_scaled(random_tangent_pair_part(X, rng), 1.5, s);
    if (inner(s, y) <= 1e-4 * inner(s, s)) continue;
    mem.try_add(s, y, 1.0);
    ++stored;
  }
  for (int trial = 0; trial < 50; ++trial) {
    const TangentVector g = random_tangent_pair_part(X, rng);
    if (norm(g) == 0.0) continue;
    const TangentVector d = two_loop_direction(g, mem);
    CHECK(inner(g, d) < 0.0);
  }
}

TEST_CASE("line search: hand-computed backtracking trace on a parabola") {
  // g(x) = x^2 at x = 1 with d = -2: the unit trial overshoots to x = -1 and
  // fails sufficient decrease; one halving lands exactly on the minimiser.
  const ProductPoint X = [] {
    ProductPoint p = point_with_u_dim(2, 10);
    p.u_raw << 1.0, 0.0;
    return p;
  }();

  InnerProblem prob;
  prob.eval = [](const ProductPoint& P) {
    Evaluation e;
    e.g = P.u_raw[0] * P.u_raw[0];
    e.power = e.g;
    return e;
  };
  prob.euclidean_grad = [](const ProductPoint& P) {
    TangentVector g = zero_like(P);
    g.u_raw[0] = 2.0 * P.u_raw[0];
    return g;
  };

  TangentVector grad = zero_like(X);
  grad.u_raw[0] = 2.0;
  TangentVector d = zero_like(X);
  d.u_raw[0] = -2.0;

  InnerOptions opt;  // sigma 1e-4, halving, tau 1
  const LineSearchResult res = armijo_search(prob, X, 1.0, grad, d, opt);
  REQUIRE(res.success);
  CHECK(res.alpha == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(res.backtracks == 1);
  CHECK(res.X.u_raw[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(res.eval.g == doctest::Approx(0.0).epsilon(1e-15));

  // Zero (or any non-descent) direction violates the contract.
  CHECK_THROWS_AS((void)armijo_search(prob, X, 1.0, grad, zero_like(X), opt),
                  std::invalid_argument);
}

TEST_CASE("line search: accepted steps never increase the objective") {
  const EmbeddedQuadratic q = make_quadratic(6, 11);
  const InnerProblem prob = q.problem();
  for (int trial = 0; trial < 25; ++trial) {
    ProductPoint X = point_with_u_dim(6, 13 + trial);
    const double g0 = prob.eval(X).g;
    const TangentVector grad = project_tangent(X, prob.euclidean_grad(X));
    if (norm(grad) == 0.0) continue;
    const TangentVector d = add_scaled(zero_like(X), -1.0, grad);
    InnerOptions opt;
    const LineSearchResult res = armijo_search(prob, X, g0, grad, d, opt);
    REQUIRE(res.success);
    CHECK(res.eval.g <= g0);
  }
}

TEST_CASE("inner solve: a stationary start returns immediately") {
  const Scenario sc = testutil::desk_scenario(14);
  ProductPoint X0 = testutil::random_point_for(sc, 15);
  X0.W.setZero();

  const PenaltyParams p{0.0, 1.0};  // objective reduces to ||W||^2
  InnerProblem prob;
  prob.eval = [&](const ProductPoint& X) { return smoothed_objective(sc, X, p); };
  prob.euclidean_grad = [&](const ProductPoint& X) {
    return euclidean_gradient(sc, X, p);
  };

  const InnerResult res = solve_inner(prob, X0, InnerOptions{});
  CHECK(res.iters == 0);
  CHECK(res.eval.g == 0.0);
  REQUIRE(res.trace.size() == 1);
  CHECK(res.trace[0].grad_norm == 0.0);
  CHECK_FALSE(res.stalled);
}

TEST_CASE("inner solve: reaches the minimiser of a convex quadratic") {
  for (int dim : {4, 8}) {
    const EmbeddedQuadratic q = make_quadratic(dim, 16 + dim);
    InnerOptions opt;
    opt.eps = 1e-8;
    opt.max_iters = 100;
    const InnerResult res = solve_inner(q.problem(), point_with_u_dim(dim, 17), opt);
    REQUIRE_FALSE(res.stalled);
    CHECK((res.X.u_raw - q.target).norm() <= 1e-6);
    require_monotone(res.trace);
    CHECK(res.iters <= opt.max_iters);
  }
}

TEST_CASE("inner solve: an inconsistent gradient is reported as a stall") {
  InnerProblem lying;
  lying.eval = [](const ProductPoint& P) {
    Evaluation e;
    e.g = P.u_raw[0] * P.u_raw[0];
    e.power = e.g;
    return e;
  };
  lying.euclidean_grad = [](const ProductPoint& P) {
    TangentVector g = zero_like(P);
    g.u_raw[0] = -2.0 * P.u_raw[0];  // sign flipped: claims descent uphill
    return g;
  };
  ProductPoint X0 = point_with_u_dim(2, 18);
  X0.u_raw << 1.0, 0.0;
  const InnerResult res = solve_inner(lying, X0, InnerOptions{});
  CHECK(res.stalled);
  CHECK(res.X.u_raw[0] == 1.0);  // never moved
}

TEST_CASE("inner solve: objective trace is monotone on the physical problem") {
  const Scenario sc = testutil::desk_scenario(19);
  const ProductPoint X0 = testutil::random_point_for(sc, 20);
  const PenaltyParams p{1.0, 1.0};
  InnerProblem prob;
  prob.eval = [&](const ProductPoint& X) { return smoothed_objective(sc, X, p); };
  prob.euclidean_grad = [&](const ProductPoint& X) {
    return euclidean_gradient(sc, X, p);
  };
  InnerOptions opt;
  opt.max_iters = 60;
  const InnerResult res = solve_inner(prob, X0, opt);
  require_monotone(res.trace);
  CHECK(on_manifold(res.X, 1e-10));
}

TEST_CASE("full-memory quadratic termination under exact steps") {
  for (int dim : {2, 4, 8}) {
    const EmbeddedQuadratic q = make_quadratic(dim, 21 + dim);
    ProductPoint X = point_with_u_dim(dim, 22);
    CorrectionMemory mem(64);

    auto grad_at = [&](const ProductPoint& P) {
      TangentVector g = zero_like(P);
      g.u_raw = q.A * (P.u_raw - q.target);
      return g;
    };

    TangentVector grad = grad_at(X);
    const double g0n = norm(grad);
    REQUIRE(g0n > 0.0);

    for (int it = 0; it < dim && norm(grad) > 1e-12 * g0n; ++it) {
      const TangentVector d = two_loop_direction(grad, mem);
      const double dAd = d.u_raw.dot(q.A * d.u_raw);
      REQUIRE(dAd > 0.0);
      const double alpha = -inner(grad, d) / dAd;  // exact minimiser along d
      const ProductPoint Xn = retract(X, d, alpha);
      const TangentVector grad_new = grad_at(Xn);

      TangentVector s_raw = zero_like(X);
      s_raw.u_raw = alpha * d.u_raw;
      const TangentVector y_raw = add_scaled(grad_new, -1.0, grad);
      mem.transport_all(Xn);
      REQUIRE(mem.try_add(s_raw, y_raw, norm(grad)));

      // The newest secant pair is always reproduced by the implicit inverse.
      const TangentVector Hy = two_loop_direction(mem.pairs().back().y, mem);
      const TangentVector& s_stored = mem.pairs().back().s;
      CHECK(norm(add_scaled(Hy, 1.0, s_stored)) <= 1e-8 * norm(s_stored));

      X = Xn;
      grad = grad_new;
    }
    INFO("dimension ", dim);
    CHECK(norm(grad) <= 1e-6 * g0n);
  }
}
