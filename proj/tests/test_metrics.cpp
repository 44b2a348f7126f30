#include "doctest.h"

#include "prmo/init.hpp"
#include "prmo/metrics.hpp"
#include "test_util.hpp"

using namespace prmo;

namespace {

// Kronecker-free quadratic form evaluated the expensive way: materialise
// I (x) H and multiply.
cxd kron_quadratic_reference(const Eigen::MatrixXcd& H, const Eigen::MatrixXcd& W,
                             const Eigen::VectorXcd& v) {
  const Eigen::Index M = H.rows();
  const Eigen::Index cols = W.cols();
  Eigen::MatrixXcd big = Eigen::MatrixXcd::Zero(M * cols, M * cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    big.block(c * M, c * M, M, M) = H;
  }
  Eigen::VectorXcd w(M * cols);
  for (Eigen::Index c = 0; c < cols; ++c) w.segment(c * M, M) = W.col(c);
  return v.dot(big * w);
}

}  // namespace

TEST_CASE("downlink rate: unit-SINR construction and zero beamformer") {
  const int M = 3;
  Eigen::VectorXcd h(M);
  h << cxd(0.6, 0.2), cxd(-0.1, 0.4), cxd(0.3, -0.5);
  const double sigma2 = 2.5e-3;

  // Single active column aligned so |h^H w|^2 = sigma2: SINR 1, rate 1.
  Eigen::MatrixXcd W = Eigen::MatrixXcd::Zero(M, 2);
  W.col(0) = h / h.squaredNorm() * std::sqrt(sigma2);
  const CommRate cr = comm_rate(W, h, sigma2, 0);
  CHECK(cr.sinr == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cr.rate == doctest::Approx(1.0).epsilon(1e-12));

  const CommRate off = comm_rate(Eigen::MatrixXcd::Zero(M, 2), h, sigma2, 0);
  CHECK(off.sinr == 0.0);
  CHECK(off.rate == 0.0);
}

TEST_CASE("downlink rate: matches the scalar expansion on random draws") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int M = 4, cols = 5, k = trial % cols;
    Eigen::MatrixXcd W(M, cols);
    Eigen::VectorXcd h(M);
    for (int c = 0; c < cols; ++c)
      for (int r = 0; r < M; ++r) W(r, c) = cxd(nd(rng), nd(rng));
    for (int r = 0; r < M; ++r) h(r) = cxd(nd(rng), nd(rng));
    const double sigma2 = 0.3;

    double interference = 0.0;
    for (int c = 0; c < cols; ++c) {
      if (c != k) interference += std::norm((h.adjoint() * W.col(c))(0));
    }
    const double sig = std::norm((h.adjoint() * W.col(k))(0));
    const double want = sig / (interference + sigma2);

    const CommRate cr = comm_rate(W, h, sigma2, k);
    CHECK(cr.sinr == doctest::Approx(want).epsilon(1e-12));
    CHECK(cr.rate == doctest::Approx(std::log2(1.0 + want)).epsilon(1e-12));
  }
}

TEST_CASE("downlink rate: strictly increasing in the useful power") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXcd W(3, 4);
  Eigen::VectorXcd h(3);
  for (Eigen::Index c = 0; c < W.cols(); ++c)
    for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = cxd(nd(rng), nd(rng));
  for (Eigen::Index r = 0; r < h.size(); ++r) h(r) = cxd(nd(rng), nd(rng));

  double prev = -1.0;
  for (double scale : {0.5, 1.0, 2.0, 4.0}) {
    Eigen::MatrixXcd Ws = W;
    Ws.col(1) *= scale;  // boosts only the useful column of user 1
    const double sinr = comm_rate(Ws, h, 1e-2, 1).sinr;
    CHECK(sinr > prev);
    prev = sinr;
  }
}

TEST_CASE("block quadratic form equals the materialised product") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int M = 3, cols = 4;
    Eigen::MatrixXcd H(M, M), W(M, cols);
    Eigen::VectorXcd v(M * cols);
    for (Eigen::Index i = 0; i < H.rows(); ++i)
      for (Eigen::Index j = 0; j < H.cols(); ++j) H(i, j) = cxd(nd(rng), nd(rng));
    for (Eigen::Index c = 0; c < W.cols(); ++c)
      for (Eigen::Index r = 0; r < W.rows(); ++r) W(r, c) = cxd(nd(rng), nd(rng));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cxd(nd(rng), nd(rng));

    const cxd got = block_quadratic(H, W, v);
    const cxd want = kron_quadratic_reference(H, W, v);
    CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("echo SINR: filter scale invariance and the single-target closed form") {
  const Scenario sc = testutil::desk_scenario(4);
  const ProductPoint X = testutil::random_point_for(sc, 5);
  const ChannelSet ch = build_channels(sc, X);

  const Eigen::VectorXcd v = X.V.col(0);
  const double base = radar_sinr(sc, ch, X.W, v, 0);
  const double scaled = radar_sinr(sc, ch, X.W, cxd(1.7, -2.2) * v, 0);
  CHECK(scaled == doctest::Approx(base).epsilon(1e-12));

  // K_t = 1: no cross-target interference term.
  const cxd q = block_quadratic(ch.H_S[0], X.W, v);
  const double want = sc.T * sc.rcs[0] * sc.rcs[0] * std::norm(q) /
                      (sc.K_t * sc.sigma_S2 * v.squaredNorm());
  CHECK(base == doctest::Approx(want).epsilon(1e-12));

  CHECK_THROWS_AS((void)radar_sinr(sc, ch, X.W, Eigen::VectorXcd::Zero(v.size()), 0),
                  std::invalid_argument);
}

TEST_CASE("echo SINR: matches the symbol-level matched-filter reference") {
  for (uint64_t seed = 1; seed <= 3; ++seed) {
    ScenarioConfig cfg = ScenarioConfig::desk();
    cfg.K_t = 2;
    cfg.K_c = 1;
    cfg.T = 128.0;
    const Scenario sc = generate_scenario(cfg, seed);
    const ProductPoint X = testutil::random_point_for(sc, seed + 50);
    const ChannelSet ch = build_channels(sc, X);
    std::mt19937_64 rng(seed + 99);
    for (int t = 0; t < sc.K_t; ++t) {
      const double closed = radar_sinr(sc, ch, X.W, X.V.col(t), t);
      const double symbol =
          testutil::symbol_level_radar_sinr(sc, ch, X.W, X.V.col(t), t, rng);
      CHECK(closed == doctest::Approx(symbol).epsilon(1e-8));
    }
  }
}

TEST_CASE("constraint stack: boundary distances, slack rates, pair counts") {
  ScenarioConfig cfg = ScenarioConfig::desk();
  cfg.N = 4;
  Scenario sc = generate_scenario(cfg, 6);

  ProductPoint X = testutil::random_point_for(sc, 7);
  // Place the four centres so one pair sits exactly at the spacing floor and
  // the rest are far apart.
  const double d_min = min_center_distance(sc.a, sc.lambda);
  Eigen::VectorXd centers(8);
  centers << 0.2, 0.2, 0.2 + d_min, 0.2, 0.6, 0.6, 0.2, 0.6;
  X.u_raw = position_projection_inverse(centers, sc.A);

  const ConstraintValues cv = constraint_values(sc, X);
  REQUIRE(cv.dist.size() == 6);  // 4 centres -> 6 unordered pairs
  CHECK(cv.comm.size() == sc.K_c);
  CHECK(cv.sense.size() == sc.K_t);
  CHECK(cv.dist.maxCoeff() == doctest::Approx(0.0).epsilon(1e-9));

  // A rate threshold far below the achieved rate leaves negative residual.
  Scenario eased = sc;
  eased.gamma_rate = Eigen::VectorXd::Constant(sc.K_c, 1e-12);
  ProductPoint Y = X;
  Y.W = Eigen::MatrixXcd::Constant(sc.M, sc.K_c + sc.M, cxd(0.05, 0.0));
  const ConstraintValues cv2 = constraint_values(eased, Y);
  for (int k = 0; k < sc.K_c; ++k) CHECK(cv2.comm[k] < 0.0);

  CHECK(cv.max_violation() ==
        doctest::Approx(std::max({cv.comm.maxCoeff(), cv.sense.maxCoeff(),
                                  cv.dist.maxCoeff()})).epsilon(1e-15));
  CHECK(cv.total() == cv.comm.size() + cv.sense.size() + cv.dist.size());
}

TEST_CASE("soft hinge: branch values, bounds, monotonicity") {
  CHECK(lq_penalty(-1.0, 0.5) == 0.0);
  CHECK(lq_penalty(0.25, 0.5) == doctest::Approx(0.0625).epsilon(1e-15));
  CHECK(lq_penalty(2.0, 0.5) == doctest::Approx(1.75).epsilon(1e-15));
  CHECK_THROWS_AS((void)lq_penalty(0.3, 0.0), std::invalid_argument);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> xs(-3.0, 3.0);
  for (double u : {1.0, 0.5, 0.1}) {
    double prev = -1.0;
    for (double x = -2.0; x <= 2.0; x += 0.01) {
      const double p = lq_penalty(x, u);
      CHECK(p >= 0.0);
      CHECK(std::abs(p - std::max(0.0, x)) <= u / 2 + 1e-15);
      CHECK(p >= prev - 1e-15);
      prev = p;
    }
    for (int i = 0; i < 100; ++i) {
      const double x = xs(rng);
      CHECK(std::abs(lq_penalty(x, u) - std::max(0.0, x)) <= u / 2 + 1e-15);
    }
  }
}

TEST_CASE("penalised objective: zero penalty at feasible points and at rho=0") {
  ScenarioConfig cfg = ScenarioConfig::desk();
  cfg.gamma_bps = Eigen::VectorXd::Constant(1, 1e-9);
  cfg.chi_dB = Eigen::VectorXd::Constant(1, -180.0);
  const Scenario sc = generate_scenario(cfg, 9);

  // Spread-out centres plus a large beamformer satisfy the tiny thresholds.
  ProductPoint X = testutil::random_point_for(sc, 10);
  X.u_raw = prmo::init_positions(sc.n_ctrl(), sc.A, min_center_distance(sc.a, sc.lambda));
  X.W *= 10.0;

  const ConstraintValues cv = constraint_values(sc, X);
  REQUIRE(cv.max_violation() <= 0.0);

  const Evaluation at_feasible = smoothed_objective(sc, X, PenaltyParams{5.0, 0.5});
  CHECK(at_feasible.g == doctest::Approx(X.W.squaredNorm()).epsilon(1e-12));
  CHECK(at_feasible.power == doctest::Approx(X.W.squaredNorm()).epsilon(1e-12));

  const Scenario tight = testutil::desk_scenario(12);
  const ProductPoint Y = testutil::random_point_for(tight, 13);
  const Evaluation no_rho = smoothed_objective(tight, Y, PenaltyParams{0.0, 1.0});
  CHECK(no_rho.g == doctest::Approx(Y.W.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("penalised objective: stays within the soft-hinge gap of the exact penalty") {
  for (uint64_t seed = 20; seed < 26; ++seed) {
    const Scenario sc = testutil::desk_scenario(seed);
    const ProductPoint X = testutil::random_point_for(sc, seed + 1);
    const double rho = 2.0, u = 0.3;
    const Evaluation ev = smoothed_objective(sc, X, PenaltyParams{rho, u});

    const ConstraintValues cv = constraint_values(sc, X);
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < cv.comm.size(); ++i) hinge += std::max(0.0, cv.comm[i]);
    for (Eigen::Index i = 0; i < cv.sense.size(); ++i) hinge += std::max(0.0, cv.sense[i]);
    for (Eigen::Index i = 0; i < cv.dist.size(); ++i) hinge += std::max(0.0, cv.dist[i]);
    const double exact = X.W.squaredNorm() + rho * hinge;

    CHECK(std::abs(ev.g - exact) <= rho * static_cast<double>(cv.total()) * u / 2 + 1e-12);
    CHECK(ev.max_violation == doctest::Approx(cv.max_violation()).epsilon(1e-12));
  }
}
