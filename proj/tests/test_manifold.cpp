#include "doctest.h"

#include "prmo/manifold.hpp"
#include "test_util.hpp"

using namespace prmo;
using testutil::flatten_tangent;

namespace {

ProductPoint sample_point(uint64_t seed, int M = 3, int K_c = 2, int K_t = 2, int N = 6,
                          int n_ctrl = 6) {
  std::mt19937_64 rng(seed);
  return random_point(M, K_c, K_t, N, n_ctrl, rng);
}

}  // namespace

TEST_CASE("metric: zero tangent gives zero inner product") {
  const ProductPoint X = sample_point(1);
  const TangentVector z = zero_like(X);
  const TangentVector t = testutil::random_tangent_at(X, 2);
  CHECK(inner(t, z) == 0.0);
  CHECK(inner(z, t) == 0.0);
  CHECK(norm(z) == 0.0);
}

TEST_CASE("metric: position-only vector has plain Euclidean norm") {
  const ProductPoint X = sample_point(3);
  TangentVector t = zero_like(X);
  t.u_raw[0] = 3.0;
  t.u_raw[1] = 4.0;
  CHECK(inner(t, t) == doctest::Approx(25.0).epsilon(1e-15));
  CHECK(norm(t) == doctest::Approx(5.0).epsilon(1e-15));
}

TEST_CASE("metric: equals the dot product of flattened real coordinates") {
  const ProductPoint X = sample_point(4);
  for (uint64_t s = 0; s < 20; ++s) {
    std::mt19937_64 rng(100 + s);
    const TangentVector a = random_ambient(X, rng);
    const TangentVector b = random_ambient(X, rng);
    const double direct = inner(a, b);
    const double flat = flatten_tangent(a).dot(flatten_tangent(b));
    CHECK(direct == doctest::Approx(flat).epsilon(1e-12));
    CHECK(inner(a, b) == doctest::Approx(inner(b, a)).epsilon(1e-14));
  }
}

TEST_CASE("metric: bilinear over real scalars") {
  const ProductPoint X = sample_point(5);
  std::mt19937_64 rng(6);
  const TangentVector a = random_ambient(X, rng);
  const TangentVector b = random_ambient(X, rng);
  const TangentVector c = random_ambient(X, rng);
  const TangentVector combo = add_scaled(a, 2.5, b);  // a + 2.5 b
  CHECK(inner(combo, c) ==
        doctest::Approx(inner(a, c) + 2.5 * inner(b, c)).epsilon(1e-12));
}

TEST_CASE("projection: tangent input passes through unchanged") {
  const ProductPoint X = sample_point(7);
  const TangentVector t = testutil::random_tangent_at(X, 8);
  const TangentVector again = project_tangent(X, t);
  CHECK(norm(add_scaled(again, -1.0, t)) <= 1e-12 * std::max(1.0, norm(t)));
}

TEST_CASE("projection: radial reflection component is removed") {
  const ProductPoint X = sample_point(9);
  TangentVector e = zero_like(X);
  e.phi = X.phi;  // points straight along the unit-modulus circle radius
  const TangentVector t = project_tangent(X, e);
  CHECK(t.phi.norm() <= 1e-12);
}

TEST_CASE("projection: idempotent, norm-nonincreasing, tangent output") {
  const ProductPoint X = sample_point(10);
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const TangentVector e = random_ambient(X, rng);
    const TangentVector once = project_tangent(X, e);
    const TangentVector twice = project_tangent(X, once);
    CHECK(norm(add_scaled(twice, -1.0, once)) <= 1e-12 * std::max(1.0, norm(once)));
    CHECK(norm(once) <= norm(e) + 1e-12);
    CHECK(in_tangent_space(X, once, 1e-10));
  }
}

TEST_CASE("retraction: zero step and zero direction are identities") {
  const ProductPoint X = sample_point(12);
  const TangentVector d = testutil::random_tangent_at(X, 13);

  const ProductPoint at_zero = retract(X, d, 0.0);
  CHECK(displacement(at_zero, X) <= 1e-14);

  const ProductPoint along_zero = retract(X, zero_like(X), 0.7);
  CHECK(displacement(along_zero, X) <= 1e-14);
}

TEST_CASE("retraction: output satisfies all point constraints") {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> step(0.0, 1.0);
  const ProductPoint X = sample_point(15);
  for (int trial = 0; trial < 200; ++trial) {
    const TangentVector d = project_tangent(X, random_ambient(X, rng));
    const ProductPoint Y = retract(X, d, step(rng));
    REQUIRE(on_manifold(Y, 1e-12));
  }
}

TEST_CASE("retraction: degenerate normalisation is an error, not a fallback") {
  const ProductPoint X = sample_point(16);
  TangentVector d = zero_like(X);
  d.phi[0] = -X.phi[0];  // phi[0] + 1.0 * d.phi[0] = 0: modulus collapses
  CHECK_THROWS_AS((void)retract(X, d, 1.0), DegenerateRetraction);
}

TEST_CASE("retraction: first order agreement with the ambient step") {
  // || R_X(a d) - (X + a d) || must shrink like a^2 (quartic in the squared
  // deviation) as the step is halved.
  const ProductPoint X = sample_point(17);
  const TangentVector d = testutil::random_tangent_at(X, 18);

  auto deviation = [&](double alpha) {
    const ProductPoint R = retract(X, d, alpha);
    double sq = (R.W - (X.W + alpha * d.W)).squaredNorm();
    sq += (R.V - (X.V + alpha * d.V)).squaredNorm();
    sq += (R.phi - (X.phi + alpha * d.phi)).squaredNorm();
    sq += (R.u_raw - (X.u_raw + alpha * d.u_raw)).squaredNorm();
    return sq;
  };

  const double big = deviation(0.1);
  const double small = deviation(0.05);
  CHECK(big > 0.0);
  // Exact quartic scaling would give a ratio of 16; allow generous slack for
  // higher-order terms at the finite base step.
  CHECK(big / small >= 10.0);
  CHECK(big / small <= 22.0);
}

TEST_CASE("transport: already-tangent vectors and zeros are fixed points") {
  const ProductPoint X = sample_point(19);
  const ProductPoint Y = sample_point(20);

  const TangentVector ty = testutil::random_tangent_at(Y, 21);
  const TangentVector moved = transport(Y, ty);
  CHECK(norm(add_scaled(moved, -1.0, ty)) <= 1e-12 * std::max(1.0, norm(ty)));

  const TangentVector z = transport(Y, zero_like(X));
  CHECK(norm(z) == 0.0);
}

TEST_CASE("transport: idempotent and tangent at the target") {
  const ProductPoint X = sample_point(22);
  const ProductPoint Y = sample_point(23);
  const TangentVector tx = testutil::random_tangent_at(X, 24);

  const TangentVector once = transport(Y, tx);
  const TangentVector twice = transport(Y, once);
  CHECK(in_tangent_space(Y, once, 1e-10));
  CHECK(norm(add_scaled(twice, -1.0, once)) <= 1e-12 * std::max(1.0, norm(once)));
}

TEST_CASE("bulk invariant sweep over random draws") {
  std::mt19937_64 rng(25);
  std::uniform_real_distribution<double> step(0.0, 1.0);
  for (int trial = 0; trial < 250; ++trial) {
    const ProductPoint X = random_point(2, 1, 1, 4, 4, rng);
    REQUIRE(on_manifold(X, 1e-10));
    const TangentVector d = project_tangent(X, random_ambient(X, rng));
    REQUIRE(in_tangent_space(X, d, 1e-10));
    const ProductPoint Y = retract(X, d, step(rng));
    REQUIRE(on_manifold(Y, 1e-10));
    const TangentVector moved = transport(Y, d);
    REQUIRE(in_tangent_space(Y, moved, 1e-10));
  }
}
