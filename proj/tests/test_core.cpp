#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "zoh/core.hpp"
#include "zoh/problems.hpp"
#include "zoh/rng.hpp"

using namespace zoh;

namespace {

Mat random_spd(int n, std::uint64_t seed) {
  CounterRng rng(seed);
  Mat a(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; j += 2) {
      double z0, z1;
      rng.normal_pair(i, k++, z0, z1);
      a(i, j) = z0;
      if (j + 1 < n) a(i, j + 1) = z1;
    }
  return Mat(a.transpose() * a) + 0.1 * Mat::Identity(n, n);
}

class HalfLine final : public Objective {
 public:
  int dim() const override { return 1; }
  double eval(const Vec& x) const override { return x[0] > 0 ? 1.0 / x[0] : 1.0 / 0.0; }
  HolderClass holder() const override { return {1.0, 1.0}; }
  double f_star_lower() const override { return 0.0; }
};

}  // namespace

TEST_CASE("identity norms match the Euclidean ones") {
  NormSpace s(2);
  Vec x(2);
  x << 3.0, 4.0;
  CHECK(s.norm_primal(x) == Catch::Approx(5.0));
  CHECK(s.norm_dual(x) == Catch::Approx(5.0));
  CHECK(s.is_identity());
  CHECK(s.apply_b(x) == x);
  CHECK(s.apply_b_inv(x) == x);
}

TEST_CASE("diagonal B scales primal up and dual down") {
  Mat b = Mat::Zero(2, 2);
  b(0, 0) = 4.0;
  b(1, 1) = 1.0;
  NormSpace s(b);
  Vec e0(2);
  e0 << 1.0, 0.0;
  CHECK(s.norm_primal(e0) == Catch::Approx(2.0));
  CHECK(s.norm_dual(e0) == Catch::Approx(0.5));
}

TEST_CASE("primal and dual norms are mutually consistent on random SPD spaces") {
  CounterRng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + trial % 5;
    NormSpace s(random_spd(n, 1000 + trial));
    Vec x(n), g(n);
    for (int i = 0; i < n; ++i) {
      double z0, z1;
      rng.normal_pair(trial, 2 * i, z0, z1);
      x[i] = z0;
      g[i] = z1;
    }
    // Definitions.
    CHECK(s.norm_primal(x) ==
          Catch::Approx(std::sqrt(x.dot(s.apply_b(x)))).epsilon(1e-12));
    CHECK(s.norm_dual(g) ==
          Catch::Approx(std::sqrt(g.dot(s.apply_b_inv(g)))).epsilon(1e-12));
    // apply_b / apply_b_inv invert each other.
    CHECK((s.apply_b_inv(s.apply_b(x)) - x).norm() < 1e-10 * (1.0 + x.norm()));
    // Cauchy-Schwarz for the dual pairing.
    CHECK(g.dot(x) <= s.norm_dual(g) * s.norm_primal(x) + 1e-10);
    // Dual norm is achieved by x = B^{-1} g.
    const Vec xs = s.apply_b_inv(g);
    CHECK(g.dot(xs) == Catch::Approx(s.norm_dual(g) * s.norm_primal(xs)).epsilon(1e-10));
  }
}

TEST_CASE("whitening preserves the norm identity") {
  NormSpace s(random_spd(5, 7));
  CounterRng rng(8);
  Vec z(5), u(5);
  for (int i = 0; i < 5; ++i) {
    double a, b;
    rng.normal_pair(0, i, a, b);
    z[i] = a;
  }
  s.whiten_into(z, u);
  CHECK(s.norm_primal(u) == Catch::Approx(z.norm()).epsilon(1e-12));
}

TEST_CASE("norm space rejects bad B") {
  Mat asym(2, 2);
  asym << 1.0, 0.5, -0.5, 1.0;
  CHECK_THROWS_AS(NormSpace(asym), UsageError);
  Mat indef(2, 2);
  indef << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(NormSpace(indef), UsageError);
  CHECK_THROWS_AS(NormSpace(0), UsageError);
}

TEST_CASE("sampler draws have covariance B^{-1}") {
  Mat b = Mat::Zero(2, 2);
  b(0, 0) = 4.0;
  b(1, 1) = 1.0;
  auto space = std::make_shared<const NormSpace>(b);
  GaussianSampler smp(space, 2024);
  const int m = 1000000;
  double m0 = 0, m1 = 0, v0 = 0, v1 = 0, cov = 0;
  Vec u(2), scratch;
  for (int i = 0; i < m; ++i) {
    smp.draw_at(i, u, nullptr, &scratch);
    m0 += u[0];
    m1 += u[1];
    v0 += u[0] * u[0];
    v1 += u[1] * u[1];
    cov += u[0] * u[1];
  }
  m0 /= m;
  m1 /= m;
  CHECK(std::abs(m0) < 4.0 * 0.5 / std::sqrt(double(m)));
  CHECK(std::abs(m1) < 4.0 / std::sqrt(double(m)));
  CHECK(v0 / m - m0 * m0 == Catch::Approx(0.25).epsilon(0.02));
  CHECK(v1 / m - m1 * m1 == Catch::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(cov / m) < 0.01);
}

TEST_CASE("identity sampler coordinates are standard normal") {
  auto space = std::make_shared<const NormSpace>(4);
  GaussianSampler smp(space, 555);
  const int m = 1000000;
  Vec sum = Vec::Zero(4), sq = Vec::Zero(4);
  Vec u(4), scratch;
  for (int i = 0; i < m; ++i) {
    double norm = 0.0;
    smp.draw_at(i, u, &norm, &scratch);
    CHECK(norm == Catch::Approx(u.norm()).epsilon(1e-12));
    sum += u;
    sq += u.cwiseProduct(u);
  }
  for (int j = 0; j < 4; ++j) {
    CHECK(std::abs(sum[j] / m) < 4.0 / std::sqrt(double(m)));
    CHECK(sq[j] / m == Catch::Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("sampler is a pure function of (seed, index)") {
  auto space = std::make_shared<const NormSpace>(3);
  GaussianSampler a(space, 11), b(space, 11), c(space, 12);
  const Vec u1 = a.draw_at(1000);
  (void)a.draw_at(5);
  CHECK(a.draw_at(1000) == u1);  // bitwise, regardless of access order
  CHECK(b.draw_at(1000) == u1);
  CHECK(c.draw_at(1000) != u1);
  CHECK(a.draw_at(1001) != u1);
}

TEST_CASE("oracle respects the deviation band and counts calls") {
  struct Sphere final : Objective {
    int dim() const override { return 3; }
    double eval(const Vec& x) const override { return 0.5 * x.squaredNorm(); }
    HolderClass holder() const override { return {1.0, 1.0}; }
    double f_star_lower() const override { return 0.0; }
  };
  auto obj = std::make_shared<Sphere>();
  const double delta = 0.01;
  for (const char* kind : {"uniform", "deterministic_sine", "adversarial_sign"}) {
    NoisyOracle oracle(obj, make_noise(kind, 3), delta);
    CounterRng rng(17);
    double max_dev = 0.0;
    for (int i = 0; i < 2000; ++i) {
      Vec x(3);
      for (int j = 0; j < 3; ++j) {
        double a, b;
        rng.normal_pair(i, j, a, b);
        x[j] = 3.0 * a;
      }
      const double fx = obj->eval(x);
      const double dev = std::abs(oracle.query(x) - fx);
      // f + d is rounded at the scale of f, so allow an ulp-sized excess.
      REQUIRE(dev <= delta + 1e-13 * std::max(1.0, std::abs(fx)));
      max_dev = std::max(max_dev, dev);
      // Deterministic: same point, same value.
      REQUIRE(oracle.query(x) == oracle.query(x));
    }
    CHECK(max_dev > 0.0);  // the models actually perturb
  }
  NoisyOracle clean(obj, std::make_shared<NoNoise>(), 0.0);
  clean.reset_calls();
  Vec x = Vec::Ones(3);
  (void)clean.query(x);
  (void)clean.query(x);
  CHECK(clean.calls() == 2);
  CHECK(clean.query(x) == obj->eval(x));
}

TEST_CASE("oracle raises EvalError on non-finite values") {
  auto obj = std::make_shared<HalfLine>();
  NoisyOracle oracle(obj, std::make_shared<NoNoise>(), 0.0);
  Vec bad(1);
  bad << 0.0;
  CHECK_THROWS_AS(oracle.query(bad), EvalError);
  try {
    oracle.query(bad);
  } catch (const EvalError& e) {
    CHECK(e.at()[0] == 0.0);
  }
}

TEST_CASE("holder class validates its parameters") {
  CHECK_THROWS_AS(HolderClass(1.5, 1.0), UsageError);
  CHECK_THROWS_AS(HolderClass(-0.1, 1.0), UsageError);
  CHECK_THROWS_AS(HolderClass(0.5, -1.0), UsageError);
  const HolderClass h(0.5, 2.0);
  CHECK(h.nu == 0.5);
  CHECK(h.L == 2.0);
}
