#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>

#include "zoh/parallel.hpp"
#include "zoh/problems.hpp"
#include "zoh/smoothing.hpp"

using namespace zoh;

namespace {

class LinearObjective final : public Objective {
 public:
  explicit LinearObjective(Vec c) : c_(std::move(c)) {}
  int dim() const override { return static_cast<int>(c_.size()); }
  double eval(const Vec& x) const override { return c_.dot(x); }
  bool has_grad() const override { return true; }
  Vec grad(const Vec&) const override { return c_; }
  HolderClass holder() const override { return {1.0, 1e-12}; }
  double f_star_lower() const override { return -1e9; }

 private:
  Vec c_;
};

std::shared_ptr<const Objective> unit_quadratic(int n) {
  return std::make_shared<QuadraticObjective>(Vec::Ones(n));
}

}  // namespace

TEST_CASE("g_mu matches its closed form on the unit quadratic") {
  const int n = 3;
  auto space = std::make_shared<const NormSpace>(n);
  NoisyOracle oracle(unit_quadratic(n), nullptr, 0.0);
  Vec x(n), u(n);
  x << 1.0, -2.0, 0.5;
  u << 0.3, 0.7, -1.1;
  const double mu = 0.05;
  // (f(x+mu u) - f(x))/mu = <x,u> + mu ||u||^2 / 2, and B = I.
  const Vec expected = (x.dot(u) + 0.5 * mu * u.squaredNorm()) * u;
  CHECK((g_mu(oracle, *space, x, u, mu) - expected).norm() < 1e-12);
  CHECK(g_mu(oracle, *space, x, Vec::Zero(n), mu).norm() == 0.0);
  CHECK_THROWS_AS(g_mu(oracle, *space, x, u, 0.0), UsageError);
}

TEST_CASE("estimate_f_mu recovers f + n mu^2 / 2 on the unit quadratic") {
  const int n = 4;
  auto space = std::make_shared<const NormSpace>(n);
  NoisyOracle oracle(unit_quadratic(n), nullptr, 0.0);
  GaussianSampler smp(space, 91);
  Vec x = Vec::Constant(n, 0.8);
  const double mu = 0.3;
  const ScalarStat st = estimate_f_mu(oracle, smp, x, mu, 50000);
  CHECK(st.samples == 53248);  // rounded up to whole chunks
  CHECK(st.se > 0.0);
  const double truth = 0.5 * x.squaredNorm() + 0.5 * n * mu * mu;
  CHECK(std::abs(st.value - truth) < 4.0 * st.se);
  CHECK(oracle.calls() == st.samples);
}

TEST_CASE("gradient estimator is exact for linear objectives under the control variate") {
  const int n = 5;
  Vec c(n);
  c << 2.0, -1.0, 0.5, 3.0, -0.25;
  auto obj = std::make_shared<LinearObjective>(c);
  auto space = std::make_shared<const NormSpace>(n);
  NoisyOracle oracle(obj, nullptr, 0.0);
  GaussianSampler smp(space, 12);
  const Vec x = Vec::Zero(n);

  const VectorStat plain = estimate_grad_f_mu(oracle, smp, x, 0.1, 40000);
  CHECK((plain.mean - c).norm() < 0.2);  // consistent, just noisy

  // coef - <c, u> vanishes sample-by-sample up to rounding ((mu * t) / mu is
  // not exactly t), so the gap estimate sits at ulp scale, orders below noise.
  const VectorStat gap = estimate_grad_f_mu(oracle, smp, x, 0.1, 40000, true, &c);
  CHECK(gap.mean.norm() <= 1e-13);
  CHECK(gap.sq_norm <= 1e-26);
  CHECK(gap.sq_norm_se <= 1e-26);

  // Same cancellation with add-back: every sample equals c.
  const VectorStat back = estimate_grad_f_mu(oracle, smp, x, 0.1, 40000, true, &c, true);
  CHECK((back.mean - c).norm() < 1e-14);
  CHECK(back.sq_norm == Catch::Approx(c.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("linear-objective cancellation also holds in a non-Euclidean space") {
  Mat b = Mat::Zero(2, 2);
  b(0, 0) = 4.0;
  b(1, 1) = 1.0;
  auto space = std::make_shared<const NormSpace>(b);
  Vec c(2);
  c << 1.0, 2.0;
  NoisyOracle oracle(std::make_shared<LinearObjective>(c), nullptr, 0.0);
  GaussianSampler smp(space, 77);
  const VectorStat gap =
      estimate_grad_f_mu(oracle, smp, Vec::Zero(2), 0.2, 20000, true, &c);
  CHECK(gap.sq_norm <= 1e-26);
  const VectorStat plain = estimate_grad_f_mu(oracle, smp, Vec::Zero(2), 0.2, 200000);
  CHECK((plain.mean - c).norm() < 0.1);  // E[<c,u> B u] = c for any SPD B
}

TEST_CASE("gradient estimator call accounting and caching") {
  const int n = 4;
  auto space = std::make_shared<const NormSpace>(n);
  NoisyOracle oracle(unit_quadratic(n), nullptr, 0.0);
  GaussianSampler smp(space, 5);
  const Vec x = Vec::Ones(n);

  oracle.reset_calls();
  const VectorStat a = estimate_grad_f_mu(oracle, smp, x, 0.1, 4096, true);
  CHECK(oracle.calls() == 4096 + 1);
  oracle.reset_calls();
  const VectorStat b = estimate_grad_f_mu(oracle, smp, x, 0.1, 4096, false);
  CHECK(oracle.calls() == 2 * 4096);
  // The deterministic oracle makes both modes bitwise identical.  A single
  // 4096-sample chunk cannot support the between-chunk estimate, so sq_norm
  // is NaN in both modes by contract.
  CHECK(std::isnan(a.sq_norm));
  CHECK(((a.sq_norm == b.sq_norm) || (std::isnan(a.sq_norm) && std::isnan(b.sq_norm))));
  CHECK(a.mean == b.mean);
}

TEST_CASE("smoothed gradient of the unit quadratic is the gradient itself") {
  const int n = 6;
  auto space = std::make_shared<const NormSpace>(n);
  NoisyOracle oracle(unit_quadratic(n), nullptr, 0.0);
  GaussianSampler smp(space, 314);
  Vec x(n);
  x << 1, -1, 2, 0.5, -0.25, 3;
  const Vec g = x;  // grad f = x, and grad f_mu = grad f for quadratics
  const VectorStat gap = estimate_grad_f_mu(oracle, smp, x, 0.2, 100000, true, &g);
  REQUIRE(std::isfinite(gap.sq_norm_se));
  CHECK(std::abs(gap.sq_norm) <= 4.0 * gap.sq_norm_se + 1e-12);
  const VectorStat val = estimate_grad_f_mu(oracle, smp, x, 0.2, 100000, true, &g, true);
  CHECK(std::abs(val.sq_norm - x.squaredNorm()) < 4.0 * val.sq_norm_se);
  CHECK(val.sq_norm_se < 0.01 * x.squaredNorm());  // the control variate bites
}

TEST_CASE("delta gap estimator is exactly zero at delta = 0 and bounded otherwise") {
  const int n = 4;
  auto obj = unit_quadratic(n);
  auto space = std::make_shared<const NormSpace>(n);
  const Vec x = Vec::Ones(n);
  const double mu = 0.1;

  NoisyOracle clean(obj, nullptr, 0.0);
  NoisyOracle same(obj, make_noise("uniform", 3), 0.0);  // delta = 0 disables noise
  GaussianSampler s1(space, 9);
  const VectorStat zero = estimate_grad_delta_gap(same, clean, s1, x, mu, 20000);
  CHECK(zero.mean.norm() == 0.0);
  CHECK(zero.sq_norm == 0.0);
  CHECK(zero.sq_norm_se == 0.0);

  const double delta = 1e-4;
  NoisyOracle noisy(obj, make_noise("uniform", 3), delta);
  GaussianSampler s2(space, 9);
  const VectorStat gap = estimate_grad_delta_gap(noisy, clean, s2, x, mu, 50000);
  const double bound = delta / mu * std::sqrt(static_cast<double>(n));
  CHECK(gap.sq_norm <= bound * bound + 3.0 * gap.sq_norm_se);
  CHECK(clean.calls() > 0);
}

TEST_CASE("second moment estimator agrees with a direct identity") {
  // For f(x) = <c, x>: E||g_mu||^2 = E[<c,u>^2 ||u||^2] = (n+2) ||c||^2.
  const int n = 8;
  Vec c = Vec::Zero(n);
  c[0] = 1.5;
  c[3] = -2.0;
  auto space = std::make_shared<const NormSpace>(n);
  NoisyOracle oracle(std::make_shared<LinearObjective>(c), nullptr, 0.0);
  GaussianSampler smp(space, 2718);
  const ScalarStat st = estimate_second_moment(oracle, smp, Vec::Zero(n), 1e-3, 400000);
  const double truth = (n + 2.0) * c.squaredNorm();
  CHECK(std::abs(st.value - truth) < 4.0 * st.se);
  CHECK(st.se < 0.02 * truth);
}

TEST_CASE("mc_scalar measures direction moments") {
  const int n = 8;
  auto space = std::make_shared<const NormSpace>(n);
  GaussianSampler smp(space, 555);
  const ScalarStat sq = mc_scalar(smp, 200000, [](const Vec&, double norm) {
    return norm * norm;
  });
  CHECK(sq.value == Catch::Approx(static_cast<double>(n)).epsilon(0.01));
  CHECK_THROWS_AS(mc_scalar(smp, 0, [](const Vec&, double) { return 0.0; }), UsageError);
}

TEST_CASE("estimates are bit-identical for any thread count") {
  const int n = 4;
  auto space = std::make_shared<const NormSpace>(n);
  NoisyOracle oracle(unit_quadratic(n), nullptr, 0.0);
  GaussianSampler smp(space, 4242);
  const Vec x = Vec::Ones(n);

  set_threads(1);
  const VectorStat a = estimate_grad_f_mu(oracle, smp, x, 0.1, 30000);
  const ScalarStat fa = estimate_f_mu(oracle, smp, x, 0.1, 30000);
  set_threads(4);
  const VectorStat b = estimate_grad_f_mu(oracle, smp, x, 0.1, 30000);
  const ScalarStat fb = estimate_f_mu(oracle, smp, x, 0.1, 30000);
  set_threads(0);  // back to default
  CHECK(a.mean == b.mean);
  CHECK(a.sq_norm == b.sq_norm);
  CHECK(a.sq_norm_se == b.sq_norm_se);
  CHECK(fa.value == fb.value);
  CHECK(fa.se == fb.se);
}
