#pragma once

// Empirical verification of every closed-form inequality in bounds.hpp.
// Each check Monte-Carlo-estimates the left-hand side (with common random
// numbers across paired estimators, and control variates where an analytic
// gradient is available) and compares it against the bound with a
// slack * standard-error allowance.  A check whose standard error exceeds
// 10% of the bound is reported inconclusive rather than failed.
//
// Squared-norm inequalities are tested on the squared scale (norm <= bound
// is equivalent to norm^2 <= bound^2 for nonnegative bounds); such report
// names carry a _sq suffix and their lhs may be slightly negative because
// the squared-norm estimator is exactly unbiased rather than clamped.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include "zoh/bounds.hpp"
#include "zoh/core.hpp"
#include "zoh/parallel.hpp"
#include "zoh/problems.hpp"
#include "zoh/rng.hpp"
#include "zoh/smoothing.hpp"

namespace zoh {

struct VerifySpec {
  TestProblem problem;
  std::vector<Vec> points;                              // default: x0 + 10 in a radius-5 ball
  std::vector<double> mus = {0.5, 0.1, 0.01};
  std::vector<double> delta_fractions = {0.0, 0.5, 1.0};  // times delta_max(T2, mu)
  std::vector<double> deltas_absolute;                    // non-empty: used instead
  std::vector<std::string> noises = {"uniform", "deterministic_sine", "adversarial_sign"};
  std::vector<double> displacements = {0.01, 0.1, 1.0};
  std::uint64_t mc_samples = 100000;
  int seeds = 3;
  double slack = 3.0;
  std::uint64_t seed = 1;
  double debug_rhs_scale = 1.0;  // self-test hook: scales every bound
};

inline VerifySpec make_verify_spec(const TestProblem& problem, std::uint64_t seed = 1) {
  VerifySpec s;
  s.problem = problem;
  s.seed = seed;
  const int n = problem.objective->dim();
  CounterRng rng(derive_seed(seed, 0x706f696e7473ULL));
  s.points.push_back(problem.x0);
  Vec z(n);
  for (int p = 0; p < 10; ++p) {
    for (int j = 0; j < n; j += 2) {
      double a = 0.0, b = 0.0;
      rng.normal_pair(p, j / 2, a, b);
      z[j] = a;
      if (j + 1 < n) z[j + 1] = b;
    }
    double u0 = 0.0, u1 = 0.0;
    rng.uniform_pair(p, 1u << 20, u0, u1);
    const double r = 5.0 * std::pow(u0, 1.0 / n);
    s.points.push_back(problem.x0 + (r / problem.space->norm_primal(z)) * z);
  }
  return s;
}

namespace detail {

inline std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

inline std::uint64_t sub_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                              std::uint64_t c = 0, std::uint64_t d = 0) {
  return derive_seed(derive_seed(derive_seed(derive_seed(base, a), b), c), d);
}

inline BoundReport make_report(std::string name, double lhs, double rhs_raw, double se,
                               const VerifySpec& spec, std::string note = "") {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs_raw * spec.debug_rhs_scale;
  r.se = se;
  r.slack = spec.slack * se;
  r.margin = r.rhs - lhs;
  r.satisfied = lhs <= r.rhs + r.slack;
  r.inconclusive = se > 0.10 * r.rhs;
  r.note = std::move(note);
  return r;
}

inline std::vector<double> resolve_deltas(const VerifySpec& spec, double mu) {
  if (!spec.deltas_absolute.empty()) return spec.deltas_absolute;
  const double cap = delta_max(Theorem::T2, mu, spec.problem.objective->dim(),
                               spec.problem.objective->holder().nu);
  std::vector<double> out;
  out.reserve(spec.delta_fractions.size());
  for (double f : spec.delta_fractions) out.push_back(f * cap);
  return out;
}

// Chunk-parallel scalar MC over oracle queries; per_sample gets the draw, its
// primal norm, and two chunk-local scratch vectors for forming query points.
template <class Fn>
ScalarStat mc_scalar_point(const GaussianSampler& sampler, std::uint64_t samples,
                           Fn per_sample) {
  const std::uint64_t chunks =
      (std::max<std::uint64_t>(samples, 1) + kMcChunk - 1) / kMcChunk;
  struct Acc {
    double sum = 0.0, sum_sq = 0.0;
  };
  std::vector<Acc> parts(chunks);
  parallel_for(chunks, [&](std::uint64_t c) {
    Vec u(sampler.space().dim()), scratch, w1, w2;
    Acc a;
    for (std::uint64_t i = 0; i < kMcChunk; ++i) {
      double norm = 0.0;
      sampler.draw_at(c * kMcChunk + i, u, &norm, &scratch);
      const double v = per_sample(static_cast<const Vec&>(u), norm, w1, w2);
      a.sum += v;
      a.sum_sq += v * v;
    }
    parts[c] = a;
  });
  double sum = 0.0, sum_sq = 0.0;
  for (const Acc& a : parts) {
    sum += a.sum;
    sum_sq += a.sum_sq;
  }
  const double m = static_cast<double>(chunks * kMcChunk);
  ScalarStat s;
  s.samples = chunks * kMcChunk;
  s.value = sum / m;
  const double var = std::max(0.0, (sum_sq - m * s.value * s.value) / (m - 1.0));
  s.se = std::sqrt(var / m);
  return s;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Gradient gaps: noisy-vs-smooth, smooth-vs-true, noisy-vs-true, each against
// grad_gap_bounds.  The noisy-vs-smooth gap is measured with a per-sample
// paired difference under shared directions, so at delta = 0 it is exactly 0.
inline std::vector<BoundReport> check_lemma_2_1(const VerifySpec& spec) {
  const Objective& obj = *spec.problem.objective;
  if (!obj.has_grad()) throw UsageError("check_lemma_2_1: analytic gradient required");
  const HolderClass holder = obj.holder();
  const int n = obj.dim();
  const auto none = std::make_shared<NoNoise>();
  std::vector<BoundReport> out;

  for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
    const Vec& x = spec.points[pi];
    const Vec grad = obj.grad(x);
    for (std::size_t mi = 0; mi < spec.mus.size(); ++mi) {
      const double mu = spec.mus[mi];
      const auto deltas = detail::resolve_deltas(spec, mu);
      for (int s = 0; s < spec.seeds; ++s) {
        const std::uint64_t base = detail::sub_seed(spec.seed, 0x4c3231ULL, pi, mi, s);
        const NoisyOracle clean(spec.problem.objective, none, 0.0);
        const std::string loc = "[p=" + std::to_string(pi) + ",mu=" + detail::fmt_g(mu) +
                                ",seed=" + std::to_string(s) + "]";

        GaussianSampler smp(spec.problem.space, base);
        const VectorStat st2 =
            estimate_grad_f_mu(clean, smp, x, mu, spec.mc_samples, true, &grad);
        const GradGapBounds b0 = grad_gap_bounds(holder, mu, 0.0, n);
        out.push_back(detail::make_report("lemma_2_1.smooth_vs_true_sq" + loc, st2.sq_norm,
                                          b0.smooth_vs_true * b0.smooth_vs_true,
                                          st2.sq_norm_se, spec));

        for (std::size_t di = 0; di < deltas.size(); ++di) {
          const double delta = deltas[di];
          for (std::size_t ni = 0; ni < spec.noises.size(); ++ni) {
            if (delta == 0.0 && ni > 0) continue;  // all models coincide at delta = 0
            const NoisyOracle noisy(
                spec.problem.objective,
                make_noise(spec.noises[ni], derive_seed(base, 0xabcdULL + ni)), delta);
            const GradGapBounds b = grad_gap_bounds(holder, mu, delta, n);
            const std::string tag = "[p=" + std::to_string(pi) + ",mu=" + detail::fmt_g(mu) +
                                    ",delta=" + detail::fmt_g(delta) +
                                    ",noise=" + spec.noises[ni] + ",seed=" + std::to_string(s) +
                                    "]";
            GaussianSampler s1(spec.problem.space, base);
            const VectorStat st1 =
                estimate_grad_delta_gap(noisy, clean, s1, x, mu, spec.mc_samples);
            out.push_back(detail::make_report("lemma_2_1.noisy_vs_smooth_sq" + tag,
                                              st1.sq_norm,
                                              b.noisy_vs_smooth * b.noisy_vs_smooth,
                                              st1.sq_norm_se, spec));
            GaussianSampler s3(spec.problem.space, base);
            const VectorStat st3 =
                estimate_grad_f_mu(noisy, s3, x, mu, spec.mc_samples, true, &grad);
            out.push_back(detail::make_report("lemma_2_1.noisy_vs_true_sq" + tag,
                                              st3.sq_norm, b.noisy_vs_true * b.noisy_vs_true,
                                              st3.sq_norm_se, spec));
          }
        }
      }
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// Smoothed-function displacement inequality
//   |f_mu(y) - f_mu(x) - <grad f_mu(x), y - x>| <= A1/2 ||y-x||^2 + A2
// under the smooth branch and the direct branch at delta_hat in
// {1, (n+6)^((1+nu)/2)}.  The whole left-hand side is one scalar expectation,
// estimated over antithetic direction pairs (u, -u): the odd-in-u parts of
// both the displacement and the estimator coefficient cancel within a pair
// (exactly so for quadratics), so the standard error tracks the displacement
// rather than the function scale.
inline std::vector<BoundReport> check_lemma_2_2(const VerifySpec& spec) {
  const Objective& obj = *spec.problem.objective;
  const HolderClass holder = obj.holder();
  const int n = obj.dim();
  const NormSpace& space = *spec.problem.space;
  const NoisyOracle clean(spec.problem.objective, std::make_shared<NoNoise>(), 0.0);
  std::vector<BoundReport> out;

  const double dh_proof = std::pow(n + 6.0, 0.5 * (1.0 + holder.nu));
  for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
    const Vec& x = spec.points[pi];
    const double f_base = obj.eval(x);
    for (std::size_t mi = 0; mi < spec.mus.size(); ++mi) {
      const double mu = spec.mus[mi];
      for (std::size_t ri = 0; ri < spec.displacements.size(); ++ri) {
        const double r = spec.displacements[ri];
        for (int s = 0; s < spec.seeds; ++s) {
          const std::uint64_t base = detail::sub_seed(spec.seed, 0x4c3232ULL, pi, mi,
                                                      (ri << 8) | static_cast<unsigned>(s));
          // Unit-primal-norm direction from an auxiliary draw.
          GaussianSampler aux(spec.problem.space, derive_seed(base, 0x646972ULL));
          Vec v(n);
          double vnorm = 0.0;
          aux.draw_at(0, v, &vnorm);
          const Vec y = x + (r / vnorm) * v;
          const Vec diff = y - x;
          const Vec bd = space.is_identity() ? diff : space.apply_b(diff);

          GaussianSampler smp(spec.problem.space, base);
          const ScalarStat st = detail::mc_scalar_point(
              smp, std::max<std::uint64_t>(spec.mc_samples / 2, 1),
              [&](const Vec& u, double, Vec& w1, Vec& w2) {
                double acc = 0.0;
                for (double sgn : {1.0, -1.0}) {
                  w1 = x + (sgn * mu) * u;
                  w2 = y + (sgn * mu) * u;
                  const double fx = clean.query(w1);
                  acc += clean.query(w2) - fx -
                         ((fx - f_base) / mu) * (sgn * u.dot(bd));
                }
                return 0.5 * acc;
              });

          const std::string tag = "[p=" + std::to_string(pi) + ",mu=" + detail::fmt_g(mu) +
                                  ",r=" + detail::fmt_g(r) + ",seed=" + std::to_string(s) + "]";
          const APair sm = a_pair(ABranch::smooth, holder, mu, n);
          const APair d1 = a_pair(ABranch::direct, holder, mu, n, 1.0);
          const APair d2 = a_pair(ABranch::direct, holder, mu, n, dh_proof);
          const double lhs = std::abs(st.value);
          out.push_back(detail::make_report("lemma_2_2.smooth" + tag, lhs,
                                            0.5 * sm.A1 * r * r + sm.A2, st.se, spec));
          out.push_back(detail::make_report("lemma_2_2.direct_dh1" + tag, lhs,
                                            0.5 * d1.A1 * r * r + d1.A2, st.se, spec));
          out.push_back(detail::make_report("lemma_2_2.direct_dhn" + tag, lhs,
                                            0.5 * d2.A1 * r * r + d2.A2, st.se, spec));
        }
      }
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// |f_mu(x) - f(x)| <= func_gap_bound.  When an analytic gradient exists the
// odd term mu <grad f(x), u> is subtracted per sample as a control variate
// (zero mean), which keeps the standard error small at small mu.
inline std::vector<BoundReport> check_lemma_2_3(const VerifySpec& spec) {
  const Objective& obj = *spec.problem.objective;
  const HolderClass holder = obj.holder();
  const int n = obj.dim();
  const NoisyOracle clean(spec.problem.objective, std::make_shared<NoNoise>(), 0.0);
  std::vector<BoundReport> out;

  for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
    const Vec& x = spec.points[pi];
    const double f_base = obj.eval(x);
    const bool cv = obj.has_grad();
    const Vec grad = cv ? obj.grad(x) : Vec();
    for (std::size_t mi = 0; mi < spec.mus.size(); ++mi) {
      const double mu = spec.mus[mi];
      for (int s = 0; s < spec.seeds; ++s) {
        const std::uint64_t base = detail::sub_seed(spec.seed, 0x4c3233ULL, pi, mi, s);
        GaussianSampler smp(spec.problem.space, base);
        const ScalarStat st = detail::mc_scalar_point(
            smp, spec.mc_samples, [&](const Vec& u, double, Vec& w1, Vec&) {
              w1 = x + mu * u;
              double v = clean.query(w1) - f_base;
              if (cv) v -= mu * grad.dot(u);
              return v;
            });
        const std::string tag =
            "[p=" + std::to_string(pi) + ",mu=" + detail::fmt_g(mu) + ",seed=" +
            std::to_string(s) + "]";
        out.push_back(detail::make_report("lemma_2_3.func_gap" + tag, std::abs(st.value),
                                          func_gap_bound(holder, mu, n), st.se, spec));
      }
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// ||grad f(x)||^2 <= 2 ||grad f_mu(x)||^2 + 2 mu^(2nu) L^2 n^p.  The additive
// term's statement gives p = nu while its derivation carries p = 2nu; the
// pass/fail bound uses the larger of the two and the note records whether the
// smaller constant would also have sufficed.
inline std::vector<BoundReport> check_lemma_2_4(const VerifySpec& spec) {
  const Objective& obj = *spec.problem.objective;
  if (!obj.has_grad()) throw UsageError("check_lemma_2_4: analytic gradient required");
  const HolderClass holder = obj.holder();
  const int n = obj.dim();
  const NormSpace& space = *spec.problem.space;
  const NoisyOracle clean(spec.problem.objective, std::make_shared<NoNoise>(), 0.0);
  std::vector<BoundReport> out;

  for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
    const Vec& x = spec.points[pi];
    const Vec grad = obj.grad(x);
    const double lhs =
        space.is_identity() ? grad.squaredNorm() : grad.dot(space.apply_b_inv(grad));
    for (std::size_t mi = 0; mi < spec.mus.size(); ++mi) {
      const double mu = spec.mus[mi];
      for (int s = 0; s < spec.seeds; ++s) {
        const std::uint64_t base = detail::sub_seed(spec.seed, 0x4c3234ULL, pi, mi, s);
        GaussianSampler smp(spec.problem.space, base);
        const VectorStat st =
            estimate_grad_f_mu(clean, smp, x, mu, spec.mc_samples, true, &grad, true);
        const double q = std::max(0.0, st.sq_norm);
        const double add = 2.0 * std::pow(mu, 2.0 * holder.nu) * holder.L * holder.L;
        const double rhs_statement = 2.0 * q + add * std::pow(static_cast<double>(n), holder.nu);
        const double rhs_proof = 2.0 * q + add * std::pow(static_cast<double>(n), 2.0 * holder.nu);
        const double se = 2.0 * st.sq_norm_se;
        const std::string tag =
            "[p=" + std::to_string(pi) + ",mu=" + detail::fmt_g(mu) + ",seed=" +
            std::to_string(s) + "]";
        const bool statement_ok =
            lhs <= rhs_statement * spec.debug_rhs_scale + spec.slack * se;
        out.push_back(detail::make_report(
            "lemma_2_4.grad_transfer" + tag, lhs, std::max(rhs_statement, rhs_proof), se, spec,
            statement_ok ? "statement constant sufficed" : "needed larger derivation constant"));
      }
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// E ||g_mu||^2 <= second_moment_bound under both A-pair branches (direct at
// the proof's delta_hat = (n+6)^((1+nu)/2)).
inline std::vector<BoundReport> check_lemma_2_5(const VerifySpec& spec) {
  const Objective& obj = *spec.problem.objective;
  const HolderClass holder = obj.holder();
  const int n = obj.dim();
  const auto none = std::make_shared<NoNoise>();
  std::vector<BoundReport> out;
  const double dh_proof = std::pow(n + 6.0, 0.5 * (1.0 + holder.nu));

  for (std::size_t pi = 0; pi < spec.points.size(); ++pi) {
    const Vec& x = spec.points[pi];
    const bool cv = obj.has_grad();
    const Vec grad = cv ? obj.grad(x) : Vec();
    for (std::size_t mi = 0; mi < spec.mus.size(); ++mi) {
      const double mu = spec.mus[mi];
      const auto deltas = detail::resolve_deltas(spec, mu);
      for (int s = 0; s < spec.seeds; ++s) {
        const std::uint64_t base = detail::sub_seed(spec.seed, 0x4c3235ULL, pi, mi, s);
        const NoisyOracle clean(spec.problem.objective, none, 0.0);
        GaussianSampler gs(spec.problem.space, base);
        const VectorStat gv = estimate_grad_f_mu(clean, gs, x, mu, spec.mc_samples, true,
                                                 cv ? &grad : nullptr, cv);
        const double q = std::max(0.0, gv.sq_norm);
        const double rhs_se = 20.0 * (n + 4.0) * gv.sq_norm_se;

        for (std::size_t di = 0; di < deltas.size(); ++di) {
          const double delta = deltas[di];
          for (std::size_t ni = 0; ni < spec.noises.size(); ++ni) {
            if (delta == 0.0 && ni > 0) continue;
            const NoisyOracle noisy(
                spec.problem.objective,
                make_noise(spec.noises[ni], derive_seed(base, 0xabcdULL + ni)), delta);
            GaussianSampler smp(spec.problem.space, base);
            const ScalarStat lhs =
                estimate_second_moment(noisy, smp, x, mu, spec.mc_samples);
            const double se = std::sqrt(lhs.se * lhs.se + rhs_se * rhs_se);
            const std::string tag = "[p=" + std::to_string(pi) + ",mu=" + detail::fmt_g(mu) +
                                    ",delta=" + detail::fmt_g(delta) +
                                    ",noise=" + spec.noises[ni] + ",seed=" + std::to_string(s) +
                                    "]";
            const APair sm = a_pair(ABranch::smooth, holder, mu, n);
            const APair dr = a_pair(ABranch::direct, holder, mu, n, dh_proof);
            out.push_back(detail::make_report(
                "lemma_2_5.smooth" + tag, lhs.value,
                second_moment_bound(holder, mu, delta, n, sm, q), se, spec));
            out.push_back(detail::make_report(
                "lemma_2_5.direct" + tag, lhs.value,
                second_moment_bound(holder, mu, delta, n, dr, q), se, spec));
          }
        }
      }
    }
  }
  return out;
}

// --------------------------------------------------------------------------
// (a) E ||u||^p vs moment_bound over n in {2,8,32};
// (b) E [<g,u>^2 ||u||^2] vs (n+4) ||g||^2 for a fixed random g;
// (c) grid check of the holder_to_lipschitz envelope at the problem's class.
inline std::vector<BoundReport> check_appendix(const VerifySpec& spec) {
  std::vector<BoundReport> out;
  const std::vector<int> dims = {2, 8, 32};
  const std::vector<double> ps = {0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};

  for (int nn : dims) {
    auto space = std::make_shared<const NormSpace>(nn);
    for (std::size_t qi = 0; qi < ps.size(); ++qi) {
      const double p = ps[qi];
      GaussianSampler smp(space, detail::sub_seed(spec.seed, 0x6d6f6dULL, nn, qi));
      const ScalarStat st = mc_scalar(smp, spec.mc_samples, [p](const Vec&, double norm) {
        return std::pow(norm, p);
      });
      out.push_back(detail::make_report(
          "appendix.moment[n=" + std::to_string(nn) + ",p=" + detail::fmt_g(p) + "]", st.value,
          moment_bound(nn, p), st.se, spec));
    }

    // Fixed dual vector with standard normal entries.
    CounterRng rng(detail::sub_seed(spec.seed, 0x677665ULL, nn));
    Vec g(nn);
    for (int j = 0; j < nn; j += 2) {
      double a = 0.0, b = 0.0;
      rng.normal_pair(7, j / 2, a, b);
      g[j] = a;
      if (j + 1 < nn) g[j + 1] = b;
    }
    GaussianSampler smp(space, detail::sub_seed(spec.seed, 0x677533ULL, nn));
    const ScalarStat st = mc_scalar(smp, spec.mc_samples, [&g](const Vec& u, double norm) {
      const double d = g.dot(u);
      return d * d * norm * norm;
    });
    out.push_back(detail::make_report("appendix.projected_moment[n=" + std::to_string(nn) + "]",
                                      st.value, (nn + 4.0) * g.squaredNorm(), st.se, spec));
  }

  const HolderClass holder = spec.problem.objective->holder();
  for (double dt : {0.01, 0.1, 1.0}) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 1000; ++i) {
      const double t = 10.0 * i / 1000.0;
      const double envelope = holder.L * std::pow(t, 1.0 + holder.nu) / (1.0 + holder.nu);
      worst = std::max(worst, envelope - holder_to_lipschitz(holder, t, dt));
    }
    out.push_back(detail::make_report(
        "appendix.holder_envelope[dt=" + detail::fmt_g(dt) + "]", worst, 0.0, 0.0, spec));
  }
  return out;
}

// --------------------------------------------------------------------------

struct VerifySummary {
  std::vector<BoundReport> reports;
  int passed = 0;
  int failed = 0;
  int inconclusive = 0;
  bool ok() const { return failed == 0; }
};

inline VerifySummary run_all_checks(const VerifySpec& spec) {
  if (spec.mc_samples < 1000) throw UsageError("verify: mc_samples must be >= 1000");
  if (!(spec.slack >= 1.0)) throw UsageError("verify: slack must be >= 1");
  if (spec.points.empty()) throw UsageError("verify: no evaluation points");
  VerifySummary s;
  auto add = [&s](std::vector<BoundReport> v) {
    for (BoundReport& r : v) {
      if (r.inconclusive)
        ++s.inconclusive;
      else if (r.satisfied)
        ++s.passed;
      else
        ++s.failed;
      s.reports.push_back(std::move(r));
    }
  };
  add(check_lemma_2_1(spec));
  add(check_lemma_2_2(spec));
  add(check_lemma_2_3(spec));
  add(check_lemma_2_4(spec));
  add(check_lemma_2_5(spec));
  add(check_appendix(spec));
  return s;
}

}  // namespace zoh
