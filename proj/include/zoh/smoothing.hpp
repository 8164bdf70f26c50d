#pragma once

// Gaussian-smoothing gradient estimator and the Monte-Carlo machinery used
// to measure its statistics.
//
// Estimation runs over fixed-size sample chunks: each chunk's partial sums
// are computed independently (possibly on different threads) and then folded
// in chunk order, so every estimate is bit-identical for any thread count.
// Requested sample counts are rounded up to whole chunks; the `samples`
// field of every result reports the effective count.
//
// Squared norms of mean vectors are estimated without the usual upward
// ||mean||^2 bias: with independent equal-size chunks, averaging the dual
// inner products of distinct chunk means is exactly unbiased for
// ||E g||_*^2, and a jackknife over chunks supplies its standard error.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "zoh/core.hpp"
#include "zoh/parallel.hpp"

namespace zoh {

inline constexpr std::uint64_t kMcChunk = 4096;

struct ScalarStat {
  double value = 0.0;
  double se = 0.0;
  std::uint64_t samples = 0;
};

struct VectorStat {
  Vec mean;               // estimate of E g
  double sq_norm = 0.0;   // unbiased estimate of ||E g||_*^2 (can be negative)
  double sq_norm_se = 0.0;
  std::uint64_t samples = 0;

  double norm_value() const { return std::sqrt(std::max(0.0, sq_norm)); }
};

// ---------------------------------------------------------------------------
// Single-sample estimator: g_mu(x, u, delta) = (ftilde(x + mu u) - ftilde(x)) / mu * B u.

inline Vec g_mu(const NoisyOracle& oracle, const NormSpace& space, const Vec& x,
                const Vec& u, double mu) {
  if (!(mu > 0.0)) throw UsageError("g_mu: mu must be positive");
  const double coef = (oracle.query(x + mu * u) - oracle.query(x)) / mu;
  return coef * space.apply_b(u);
}

// ---------------------------------------------------------------------------
// Generic scalar Monte-Carlo over the Gaussian directions alone.  `per_sample`
// receives (u, ||u||_primal) and returns the statistic; used for moment checks
// that involve no oracle.
template <class Fn>
ScalarStat mc_scalar(const GaussianSampler& sampler, std::uint64_t samples, Fn per_sample) {
  if (samples == 0) throw UsageError("mc_scalar: samples must be positive");
  const std::uint64_t chunks = (samples + kMcChunk - 1) / kMcChunk;
  struct Acc {
    double sum = 0.0, sum_sq = 0.0;
  };
  std::vector<Acc> parts(chunks);
  parallel_for(chunks, [&](std::uint64_t c) {
    Vec u(sampler.space().dim()), scratch;
    Acc a;
    for (std::uint64_t i = 0; i < kMcChunk; ++i) {
      double norm = 0.0;
      sampler.draw_at(c * kMcChunk + i, u, &norm, &scratch);
      const double v = per_sample(static_cast<const Vec&>(u), norm);
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

namespace detail {

// Folds per-chunk vector sums into a VectorStat.  `k` is the per-chunk sample
// count; chunk sums are combined in chunk order.
inline VectorStat vector_stat_from_chunk_sums(const std::vector<Vec>& chunk_sums,
                                              const NormSpace& space, std::uint64_t k) {
  const std::uint64_t c_count = chunk_sums.size();
  const double kd = static_cast<double>(k);
  VectorStat out;
  out.samples = c_count * k;

  Vec total = Vec::Zero(space.dim());
  for (const Vec& s : chunk_sums) total += s;
  out.mean = total / static_cast<double>(out.samples);

  if (c_count < 2) {
    out.sq_norm = std::numeric_limits<double>::quiet_NaN();
    out.sq_norm_se = std::numeric_limits<double>::infinity();
    return out;
  }

  // q_c = <s_c, B^-1 s_c>, t_c = <S, B^-1 s_c>, Q = <S, B^-1 S>.
  std::vector<double> q(c_count), t(c_count);
  double sum_q = 0.0;
  const Vec total_dual = space.apply_b_inv(total);
  for (std::uint64_t c = 0; c < c_count; ++c) {
    q[c] = chunk_sums[c].dot(space.apply_b_inv(chunk_sums[c]));
    t[c] = total_dual.dot(chunk_sums[c]);
    sum_q += q[c];
  }
  const double big_q = total_dual.dot(total);
  const double cd = static_cast<double>(c_count);

  // Mean over ordered pairs (c != c') of <sbar_c, sbar_c'>: unbiased for ||E g||^2.
  out.sq_norm = (big_q - sum_q) / (cd * (cd - 1.0) * kd * kd);

  if (c_count < 3) {
    out.sq_norm_se = std::numeric_limits<double>::infinity();
    return out;
  }
  // Jackknife over chunks.
  std::vector<double> loo(c_count);
  double loo_mean = 0.0;
  for (std::uint64_t c = 0; c < c_count; ++c) {
    const double big_q_c = big_q - 2.0 * t[c] + q[c];
    const double sum_q_c = sum_q - q[c];
    loo[c] = (big_q_c - sum_q_c) / ((cd - 1.0) * (cd - 2.0) * kd * kd);
    loo_mean += loo[c];
  }
  loo_mean /= cd;
  double ss = 0.0;
  for (double v : loo) ss += (v - loo_mean) * (v - loo_mean);
  out.sq_norm_se = std::sqrt((cd - 1.0) / cd * ss);
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Oracle-based estimators.  All draw u_i at absolute sample indices
// 0..samples-1 of the given sampler, so two estimators built on samplers with
// the same seed see identical directions (common random numbers).

// E_u ftilde(x + mu u): the smoothed value seen through the oracle.
inline ScalarStat estimate_f_mu(const NoisyOracle& oracle, const GaussianSampler& sampler,
                                const Vec& x, double mu, std::uint64_t samples) {
  if (!(mu >= 0.0)) throw UsageError("estimate_f_mu: mu must be >= 0");
  struct Acc {
    double sum = 0.0, sum_sq = 0.0;
  };
  const std::uint64_t chunks = (std::max<std::uint64_t>(samples, 1) + kMcChunk - 1) / kMcChunk;
  std::vector<Acc> parts(chunks);
  parallel_for(chunks, [&](std::uint64_t c) {
    Vec u(sampler.space().dim()), scratch, xp;
    Acc a;
    for (std::uint64_t i = 0; i < kMcChunk; ++i) {
      sampler.draw_at(c * kMcChunk + i, u, nullptr, &scratch);
      xp = x + mu * u;
      const double v = oracle.query(xp);
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

// Mean of g_mu samples and the squared dual norm of that mean.
//
// With a reference vector (typically grad f(x)) the linear term <ref, u> B u,
// whose exact mean is ref, is subtracted from every sample: the result then
// estimates the gap E g_mu - ref with the dominant single-sample fluctuation
// cancelled exactly, not merely recentered.  add_ref_back additionally adds
// ref to every sample, turning the same variance reduction into an estimator
// of E g_mu itself.
//
// cache_base = true evaluates ftilde(x) once (samples + 1 oracle calls);
// false re-queries the base point per sample (2 * samples calls).  The noise
// models are deterministic in x, so both give identical values.
inline VectorStat estimate_grad_f_mu(const NoisyOracle& oracle, const GaussianSampler& sampler,
                                     const Vec& x, double mu, std::uint64_t samples,
                                     bool cache_base = true, const Vec* ref = nullptr,
                                     bool add_ref_back = false) {
  if (!(mu > 0.0)) throw UsageError("estimate_grad_f_mu: mu must be positive");
  if (add_ref_back && !ref)
    throw UsageError("estimate_grad_f_mu: add_ref_back requires a reference vector");
  const NormSpace& space = sampler.space();
  const int n = space.dim();
  const std::uint64_t chunks = (std::max<std::uint64_t>(samples, 1) + kMcChunk - 1) / kMcChunk;
  const double f_base = cache_base ? oracle.query(x) : 0.0;
  std::vector<Vec> sums(chunks);
  parallel_for(chunks, [&](std::uint64_t c) {
    Vec u(n), scratch, xp, g(n);
    Vec sum = Vec::Zero(n);
    for (std::uint64_t i = 0; i < kMcChunk; ++i) {
      sampler.draw_at(c * kMcChunk + i, u, nullptr, &scratch);
      xp = x + mu * u;
      const double base = cache_base ? f_base : oracle.query(x);
      double coef = (oracle.query(xp) - base) / mu;
      if (ref) coef -= ref->dot(u);
      g = coef * space.apply_b(u);
      if (add_ref_back) g += *ref;
      sum += g;
    }
    sums[c] = std::move(sum);
  });
  return detail::vector_stat_from_chunk_sums(sums, space, kMcChunk);
}

// Per-sample difference of two oracles' estimators under shared directions:
// estimates E[g_mu^noisy - g_mu^clean] = grad ftilde_mu - grad f_mu and its
// squared dual norm.  The u-dependent part cancels sample-by-sample, so the
// variance is governed only by the oracle deviations.
inline VectorStat estimate_grad_delta_gap(const NoisyOracle& noisy, const NoisyOracle& clean,
                                          const GaussianSampler& sampler, const Vec& x,
                                          double mu, std::uint64_t samples) {
  if (!(mu > 0.0)) throw UsageError("estimate_grad_delta_gap: mu must be positive");
  const NormSpace& space = sampler.space();
  const int n = space.dim();
  const std::uint64_t chunks = (std::max<std::uint64_t>(samples, 1) + kMcChunk - 1) / kMcChunk;
  const double base_gap = noisy.query(x) - clean.query(x);
  std::vector<Vec> sums(chunks);
  parallel_for(chunks, [&](std::uint64_t c) {
    Vec u(n), scratch, xp;
    Vec sum = Vec::Zero(n);
    for (std::uint64_t i = 0; i < kMcChunk; ++i) {
      sampler.draw_at(c * kMcChunk + i, u, nullptr, &scratch);
      xp = x + mu * u;
      const double coef = (noisy.query(xp) - clean.query(xp) - base_gap) / mu;
      sum += coef * space.apply_b(u);
    }
    sums[c] = std::move(sum);
  });
  return detail::vector_stat_from_chunk_sums(sums, space, kMcChunk);
}

// E ||g_mu||_*^2.  For g = coef * B u the dual norm is |coef| * ||u||_primal,
// so no linear algebra is needed per sample.
inline ScalarStat estimate_second_moment(const NoisyOracle& oracle,
                                         const GaussianSampler& sampler, const Vec& x,
                                         double mu, std::uint64_t samples,
                                         bool cache_base = true) {
  if (!(mu > 0.0)) throw UsageError("estimate_second_moment: mu must be positive");
  const double f_base = cache_base ? oracle.query(x) : 0.0;
  struct Acc {
    double sum = 0.0, sum_sq = 0.0;
  };
  const std::uint64_t chunks = (std::max<std::uint64_t>(samples, 1) + kMcChunk - 1) / kMcChunk;
  std::vector<Acc> parts(chunks);
  parallel_for(chunks, [&](std::uint64_t c) {
    Vec u(sampler.space().dim()), scratch, xp;
    Acc a;
    for (std::uint64_t i = 0; i < kMcChunk; ++i) {
      double norm = 0.0;
      sampler.draw_at(c * kMcChunk + i, u, &norm, &scratch);
      xp = x + mu * u;
      const double base = cache_base ? f_base : oracle.query(x);
      const double coef = (oracle.query(xp) - base) / mu;
      const double v = coef * coef * norm * norm;
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

}  // namespace zoh
