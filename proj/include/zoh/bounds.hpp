#pragma once

// Closed-form constants, bounds, and parameter formulas for Gaussian-smoothed
// zeroth-order descent under a delta-bounded value oracle.  Everything here
// is a pure function of (nu, L, mu, delta, n, ...); the empirical counterparts
// live in verify.hpp.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <string>

#include "zoh/core.hpp"

namespace zoh {

enum class ABranch { smooth, direct };
enum class Theorem { T1, T2, NU1 };

inline std::string to_string(ABranch b) { return b == ABranch::smooth ? "smooth" : "direct"; }
inline std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::T1: return "T1";
    case Theorem::T2: return "T2";
    default: return "NU1";
  }
}

inline Theorem theorem_from_string(const std::string& s) {
  if (s == "T1") return Theorem::T1;
  if (s == "T2") return Theorem::T2;
  if (s == "NU1") return Theorem::NU1;
  throw UsageError("unknown theorem policy '" + s + "' (expected T1, T2, or NU1)");
}

// Outcome of one empirical inequality check: lhs is the measured (or
// analytic) quantity, rhs the closed-form bound, slack the tolerated
// statistical allowance.  A report whose standard error swamps the bound is
// marked inconclusive rather than failed.
struct BoundReport {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  double se = 0.0;      // combined standard error of the comparison
  double slack = 0.0;   // allowance actually granted (multiplier * se)
  bool satisfied = false;
  bool inconclusive = false;
  std::string note;

  std::string status() const {
    return inconclusive ? "inconclusive" : (satisfied ? "pass" : "FAIL");
  }
};

// Coefficient pair (A1, A2) such that the gradient of the smoothed objective
// satisfies ||grad f_mu(y) - grad f_mu(x)||_* <= A1 ||y - x|| + A2 / mu... in
// the normalization used by the step-size rule.  Two admissible choices:
//   smooth: A1 = L n^((1+nu)/2) / mu^(1-nu),            A2 = 0
//   direct: A1 = (1/delta_hat)^((1-nu)/(1+nu)) 2L / mu^(1-nu),
//           A2 = delta_hat * L * mu^(1+nu)
struct APair {
  double A1 = 0.0;
  double A2 = 0.0;
  ABranch branch = ABranch::smooth;
  double delta_hat = 0.0;  // meaningful for the direct branch only
};

inline APair a_pair(ABranch branch, const HolderClass& holder, double mu, int n,
                    double delta_hat = 0.0) {
  if (!(mu > 0.0)) throw UsageError("a_pair: mu must be positive");
  if (n <= 0) throw UsageError("a_pair: n must be positive");
  if (!(holder.L > 0.0)) throw UsageError("a_pair: requires L > 0");
  const double nu = holder.nu;
  APair out;
  out.branch = branch;
  if (branch == ABranch::smooth) {
    out.A1 = holder.L * std::pow(static_cast<double>(n), 0.5 * (1.0 + nu)) /
             std::pow(mu, 1.0 - nu);
    out.A2 = 0.0;
  } else {
    if (!(delta_hat > 0.0))
      throw UsageError("a_pair: direct branch requires delta_hat > 0");
    out.delta_hat = delta_hat;
    out.A1 = std::pow(1.0 / delta_hat, (1.0 - nu) / (1.0 + nu)) * 2.0 * holder.L /
             std::pow(mu, 1.0 - nu);
    out.A2 = delta_hat * holder.L * std::pow(mu, 1.0 + nu);
  }
  return out;
}

// The three gradient-gap ceilings at smoothing radius mu under oracle noise
// delta: noisy-vs-smooth (delta sqrt(n) / mu), smooth-vs-true
// (mu^nu L n^(nu/2)), and their sum (noisy-vs-true).
struct GradGapBounds {
  double noisy_vs_smooth = 0.0;
  double smooth_vs_true = 0.0;
  double noisy_vs_true = 0.0;
};

inline GradGapBounds grad_gap_bounds(const HolderClass& holder, double mu, double delta,
                                     int n) {
  if (!(mu > 0.0)) throw UsageError("grad_gap_bounds: mu must be positive");
  if (!(delta >= 0.0)) throw UsageError("grad_gap_bounds: delta must be >= 0");
  if (n <= 0) throw UsageError("grad_gap_bounds: n must be positive");
  GradGapBounds g;
  g.noisy_vs_smooth = delta * std::sqrt(static_cast<double>(n)) / mu;
  g.smooth_vs_true = std::pow(mu, holder.nu) * holder.L *
                     std::pow(static_cast<double>(n), 0.5 * holder.nu);
  g.noisy_vs_true = g.noisy_vs_smooth + g.smooth_vs_true;
  return g;
}

// |f_mu(x) - f(x)| <= L/(1+nu) * mu^(1+nu) * n^((1+nu)/2).
inline double func_gap_bound(const HolderClass& holder, double mu, int n) {
  if (!(mu >= 0.0)) throw UsageError("func_gap_bound: mu must be >= 0");
  if (n <= 0) throw UsageError("func_gap_bound: n must be positive");
  return holder.L / (1.0 + holder.nu) * std::pow(mu, 1.0 + holder.nu) *
         std::pow(static_cast<double>(n), 0.5 * (1.0 + holder.nu));
}

// ||grad f(x)||_*^2 <= 2 ||grad f_mu(x)||_*^2 + 2 mu^(2 nu) L^2 n^nu.
inline double grad_transfer_bound(const HolderClass& holder, double mu, int n,
                                  double grad_fmu_sq) {
  if (!(grad_fmu_sq >= 0.0)) throw UsageError("grad_transfer_bound: grad_fmu_sq must be >= 0");
  if (n <= 0) throw UsageError("grad_transfer_bound: n must be positive");
  return 2.0 * grad_fmu_sq + 2.0 * std::pow(mu, 2.0 * holder.nu) * holder.L * holder.L *
                                 std::pow(static_cast<double>(n), holder.nu);
}

// E ||g_mu||_*^2 <= 20 (n+4) ||grad f_mu||_*^2
//   + 5 ( 4 delta^2 n / mu^2 + 4 L^2 mu^(2 nu) n^(2+nu) / (1+nu)^2
//         + mu^2 A1^2 (n+6)^3 / 4 + A2^2 n / mu^2 ).
inline double second_moment_bound(const HolderClass& holder, double mu, double delta, int n,
                                  const APair& apair, double grad_fmu_sq) {
  if (!(mu > 0.0)) throw UsageError("second_moment_bound: mu must be positive");
  if (!(delta >= 0.0) || !(grad_fmu_sq >= 0.0))
    throw UsageError("second_moment_bound: inputs must be nonnegative");
  if (n <= 0) throw UsageError("second_moment_bound: n must be positive");
  const double nd = static_cast<double>(n);
  const double tail = 4.0 * delta * delta * nd / (mu * mu) +
                      4.0 * holder.L * holder.L * std::pow(mu, 2.0 * holder.nu) *
                          std::pow(nd, 2.0 + holder.nu) /
                          ((1.0 + holder.nu) * (1.0 + holder.nu)) +
                      mu * mu * apair.A1 * apair.A1 * std::pow(nd + 6.0, 3.0) / 4.0 +
                      apair.A2 * apair.A2 * nd / (mu * mu);
  return 20.0 * (nd + 4.0) * grad_fmu_sq + 5.0 * tail;
}

// Descent step size h = D / (80 (n+4) A1), D in (0, 1].
inline double step_size(double D, int n, double A1) {
  if (!(D > 0.0 && D <= 1.0)) throw UsageError("step_size: D must be in (0,1]");
  if (!(A1 > 0.0)) throw UsageError("step_size: A1 must be positive");
  if (n <= 0) throw UsageError("step_size: n must be positive");
  return D / (80.0 * (static_cast<double>(n) + 4.0) * A1);
}

namespace detail {

// The explicit M * n^(1+nu) expressions from the two convergence analyses.
// The shared bracket is 4 n^((nu-1)/2) + 4 L^2 n^(2+nu)/(1+nu)^2
//                       + 2 L^2 (n+3)(n+6)^(1+nu).
// T1 adds a trailing mu^(2 nu) L^2 n^nu term; since the analysis already
// requires mu < 1 we majorize mu^(2 nu) <= 1, which keeps M a constant
// (slightly larger, hence a slightly smaller and still admissible mu0).
inline double m_times_n_pow(Theorem theorem, const HolderClass& holder, int n) {
  const double nd = static_cast<double>(n);
  const double nu = holder.nu;
  const double L = holder.L;
  const double bracket = 4.0 * std::pow(nd, 0.5 * (nu - 1.0)) +
                         4.0 * L * L * std::pow(nd, 2.0 + nu) / ((1.0 + nu) * (1.0 + nu)) +
                         2.0 * L * L * (nd + 3.0) * std::pow(nd + 6.0, 1.0 + nu);
  const double comb = std::pow(nd, 0.5 * (nu - 1.0)) + 2.0 * L * std::pow(nd, nu);
  if (theorem == Theorem::T1) {
    return bracket / (4.0 * (nd + 4.0)) + 160.0 * (nd + 4.0) * comb +
           L * L * std::pow(nd, nu);
  }
  return bracket / (8.0 * (nd + 4.0)) + 80.0 * (nd + 4.0) * comb;
}

}  // namespace detail

inline double m_constant(Theorem theorem, const HolderClass& holder, int n) {
  if (theorem == Theorem::NU1)
    throw UsageError("m_constant: defined for T1 and T2 only");
  if (n <= 0) throw UsageError("m_constant: n must be positive");
  return detail::m_times_n_pow(theorem, holder, n) /
         std::pow(static_cast<double>(n), 1.0 + holder.nu);
}

// Largest admissible smoothing radius for gradient target eps_grad:
//   T1: (M n^(1+nu))^(-1/(2 nu))  * eps^(1/(2 nu))    (requires nu > 0)
//   T2: (M n^(1+nu))^(-1/(1+nu)) * eps^(1/(1+nu))
// The analyses assume mu < 1, so the result is clamped below 1; `clamped`
// (if non-null) reports whether clamping fired, and a warning is printed.
inline double mu0(Theorem theorem, const HolderClass& holder, int n, double eps_grad,
                  bool* clamped = nullptr) {
  if (theorem == Theorem::NU1) throw UsageError("mu0: defined for T1 and T2 only");
  if (!(eps_grad > 0.0)) throw UsageError("mu0: eps_grad must be positive");
  if (n <= 0) throw UsageError("mu0: n must be positive");
  if (theorem == Theorem::T1 && !(holder.nu > 0.0))
    throw UsageError("mu0: T1 requires nu in (0,1]");
  const double mn = detail::m_times_n_pow(theorem, holder, n);
  const double inv_exp =
      theorem == Theorem::T1 ? 1.0 / (2.0 * holder.nu) : 1.0 / (1.0 + holder.nu);
  double mu = std::pow(mn, -inv_exp) * std::pow(eps_grad, inv_exp);
  if (clamped) *clamped = false;
  if (mu >= 1.0) {
    std::cerr << "zoh: warning: mu0 = " << mu << " clamped below 1\n";
    if (clamped) *clamped = true;
    mu = 1.0 - 1e-9;
  }
  return mu;
}

// Noise ceiling: T1 -> mu^((3+nu)/2) / n^((3-nu)/4);
//                T2 -> mu^((5-nu)/2) / n^((3-nu)/4).  Coincide at nu = 1.
inline double delta_max(Theorem theorem, double mu, int n, double nu) {
  if (theorem == Theorem::NU1) throw UsageError("delta_max: defined for T1 and T2 only");
  if (!(mu > 0.0)) throw UsageError("delta_max: mu must be positive");
  if (n <= 0) throw UsageError("delta_max: n must be positive");
  if (!(nu >= 0.0 && nu <= 1.0)) throw UsageError("delta_max: nu must be in [0,1]");
  const double mu_pow = theorem == Theorem::T1 ? 0.5 * (3.0 + nu) : 0.5 * (5.0 - nu);
  return std::pow(mu, mu_pow) / std::pow(static_cast<double>(n), 0.25 * (3.0 - nu));
}

// Iteration budget N = ceil(2 C f_gap / eps), with C the explicit first-term
// coefficient of the respective convergence analysis:
//   T1:  640 (n+4) n^((1-nu)(1+nu)/(2 nu)) L n^((1+nu)/2) M^((1-nu)/(2 nu))
//        / eps^((1-nu)/nu)
//   T2:  320 (n+4) n^(2-2 nu)             L n^((1+nu)/2) M^((2-2 nu)/(1+nu))
//        / eps^((2-2 nu)/(1+nu))
//   NU1: 640 (n+4) L   (nu = 1 refinement: A1 = L, D = 1)
inline std::uint64_t n_budget(Theorem theorem, const HolderClass& holder, int n,
                              double eps_grad, double f_gap) {
  if (!(eps_grad > 0.0)) throw UsageError("n_budget: eps_grad must be positive");
  if (!(f_gap >= 0.0)) throw UsageError("n_budget: f_gap must be >= 0");
  if (!(holder.L > 0.0)) throw UsageError("n_budget: requires L > 0");
  if (n <= 0) throw UsageError("n_budget: n must be positive");
  const double nd = static_cast<double>(n);
  const double nu = holder.nu;
  const double L = holder.L;
  double coef = 0.0;
  if (theorem == Theorem::T1) {
    if (!(nu > 0.0)) throw UsageError("n_budget: T1 requires nu in (0,1]");
    const double M = m_constant(Theorem::T1, holder, n);
    coef = 640.0 * (nd + 4.0) * std::pow(nd, (1.0 - nu) * (1.0 + nu) / (2.0 * nu)) * L *
           std::pow(nd, 0.5 * (1.0 + nu)) * std::pow(M, (1.0 - nu) / (2.0 * nu)) /
           std::pow(eps_grad, (1.0 - nu) / nu);
  } else if (theorem == Theorem::T2) {
    const double M = m_constant(Theorem::T2, holder, n);
    coef = 320.0 * (nd + 4.0) * std::pow(nd, 2.0 - 2.0 * nu) * L *
           std::pow(nd, 0.5 * (1.0 + nu)) * std::pow(M, (2.0 - 2.0 * nu) / (1.0 + nu)) /
           std::pow(eps_grad, (2.0 - 2.0 * nu) / (1.0 + nu));
  } else {
    if (nu != 1.0) throw UsageError("n_budget: NU1 requires nu = 1");
    coef = 640.0 * (nd + 4.0) * L;
  }
  const double raw = std::ceil(2.0 * coef * f_gap / eps_grad);
  if (!std::isfinite(raw) || raw > 9.0e18)
    throw UsageError("n_budget: budget exceeds representable range");
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(raw));
}

// E ||u||^p <= n^(p/2) for p in [0,2], (n+p)^(p/2) for p > 2.
inline double moment_bound(int n, double p) {
  if (!(p >= 0.0)) throw UsageError("moment_bound: p must be >= 0");
  if (n <= 0) throw UsageError("moment_bound: n must be positive");
  const double nd = static_cast<double>(n);
  return p <= 2.0 ? std::pow(nd, 0.5 * p) : std::pow(nd + p, 0.5 * p);
}

// Smooths the Hölder envelope into a quadratic plus slack:
//   L t^(1+nu) / (1+nu) <= (1/2) [ (1-nu)/(1+nu) * 2/delta_tilde ]^((1-nu)/(1+nu))
//                          * L^(2/(1+nu)) t^2 + delta_tilde.
inline double holder_to_lipschitz(const HolderClass& holder, double t, double delta_tilde) {
  if (!(t >= 0.0)) throw UsageError("holder_to_lipschitz: t must be >= 0");
  if (!(delta_tilde > 0.0)) throw UsageError("holder_to_lipschitz: delta_tilde must be positive");
  const double nu = holder.nu;
  const double expo = (1.0 - nu) / (1.0 + nu);
  const double coef = 0.5 * std::pow((1.0 - nu) / (1.0 + nu) * 2.0 / delta_tilde, expo) *
                      std::pow(holder.L, 2.0 / (1.0 + nu));
  return coef * t * t + delta_tilde;
}

}  // namespace zoh
