#pragma once

// Zeroth-order gradient descent x_{k+1} = x_k - h B^{-1} g_mu(x_k, u_k, delta)
// with theorem-backed parameter plans (policies T1 / T2 / NU1), trajectory
// recording, and post-hoc run evaluation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "zoh/bounds.hpp"
#include "zoh/core.hpp"
#include "zoh/problems.hpp"
#include "zoh/rng.hpp"
#include "zoh/smoothing.hpp"

namespace zoh {

enum class Policy { T1, T2, NU1, manual };

inline std::string to_string(Policy p) {
  switch (p) {
    case Policy::T1: return "T1";
    case Policy::T2: return "T2";
    case Policy::NU1: return "NU1";
    default: return "manual";
  }
}

inline Policy policy_from_string(const std::string& s) {
  if (s == "T1") return Policy::T1;
  if (s == "T2") return Policy::T2;
  if (s == "NU1") return Policy::NU1;
  if (s == "manual") return Policy::manual;
  throw UsageError("unknown policy '" + s + "' (expected T1, T2, NU1, or manual)");
}

struct Plan {
  Policy policy = Policy::T2;
  double mu = 0.0;
  double D = 1.0;
  double h = 0.0;
  std::uint64_t N = 0;
  double delta_max = 0.0;
  APair apair;
  double eps_grad = 0.0;
  int n = 0;
  double f_gap = 0.0;  // f(x0) + func_gap_bound(mu) - f_star_lower
};

struct PlanOverrides {
  std::optional<double> mu;
  std::optional<double> D;
  std::optional<double> h;
  std::optional<double> delta_max;
  std::optional<std::uint64_t> N;
};

// Builds the parameter plan for a policy:
//   T1 : D = 1,          mu = mu0(T1), smooth-branch A1, descent on ||grad f||^2
//   T2 : D = mu^(1-nu),  mu = mu0(T2), smooth-branch A1, descent on ||grad f_mu||^2
//   NU1: nu = 1 refinement; A1 = L (the smoothed gradient is L-Lipschitz with
//        no dimension factor), D = 1, mu/delta_max as T1 at nu = 1.
// manual requires explicit mu, D, h, N overrides and passes them through.
// For non-manual policies only mu (within (0, mu0]) and N may be overridden;
// h and D are derived quantities there.
inline Plan make_plan(Policy policy, const TestProblem& problem, double eps_grad,
                      const PlanOverrides& ov = {}) {
  if (!problem.objective) throw UsageError("make_plan: problem has no objective");
  const HolderClass holder = problem.objective->holder();
  const int n = problem.objective->dim();
  if (!(eps_grad > 0.0)) throw UsageError("make_plan: eps_grad must be positive");

  Plan p;
  p.policy = policy;
  p.eps_grad = eps_grad;
  p.n = n;

  const double f0 = problem.objective->eval(problem.x0);

  if (policy == Policy::manual) {
    if (!ov.mu || !ov.D || !ov.h || !ov.N)
      throw UsageError("make_plan: manual policy requires mu, D, h, and N");
    p.mu = *ov.mu;
    p.D = *ov.D;
    p.h = *ov.h;
    p.N = *ov.N;
    if (!(p.mu > 0.0)) throw UsageError("make_plan: mu must be positive");
    if (!(p.D > 0.0 && p.D <= 1.0)) throw UsageError("make_plan: D must be in (0,1]");
    if (!(p.h > 0.0)) throw UsageError("make_plan: h must be positive");
    if (p.N == 0) throw UsageError("make_plan: N must be positive");
    p.delta_max = ov.delta_max.value_or(std::numeric_limits<double>::infinity());
    p.apair = a_pair(ABranch::smooth, holder, p.mu, n);
    p.f_gap = f0 + func_gap_bound(holder, p.mu, n) - problem.objective->f_star_lower();
    return p;
  }

  if (ov.D || ov.h)
    throw UsageError("make_plan: D/h overrides require the manual policy");
  if (policy == Policy::T1 && !(holder.nu > 0.0))
    throw UsageError("make_plan: T1 requires nu in (0,1]; use T2 for nu = 0");
  if (policy == Policy::NU1 && holder.nu != 1.0)
    throw UsageError("make_plan: NU1 requires nu = 1 (Lipschitz gradient)");

  const Theorem thm = policy == Policy::T2 ? Theorem::T2 : Theorem::T1;
  const double mu_cap = mu0(thm, holder, n, eps_grad);
  p.mu = ov.mu.value_or(mu_cap);
  if (!(p.mu > 0.0) || p.mu > mu_cap * (1.0 + 1e-12))
    throw UsageError("make_plan: mu override must lie in (0, mu0]");
  p.D = policy == Policy::T2 ? std::pow(p.mu, 1.0 - holder.nu) : 1.0;
  p.apair = policy == Policy::NU1
                ? APair{holder.L, 0.0, ABranch::smooth, 0.0}
                : a_pair(ABranch::smooth, holder, p.mu, n);
  p.h = step_size(p.D, n, p.apair.A1);
  p.delta_max = delta_max(thm, p.mu, n, holder.nu);
  p.f_gap = f0 + func_gap_bound(holder, p.mu, n) - problem.objective->f_star_lower();
  p.N = ov.N.value_or(
      n_budget(policy == Policy::NU1 ? Theorem::NU1 : thm, holder, n, eps_grad, p.f_gap));
  return p;
}

// ---------------------------------------------------------------------------
// Running the process.

struct RunOptions {
  std::uint64_t thin_limit = 100000;  // max retained trajectory rows
  std::uint64_t max_steps = 0;        // 0: run the plan's full N
  double stop_grad_sq = 0.0;          // > 0: stop once analytic ||grad f||_*^2 <= this
  bool track_true_grad = true;        // instrumentation only; never steers the run
};

struct StepRow {
  std::uint64_t k = 0;
  double f_noisy = 0.0;  // oracle value at x_k
  double g_norm = 0.0;   // ||g_mu(x_k, u_k, delta)||_*
  Vec x;
};

struct RunRecord {
  Plan plan;
  std::uint64_t seed = 0;
  std::vector<StepRow> steps;  // thinned; always includes the argmin candidates
  std::uint64_t steps_executed = 0;
  std::uint64_t oracle_calls = 0;
  bool flagged = false;   // oracle delta exceeded plan.delta_max
  bool diverged = false;  // iterate left the finite / <=1e12 region
  std::uint64_t last_finite_k = 0;
  Vec final_x;

  // Analytic-gradient instrumentation (filled when the objective has one).
  bool has_true_grad = false;
  double min_true_grad_sq = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t argmin_true_k = 0;
  double min_g_norm = std::numeric_limits<double>::infinity();
  std::uint64_t argmin_g_k = 0;
  bool hit = false;  // stop_grad_sq target reached
  std::uint64_t first_hit_k = 0;
};

inline RunRecord run_zo_gd(const NoisyOracle& oracle,
                           const std::shared_ptr<const NormSpace>& space_in, const Plan& plan,
                           const Vec& x0, std::uint64_t seed, const RunOptions& opt = {}) {
  const int n = oracle.base().dim();
  if (x0.size() != n) throw UsageError("run_zo_gd: x0 dimension mismatch");
  if (!x0.allFinite()) throw UsageError("run_zo_gd: x0 must be finite");
  if (!(plan.mu > 0.0) || !(plan.h > 0.0) || plan.N == 0)
    throw UsageError("run_zo_gd: plan is incomplete");
  auto space = space_in ? space_in : std::make_shared<const NormSpace>(n);
  if (space->dim() != n) throw UsageError("run_zo_gd: norm space dimension mismatch");

  RunRecord rec;
  rec.plan = plan;
  rec.seed = seed;
  if (oracle.delta() > plan.delta_max) {
    rec.flagged = true;
    std::cerr << "zoh: warning: oracle delta " << oracle.delta()
              << " exceeds the plan's ceiling " << plan.delta_max << "; proceeding\n";
  }

  const std::uint64_t total =
      opt.max_steps == 0 ? plan.N : std::min<std::uint64_t>(plan.N, opt.max_steps);
  const std::uint64_t stride = std::max<std::uint64_t>(
      1, (total + opt.thin_limit - 1) / std::max<std::uint64_t>(1, opt.thin_limit));

  const Objective& obj = oracle.base();
  rec.has_true_grad = opt.track_true_grad && obj.has_grad();

  GaussianSampler sampler(space, derive_seed(seed, 0x7a6f682d72756eULL));
  Vec x = x0, u(n), scratch, xp(n), grad(n);
  StepRow best_g, best_true;
  bool have_best_true = false;
  rec.steps.reserve(std::min<std::uint64_t>(total, opt.thin_limit) + 4);

  std::uint64_t k = 0;
  for (; k < total; ++k) {
    double u_norm = 0.0;
    sampler.draw_at(k, u, &u_norm, &scratch);
    double f0 = 0.0, f1 = 0.0;
    try {
      f0 = oracle.query(x);
      xp = x + plan.mu * u;
      f1 = oracle.query(xp);
    } catch (const EvalError&) {
      rec.diverged = true;
      break;
    }
    rec.oracle_calls += 2;
    const double coef = (f1 - f0) / plan.mu;
    const double g_norm = std::abs(coef) * u_norm;

    StepRow row{k, f0, g_norm, x};
    if (g_norm < rec.min_g_norm) {
      rec.min_g_norm = g_norm;
      rec.argmin_g_k = k;
      best_g = row;
    }
    bool hit_now = false;
    if (rec.has_true_grad) {
      grad = obj.grad(x);
      const double gd = space->is_identity() ? grad.squaredNorm()
                                             : grad.dot(space->apply_b_inv(grad));
      if (!(gd >= rec.min_true_grad_sq)) {  // also true on the first step (NaN)
        rec.min_true_grad_sq = gd;
        rec.argmin_true_k = k;
        best_true = row;
        have_best_true = true;
      }
      if (opt.stop_grad_sq > 0.0 && gd <= opt.stop_grad_sq) {
        rec.hit = true;
        rec.first_hit_k = k;
        hit_now = true;
      }
    }
    if (k % stride == 0) rec.steps.push_back(row);

    x -= (plan.h * coef) * u;  // B^{-1} g = coef * u, so no solve is needed
    rec.last_finite_k = k;
    ++rec.steps_executed;
    if (hit_now) break;
    if (!x.allFinite() || x.norm() > 1e12) {
      rec.diverged = true;
      break;
    }
  }
  rec.final_x = x;

  // Merge the argmin candidate rows into the retained set.
  auto merge_row = [&rec](const StepRow& row) {
    auto it = std::lower_bound(rec.steps.begin(), rec.steps.end(), row.k,
                               [](const StepRow& r, std::uint64_t key) { return r.k < key; });
    if (it == rec.steps.end() || it->k != row.k) rec.steps.insert(it, row);
  };
  if (rec.min_g_norm < std::numeric_limits<double>::infinity()) merge_row(best_g);
  if (have_best_true) merge_row(best_true);
  return rec;
}

// ---------------------------------------------------------------------------
// Evaluation.

struct RunEvaluation {
  double min_grad_fmu_sq = std::numeric_limits<double>::quiet_NaN();
  double min_grad_fmu_se = std::numeric_limits<double>::infinity();
  std::uint64_t argmin_fmu_k = 0;
  double min_grad_f_sq = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t argmin_f_k = 0;
  double func_gap_bound_at_mu = 0.0;
  std::uint64_t mc_samples = 0;
};

// Scans the retained trajectory: the analytic ||grad f||_*^2 minimum is taken
// over every retained row; ||grad f_mu||_*^2 is Monte-Carlo estimated (with
// noiseless access to the base objective) at the `max_mc_points` most
// promising rows only, since full-trajectory MC is quadratically expensive.
inline RunEvaluation evaluate_run(const RunRecord& record, const TestProblem& problem,
                                  std::uint64_t mc_samples, int max_mc_points = 8) {
  if (record.steps.empty()) throw UsageError("evaluate_run: record has no retained steps");
  if (!problem.objective || !problem.space)
    throw UsageError("evaluate_run: problem is incomplete");
  const Objective& obj = *problem.objective;
  const bool has_grad = obj.has_grad();
  if (!has_grad && mc_samples == 0)
    throw UsageError("evaluate_run: gradient unavailable and mc_samples = 0");

  RunEvaluation ev;
  ev.func_gap_bound_at_mu = func_gap_bound(obj.holder(), record.plan.mu, obj.dim());

  const std::size_t rows = record.steps.size();
  std::vector<double> score(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const StepRow& r = record.steps[i];
    if (has_grad) {
      const Vec g = obj.grad(r.x);
      const double gd = problem.space->is_identity() ? g.squaredNorm()
                                                     : g.dot(problem.space->apply_b_inv(g));
      score[i] = gd;
      if (!(gd >= ev.min_grad_f_sq)) {
        ev.min_grad_f_sq = gd;
        ev.argmin_f_k = r.k;
      }
    } else {
      score[i] = r.g_norm;  // ranking proxy only
    }
  }

  if (mc_samples > 0) {
    std::vector<std::size_t> order(rows);
    for (std::size_t i = 0; i < rows; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&score](std::size_t a, std::size_t b) { return score[a] < score[b]; });
    const std::size_t budget = std::min<std::size_t>(std::max(max_mc_points, 1), rows);
    std::vector<std::size_t> picks(order.begin(), order.begin() + budget);
    if (std::find(picks.begin(), picks.end(), rows - 1) == picks.end())
      picks.back() = rows - 1;  // always evaluate the last retained iterate

    const NoisyOracle clean(problem.objective, std::make_shared<NoNoise>(), 0.0);
    for (std::size_t idx : picks) {
      const StepRow& r = record.steps[idx];
      GaussianSampler sampler(problem.space,
                              derive_seed(derive_seed(record.seed, 0x6576616cULL), r.k));
      // With an analytic gradient, use it as an exact control variate for the
      // linear term of each sample; the estimate's target is unchanged.
      const Vec gref = has_grad ? obj.grad(r.x) : Vec();
      const VectorStat vs =
          estimate_grad_f_mu(clean, sampler, r.x, record.plan.mu, mc_samples, true,
                             has_grad ? &gref : nullptr, has_grad);
      const double val = std::max(0.0, vs.sq_norm);
      ev.mc_samples = vs.samples;
      if (!(val >= ev.min_grad_fmu_sq)) {
        ev.min_grad_fmu_sq = val;
        ev.min_grad_fmu_se = vs.sq_norm_se;
        ev.argmin_fmu_k = r.k;
      }
    }
  }
  return ev;
}

}  // namespace zoh
