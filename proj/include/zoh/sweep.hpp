#pragma once

// Scaling sweeps: measure N_hit (first step whose analytic gradient meets the
// target) across an eps or n axis, average over seeds, and fit a log-log
// slope to compare against the planner's predicted exponent.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include "zoh/core.hpp"
#include "zoh/parallel.hpp"
#include "zoh/problems.hpp"
#include "zoh/solver.hpp"

namespace zoh {

// Theory exponents of the planned N in eps (at fixed n) and in n (at fixed
// eps) for each policy.
inline double predicted_exponent(Policy policy, double nu, const std::string& axis) {
  const bool eps_axis = axis == "eps";
  if (!eps_axis && axis != "n") throw UsageError("sweep axis must be 'eps' or 'n'");
  switch (policy) {
    case Policy::T1:
      if (!(nu > 0.0)) throw UsageError("predicted_exponent: T1 requires nu > 0");
      return eps_axis ? -1.0 / nu : 2.0 + (1.0 - nu) / (2.0 * nu);
    case Policy::T2:
      return eps_axis ? -(3.0 - nu) / (1.0 + nu) : 0.5 * (7.0 - 3.0 * nu);
    case Policy::NU1:
      return eps_axis ? -1.0 : 1.0;
    default:
      throw UsageError("predicted_exponent: manual policy has no predicted slope");
  }
}

// Rewrites the n=... option of a problem spec string (inserting one if absent).
inline std::string problem_with_n(const std::string& spec, int n) {
  auto parts = detail::split(spec, ':');
  bool replaced = false;
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i].rfind("n=", 0) == 0) {
      parts[i] = "n=" + std::to_string(n);
      replaced = true;
    }
  }
  if (!replaced) parts.insert(parts.begin() + 1, "n=" + std::to_string(n));
  std::string out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out += ":" + parts[i];
  return out;
}

struct SweepCell {
  double axis_value = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t n_hit = 0;
  bool censored = false;
  double min_grad_f_sq = std::numeric_limits<double>::quiet_NaN();
  double min_grad_fmu_sq = std::numeric_limits<double>::quiet_NaN();
  std::uint64_t oracle_calls = 0;
  std::uint64_t planned_n = 0;
};

struct SlopeFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  int points = 0;
};

// Ordinary least squares of log(y) on log(x); pairs with y <= 0 are skipped.
inline SlopeFit fit_loglog(const std::vector<double>& xs, const std::vector<double>& ys) {
  SlopeFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (std::size_t i = 0; i < xs.size() && i < ys.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) continue;
    const double lx = std::log(xs[i]), ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++m;
  }
  fit.points = m;
  if (m < 2) return fit;
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.slope = (m * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / m;
  return fit;
}

struct SweepSpec {
  std::string problem = "quadratic:n=8:spectrum=geom(0.002,10):x0=modespread";
  Policy policy = Policy::NU1;
  std::string axis = "eps";        // "eps" or "n"
  std::vector<double> values;      // axis values
  double eps_grad = 1e-2;          // target used on the n axis
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::string noise = "none";
  double delta = 0.0;                                              // absolute noise bound
  double delta_fraction = std::numeric_limits<double>::quiet_NaN();  // of plan.delta_max
  std::uint64_t eval_mc_samples = 4096;
  std::uint64_t max_steps = 0;  // optional hard cap below plan.N (0 = none)
};

struct SweepResult {
  std::string axis;
  std::vector<SweepCell> cells;           // row-major: values x seeds
  std::vector<double> usable_axis;        // axis values with no censored seed
  std::vector<double> mean_n_hit;         // aligned with usable_axis
  SlopeFit fit;
  double predicted = std::numeric_limits<double>::quiet_NaN();
  bool any_censored = false;
};

inline SweepResult run_sweep(const SweepSpec& spec) {
  if (spec.values.empty()) throw UsageError("run_sweep: axis values are empty");
  if (spec.seeds.empty()) throw UsageError("run_sweep: seeds are empty");
  if (spec.axis != "eps" && spec.axis != "n")
    throw UsageError("run_sweep: axis must be 'eps' or 'n'");

  SweepResult res;
  res.axis = spec.axis;
  const std::size_t n_cells = spec.values.size() * spec.seeds.size();
  res.cells.resize(n_cells);

  parallel_for(n_cells, [&](std::uint64_t idx) {
    const std::size_t vi = idx / spec.seeds.size();
    const std::size_t si = idx % spec.seeds.size();
    const double av = spec.values[vi];
    SweepCell cell;
    cell.axis_value = av;
    cell.seed = spec.seeds[si];

    const std::string pspec = spec.axis == "n"
                                  ? problem_with_n(spec.problem, static_cast<int>(av))
                                  : spec.problem;
    const double eps = spec.axis == "eps" ? av : spec.eps_grad;
    const TestProblem problem = make_problem(pspec);
    const Plan plan = make_plan(spec.policy, problem, eps);
    cell.planned_n = plan.N;

    double delta = spec.delta;
    if (std::isfinite(spec.delta_fraction)) delta = spec.delta_fraction * plan.delta_max;
    const NoisyOracle oracle(problem.objective,
                             make_noise(spec.noise, derive_seed(cell.seed, 0x6e6f69736531ULL)),
                             delta);

    RunOptions opt;
    opt.stop_grad_sq = eps;
    if (spec.max_steps > 0) opt.max_steps = spec.max_steps;
    const RunRecord rec = run_zo_gd(oracle, problem.space, plan, problem.x0, cell.seed, opt);

    cell.oracle_calls = rec.oracle_calls;
    cell.min_grad_f_sq = rec.min_true_grad_sq;
    cell.censored = !rec.hit;
    cell.n_hit = rec.hit ? rec.first_hit_k : rec.steps_executed;
    if (spec.eval_mc_samples > 0) {
      const RunEvaluation ev = evaluate_run(rec, problem, spec.eval_mc_samples, 4);
      cell.min_grad_fmu_sq = ev.min_grad_fmu_sq;
      if (ev.min_grad_f_sq < cell.min_grad_f_sq) cell.min_grad_f_sq = ev.min_grad_f_sq;
    }
    res.cells[idx] = cell;
  });

  for (std::size_t vi = 0; vi < spec.values.size(); ++vi) {
    double sum = 0.0;
    bool ok = true;
    for (std::size_t si = 0; si < spec.seeds.size(); ++si) {
      const SweepCell& c = res.cells[vi * spec.seeds.size() + si];
      if (c.censored) {
        ok = false;
        res.any_censored = true;
      }
      sum += static_cast<double>(c.n_hit);
    }
    if (ok) {
      res.usable_axis.push_back(spec.values[vi]);
      res.mean_n_hit.push_back(sum / static_cast<double>(spec.seeds.size()));
    }
  }
  if (res.usable_axis.size() < spec.values.size())
    std::cerr << "zoh: warning: censored cells excluded from the slope fit\n";
  res.fit = fit_loglog(res.usable_axis, res.mean_n_hit);
  const HolderClass h = make_problem(spec.problem).objective->holder();
  res.predicted = predicted_exponent(spec.policy, h.nu, spec.axis);
  return res;
}

}  // namespace zoh
