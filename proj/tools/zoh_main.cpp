// zoh — command-line front end: plan, run, verify, and sweep.
//
// Usage: zoh plan|run|verify|sweep --config <file> [--seed S] [--out DIR]
//                                  [--override key=value]...
//
// The config is a single flat JSON document; --override rewrites one key
// (value parsed as JSON when possible, else taken as a string).  Exit codes:
// 0 success, 2 usage error, 3 divergence, 4 verification failure.

#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "zoh/bounds.hpp"
#include "zoh/core.hpp"
#include "zoh/io.hpp"
#include "zoh/problems.hpp"
#include "zoh/solver.hpp"
#include "zoh/sweep.hpp"
#include "zoh/verify.hpp"

namespace {

using zoh::io::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;
constexpr int kExitVerifyFailed = 4;

struct Config {
  std::string problem = "quadratic:n=8:spectrum=geom(1,10):x0=ones";
  std::string policy = "NU1";
  double eps_grad = 1e-2;
  std::string noise = "none";
  double delta = 0.0;
  double delta_fraction = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::uint64_t> seeds = {1};
  std::uint64_t seed = 1;  // base seed for verify point/stream derivation
  std::string out = "out";
  std::uint64_t mc_samples = 4096;  // evaluation samples for run/sweep
  std::uint64_t max_steps = 0;
  std::uint64_t thin_limit = 100000;

  std::vector<double> sweep_eps;
  std::vector<double> sweep_n;

  std::vector<std::string> verify_problems;  // default: [problem]
  std::vector<double> verify_mus = {0.5, 0.1, 0.01};
  std::vector<double> verify_delta_fractions = {0.0, 0.5, 1.0};
  std::vector<std::string> verify_noises = {"uniform", "deterministic_sine",
                                            "adversarial_sign"};
  std::vector<double> verify_displacements = {0.01, 0.1, 1.0};
  int verify_seeds = 3;
  double verify_slack = 3.0;
  std::uint64_t verify_mc_samples = 100000;
  double debug_rhs_scale = 1.0;

  std::optional<double> override_mu, override_D, override_h, override_delta_max;
  std::optional<std::uint64_t> override_N;
};

template <class T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key)) j.at(key).get_to(field);
}

template <class T>
void take_opt(const json& j, const char* key, std::optional<T>& field) {
  if (j.contains(key) && !j.at(key).is_null()) field = j.at(key).get<T>();
}

Config parse_config(const json& j) {
  static const std::vector<std::string> known = {
      "problem",        "policy",         "eps_grad",
      "noise",          "delta",          "delta_fraction",
      "seeds",          "seed",           "out",
      "mc_samples",     "max_steps",      "thin_limit",
      "sweep_eps",      "sweep_n",        "verify_problems",
      "verify_mus",     "verify_delta_fractions", "verify_noises",
      "verify_displacements", "verify_seeds", "verify_slack",
      "verify_mc_samples", "debug_rhs_scale", "override_mu",
      "override_D",     "override_h",     "override_delta_max",
      "override_N"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw zoh::UsageError("config: unknown key '" + it.key() + "'");

  Config c;
  try {
    take(j, "problem", c.problem);
    take(j, "policy", c.policy);
    take(j, "eps_grad", c.eps_grad);
    take(j, "noise", c.noise);
    take(j, "delta", c.delta);
    if (j.contains("delta_fraction") && !j.at("delta_fraction").is_null())
      c.delta_fraction = j.at("delta_fraction").get<double>();
    take(j, "seeds", c.seeds);
    take(j, "seed", c.seed);
    take(j, "out", c.out);
    take(j, "mc_samples", c.mc_samples);
    take(j, "max_steps", c.max_steps);
    take(j, "thin_limit", c.thin_limit);
    take(j, "sweep_eps", c.sweep_eps);
    take(j, "sweep_n", c.sweep_n);
    take(j, "verify_problems", c.verify_problems);
    take(j, "verify_mus", c.verify_mus);
    take(j, "verify_delta_fractions", c.verify_delta_fractions);
    take(j, "verify_noises", c.verify_noises);
    take(j, "verify_displacements", c.verify_displacements);
    take(j, "verify_seeds", c.verify_seeds);
    take(j, "verify_slack", c.verify_slack);
    take(j, "verify_mc_samples", c.verify_mc_samples);
    take(j, "debug_rhs_scale", c.debug_rhs_scale);
    take_opt(j, "override_mu", c.override_mu);
    take_opt(j, "override_D", c.override_D);
    take_opt(j, "override_h", c.override_h);
    take_opt(j, "override_delta_max", c.override_delta_max);
    take_opt(j, "override_N", c.override_N);
  } catch (const json::exception& e) {
    throw zoh::UsageError(std::string("config: ") + e.what());
  }
  if (c.seeds.empty()) throw zoh::UsageError("config: seeds must be non-empty");
  return c;
}

json load_config_json(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw zoh::UsageError("cannot read config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw zoh::UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw zoh::UsageError("config must be a JSON object");
  for (const std::string& ov : overrides) {
    const auto eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw zoh::UsageError("--override expects key=value, got '" + ov + "'");
    const std::string key = ov.substr(0, eq);
    const std::string val = ov.substr(eq + 1);
    json parsed = json::parse(val, nullptr, false);  // non-throwing
    j[key] = parsed.is_discarded() ? json(val) : parsed;
  }
  return j;
}

zoh::PlanOverrides plan_overrides(const Config& c) {
  zoh::PlanOverrides ov;
  ov.mu = c.override_mu;
  ov.D = c.override_D;
  ov.h = c.override_h;
  ov.delta_max = c.override_delta_max;
  ov.N = c.override_N;
  return ov;
}

// Effective oracle inexactness: delta_fraction (of the plan's ceiling) wins
// over the absolute delta when both are present.
double resolve_delta(const Config& c, const zoh::Plan& plan) {
  if (std::isfinite(c.delta_fraction)) return c.delta_fraction * plan.delta_max;
  return c.delta;
}

// Closed-form rate row instantiated by the plan: exponents of the oracle-call
// budget N = O(n^a / eps^b) and of the noise ceiling delta_max as a function
// of (eps, n) once mu0(eps) is substituted in.
struct RateRow {
  double n_exp, eps_exp, delta_eps_exp, delta_n_exp;
};

RateRow rate_row(zoh::Policy policy, double nu) {
  RateRow r{};
  r.n_exp = zoh::predicted_exponent(policy, nu, "n");
  r.eps_exp = -zoh::predicted_exponent(policy, nu, "eps");
  if (policy == zoh::Policy::T2) {
    r.delta_eps_exp = (5.0 - nu) / (2.0 * (1.0 + nu));
    r.delta_n_exp = (13.0 - 3.0 * nu) / 4.0;
  } else {  // T1 and NU1 share the T1 ceiling composition
    r.delta_eps_exp = (3.0 + nu) / (4.0 * nu);
    r.delta_n_exp = (3.0 + 7.0 * nu) / (4.0 * nu);
  }
  return r;
}

int cmd_plan(const Config& c) {
  const zoh::TestProblem problem = zoh::make_problem(c.problem);
  const zoh::Policy policy = zoh::policy_from_string(c.policy);
  const zoh::Plan plan = zoh::make_plan(policy, problem, c.eps_grad, plan_overrides(c));

  std::cout << "plan: policy=" << zoh::to_string(plan.policy) << " problem=" << c.problem
            << " eps_grad=" << c.eps_grad << "\n"
            << "  mu        = " << zoh::io::csv_num(plan.mu) << "\n"
            << "  D         = " << zoh::io::csv_num(plan.D) << "\n"
            << "  h         = " << zoh::io::csv_num(plan.h) << "\n"
            << "  N         = " << plan.N << "\n"
            << "  delta_max = " << zoh::io::csv_num(plan.delta_max) << "\n"
            << "  A-pair    = branch=" << zoh::to_string(plan.apair.branch)
            << " A1=" << zoh::io::csv_num(plan.apair.A1)
            << " A2=" << zoh::io::csv_num(plan.apair.A2) << "\n";
  json j = zoh::io::plan_to_json(plan);
  j["problem"] = c.problem;
  if (policy != zoh::Policy::manual) {
    const RateRow r = rate_row(policy, problem.objective->holder().nu);
    std::cout << "  rate row  : N = O(n^" << r.n_exp << " / eps^" << r.eps_exp
              << "), delta_max = O(eps^" << r.delta_eps_exp << " / n^" << r.delta_n_exp
              << ")\n";
    json row;
    row["n_exponent"] = r.n_exp;
    row["eps_exponent"] = r.eps_exp;
    row["delta_max_eps_exponent"] = r.delta_eps_exp;
    row["delta_max_n_exponent"] = r.delta_n_exp;
    j["rate_row"] = row;
  }
  json doc;
  doc["schema_version"] = zoh::io::kSchemaVersion;
  doc["plan"] = j;
  std::cout << doc.dump(2) << "\n";
  zoh::io::write_json(std::filesystem::path(c.out) / "plan.json", doc);
  return kExitOk;
}

int cmd_run(const Config& c) {
  const zoh::TestProblem problem = zoh::make_problem(c.problem);
  const zoh::Policy policy = zoh::policy_from_string(c.policy);
  const zoh::Plan plan = zoh::make_plan(policy, problem, c.eps_grad, plan_overrides(c));
  const double delta = resolve_delta(c, plan);

  json doc;
  doc["schema_version"] = zoh::io::kSchemaVersion;
  doc["problem"] = c.problem;
  doc["noise"] = c.noise;
  doc["delta"] = delta;
  doc["plan"] = zoh::io::plan_to_json(plan);
  json per_seed = json::array();

  bool any_diverged = false, any_flagged = false;
  double sum_f = 0.0, min_f = std::numeric_limits<double>::infinity();
  double sum_fmu = 0.0, min_fmu = std::numeric_limits<double>::infinity();
  int n_eval = 0;

  for (std::uint64_t seed : c.seeds) {
    const zoh::NoisyOracle oracle(problem.objective,
                                  zoh::make_noise(c.noise, zoh::derive_seed(seed, 0x6e6f697365ULL)),
                                  delta);
    zoh::RunOptions opt;
    opt.thin_limit = c.thin_limit;
    opt.max_steps = c.max_steps;
    const zoh::RunRecord rec = zoh::run_zo_gd(oracle, problem.space, plan, problem.x0, seed, opt);
    zoh::io::write_text_atomic(
        std::filesystem::path(c.out) / ("run_seed" + std::to_string(seed) + ".csv"),
        zoh::io::run_to_csv(rec));
    any_diverged |= rec.diverged;
    any_flagged |= rec.flagged;

    json row = zoh::io::run_to_json(rec);
    if (!rec.diverged) {
      const zoh::RunEvaluation ev = zoh::evaluate_run(rec, problem, c.mc_samples);
      row["evaluation"] = zoh::io::evaluation_to_json(ev);
      sum_f += ev.min_grad_f_sq;
      min_f = std::min(min_f, ev.min_grad_f_sq);
      sum_fmu += ev.min_grad_fmu_sq;
      min_fmu = std::min(min_fmu, ev.min_grad_fmu_sq);
      ++n_eval;
    }
    per_seed.push_back(std::move(row));
  }

  doc["runs"] = per_seed;
  json agg;
  agg["seeds_evaluated"] = n_eval;
  agg["any_diverged"] = any_diverged;
  agg["ceiling_violation"] = any_flagged;
  if (n_eval > 0) {
    agg["mean_min_grad_f_sq"] = sum_f / n_eval;
    agg["min_min_grad_f_sq"] = min_f;
    agg["mean_min_grad_fmu_sq"] = sum_fmu / n_eval;
    agg["min_min_grad_fmu_sq"] = min_fmu;
  }
  doc["aggregate"] = agg;
  zoh::io::write_json(std::filesystem::path(c.out) / "run_summary.json", doc);

  std::cout << "run: " << c.seeds.size() << " seed(s), N=" << plan.N << ", delta=" << delta
            << (any_flagged ? "  [WARNING: delta exceeds plan ceiling]" : "") << "\n";
  if (n_eval > 0)
    std::cout << "  mean min ||grad f||^2    = " << sum_f / n_eval << "\n"
              << "  mean min ||grad f_mu||^2 = " << sum_fmu / n_eval << "\n";
  if (any_diverged) {
    std::cerr << "zoh run: at least one seed diverged; partial outputs retained in " << c.out
              << "\n";
    return kExitDiverged;
  }
  return kExitOk;
}

int cmd_verify(const Config& c) {
  std::vector<std::string> specs = c.verify_problems;
  if (specs.empty()) specs.push_back(c.problem);

  zoh::VerifySummary total;
  for (const std::string& pspec : specs) {
    zoh::VerifySpec vs = zoh::make_verify_spec(zoh::make_problem(pspec), c.seed);
    vs.mus = c.verify_mus;
    vs.delta_fractions = c.verify_delta_fractions;
    vs.noises = c.verify_noises;
    vs.displacements = c.verify_displacements;
    vs.mc_samples = c.verify_mc_samples;
    vs.seeds = c.verify_seeds;
    vs.slack = c.verify_slack;
    vs.debug_rhs_scale = c.debug_rhs_scale;
    const zoh::VerifySummary s = zoh::run_all_checks(vs);
    total.passed += s.passed;
    total.failed += s.failed;
    total.inconclusive += s.inconclusive;
    for (const zoh::BoundReport& r : s.reports) {
      total.reports.push_back(r);
      total.reports.back().name = pspec + "/" + r.name;
    }
  }

  for (const zoh::BoundReport& r : total.reports)
    if (!r.inconclusive && !r.satisfied)
      std::cout << "FAIL  " << r.name << "  lhs=" << r.lhs << " rhs=" << r.rhs
                << " se=" << r.se << (r.note.empty() ? "" : "  (" + r.note + ")") << "\n";
  for (const zoh::BoundReport& r : total.reports)
    if (r.inconclusive)
      std::cout << "INCONCLUSIVE  " << r.name << "  lhs=" << r.lhs << " rhs=" << r.rhs
                << " se=" << r.se << "\n";
  std::cout << "verify: " << total.passed << " passed, " << total.failed << " failed, "
            << total.inconclusive << " inconclusive (" << total.reports.size()
            << " checks)\n";
  zoh::io::write_json(std::filesystem::path(c.out) / "verify_report.json",
                      zoh::io::verify_to_json(total));
  if (total.inconclusive > 0)
    std::cerr << "zoh verify: " << total.inconclusive
              << " check(s) inconclusive (standard error above 10% of bound)\n";
  return total.failed == 0 ? kExitOk : kExitVerifyFailed;
}

int cmd_sweep(const Config& c) {
  if (c.sweep_eps.empty() == c.sweep_n.empty())
    throw zoh::UsageError("sweep: exactly one of sweep_eps / sweep_n must be non-empty");
  zoh::SweepSpec ss;
  ss.problem = c.problem;
  ss.policy = zoh::policy_from_string(c.policy);
  ss.axis = c.sweep_eps.empty() ? "n" : "eps";
  ss.values = c.sweep_eps.empty() ? c.sweep_n : c.sweep_eps;
  ss.eps_grad = c.eps_grad;
  ss.seeds = c.seeds;
  ss.noise = c.noise;
  ss.delta = c.delta;
  ss.delta_fraction = c.delta_fraction;
  ss.eval_mc_samples = c.mc_samples;
  ss.max_steps = c.max_steps;

  const zoh::SweepResult res = zoh::run_sweep(ss);
  zoh::io::write_text_atomic(std::filesystem::path(c.out) / "sweep.csv",
                             zoh::io::sweep_to_csv(res));
  zoh::io::write_json(std::filesystem::path(c.out) / "sweep_slopes.json",
                      zoh::io::sweep_to_json(res));
  std::cout << "sweep over " << res.axis << ": measured slope = " << res.fit.slope
            << ", predicted = " << res.predicted << " (" << res.fit.points
            << " axis points)\n";
  if (res.any_censored)
    std::cerr << "zoh sweep: some cells censored (target not reached within planned N); "
                 "slope fitted on uncensored axis values only\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zoh: zeroth-order optimization under an inexact oracle"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::string> out_flag;

  for (const char* name : {"plan", "run", "verify", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--seed", seed_flag, "replace the config's seed list with [S]");
    sub->add_option("--out", out_flag, "output directory (overrides config)");
    sub->add_option("--override", overrides, "key=value config override (repeatable)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    json j = load_config_json(config_path, overrides);
    Config c = parse_config(j);
    if (seed_flag) {
      c.seeds = {*seed_flag};
      c.seed = *seed_flag;
    }
    if (out_flag) c.out = *out_flag;

    if (app.got_subcommand("plan")) return cmd_plan(c);
    if (app.got_subcommand("run")) return cmd_run(c);
    if (app.got_subcommand("verify")) return cmd_verify(c);
    return cmd_sweep(c);
  } catch (const zoh::UsageError& e) {
    std::cerr << "zoh: " << e.what() << "\n";
    return kExitUsage;
  } catch (const zoh::EvalError& e) {
    std::cerr << "zoh: oracle evaluation failed: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "zoh: " << e.what() << "\n";
    return 1;
  }
}
