#pragma once

// Serialization of plans, runs, verification reports, and sweeps.
//
// JSON documents are nlohmann ordered_json with a top-level schema_version
// of "1"; key order is fixed by construction order, so identical inputs
// produce byte-identical files.  CSV files carry pinned headers.  All writes
// go through a temp file followed by an atomic rename, and no output file
// records wall-clock timings (outputs depend only on inputs and seeds).

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>

#include <json.hpp>

#include "zoh/bounds.hpp"
#include "zoh/core.hpp"
#include "zoh/solver.hpp"
#include "zoh/sweep.hpp"
#include "zoh/verify.hpp"

namespace zoh {
namespace io {

using json = nlohmann::ordered_json;

inline constexpr const char* kSchemaVersion = "1";

// Shortest round-trip decimal form (%.17g trimmed is overkill; 17 significant
// digits always round-trip for IEEE doubles and keep files deterministic).
inline std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open " + tmp.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw UsageError("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text_atomic(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------- plans ----

inline json apair_to_json(const APair& a) {
  json j;
  j["A1"] = a.A1;
  j["A2"] = a.A2;
  j["branch"] = to_string(a.branch);
  j["delta_hat"] = a.delta_hat;
  return j;
}

inline json plan_to_json(const Plan& p) {
  json j;
  j["policy"] = to_string(p.policy);
  j["n"] = p.n;
  j["eps_grad"] = p.eps_grad;
  j["mu"] = p.mu;
  j["D"] = p.D;
  j["h"] = p.h;
  j["N"] = p.N;
  j["delta_max"] = p.delta_max;
  j["apair"] = apair_to_json(p.apair);
  j["f_gap"] = p.f_gap;
  return j;
}

// ----------------------------------------------------------------- runs ----

inline constexpr int kMaxCsvDim = 16;

inline std::string run_csv_header(int n) {
  std::string h = "k,f_noisy,g_norm";
  if (n <= kMaxCsvDim)
    for (int i = 0; i < n; ++i) h += ",x" + std::to_string(i);
  h += "\n";
  return h;
}

inline std::string run_to_csv(const RunRecord& rec) {
  const int n = rec.plan.n;
  std::string out = run_csv_header(n);
  for (const StepRow& row : rec.steps) {
    out += std::to_string(row.k);
    out += ',';
    out += csv_num(row.f_noisy);
    out += ',';
    out += csv_num(row.g_norm);
    if (n <= kMaxCsvDim)
      for (int i = 0; i < n; ++i) {
        out += ',';
        out += csv_num(row.x[i]);
      }
    out += '\n';
  }
  return out;
}

inline json evaluation_to_json(const RunEvaluation& ev) {
  json j;
  j["min_grad_fmu_sq"] = ev.min_grad_fmu_sq;
  j["min_grad_fmu_se"] = ev.min_grad_fmu_se;
  j["argmin_fmu_k"] = ev.argmin_fmu_k;
  j["min_grad_f_sq"] = ev.min_grad_f_sq;
  j["argmin_f_k"] = ev.argmin_f_k;
  j["func_gap_bound_at_mu"] = ev.func_gap_bound_at_mu;
  j["mc_samples"] = ev.mc_samples;
  return j;
}

inline json run_to_json(const RunRecord& rec) {
  json j;
  j["seed"] = rec.seed;
  j["steps_executed"] = rec.steps_executed;
  j["oracle_calls"] = rec.oracle_calls;
  j["flagged"] = rec.flagged;
  j["diverged"] = rec.diverged;
  j["last_finite_k"] = rec.last_finite_k;
  j["hit"] = rec.hit;
  j["first_hit_k"] = rec.first_hit_k;
  j["min_g_norm"] = rec.min_g_norm;
  j["argmin_g_k"] = rec.argmin_g_k;
  if (rec.has_true_grad) {
    j["min_true_grad_sq"] = rec.min_true_grad_sq;
    j["argmin_true_k"] = rec.argmin_true_k;
  }
  json fx = json::array();
  for (int i = 0; i < rec.final_x.size(); ++i) fx.push_back(rec.final_x[i]);
  j["final_x"] = fx;
  return j;
}

// -------------------------------------------------------------- verify -----

inline json report_to_json(const BoundReport& r) {
  json j;
  j["name"] = r.name;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["margin"] = r.margin;
  j["se"] = r.se;
  j["slack"] = r.slack;
  j["satisfied"] = r.satisfied;
  j["inconclusive"] = r.inconclusive;
  j["status"] = r.status();
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline json verify_to_json(const VerifySummary& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["passed"] = s.passed;
  j["failed"] = s.failed;
  j["inconclusive"] = s.inconclusive;
  json reps = json::array();
  for (const BoundReport& r : s.reports) reps.push_back(report_to_json(r));
  j["reports"] = reps;
  return j;
}

// --------------------------------------------------------------- sweeps ----

inline constexpr const char* kSweepCsvHeader =
    "axis_value,seed,N_hit,censored,min_grad_f_sq,min_grad_fmu_sq,oracle_calls\n";

inline std::string sweep_to_csv(const SweepResult& res) {
  std::string out = kSweepCsvHeader;
  for (const SweepCell& c : res.cells) {
    out += csv_num(c.axis_value);
    out += ',';
    out += std::to_string(c.seed);
    out += ',';
    out += std::to_string(c.n_hit);
    out += ',';
    out += c.censored ? '1' : '0';
    out += ',';
    out += csv_num(c.min_grad_f_sq);
    out += ',';
    out += csv_num(c.min_grad_fmu_sq);
    out += ',';
    out += std::to_string(c.oracle_calls);
    out += '\n';
  }
  return out;
}

inline json sweep_to_json(const SweepResult& res) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["axis"] = res.axis;
  j["measured_slope"] = res.fit.slope;
  j["intercept"] = res.fit.intercept;
  j["fit_points"] = res.fit.points;
  j["predicted_slope"] = res.predicted;
  j["any_censored"] = res.any_censored;
  json pts = json::array();
  for (std::size_t i = 0; i < res.usable_axis.size(); ++i) {
    json p;
    p["axis_value"] = res.usable_axis[i];
    p["mean_n_hit"] = res.mean_n_hit[i];
    pts.push_back(p);
  }
  j["points"] = pts;
  return j;
}

}  // namespace io
}  // namespace zoh
