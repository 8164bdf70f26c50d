#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "zoh/problems.hpp"
#include "zoh/solver.hpp"

namespace fs = std::filesystem;
using njson = nlohmann::json;

namespace {

std::string cli_path() {
  const char* p = std::getenv("ZOH_CLI");
  REQUIRE(p != nullptr);
  return p;
}

fs::path scratch(const std::string& sub) {
  const char* p = std::getenv("ZOH_TEST_DIR");
  REQUIRE(p != nullptr);
  const fs::path dir = fs::path(p) / sub;
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& capture = {}) {
  std::string cmd = cli_path() + " " + args;
  if (capture.empty())
    cmd += " > /dev/null 2>&1";
  else
    cmd += " > " + capture.string() + " 2>&1";
  const int st = std::system(cmd.c_str());
  REQUIRE(st != -1);
  REQUIRE(WIFEXITED(st));
  return WEXITSTATUS(st);
}

fs::path write_config(const fs::path& dir, const njson& extra) {
  njson j = extra;
  const fs::path p = dir / "config.json";
  std::ofstream out(p);
  out << j.dump(2) << "\n";
  return p;
}

njson read_json(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  return njson::parse(in);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("plan: deterministic schema-stamped output with the rate row") {
  const fs::path dir = scratch("plan_ok");
  const fs::path cfg = write_config(
      dir, {{"problem", "quadratic:n=8:spectrum=geom(1,10):x0=ones"},
            {"policy", "NU1"},
            {"eps_grad", 1e-2}});

  const fs::path log = dir / "stdout.txt";
  REQUIRE(run_cli("plan --config " + cfg.string() + " --out " + (dir / "a").string(),
                  log) == 0);
  REQUIRE(run_cli("plan --config " + cfg.string() + " --out " + (dir / "b").string()) == 0);
  CHECK(read_text(dir / "a" / "plan.json") == read_text(dir / "b" / "plan.json"));
  CHECK(read_text(log).find("rate row") != std::string::npos);

  const njson doc = read_json(dir / "a" / "plan.json");
  CHECK(doc.at("schema_version") == "1");
  const njson& plan = doc.at("plan");
  CHECK(plan.at("policy") == "NU1");

  // Cross-check against an in-process plan for the same inputs.
  const zoh::TestProblem prob = zoh::make_problem("quadratic:n=8:spectrum=geom(1,10):x0=ones");
  const zoh::Plan expect = zoh::make_plan(zoh::Policy::NU1, prob, 1e-2);
  CHECK(plan.at("N").get<std::uint64_t>() == expect.N);
  CHECK(plan.at("mu").get<double>() == Catch::Approx(expect.mu).epsilon(1e-15));
  CHECK(plan.at("delta_max").get<double>() == Catch::Approx(expect.delta_max).epsilon(1e-15));
  CHECK(plan.at("apair").at("A1").get<double>() == Catch::Approx(expect.apair.A1));

  const njson& row = plan.at("rate_row");
  CHECK(row.at("n_exponent").get<double>() == 1.0);
  CHECK(row.at("eps_exponent").get<double>() == 1.0);
  CHECK(row.at("delta_max_eps_exponent").get<double>() == 1.0);
  CHECK(row.at("delta_max_n_exponent").get<double>() == 2.5);
}

TEST_CASE("usage errors exit with code 2") {
  const fs::path dir = scratch("usage");

  CHECK(run_cli("plan") == 2);                              // missing --config
  CHECK(run_cli("plan --config /nonexistent/c.json") == 2);  // unreadable file
  CHECK(run_cli("frobnicate --config x.json") == 2);         // unknown subcommand

  const fs::path bad_json = dir / "broken.json";
  std::ofstream(bad_json) << "{nope";
  CHECK(run_cli("plan --config " + bad_json.string()) == 2);

  const fs::path unknown = write_config(scratch("usage_k"), {{"bogus_key", 1}});
  CHECK(run_cli("plan --config " + unknown.string()) == 2);

  const fs::path badpol =
      write_config(scratch("usage_p"), {{"policy", "T9"}});
  CHECK(run_cli("plan --config " + badpol.string()) == 2);

  const fs::path manual =
      write_config(scratch("usage_m"), {{"policy", "manual"}});
  CHECK(run_cli("plan --config " + manual.string()) == 2);

  // sweep needs exactly one axis
  const fs::path both = write_config(
      scratch("usage_s"),
      {{"sweep_eps", {1e-1, 1e-2}}, {"sweep_n", {4, 8}}});
  CHECK(run_cli("sweep --config " + both.string()) == 2);
  const fs::path neither = write_config(scratch("usage_s2"), njson::object());
  CHECK(run_cli("sweep --config " + neither.string()) == 2);

  CHECK(run_cli("--help") == 0);
}

TEST_CASE("planning the first policy on a non-smoothable class is refused") {
  const fs::path dir = scratch("plan_nu0");
  const fs::path cfg =
      write_config(dir, {{"problem", "holder:n=4:nu=0"}, {"policy", "T1"}});
  const fs::path log = dir / "err.txt";
  CHECK(run_cli("plan --config " + cfg.string() + " --out " + dir.string(), log) == 2);
  CHECK(read_text(log).find("requires nu") != std::string::npos);
}

TEST_CASE("run: per-seed trajectories plus an aggregated summary") {
  const fs::path dir = scratch("run_ok");
  const fs::path cfg = write_config(
      dir, {{"problem", "quadratic:n=4:spectrum=geom(1,4)"},
            {"policy", "NU1"},
            {"eps_grad", 1e-2},
            {"seeds", {1, 2}},
            {"mc_samples", 4096},
            {"max_steps", 60}});
  REQUIRE(run_cli("run --config " + cfg.string() + " --out " + dir.string()) == 0);

  const std::string csv = read_text(dir / "run_seed1.csv");
  const auto rows = lines_of(csv);
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0] == "k,f_noisy,g_norm,x0,x1,x2,x3");
  CHECK(rows.size() == 61);  // header + one row per executed step
  CHECK(rows[1].rfind("0,", 0) == 0);
  CHECK(fs::exists(dir / "run_seed2.csv"));

  const njson doc = read_json(dir / "run_summary.json");
  CHECK(doc.at("schema_version") == "1");
  CHECK(doc.at("noise") == "none");
  CHECK(doc.at("delta").get<double>() == 0.0);
  REQUIRE(doc.at("runs").size() == 2);
  const njson& r0 = doc.at("runs")[0];
  CHECK(r0.at("seed").get<std::uint64_t>() == 1);
  CHECK(r0.at("steps_executed").get<std::uint64_t>() == 60);
  CHECK(r0.at("oracle_calls").get<std::uint64_t>() == 120);
  CHECK_FALSE(r0.at("diverged").get<bool>());
  CHECK(r0.at("evaluation").at("mc_samples").get<std::uint64_t>() == 4096);
  const njson& agg = doc.at("aggregate");
  CHECK(agg.at("seeds_evaluated").get<int>() == 2);
  CHECK_FALSE(agg.at("any_diverged").get<bool>());
  CHECK_FALSE(agg.at("ceiling_violation").get<bool>());
  CHECK(agg.at("mean_min_grad_f_sq").get<double>() >= 0.0);
  CHECK(agg.at("mean_min_grad_fmu_sq").get<double>() >= 0.0);
}

TEST_CASE("--seed replaces the seed list; --override rewrites keys") {
  const fs::path dir = scratch("run_seedflag");
  const fs::path cfg = write_config(
      dir, {{"problem", "quadratic:n=4:spectrum=geom(1,4)"},
            {"policy", "NU1"},
            {"seeds", {1, 2}},
            {"mc_samples", 0},
            {"max_steps", 10}});
  REQUIRE(run_cli("run --config " + cfg.string() + " --out " + dir.string() +
                  " --seed 9") == 0);
  CHECK(fs::exists(dir / "run_seed9.csv"));
  CHECK_FALSE(fs::exists(dir / "run_seed1.csv"));
  njson doc = read_json(dir / "run_summary.json");
  REQUIRE(doc.at("runs").size() == 1);
  CHECK(doc.at("runs")[0].at("seed").get<std::uint64_t>() == 9);

  const fs::path dir2 = scratch("run_override");
  REQUIRE(run_cli("run --config " + cfg.string() + " --out " + dir2.string() +
                  " --override 'seeds=[7,8]' --override max_steps=5") == 0);
  CHECK(fs::exists(dir2 / "run_seed7.csv"));
  CHECK(fs::exists(dir2 / "run_seed8.csv"));
  doc = read_json(dir2 / "run_summary.json");
  CHECK(doc.at("runs")[0].at("steps_executed").get<std::uint64_t>() == 5);

  const fs::path dir3 = scratch("plan_override");
  REQUIRE(run_cli("plan --config " + cfg.string() + " --out " + dir3.string() +
                  " --override eps_grad=0.5 --override policy=T2") == 0);
  const njson plan = read_json(dir3 / "plan.json").at("plan");
  CHECK(plan.at("eps_grad").get<double>() == 0.5);
  CHECK(plan.at("policy") == "T2");
}

TEST_CASE("a diverging run exits 3 and records the divergence") {
  const fs::path dir = scratch("run_div");
  const fs::path cfg = write_config(
      dir, {{"problem", "quadratic:n=4"},
            {"policy", "manual"},
            {"seeds", {1}},
            {"mc_samples", 0},
            {"override_mu", 0.1},
            {"override_D", 1.0},
            {"override_h", 1e8},
            {"override_N", 40}});
  CHECK(run_cli("run --config " + cfg.string() + " --out " + dir.string()) == 3);
  const njson doc = read_json(dir / "run_summary.json");
  CHECK(doc.at("aggregate").at("any_diverged").get<bool>());
  CHECK(doc.at("runs")[0].at("diverged").get<bool>());
  CHECK(doc.at("aggregate").at("seeds_evaluated").get<int>() == 0);
}

TEST_CASE("noise far above the plan ceiling is flagged but still runs") {
  const fs::path dir = scratch("run_ceiling");
  const fs::path cfg = write_config(
      dir, {{"problem", "quadratic:n=4:spectrum=geom(1,4)"},
            {"policy", "NU1"},
            {"noise", "deterministic_sine"},
            {"delta_fraction", 1000.0},
            {"seeds", {1}},
            {"mc_samples", 0},
            {"max_steps", 30}});
  CHECK(run_cli("run --config " + cfg.string() + " --out " + dir.string()) == 0);
  const njson doc = read_json(dir / "run_summary.json");
  CHECK(doc.at("aggregate").at("ceiling_violation").get<bool>());
  CHECK(doc.at("runs")[0].at("flagged").get<bool>());
  const double ceiling = doc.at("plan").at("delta_max").get<double>();
  CHECK(doc.at("delta").get<double>() == Catch::Approx(1000.0 * ceiling).epsilon(1e-12));
}

TEST_CASE("verify: a reduced clean matrix passes and a shrunk one fails") {
  const fs::path dir = scratch("verify_ok");
  const fs::path cfg = write_config(
      dir, {{"problem", "quadratic:n=2"},
            {"verify_mus", {0.5}},
            {"verify_delta_fractions", {0.0, 1.0}},
            {"verify_noises", {"uniform"}},
            {"verify_displacements", {1.0}},
            {"verify_seeds", 1},
            {"verify_mc_samples", 20000}});
  REQUIRE(run_cli("verify --config " + cfg.string() + " --out " + dir.string()) == 0);
  const njson doc = read_json(dir / "verify_report.json");
  CHECK(doc.at("schema_version") == "1");
  CHECK(doc.at("failed").get<int>() == 0);
  CHECK(doc.at("passed").get<int>() > 0);
  REQUIRE(!doc.at("reports").empty());
  const std::string name = doc.at("reports")[0].at("name").get<std::string>();
  CHECK(name.rfind("quadratic:n=2/", 0) == 0);

  const fs::path dir2 = scratch("verify_bad");
  CHECK(run_cli("verify --config " + cfg.string() + " --out " + dir2.string() +
                " --override debug_rhs_scale=0.1") == 4);
  CHECK(read_json(dir2 / "verify_report.json").at("failed").get<int>() > 0);
}

TEST_CASE("sweep: pinned csv schema and slope fits on both axes") {
  const fs::path dir = scratch("sweep_eps");
  const fs::path cfg = write_config(
      dir, {{"problem", "quadratic:n=4:spectrum=geom(1,4):x0=ones"},
            {"policy", "NU1"},
            {"sweep_eps", {20.0, 10.0}},
            {"seeds", {1, 2, 3}},
            {"mc_samples", 0}});
  REQUIRE(run_cli("sweep --config " + cfg.string() + " --out " + dir.string()) == 0);

  const auto rows = lines_of(read_text(dir / "sweep.csv"));
  REQUIRE(rows.size() == 7);  // header + 2 axis values x 3 seeds
  CHECK(rows[0] == "axis_value,seed,N_hit,censored,min_grad_f_sq,min_grad_fmu_sq,oracle_calls");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    std::vector<std::string> fields;
    std::istringstream fs_row(rows[i]);
    std::string f;
    while (std::getline(fs_row, f, ',')) fields.push_back(f);
    REQUIRE(fields.size() == 7);
    CHECK(fields[3] == "0");  // nothing censored on this easy target
    CHECK(std::stoull(fields[2]) > 0);
  }

  const njson doc = read_json(dir / "sweep_slopes.json");
  CHECK(doc.at("schema_version") == "1");
  CHECK(doc.at("axis") == "eps");
  CHECK(doc.at("fit_points").get<int>() == 2);
  CHECK(doc.at("predicted_slope").get<double>() == -1.0);
  CHECK_FALSE(doc.at("any_censored").get<bool>());
  CHECK(doc.at("measured_slope").get<double>() < 0.0);
  CHECK(doc.at("points").size() == 2);

  const fs::path dir2 = scratch("sweep_n");
  const fs::path cfg2 = write_config(
      dir2, {{"problem", "quadratic:spectrum=geom(1,4):x0=ones"},
             {"policy", "NU1"},
             {"eps_grad", 5.0},
             {"sweep_n", {4, 8}},
             {"seeds", {1}},
             {"mc_samples", 0}});
  REQUIRE(run_cli("sweep --config " + cfg2.string() + " --out " + dir2.string()) == 0);
  const njson doc2 = read_json(dir2 / "sweep_slopes.json");
  CHECK(doc2.at("axis") == "n");
  CHECK(doc2.at("predicted_slope").get<double>() == 1.0);
}
