#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "scopf/cli.hpp"
#include "scopf/json_io.hpp"
#include "test_cases.hpp"

using namespace scopf;
using nlohmann::json;

namespace {

// Fresh per-test scratch directory under the build tree.
std::string scratch(const std::string& name) {
  std::filesystem::path p = std::filesystem::current_path() / "test_scratch" / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p.string();
}

int run_cli(std::vector<std::string> args) {
  std::vector<const char*> argv = {"scopf"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string write_case3(const std::string& dir) {
  std::string path = dir + "/case3.m";
  io::write_file(path, kThreeBusCase);
  return path;
}

}  // namespace

TEST_CASE("fnv1a64 known vectors") {
  CHECK(io::fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(io::fnv1a64_hex("a") == "af63dc4c8601ec8c");
  CHECK(io::fnv1a64_hex("foobar") == "85944171f73967e8");
}

TEST_CASE("file helpers round-trip and fail loudly") {
  std::string dir = scratch("io_files");
  io::write_file(dir + "/x.txt", "payload\n");
  CHECK(io::read_file(dir + "/x.txt") == "payload\n");
  CHECK_THROWS_AS(io::read_file(dir + "/missing.txt"), io::IoError);
  io::ensure_dir(dir + "/a/b/c");
  io::write_file(dir + "/a/b/c/y.txt", "");
  CHECK(io::read_file(dir + "/a/b/c/y.txt").empty());
}

TEST_CASE("severity report JSON round-trip") {
  SeverityReport rep;
  rep.economic_cost = 8171.0129906553303;
  rep.violations = {{"gen_q[1]", 2.5}, {"residual", 0.125}};
  rep.severity = rep.economic_cost + 2.625;
  rep.log_prior = -9.1893853320467278;
  rep.risk_adjusted = rep.severity + rep.log_prior;
  rep.converged = false;

  SeverityReport back = io::severity_from_json(io::severity_to_json(rep));
  CHECK(back.economic_cost == rep.economic_cost);
  CHECK(back.violations == rep.violations);
  CHECK(back.severity == rep.severity);
  CHECK(back.log_prior == rep.log_prior);
  CHECK(back.risk_adjusted == rep.risk_adjusted);
  CHECK(back.converged == rep.converged);

  json j = io::severity_to_json(rep);
  j.erase("severity");
  CHECK_THROWS_AS(io::severity_from_json(j), io::IoError);
}

TEST_CASE("dispatch JSON round-trip validates the layout") {
  Network net = parse_case(kThreeBusCase);
  Dispatch d = nominal_dispatch(net);
  json j = io::dispatch_to_json(d);
  Dispatch back = io::dispatch_from_json(j, net);
  CHECK((flatten(back).array() == flatten(d).array()).all());

  j["p_g"].push_back(1.0);
  CHECK_THROWS_AS(io::dispatch_from_json(j, net), io::IoError);
  j["p_g"] = "nope";
  CHECK_THROWS_AS(io::dispatch_from_json(j, net), io::IoError);
}

TEST_CASE("stress report JSON round-trip with and without coverage") {
  StressReport r;
  r.samples = 64;
  r.seed = 7;
  r.prior_mu0 = 1.6449;
  r.prior_sigma0 = 1.0;
  r.failure_rate = 0.25;
  r.severity_quantiles = {1, 2, 3, 4, 5, 6, 7};
  r.outage_histogram = {{0, 3}, {2, 13}};

  StressReport back = io::stress_report_from_json(io::stress_report_to_json(r));
  CHECK(back.samples == 64);
  CHECK(back.seed == 7);
  CHECK(back.failure_rate == 0.25);
  CHECK(back.outage_histogram == r.outage_histogram);
  CHECK(back.severity_quantiles.p95 == 6.0);
  CHECK_FALSE(back.coverage_exceedance.has_value());
  CHECK(io::stress_report_to_json(r)["coverage_exceedance"].is_null());

  r.coverage_exceedance = 0.0625;
  back = io::stress_report_from_json(io::stress_report_to_json(r));
  REQUIRE(back.coverage_exceedance.has_value());
  CHECK(*back.coverage_exceedance == 0.0625);
}

TEST_CASE("solver result JSON carries the budget but no wall time") {
  Network net = parse_case(kThreeBusCase);
  SmcOptions o;
  o.n_x = 2;
  o.n_y = 2;
  o.rounds = 1;
  o.substeps = 0;
  o.seed = 3;
  ScopfResult res = smc_scopf(net, o);
  json j = io::scopf_result_to_json(res);
  CHECK(j["schema_version"] == 1);
  CHECK(j["budget"]["total"] == 4);
  CHECK(j["solve_count"] == 4);
  CHECK(j["history"].size() == 1);
  CHECK_FALSE(j.contains("wall_time"));
  CHECK_FALSE(j.contains("wall_time_seconds"));
  CHECK(j.dump() == io::scopf_result_to_json(res).dump());

  Dispatch d = io::dispatch_from_json(j["best_dispatch"], net);
  CHECK((flatten(d).array() == flatten(res.best_dispatch).array()).all());
}

TEST_CASE("config parser covers the whole schema") {
  std::string text = R"(
# full schema exercise
case = "grid.m"
out_dir = "out"
seed = 42
threads = 2
dispatchable_loads = true

[solver]
tol = 1e-9
max_iter = 25
regularization = 1e-7

[penalty]
L = 50.0
L_res = 60.0

[prior]
mu0 = 2.0
sigma0 = 0.5

[load_cost]
c2p = 1.0
c1p = 2.0
c2q = 3.0
c1q = 4.0

[smc]
n_x = 4
n_y = 5
rounds = 6
substeps = 7
tau_x = 0.001
tau_y = 0.002

[attack]
n_y = 8
steps = 9
tau = 0.003
dispatch = "prev/result.json"
trace_csv = true

[stress]
samples = 123
dispatch = "d.json"
predicted = "p.json"
samples_csv = false
)";
  cli::RunConfig c = cli::parse_config_text(text);
  CHECK(c.case_path == "grid.m");
  CHECK(c.out_dir == "out");
  CHECK(c.seed == 42);
  CHECK(c.threads == 2);
  CHECK(c.dispatchable_loads);
  CHECK(c.solver.tol == 1e-9);
  CHECK(c.solver.max_iter == 25);
  CHECK(c.solver.regularization == 1e-7);
  CHECK(c.penalty.L == 50.0);
  CHECK(c.penalty.L_res == 60.0);
  CHECK(c.prior.mu0 == 2.0);
  CHECK(c.prior.sigma0 == 0.5);
  CHECK(c.load_cost.c1q == 4.0);
  CHECK(c.smc.n_x == 4);
  CHECK(c.smc.substeps == 7);
  CHECK(c.smc.tau_y == 0.002);
  CHECK(c.attack.n_y == 8);
  CHECK(c.attack.substeps == 9);
  CHECK(c.attack.tau == 0.003);
  CHECK(c.attack.dispatch == "prev/result.json");
  CHECK(c.attack.trace_csv);
  CHECK(c.stress.samples == 123);
  CHECK(c.stress.predicted == "p.json");
  CHECK_FALSE(c.stress.samples_csv);
}

TEST_CASE("config parser rejects malformed input") {
  CHECK_THROWS_AS(cli::parse_config_text("nonsense = 1\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("seed = 1\nseed = 2\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("[smc\nn_x = 1\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("seed\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("seed =\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("seed = -3\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("threads = 1.5\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("case = unquoted\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("dispatchable_loads = yes\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("[prior]\nsigma0 = 0\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("[smc]\nn_x = 0\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::parse_config_text("[smc]\ntau_x = 0\n"), cli::ConfigError);
  CHECK_THROWS_AS(cli::load_config("/definitely/not/here.toml"), cli::ConfigError);
}

TEST_CASE("stress subcommand writes a hashed manifest") {
  std::string dir = scratch("cli_stress");
  std::string case_path = write_case3(dir);
  io::write_file(dir + "/run.toml",
                 "case = \"" + case_path + "\"\nout_dir = \"" + dir +
                     "/out\"\nseed = 4\n[stress]\nsamples = 12\n");

  CHECK(run_cli({"stress", "--config", dir + "/run.toml"}) == 0);

  json manifest = json::parse(io::read_file(dir + "/out/manifest.json"));
  CHECK(manifest["schema_version"] == 1);
  CHECK(manifest["command"] == "stress");
  REQUIRE(manifest["files"].is_array());
  bool saw_result = false, saw_hist = false, saw_samples = false;
  for (const json& f : manifest["files"]) {
    std::string content = io::read_file(dir + "/out/" + f["path"].get<std::string>());
    CHECK(io::fnv1a64_hex(content) == f["hash"].get<std::string>());
    saw_result |= f["path"] == "result.json";
    saw_hist |= f["path"] == "outage_histogram.csv";
    saw_samples |= f["path"] == "samples.csv";
  }
  CHECK(saw_result);
  CHECK(saw_hist);
  CHECK(saw_samples);

  StressReport rep = io::load_stress_report(dir + "/out/result.json");
  CHECK(rep.samples == 12);
  CHECK(rep.seed == 4);

  // Bitwise deterministic rerun.
  CHECK(run_cli({"stress", "--config", dir + "/run.toml", "--out-dir",
                 dir + "/out2"}) == 0);
  CHECK(io::read_file(dir + "/out/result.json") ==
        io::read_file(dir + "/out2/result.json"));
  CHECK(io::read_file(dir + "/out/samples.csv") ==
        io::read_file(dir + "/out2/samples.csv"));
}

TEST_CASE("solve and attack subcommands chain through result files") {
  std::string dir = scratch("cli_solve");
  std::string case_path = write_case3(dir);
  io::write_file(dir + "/run.toml",
                 "case = \"" + case_path + "\"\nout_dir = \"" + dir +
                     "/solve\"\nseed = 7\n[smc]\nn_x = 2\nn_y = 2\nrounds = 1\n"
                     "substeps = 1\ntau_x = 1e-4\ntau_y = 0.05\n"
                     "[attack]\nn_y = 2\nsteps = 2\ntau = 0.05\n");

  CHECK(run_cli({"solve", "--config", dir + "/run.toml"}) == 0);
  json res = json::parse(io::read_file(dir + "/solve/result.json"));
  CHECK(res["budget"]["per_round_dispatch"] == 2 * 2 * 2);
  CHECK(res["budget"]["total"] == 8 + 8 + 4);
  CHECK(res["solve_count"] == res["budget"]["total"]);
  std::string hist = io::read_file(dir + "/solve/history.csv");
  CHECK(hist.rfind("round,mean_ux,min_ux,max_sr,accept_x,accept_y\n", 0) == 0);
  CHECK(std::count(hist.begin(), hist.end(), '\n') == 2);

  // Attack the solved dispatch; traces are withheld unless requested.
  io::write_file(dir + "/atk.toml",
                 "case = \"" + case_path + "\"\nout_dir = \"" + dir +
                     "/atk\"\nseed = 7\n[attack]\nn_y = 2\nsteps = 2\ntau = 0.05\n"
                     "dispatch = \"" + dir + "/solve/result.json\"\n");
  CHECK(run_cli({"attack", "--config", dir + "/atk.toml"}) == 0);
  CHECK_FALSE(std::filesystem::exists(dir + "/atk/trace.csv"));
  json atk = json::parse(io::read_file(dir + "/atk/result.json"));
  CHECK(atk["contingencies"].size() == 2);

  io::write_file(dir + "/atk2.toml",
                 "case = \"" + case_path + "\"\nout_dir = \"" + dir +
                     "/atk2\"\nseed = 7\n[attack]\nn_y = 2\nsteps = 2\ntau = 0.05\n"
                     "trace_csv = true\n");
  CHECK(run_cli({"attack", "--config", dir + "/atk2.toml"}) == 0);
  std::string trace = io::read_file(dir + "/atk2/trace.csv");
  CHECK(trace.rfind("chain,step,accepted,log_density", 0) == 0);
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 1 + 2 * 2);
}

TEST_CASE("compare subcommand and error exits") {
  std::string dir = scratch("cli_compare");
  std::string case_path = write_case3(dir);
  for (const char* out : {"/a", "/b"}) {
    io::write_file(dir + "/s.toml",
                   "case = \"" + case_path + "\"\nout_dir = \"" + dir + out +
                       "\"\nseed = 6\n[stress]\nsamples = 10\nsamples_csv = false\n");
    CHECK(run_cli({"stress", "--config", dir + "/s.toml"}) == 0);
  }
  CHECK(run_cli({"compare", "--a", dir + "/a/result.json", "--b",
                 dir + "/b/result.json", "--out-dir", dir + "/cmp"}) == 0);
  json rows = json::parse(io::read_file(dir + "/cmp/result.json"));
  for (const json& r : rows["rows"]) {
    CHECK(r["ratio"] == 1.0);
    CHECK_FALSE(r["flagged"].get<bool>());
  }

  // Mismatched sample counts are a configuration error.
  io::write_file(dir + "/s2.toml",
                 "case = \"" + case_path + "\"\nout_dir = \"" + dir +
                     "/c\"\nseed = 6\n[stress]\nsamples = 11\nsamples_csv = false\n");
  CHECK(run_cli({"stress", "--config", dir + "/s2.toml"}) == 0);
  CHECK(run_cli({"compare", "--a", dir + "/a/result.json", "--b",
                 dir + "/c/result.json", "--out-dir", dir + "/cmp2"}) == 2);

  // Flag and config failures map to stable exit codes.
  CHECK(run_cli({"solve"}) == 2);  // --config required
  io::write_file(dir + "/bad.toml", "wat = 1\n");
  CHECK(run_cli({"solve", "--config", dir + "/bad.toml"}) == 2);
  io::write_file(dir + "/nocase.toml", "out_dir = \"" + dir + "/x\"\n");
  CHECK(run_cli({"solve", "--config", dir + "/nocase.toml"}) == 2);
  io::write_file(dir + "/ghost.toml", "case = \"" + dir +
                                          "/ghost.m\"\nout_dir = \"" + dir + "/x\"\n");
  CHECK(run_cli({"stress", "--config", dir + "/ghost.toml"}) == 3);
}
