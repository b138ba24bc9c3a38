#pragma once

#include <cstdint>
#include <string>

#include "scopf/drivers.hpp"
#include "scopf/stresstest.hpp"

namespace scopf::cli {

enum ExitCode {
  kOk = 0,
  kConfigInvalid = 2,
  kCaseParse = 3,
  kSolver = 4,
  kIo = 5,
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Full run configuration; see README for the documented schema. Parsed from a
// TOML-subset file ([section], key = value, scalar values only). Unknown
// sections or keys are rejected.
struct RunConfig {
  std::string case_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
  bool dispatchable_loads = false;

  SolverOptions solver;
  PenaltyParams penalty;
  PriorParams prior;
  LoadCostParams load_cost;

  struct Smc {
    int n_x = 10, n_y = 10;
    int rounds = 10, substeps = 30;
    double tau_x = 3e-3, tau_y = 5e-4;
  } smc;

  struct Attack {
    int n_y = 10;
    int substeps = 100;
    double tau = 2e-3;
    std::string dispatch;  // result JSON to take the dispatch from; empty = nominal
    bool trace_csv = false;
  } attack;

  struct Stress {
    long samples = 10000;
    std::string dispatch;   // as above
    std::string predicted;  // result JSON whose contingencies form the predicted set
    bool samples_csv = true;
  } stress;
};

RunConfig parse_config_text(const std::string& text);  // throws ConfigError
RunConfig load_config(const std::string& path);        // throws ConfigError

// Report emission: writes result JSON plus plot-ready CSVs into out_dir and a
// manifest.json listing every written file with its content hash. Returns the
// manifest path.
std::string emit_reports(const ScopfResult& r, const std::string& out_dir);
std::string emit_reports(const PredictResult& r, const std::string& out_dir);
std::string emit_reports(const StressReport& r, const std::string& out_dir);
std::string emit_reports(const std::vector<FailureModeRow>& rows,
                         const std::string& out_dir);

// Entry point used by the scopf binary; returns an ExitCode value and prints
// a single machine-parsable "scopf: error: <category>: <message>" line on
// failure.
int run(int argc, const char* const* argv);

}  // namespace scopf::cli
