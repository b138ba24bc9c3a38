#pragma once

#include <cstdint>
#include <optional>
#include <map>
#include <vector>

#include "scopf/severity.hpp"

namespace scopf {

// Number of branches operating below the given strength fraction.
int outage_count(const Contingency& y, double sigma_threshold = 0.9);

struct StressOptions {
  long samples = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
  double outage_sigma_threshold = 0.9;
  PotentialParams params;
};

struct Quantiles {
  double min = 0, p5 = 0, p25 = 0, p50 = 0, p75 = 0, p95 = 0, max = 0;
};

struct StressReport {
  long samples = 0;
  std::uint64_t seed = 0;
  double prior_mu0 = 0.0, prior_sigma0 = 0.0;
  double failure_rate = 0.0;           // any hinge violation or non-convergence
  Quantiles severity_quantiles;        // type-7 linear interpolation
  std::map<int, long> outage_histogram;  // outage count -> failed samples;
                                         // totals the failed count exactly
  std::optional<double> coverage_exceedance;  // fraction of samples strictly
                                              // above the predicted set's max
                                              // severity

  struct Sample {
    int outages = 0;
    double severity = 0.0;
    bool failed = false;
    bool converged = true;
  };
  std::vector<Sample> per_sample;  // filled when keep_samples
};

// Monte-Carlo stress test of a dispatch under prior-sampled contingencies.
// Sample i draws from the stream (seed, kStress, i), so results are identical
// for any thread count.
StressReport stress_test(const Network& net, const Dispatch& d,
                         const StressOptions& opts,
                         const std::vector<Contingency>* predicted = nullptr,
                         bool keep_samples = false);

struct FailureModeRow {
  int outages = 0;
  long failures_a = 0;
  long failures_b = 0;
  double ratio = 0.0;   // failures_a / failures_b, meaningless when flagged
  bool flagged = false; // failures_b == 0
};

// Per-outage-count failure comparison of two stress reports taken with the
// same sample count and prior seed (else throws std::invalid_argument).
std::vector<FailureModeRow> failure_mode_comparison(const StressReport& a,
                                                    const StressReport& b);

}  // namespace scopf
