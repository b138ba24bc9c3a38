#include "scopf/stresstest.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "scopf/parallel.hpp"
#include "scopf/rng.hpp"

namespace scopf {

namespace {

// Type-7 quantile (linear interpolation) of an ascending-sorted sample.
double quantile7(const std::vector<double>& sorted, double p) {
  std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  double h = static_cast<double>(n - 1) * p;
  std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

int outage_count(const Contingency& y, double sigma_threshold) {
  int n = 0;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (sigmoid(y[i]) < sigma_threshold) ++n;
  return n;
}

StressReport stress_test(const Network& net, const Dispatch& d,
                         const StressOptions& opts,
                         const std::vector<Contingency>* predicted,
                         bool keep_samples) {
  if (opts.samples < 1)
    throw std::invalid_argument("stress test needs at least one sample");
  const PotentialParams& pp = opts.params;
  long m = opts.samples;
  Eigen::Index nb = static_cast<Eigen::Index>(net.branches.size());

  std::vector<StressReport::Sample> rows(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), opts.threads, [&](std::size_t i) {
    rng::Stream stream(opts.seed, {rng::kStress, static_cast<std::uint64_t>(i)});
    Contingency y =
        (pp.prior.mu0 + pp.prior.sigma0 * stream.normal_vec(nb).array()).matrix();
    PowerFlowSolution sol = solve_powerflow(net, d, y, pp.solver);
    SeverityReport rep = severity(net, d, y, sol, pp.penalty, pp.load_cost);
    rows[i].outages = outage_count(y, opts.outage_sigma_threshold);
    rows[i].severity = rep.severity;
    rows[i].converged = rep.converged;
    rows[i].failed = !rep.violations.empty() || !rep.converged;
  });

  StressReport rep;
  rep.samples = m;
  rep.seed = opts.seed;
  rep.prior_mu0 = pp.prior.mu0;
  rep.prior_sigma0 = pp.prior.sigma0;

  std::vector<double> sev(rows.size());
  long failed = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sev[i] = rows[i].severity;
    if (rows[i].failed) {
      ++failed;
      ++rep.outage_histogram[rows[i].outages];
    }
  }
  rep.failure_rate = static_cast<double>(failed) / static_cast<double>(m);
  std::sort(sev.begin(), sev.end());
  rep.severity_quantiles.min = sev.front();
  rep.severity_quantiles.p5 = quantile7(sev, 0.05);
  rep.severity_quantiles.p25 = quantile7(sev, 0.25);
  rep.severity_quantiles.p50 = quantile7(sev, 0.50);
  rep.severity_quantiles.p75 = quantile7(sev, 0.75);
  rep.severity_quantiles.p95 = quantile7(sev, 0.95);
  rep.severity_quantiles.max = sev.back();

  if (predicted) {
    double cap = -std::numeric_limits<double>::infinity();
    for (const Contingency& y : *predicted) {
      PowerFlowSolution sol = solve_powerflow(net, d, y, pp.solver);
      cap = std::max(cap, severity(net, d, y, sol, pp.penalty, pp.load_cost).severity);
    }
    long over = 0;
    for (const auto& r : rows)
      if (r.severity > cap) ++over;
    rep.coverage_exceedance = static_cast<double>(over) / static_cast<double>(m);
  }

  if (keep_samples) rep.per_sample = std::move(rows);
  return rep;
}

std::vector<FailureModeRow> failure_mode_comparison(const StressReport& a,
                                                    const StressReport& b) {
  if (a.samples != b.samples)
    throw std::invalid_argument("stress reports have different sample counts");
  if (a.seed != b.seed)
    throw std::invalid_argument("stress reports were drawn from different seeds");
  std::map<int, FailureModeRow> rows;
  for (const auto& [k, v] : a.outage_histogram) {
    rows[k].outages = k;
    rows[k].failures_a = v;
  }
  for (const auto& [k, v] : b.outage_histogram) {
    rows[k].outages = k;
    rows[k].failures_b = v;
  }
  std::vector<FailureModeRow> out;
  out.reserve(rows.size());
  for (auto& [k, row] : rows) {
    row.flagged = row.failures_b == 0;
    row.ratio = row.flagged ? 0.0
                            : static_cast<double>(row.failures_a) /
                                  static_cast<double>(row.failures_b);
    out.push_back(row);
  }
  return out;
}

}  // namespace scopf
