#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scopf/sampler.hpp"
#include "scopf/severity.hpp"

namespace scopf {

struct SmcOptions {
  int n_x = 10;           // dispatch population size
  int n_y = 10;           // contingency population size
  int rounds = 10;        // attack/defend rounds N
  int substeps = 30;      // MALA steps K per population per round
  // Step sizes where MALA proposals are accepted at useful rates on the
  // bundled cases; tune per network. Dispatch moves tolerate a larger step
  // than contingency moves.
  double tau_x = 3e-3;
  double tau_y = 5e-4;
  std::uint64_t seed = 0;
  int threads = 1;
  PotentialParams params;
};

// Power-flow-solve budget implied by an SmcOptions. Both drivers consume
// exactly these counts and assert it; evaluations cached within a round are
// counted once.
struct BudgetLedger {
  long long per_round_dispatch = 0;     // n_x * (K+1) * n_y     (K > 0)
  long long per_round_contingency = 0;  // n_y * (K+1) * n_x     (K > 0)
  long long final_selection = 0;        // n_x * n_y
  long long total = 0;
};

BudgetLedger equal_budget(const SmcOptions& opts);

struct RoundStats {
  int round = 0;
  double mean_ux = 0.0;
  double min_ux = 0.0;
  double max_sr = 0.0;      // max over contingency members of their target value
  double accept_x = 0.0;    // MALA acceptance rates (zero for the baseline)
  double accept_y = 0.0;
};

struct ContingencyOutcome {
  Contingency y;
  SeverityReport report;
};

struct ScopfResult {
  Dispatch best_dispatch;
  double best_potential = 0.0;  // U_x of best_dispatch against the final
                                // contingency population
  std::vector<ContingencyOutcome> contingencies;  // final population, sorted by
                                                  // descending risk_adjusted
  std::vector<RoundStats> history;                // length = rounds
  double wall_time = 0.0;                         // seconds, not serialized into
                                                  // deterministic outputs
  long long solve_count = 0;
  BudgetLedger ledger;
};

// Alternating-population SMC solve of min over dispatch of max over
// contingencies: MALA on exp(-U_x) for the dispatch population, then MALA on
// exp(-U_y) for the contingency population, per round.
ScopfResult smc_scopf(const Network& net, const SmcOptions& opts);

// Deterministic adversarial-optimization baseline under the identical budget
// ledger: plain gradient descent on U_x for dispatches; each contingency
// independently ascends risk-adjusted severity against the current best
// dispatch. Its single-solve ascent steps are cheaper than the SMC's
// population-backed steps, so it receives proportionally more of them.
ScopfResult adversarial_opt(const Network& net, const SmcOptions& opts);

struct PredictOptions {
  int n_y = 10;
  int steps = 100;
  double tau = 2e-3;
  std::uint64_t seed = 0;
  int threads = 1;
  PotentialParams params;
};

struct PredictResult {
  std::vector<ContingencyOutcome> contingencies;  // sorted by descending
                                                  // risk_adjusted
  std::vector<ChainTrace> traces;                 // per chain, states kept
  double wall_time = 0.0;
  long long solve_count = 0;
};

// MALA prediction of severe contingencies for a fixed dispatch: chains start
// from prior samples and target the severity-adjusted density
// exp(severity + log prior).
PredictResult predict_contingencies(const Network& net, const Dispatch& d,
                                    const PredictOptions& opts);

// eval returns (value, gradient).
using ValueGrad =
    std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd&)>;

struct GradientPath {
  Eigen::VectorXd state;
  double last_value = 0.0;  // value at the last evaluated iterate
  int steps_taken = 0;
};

// Fixed-step gradient iteration used by the baseline. A step whose
// displacement would exceed a unit max-norm move, or whose evaluation came
// back non-finite, is skipped (the iterate stays put) but still spends that
// step's evaluation, so the number of eval calls always equals `steps`.
GradientPath gradient_steps(const Eigen::VectorXd& x0, const ValueGrad& eval,
                            int steps, double tau, bool ascend);

}  // namespace scopf
