#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "scopf/rng.hpp"

namespace scopf {

struct LogDensityEval {
  double log_p = 0.0;
  Eigen::VectorXd grad;
};

using LogDensity = std::function<LogDensityEval(const Eigen::VectorXd&)>;

struct MalaOptions {
  double tau = 0.01;        // step size; proposal noise is N(0, 2*tau*I)
  int steps = 100;
  std::uint64_t seed = 0;
  std::uint64_t purpose = rng::kGeneric;  // substream tag, see rng::Purpose
};

// One Metropolis-adjusted Langevin proposal/accept with explicit noise and
// uniform draw, so the kernel is testable without a generator.
// Proposal: x' = x + tau * grad log p(x) + noise, noise ~ N(0, 2*tau*I).
// log acceptance ratio:
//   [log p(x') - ||x - x' - tau*grad log p(x')||^2 / (4*tau)]
// - [log p(x)  - ||x' - x - tau*grad log p(x)||^2  / (4*tau)]
// Non-finite proposals or evaluations are rejected outright.
struct MalaStep {
  Eigen::VectorXd state;
  LogDensityEval eval;   // evaluation at state
  bool accepted = false;
};

MalaStep mala_step_with_noise(const Eigen::VectorXd& x,
                              const LogDensityEval& at_x,
                              const LogDensity& target, double tau,
                              const Eigen::VectorXd& noise, double u01);

// The log acceptance ratio above as a pure function of the two evaluations;
// the proposal is accepted when log(u) < this.
double mala_log_ratio(const Eigen::VectorXd& x, const LogDensityEval& at_x,
                      const Eigen::VectorXd& prop, const LogDensityEval& at_prop,
                      double tau);

MalaStep mala_step(const Eigen::VectorXd& x, const LogDensityEval& at_x,
                   const LogDensity& target, double tau, rng::Stream& stream);

struct ChainTrace {
  // One entry per step (length = steps): state after the step, its log
  // density, and whether the proposal was accepted.
  std::vector<Eigen::VectorXd> states;
  std::vector<double> log_p;
  std::vector<bool> accepted;
  Eigen::VectorXd final_state;
  LogDensityEval final_eval;
  long accepted_count = 0;
  long proposed_count = 0;

  double acceptance_rate() const {
    return proposed_count ? static_cast<double>(accepted_count) / proposed_count : 0.0;
  }
};

// Runs one chain; randomness is drawn from the per-step stream
// (seed, purpose, chain_index, step), so chains are reproducible and
// independent of execution order. If at_x0 is provided it must be the target
// evaluation at x0 and saves the initial evaluation.
ChainTrace mala_chain(const Eigen::VectorXd& x0, const LogDensity& target,
                      const MalaOptions& opts, std::uint64_t chain_index = 0,
                      const LogDensityEval* at_x0 = nullptr,
                      bool keep_states = true);

// Independent MALA updates of a population, chain i keyed by (seed, purpose, i).
// Deterministic for a fixed thread count or not: results do not depend on
// scheduling.
std::vector<ChainTrace> run_population(const std::vector<Eigen::VectorXd>& states,
                                       const LogDensity& target,
                                       const MalaOptions& opts,
                                       int threads = 1,
                                       bool keep_states = false);

}  // namespace scopf
