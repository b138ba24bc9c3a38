#include "scopf/sampler.hpp"

#include <cmath>

#include "scopf/parallel.hpp"

namespace scopf {

namespace {

bool finite(const LogDensityEval& e) {
  return std::isfinite(e.log_p) && e.grad.allFinite();
}

double drift_sq(const Eigen::VectorXd& from, const Eigen::VectorXd& to,
                double tau, const Eigen::VectorXd& grad_at_to) {
  return (from - to - tau * grad_at_to).squaredNorm();
}

}  // namespace

double mala_log_ratio(const Eigen::VectorXd& x, const LogDensityEval& at_x,
                      const Eigen::VectorXd& prop, const LogDensityEval& at_prop,
                      double tau) {
  double log_fwd = drift_sq(prop, x, tau, at_x.grad) / (4.0 * tau);
  double log_rev = drift_sq(x, prop, tau, at_prop.grad) / (4.0 * tau);
  return (at_prop.log_p - log_rev) - (at_x.log_p - log_fwd);
}

MalaStep mala_step_with_noise(const Eigen::VectorXd& x, const LogDensityEval& at_x,
                              const LogDensity& target, double tau,
                              const Eigen::VectorXd& noise, double u01) {
  MalaStep out;
  out.state = x;
  out.eval = at_x;
  out.accepted = false;
  if (!finite(at_x)) return out;  // nothing to move from; stay put

  Eigen::VectorXd prop = x + tau * at_x.grad + noise;
  if (!prop.allFinite()) return out;
  LogDensityEval at_prop = target(prop);
  if (!finite(at_prop)) return out;

  double log_ratio = mala_log_ratio(x, at_x, prop, at_prop, tau);
  if (std::isfinite(log_ratio) && std::log(u01) < log_ratio) {
    out.state = prop;
    out.eval = at_prop;
    out.accepted = true;
  }
  return out;
}

MalaStep mala_step(const Eigen::VectorXd& x, const LogDensityEval& at_x,
                   const LogDensity& target, double tau, rng::Stream& stream) {
  // Draw order is fixed: one normal per coordinate, then the uniform.
  Eigen::VectorXd noise = stream.normal_vec(x.size());
  noise *= std::sqrt(2.0 * tau);
  double u = stream.uniform01();
  return mala_step_with_noise(x, at_x, target, tau, noise, u);
}

ChainTrace mala_chain(const Eigen::VectorXd& x0, const LogDensity& target,
                      const MalaOptions& opts, std::uint64_t chain_index,
                      const LogDensityEval* at_x0, bool keep_states) {
  ChainTrace trace;
  Eigen::VectorXd x = x0;
  LogDensityEval at_x = at_x0 ? *at_x0 : target(x0);
  if (keep_states) {
    trace.states.reserve(static_cast<std::size_t>(opts.steps));
    trace.log_p.reserve(static_cast<std::size_t>(opts.steps));
    trace.accepted.reserve(static_cast<std::size_t>(opts.steps));
  }
  for (int step = 0; step < opts.steps; ++step) {
    rng::Stream stream(opts.seed,
                       {opts.purpose, chain_index, static_cast<std::uint64_t>(step)});
    MalaStep s = mala_step(x, at_x, target, opts.tau, stream);
    x = s.state;
    at_x = s.eval;
    ++trace.proposed_count;
    if (s.accepted) ++trace.accepted_count;
    if (keep_states) {
      trace.states.push_back(x);
      trace.log_p.push_back(at_x.log_p);
      trace.accepted.push_back(s.accepted);
    }
  }
  trace.final_state = x;
  trace.final_eval = at_x;
  return trace;
}

std::vector<ChainTrace> run_population(const std::vector<Eigen::VectorXd>& states,
                                       const LogDensity& target,
                                       const MalaOptions& opts, int threads,
                                       bool keep_states) {
  std::vector<ChainTrace> traces(states.size());
  parallel_for(states.size(), threads, [&](std::size_t i) {
    traces[i] = mala_chain(states[i], target, opts,
                           static_cast<std::uint64_t>(i), nullptr, keep_states);
  });
  return traces;
}

}  // namespace scopf
