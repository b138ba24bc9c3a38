#include "scopf/drivers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "scopf/parallel.hpp"

namespace scopf {

namespace {

using Clock = std::chrono::steady_clock;
using Eigen::VectorXd;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void validate(const SmcOptions& o) {
  if (o.n_x < 1 || o.n_y < 1)
    throw std::invalid_argument("population sizes must be at least 1");
  if (o.rounds < 0 || o.substeps < 0)
    throw std::invalid_argument("rounds and substeps must be non-negative");
}

// Dispatch members start uniform over the physical box, then map to the
// unconstrained coordinates; uniform in z would pile up at box centers.
std::vector<VectorXd> init_dispatch_population(const Network& net,
                                               const DispatchBox& box, int n,
                                               std::uint64_t seed) {
  std::vector<VectorXd> zs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    rng::Stream stream(seed, {rng::kInitDispatch, static_cast<std::uint64_t>(i)});
    VectorXd x = box.lower;
    for (Eigen::Index k = 0; k < box.dim(); ++k) {
      Eigen::Index s = box.free[static_cast<std::size_t>(k)];
      x[s] = stream.uniform(box.lower[s], box.upper[s]);
    }
    zs[static_cast<std::size_t>(i)] = to_unconstrained(unflatten(net, x), box);
  }
  return zs;
}

std::vector<Contingency> init_contingency_population(const Network& net, int n,
                                                     std::uint64_t seed,
                                                     const PriorParams& prior) {
  std::vector<Contingency> ys(static_cast<std::size_t>(n));
  Eigen::Index nb = static_cast<Eigen::Index>(net.branches.size());
  for (int i = 0; i < n; ++i) {
    rng::Stream stream(seed, {rng::kInitContingency, static_cast<std::uint64_t>(i)});
    ys[static_cast<std::size_t>(i)] =
        (prior.mu0 + prior.sigma0 * stream.normal_vec(nb).array()).matrix();
  }
  return ys;
}

// Value and y-gradient of risk-adjusted severity at a fixed dispatch; exactly
// one power-flow solve. Falls back to a flat gradient if the adjoint system is
// singular at a collapsed state.
std::pair<double, VectorXd> risk_value_grad(const Network& net, const Dispatch& d,
                                            const DispatchBox& box,
                                            const Contingency& y,
                                            const PotentialParams& pp,
                                            SolveCounter* counter) {
  PowerFlowSolution sol = solve_powerflow(net, d, y, pp.solver, counter);
  try {
    ScalarGradient g =
        grad_scalar(net, d, box, y, sol,
                    risk_functional(pp.penalty, pp.prior, pp.load_cost), pp.solver);
    return {g.value, g.wrt_y};
  } catch (const PowerFlowError&) {
    SeverityReport rep = risk_adjusted_severity(
        severity(net, d, y, sol, pp.penalty, pp.load_cost), y, pp.prior);
    return {rep.risk_adjusted, VectorXd::Zero(y.size())};
  }
}

struct Selection {
  int best = 0;
  double best_ux = 0.0;
  std::vector<SeverityReport> best_row;  // reports of (x_best, y_j), file order
};

// Cross-evaluates every final dispatch against every final contingency
// (n_x * n_y solves), picks the lowest mean severity (lowest index on ties)
// and keeps that row's reports for the result.
Selection select_best(const Network& net, const DispatchBox& box,
                      const std::vector<VectorXd>& zs,
                      const std::vector<Contingency>& ys,
                      const PotentialParams& pp, int threads,
                      SolveCounter* counter) {
  std::size_t nx = zs.size(), ny = ys.size();
  std::vector<std::vector<SeverityReport>> reports(nx);
  std::vector<double> ux(nx, 0.0);
  parallel_for(nx, threads, [&](std::size_t i) {
    Dispatch d = from_unconstrained(net, zs[i], box);
    reports[i].resize(ny);
    double acc = 0.0;
    for (std::size_t j = 0; j < ny; ++j) {
      PowerFlowSolution sol = solve_powerflow(net, d, ys[j], pp.solver, counter);
      reports[i][j] = severity(net, d, ys[j], sol, pp.penalty, pp.load_cost);
      acc += reports[i][j].severity;
    }
    ux[i] = acc / static_cast<double>(ny);
  });
  Selection sel;
  sel.best = 0;
  sel.best_ux = ux[0];
  for (std::size_t i = 1; i < nx; ++i)
    if (ux[i] < sel.best_ux) {
      sel.best = static_cast<int>(i);
      sel.best_ux = ux[i];
    }
  sel.best_row = std::move(reports[static_cast<std::size_t>(sel.best)]);
  return sel;
}

std::vector<ContingencyOutcome> outcomes_from_row(
    const std::vector<Contingency>& ys, std::vector<SeverityReport> row,
    const PriorParams& prior) {
  std::vector<ContingencyOutcome> out(ys.size());
  for (std::size_t j = 0; j < ys.size(); ++j) {
    out[j].y = ys[j];
    out[j].report = risk_adjusted_severity(std::move(row[j]), ys[j], prior);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ContingencyOutcome& a, const ContingencyOutcome& b) {
                     return a.report.risk_adjusted > b.report.risk_adjusted;
                   });
  return out;
}

void check_budget(const SolveCounter& counter, const BudgetLedger& ledger) {
  long long actual = counter.count.load();
  if (actual != ledger.total)
    throw std::logic_error(
        "power-flow solve count " + std::to_string(actual) +
        " diverged from the budget ledger " + std::to_string(ledger.total));
}

}  // namespace

BudgetLedger equal_budget(const SmcOptions& opts) {
  BudgetLedger l;
  if (opts.substeps > 0) {
    l.per_round_dispatch = static_cast<long long>(opts.n_x) *
                           (opts.substeps + 1) * opts.n_y;
    l.per_round_contingency = static_cast<long long>(opts.n_y) *
                              (opts.substeps + 1) * opts.n_x;
  }
  l.final_selection = static_cast<long long>(opts.n_x) * opts.n_y;
  l.total = static_cast<long long>(opts.rounds) *
                (l.per_round_dispatch + l.per_round_contingency) +
            l.final_selection;
  return l;
}

ScopfResult smc_scopf(const Network& net, const SmcOptions& opts) {
  validate(opts);
  auto t0 = Clock::now();
  SolveCounter counter;
  DispatchBox box = dispatch_box(net);
  const PotentialParams& pp = opts.params;

  std::vector<VectorXd> zs =
      init_dispatch_population(net, box, opts.n_x, opts.seed);
  std::vector<Contingency> ys =
      init_contingency_population(net, opts.n_y, opts.seed, pp.prior);

  ScopfResult res;
  res.ledger = equal_budget(opts);
  res.history.reserve(static_cast<std::size_t>(opts.rounds));

  for (int round = 0; round < opts.rounds; ++round) {
    RoundStats st;
    st.round = round;
    if (opts.substeps > 0) {
      // Defend: dispatch population targets exp(-U_x) against the
      // contingency population left by the previous round.
      std::vector<Contingency> ys_snap = ys;
      LogDensity target_x = [&, ys_snap](const VectorXd& z) {
        PotentialEval pe = dispatch_potential(net, box, ys_snap, z, pp, &counter);
        return LogDensityEval{-pe.value, -pe.grad};
      };
      MalaOptions mx;
      mx.tau = opts.tau_x;
      mx.steps = opts.substeps;
      mx.seed = opts.seed;
      mx.purpose = rng::kDispatchChain;
      std::vector<ChainTrace> tx(zs.size());
      parallel_for(zs.size(), opts.threads, [&](std::size_t i) {
        std::uint64_t chain =
            static_cast<std::uint64_t>(round) * static_cast<std::uint64_t>(opts.n_x) + i;
        tx[i] = mala_chain(zs[i], target_x, mx, chain, nullptr, false);
      });
      double sum_ux = 0.0, min_ux = 0.0;
      long acc = 0, prop = 0;
      for (std::size_t i = 0; i < tx.size(); ++i) {
        zs[i] = tx[i].final_state;
        double u = -tx[i].final_eval.log_p;
        sum_ux += u;
        if (i == 0 || u < min_ux) min_ux = u;
        acc += tx[i].accepted_count;
        prop += tx[i].proposed_count;
      }
      st.mean_ux = sum_ux / static_cast<double>(tx.size());
      st.min_ux = min_ux;
      st.accept_x = prop ? static_cast<double>(acc) / prop : 0.0;

      // Attack: contingency population targets exp(-U_y) against the
      // freshly updated dispatch population.
      std::vector<VectorXd> zs_snap = zs;
      LogDensity target_y = [&, zs_snap](const VectorXd& y) {
        PotentialEval pe = contingency_potential(net, box, zs_snap, y, pp, &counter);
        return LogDensityEval{-pe.value, -pe.grad};
      };
      MalaOptions my;
      my.tau = opts.tau_y;
      my.steps = opts.substeps;
      my.seed = opts.seed;
      my.purpose = rng::kContingencyChain;
      std::vector<ChainTrace> ty(ys.size());
      parallel_for(ys.size(), opts.threads, [&](std::size_t i) {
        std::uint64_t chain =
            static_cast<std::uint64_t>(round) * static_cast<std::uint64_t>(opts.n_y) + i;
        ty[i] = mala_chain(ys[i], target_y, my, chain, nullptr, false);
      });
      double max_sr = 0.0;
      acc = 0;
      prop = 0;
      for (std::size_t i = 0; i < ty.size(); ++i) {
        ys[i] = ty[i].final_state;
        double sr = ty[i].final_eval.log_p;  // min over dispatches of S_r
        if (i == 0 || sr > max_sr) max_sr = sr;
        acc += ty[i].accepted_count;
        prop += ty[i].proposed_count;
      }
      st.max_sr = max_sr;
      st.accept_y = prop ? static_cast<double>(acc) / prop : 0.0;
    }
    res.history.push_back(st);
  }

  Selection sel = select_best(net, box, zs, ys, pp, opts.threads, &counter);
  res.best_dispatch = from_unconstrained(net, zs[static_cast<std::size_t>(sel.best)], box);
  res.best_potential = sel.best_ux;
  res.contingencies = outcomes_from_row(ys, std::move(sel.best_row), pp.prior);
  res.solve_count = counter.count.load();
  check_budget(counter, res.ledger);
  res.wall_time = seconds_since(t0);
  return res;
}

ScopfResult adversarial_opt(const Network& net, const SmcOptions& opts) {
  validate(opts);
  auto t0 = Clock::now();
  SolveCounter counter;
  DispatchBox box = dispatch_box(net);
  const PotentialParams& pp = opts.params;

  std::vector<VectorXd> zs =
      init_dispatch_population(net, box, opts.n_x, opts.seed);
  std::vector<Contingency> ys =
      init_contingency_population(net, opts.n_y, opts.seed, pp.prior);

  ScopfResult res;
  res.ledger = equal_budget(opts);
  res.history.reserve(static_cast<std::size_t>(opts.rounds));

  for (int round = 0; round < opts.rounds; ++round) {
    RoundStats st;
    st.round = round;
    if (opts.substeps > 0) {
      // Defend: K descent steps on U_x per member, then one evaluation of the
      // arrival point. The extra evaluation both scores the round and matches
      // the sampler's K+1 evaluations per chain.
      std::vector<Contingency> ys_snap = ys;
      ValueGrad eval_x = [&, ys_snap](const VectorXd& z) {
        PotentialEval pe = dispatch_potential(net, box, ys_snap, z, pp, &counter);
        return std::make_pair(pe.value, pe.grad);
      };
      std::vector<double> ux(zs.size(), 0.0);
      parallel_for(zs.size(), opts.threads, [&](std::size_t i) {
        GradientPath path =
            gradient_steps(zs[i], eval_x, opts.substeps, opts.tau_x, false);
        zs[i] = path.state;
        ux[i] = eval_x(zs[i]).first;
      });
      int best = 0;
      double sum_ux = 0.0;
      for (std::size_t i = 0; i < ux.size(); ++i) {
        sum_ux += ux[i];
        if (ux[i] < ux[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
      }
      st.mean_ux = sum_ux / static_cast<double>(ux.size());
      st.min_ux = ux[static_cast<std::size_t>(best)];

      // Attack: each contingency climbs risk-adjusted severity against the
      // round's best dispatch. Its evaluations cost one solve against the
      // sampler's n_x, so it takes (K+1)*n_x steps for the same budget: a
      // stronger attacker at equal cost.
      Dispatch d_best = from_unconstrained(net, zs[static_cast<std::size_t>(best)], box);
      ValueGrad eval_y = [&, d_best](const VectorXd& y) {
        return risk_value_grad(net, d_best, box, y, pp, &counter);
      };
      int ysteps = (opts.substeps + 1) * opts.n_x;
      std::vector<double> sr(ys.size(), 0.0);
      parallel_for(ys.size(), opts.threads, [&](std::size_t i) {
        GradientPath path = gradient_steps(ys[i], eval_y, ysteps, opts.tau_y, true);
        ys[i] = path.state;
        sr[i] = path.last_value;
      });
      st.max_sr = *std::max_element(sr.begin(), sr.end());
    }
    res.history.push_back(st);
  }

  Selection sel = select_best(net, box, zs, ys, pp, opts.threads, &counter);
  res.best_dispatch = from_unconstrained(net, zs[static_cast<std::size_t>(sel.best)], box);
  res.best_potential = sel.best_ux;
  res.contingencies = outcomes_from_row(ys, std::move(sel.best_row), pp.prior);
  res.solve_count = counter.count.load();
  check_budget(counter, res.ledger);
  res.wall_time = seconds_since(t0);
  return res;
}

PredictResult predict_contingencies(const Network& net, const Dispatch& d,
                                    const PredictOptions& opts) {
  if (opts.n_y < 1) throw std::invalid_argument("population size must be at least 1");
  if (opts.steps < 0) throw std::invalid_argument("steps must be non-negative");
  auto t0 = Clock::now();
  SolveCounter counter;
  DispatchBox box = dispatch_box(net);
  const PotentialParams& pp = opts.params;

  std::vector<Contingency> ys =
      init_contingency_population(net, opts.n_y, opts.seed, pp.prior);

  // Chains ascend the severity-adjusted log density S_r = S + log p0.
  LogDensity target = [&](const VectorXd& y) {
    auto [value, grad] = risk_value_grad(net, d, box, y, pp, &counter);
    return LogDensityEval{value, grad};
  };
  MalaOptions mo;
  mo.tau = opts.tau;
  mo.steps = opts.steps;
  mo.seed = opts.seed;
  mo.purpose = rng::kContingencyChain;
  std::vector<ChainTrace> traces = run_population(ys, target, mo, opts.threads, true);

  PredictResult res;
  res.contingencies.resize(ys.size());
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const Contingency& y = traces[i].final_state;
    PowerFlowSolution sol = solve_powerflow(net, d, y, pp.solver, &counter);
    res.contingencies[i].y = y;
    res.contingencies[i].report = risk_adjusted_severity(
        severity(net, d, y, sol, pp.penalty, pp.load_cost), y, pp.prior);
  }
  std::stable_sort(res.contingencies.begin(), res.contingencies.end(),
                   [](const ContingencyOutcome& a, const ContingencyOutcome& b) {
                     return a.report.risk_adjusted > b.report.risk_adjusted;
                   });
  res.traces = std::move(traces);
  res.solve_count = counter.count.load();
  res.wall_time = seconds_since(t0);
  return res;
}

GradientPath gradient_steps(const Eigen::VectorXd& x0, const ValueGrad& eval,
                            int steps, double tau, bool ascend) {
  // Displacement cap per step. Adjoint gradients spike by O(1/lambda) next to
  // a regularized-singular Jacobian; following such a spike teleports the
  // iterate into states whose severity is a solver artifact, and letting it
  // compound overflows the state. A move wider than a unit step (both
  // coordinate spaces are logit-scaled, where a unit move is already large)
  // is therefore skipped, not truncated: the spike's direction is as
  // meaningless as its magnitude.
  constexpr double kMaxMove = 1.0;
  GradientPath out;
  out.state = x0;
  for (int s = 0; s < steps; ++s) {
    auto [value, grad] = eval(out.state);
    out.last_value = value;
    // A skipped step still spends its evaluation (the solve budget is an
    // invariant); the walker just stays put, like a rejected sampler
    // proposal. Same treatment for non-finite evaluations.
    if (!std::isfinite(value) || !grad.allFinite()) continue;
    VectorXd delta = (ascend ? tau : -tau) * grad;
    if (!delta.allFinite() || delta.lpNorm<Eigen::Infinity>() > kMaxMove) continue;
    out.state += delta;
    ++out.steps_taken;
  }
  return out;
}

}  // namespace scopf
