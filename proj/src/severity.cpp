#include "scopf/severity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace scopf {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // log sqrt(2*pi)

void bounds_of(const Load& l, double& plo, double& phi, double& qlo, double& qhi) {
  if (!l.dispatchable) {
    plo = phi = l.p_nom;
    qlo = qhi = l.q_nom;
    return;
  }
  plo = std::min(0.5 * l.p_nom, l.p_nom);
  phi = std::max(0.5 * l.p_nom, l.p_nom);
  qlo = std::min(0.5 * l.q_nom, l.q_nom);
  qhi = std::max(0.5 * l.q_nom, l.q_nom);
}

// Subgradient of the hinge: +-L outside the box, 0 inside and at the kinks.
double hinge_slope(double x, double lo, double hi, double weight) {
  if (x > hi) return weight;
  if (x < lo) return -weight;
  return 0.0;
}

// Shared evaluation core; partials filled only when wanted.
SeverityReport evaluate(const Network& net, const Dispatch& d,
                        const PowerFlowSolution& sol, const PenaltyParams& pen,
                        const LoadCostParams& lc, ScalarPartials* parts) {
  SeverityReport rep;
  rep.converged = sol.converged;

  int n = static_cast<int>(net.buses.size());
  if (parts) {
    parts->d_vbus = Eigen::VectorXd::Zero(n);
    parts->d_gen_p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.gens.size()));
    parts->d_gen_q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.gens.size()));
    parts->d_load_p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.loads.size()));
    parts->d_load_q = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.loads.size()));
    parts->d_y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.branches.size()));
  }

  double total = 0.0;
  auto add = [&](const std::string& key, double v) {
    if (v > 0.0) {
      rep.violations[key] = v;
      total += v;
    }
  };

  for (std::size_t g = 0; g < net.gens.size(); ++g) {
    const Gen& gen = net.gens[g];
    double pg = sol.p_g[static_cast<Eigen::Index>(g)];
    double qg = sol.q_g[static_cast<Eigen::Index>(g)];
    rep.economic_cost += gen.c2 * pg * pg + gen.c1 * pg + gen.c0;
    add("gen_p[" + std::to_string(g) + "]",
        hinge_violation(pg, gen.pmin, gen.pmax, pen.L));
    add("gen_q[" + std::to_string(g) + "]",
        hinge_violation(qg, gen.qmin, gen.qmax, pen.L));
    if (parts) {
      parts->d_gen_p[static_cast<Eigen::Index>(g)] =
          2.0 * gen.c2 * pg + gen.c1 + hinge_slope(pg, gen.pmin, gen.pmax, pen.L);
      parts->d_gen_q[static_cast<Eigen::Index>(g)] =
          hinge_slope(qg, gen.qmin, gen.qmax, pen.L);
    }
  }

  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    const Load& load = net.loads[l];
    double pl = d.p_l[static_cast<Eigen::Index>(l)];
    double ql = d.q_l[static_cast<Eigen::Index>(l)];
    if (load.dispatchable)
      rep.economic_cost += lc.c2p * pl * pl + lc.c1p * pl + lc.c2q * ql * ql + lc.c1q * ql;
    double plo, phi, qlo, qhi;
    bounds_of(load, plo, phi, qlo, qhi);
    add("load_p[" + std::to_string(l) + "]", hinge_violation(pl, plo, phi, pen.L));
    add("load_q[" + std::to_string(l) + "]", hinge_violation(ql, qlo, qhi, pen.L));
    if (parts) {
      double up = hinge_slope(pl, plo, phi, pen.L);
      double uq = hinge_slope(ql, qlo, qhi, pen.L);
      if (load.dispatchable) {
        up += 2.0 * lc.c2p * pl + lc.c1p;
        uq += 2.0 * lc.c2q * ql + lc.c1q;
      }
      parts->d_load_p[static_cast<Eigen::Index>(l)] = up;
      parts->d_load_q[static_cast<Eigen::Index>(l)] = uq;
    }
  }

  for (int b = 0; b < n; ++b) {
    const Bus& bus = net.buses[b];
    add("bus_v[" + std::to_string(bus.id) + "]",
        hinge_violation(sol.v[b], bus.vmin, bus.vmax, pen.L));
    if (parts)
      parts->d_vbus[b] = hinge_slope(sol.v[b], bus.vmin, bus.vmax, pen.L);
  }

  if (!sol.converged) add("residual", pen.L_res * sol.residual_norm);
  // The residual term carries no gradient: on the solved manifold the total
  // derivative of the retained mismatch rows is identically zero, and at a
  // non-converged iterate we keep the same convention rather than
  // differentiating the truncated iteration.

  rep.severity = rep.economic_cost + total;
  rep.risk_adjusted = rep.severity;
  return rep;
}

}  // namespace

double hinge_violation(double x, double lo, double hi, double weight) {
  double over = x > hi ? x - hi : 0.0;
  double under = x < lo ? lo - x : 0.0;
  return weight * (over + under);
}

double economic_cost(const Network& net, const Dispatch& d,
                     const PowerFlowSolution& sol, const LoadCostParams& lc) {
  double c = 0.0;
  for (std::size_t g = 0; g < net.gens.size(); ++g) {
    const Gen& gen = net.gens[g];
    double pg = sol.p_g[static_cast<Eigen::Index>(g)];
    c += gen.c2 * pg * pg + gen.c1 * pg + gen.c0;
  }
  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    if (!net.loads[l].dispatchable) continue;
    double pl = d.p_l[static_cast<Eigen::Index>(l)];
    double ql = d.q_l[static_cast<Eigen::Index>(l)];
    c += lc.c2p * pl * pl + lc.c1p * pl + lc.c2q * ql * ql + lc.c1q * ql;
  }
  return c;
}

SeverityReport severity(const Network& net, const Dispatch& d,
                        const Contingency& y, const PowerFlowSolution& sol,
                        const PenaltyParams& pen, const LoadCostParams& lc) {
  if (static_cast<std::size_t>(y.size()) != net.branches.size())
    throw std::invalid_argument("contingency does not match branch count");
  return evaluate(net, d, sol, pen, lc, nullptr);
}

double log_prior(const Contingency& y, const PriorParams& prior) {
  double lp = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    double z = (y[i] - prior.mu0) / prior.sigma0;
    lp += -0.5 * z * z - std::log(prior.sigma0) - kLogSqrt2Pi;
  }
  return lp;
}

SeverityReport risk_adjusted_severity(SeverityReport rep, const Contingency& y,
                                      const PriorParams& prior) {
  rep.log_prior = log_prior(y, prior);
  rep.risk_adjusted = rep.severity + rep.log_prior;
  return rep;
}

ScalarFunctional severity_functional(const PenaltyParams& pen,
                                     const LoadCostParams& lc) {
  return [pen, lc](const Network& net, const Dispatch& d, const Contingency&,
                   const PowerFlowSolution& sol) {
    ScalarPartials parts;
    SeverityReport rep = evaluate(net, d, sol, pen, lc, &parts);
    parts.value = rep.severity;
    return parts;
  };
}

ScalarFunctional risk_functional(const PenaltyParams& pen,
                                 const PriorParams& prior,
                                 const LoadCostParams& lc) {
  return [pen, prior, lc](const Network& net, const Dispatch& d,
                          const Contingency& y, const PowerFlowSolution& sol) {
    ScalarPartials parts;
    SeverityReport rep = evaluate(net, d, sol, pen, lc, &parts);
    parts.value = rep.severity + log_prior(y, prior);
    for (Eigen::Index i = 0; i < y.size(); ++i)
      parts.d_y[i] -= (y[i] - prior.mu0) / (prior.sigma0 * prior.sigma0);
    return parts;
  };
}

PotentialEval dispatch_potential(const Network& net, const DispatchBox& box,
                                 const std::vector<Contingency>& ys,
                                 const Eigen::VectorXd& z,
                                 const PotentialParams& pp,
                                 SolveCounter* counter) {
  if (ys.empty()) throw std::invalid_argument("empty contingency population");
  Dispatch d = from_unconstrained(net, z, box);
  ScalarFunctional fn = severity_functional(pp.penalty, pp.load_cost);
  PotentialEval out;
  out.grad = Eigen::VectorXd::Zero(box.dim());
  for (const Contingency& y : ys) {
    PowerFlowSolution sol = solve_powerflow(net, d, y, pp.solver, counter);
    try {
      ScalarGradient g = grad_scalar(net, d, box, y, sol, fn, pp.solver);
      out.value += g.value;
      out.grad += g.wrt_z;
    } catch (const PowerFlowError&) {
      out.value += severity(net, d, y, sol, pp.penalty, pp.load_cost).severity;
    }
  }
  double inv = 1.0 / static_cast<double>(ys.size());
  out.value *= inv;
  out.grad *= inv;
  return out;
}

PotentialEval contingency_potential(const Network& net, const DispatchBox& box,
                                    const std::vector<Eigen::VectorXd>& zs,
                                    const Contingency& y,
                                    const PotentialParams& pp,
                                    SolveCounter* counter) {
  if (zs.empty()) throw std::invalid_argument("empty dispatch population");
  double best = std::numeric_limits<double>::infinity();
  Dispatch best_d;
  PowerFlowSolution best_sol;
  bool have = false;
  for (const Eigen::VectorXd& z : zs) {
    Dispatch d = from_unconstrained(net, z, box);
    PowerFlowSolution sol = solve_powerflow(net, d, y, pp.solver, counter);
    SeverityReport rep = risk_adjusted_severity(
        severity(net, d, y, sol, pp.penalty, pp.load_cost), y, pp.prior);
    if (!have || rep.risk_adjusted < best) {
      best = rep.risk_adjusted;
      best_d = d;
      best_sol = sol;
      have = true;
    }
  }
  PotentialEval out;
  out.value = -best;
  out.grad = Eigen::VectorXd::Zero(y.size());
  try {
    ScalarGradient g = grad_scalar(net, best_d, box, y, best_sol,
                                   risk_functional(pp.penalty, pp.prior, pp.load_cost),
                                   pp.solver);
    out.grad = -g.wrt_y;
  } catch (const PowerFlowError&) {
    // flat pseudo-gradient keeps the chain alive near collapse
  }
  return out;
}

}  // namespace scopf
