#pragma once

#include <cmath>

#include "scopf/severity.hpp"

// Central finite differences against the adjoint gradient. The solver runs at
// a tolerance well below the differencing step so the computed severity looks
// smooth to the stencil. Severity is O(1e4), so each evaluation carries a few
// ulps (~1e-12) of rounding; a stencil whose probe difference sits near that
// floor measures noise, not slope. For such components the step is widened
// until the difference is well resolved (|f(+h)-f(-h)| >= kMinDelta, about
// half a million ulps) or kMaxStep is reached. A widened step trades rounding
// noise for O(h^2) truncation, so every widened component is Richardson-
// extrapolated with a second stencil at 2h, cancelling the h^2 term.

namespace gradcheck {

constexpr double kMinDelta = 1e-6;
constexpr double kMaxStep = 1e-2;

struct Report {
  double max_rel = 0.0;
  int checked = 0;   // components above the magnitude floor
  int skipped = 0;   // components below it
};

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

inline double eval_value(const scopf::Network& net, const scopf::DispatchBox& box,
                         const Eigen::VectorXd& z, const scopf::Contingency& y,
                         const scopf::ScalarFunctional& fn,
                         const scopf::SolverOptions& opts) {
  scopf::Dispatch d = scopf::from_unconstrained(net, z, box);
  scopf::PowerFlowSolution sol = scopf::solve_powerflow(net, d, y, opts);
  return fn(net, d, y, sol).value;
}

inline Report compare(const scopf::Network& net, const scopf::DispatchBox& box,
                      const Eigen::VectorXd& z, const scopf::Contingency& y,
                      const scopf::ScalarFunctional& fn,
                      const scopf::SolverOptions& opts, double h = 1e-5,
                      double floor = 1e-6) {
  scopf::Dispatch d = scopf::from_unconstrained(net, z, box);
  scopf::PowerFlowSolution sol = scopf::solve_powerflow(net, d, y, opts);
  scopf::ScalarGradient g = scopf::grad_scalar(net, d, box, y, sol, fn, opts);

  Report rep;
  auto tally = [&](double adjoint, double fd) {
    if (std::max(std::abs(adjoint), std::abs(fd)) <= floor) {
      ++rep.skipped;
      return;
    }
    ++rep.checked;
    rep.max_rel = std::max(rep.max_rel, rel_err(adjoint, fd));
  };

  auto fd_slope = [&](auto probe) {
    double step = h, delta = 0.0;
    for (;; step *= 10.0) {
      delta = probe(step) - probe(-step);
      if (std::abs(delta) >= kMinDelta || step * 10.0 > kMaxStep) break;
    }
    double slope = delta / (2.0 * step);
    if (step == h) return slope;
    double wide = (probe(2.0 * step) - probe(-2.0 * step)) / (4.0 * step);
    return (4.0 * slope - wide) / 3.0;
  };

  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    double fd = fd_slope([&](double step) {
      Eigen::VectorXd zs = z;
      zs[i] += step;
      return eval_value(net, box, zs, y, fn, opts);
    });
    tally(g.wrt_z[i], fd);
  }
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    double fd = fd_slope([&](double step) {
      scopf::Contingency ys = y;
      ys[k] += step;
      return eval_value(net, box, z, ys, fn, opts);
    });
    tally(g.wrt_y[k], fd);
  }
  return rep;
}

}  // namespace gradcheck
