#pragma once

#include <map>
#include <string>
#include <vector>

#include "scopf/powerflow.hpp"

namespace scopf {

struct PenaltyParams {
  double L = 100.0;      // hinge penalty weight
  double L_res = 100.0;  // non-convergence residual weight
};

struct PriorParams {
  double mu0 = 1.6449;  // P(y_i <= 0) = 5% at sigma0 = 1
  double sigma0 = 1.0;
};

// Optional quadratic utility on dispatchable loads, all zero by default.
struct LoadCostParams {
  double c2p = 0.0, c1p = 0.0;
  double c2q = 0.0, c1q = 0.0;
};

struct SeverityReport {
  double economic_cost = 0.0;
  std::map<std::string, double> violations;  // positive hinge terms only
  double severity = 0.0;                     // cost + sum of violations
  double log_prior = 0.0;
  double risk_adjusted = 0.0;                // severity + log_prior
  bool converged = true;
};

// weight * ([x - hi]_+ + [lo - x]_+)
double hinge_violation(double x, double lo, double hi, double weight);

// Generator cost plus optional load utility at an operating point; slack
// generators are costed at their recovered share.
double economic_cost(const Network& net, const Dispatch& d,
                     const PowerFlowSolution& sol,
                     const LoadCostParams& lc = {});

// Severity of a solved operating point: economic cost plus hinge penalties on
// generator P/Q, dispatchable load P/Q and bus |V|, plus L_res * residual on
// non-convergence (stored under the "residual" violation key).
SeverityReport severity(const Network& net, const Dispatch& d,
                        const Contingency& y, const PowerFlowSolution& sol,
                        const PenaltyParams& pen = {},
                        const LoadCostParams& lc = {});

// Independent Gaussian log prior over branch strengths, normalization included.
double log_prior(const Contingency& y, const PriorParams& prior = {});

// severity + log_prior; fills the prior fields of a report.
SeverityReport risk_adjusted_severity(SeverityReport rep, const Contingency& y,
                                      const PriorParams& prior = {});

// Functionals for grad_scalar. with_prior additionally differentiates the
// log-prior term with respect to y.
ScalarFunctional severity_functional(const PenaltyParams& pen = {},
                                     const LoadCostParams& lc = {});
ScalarFunctional risk_functional(const PenaltyParams& pen = {},
                                 const PriorParams& prior = {},
                                 const LoadCostParams& lc = {});

struct PotentialParams {
  SolverOptions solver;
  PenaltyParams penalty;
  PriorParams prior;
  LoadCostParams load_cost;
};

struct PotentialEval {
  double value = 0.0;
  Eigen::VectorXd grad;
};

// U_x(z): mean severity of the dispatch from_unconstrained(z) over a
// contingency population, with gradient in z.
PotentialEval dispatch_potential(const Network& net, const DispatchBox& box,
                                 const std::vector<Contingency>& ys,
                                 const Eigen::VectorXd& z,
                                 const PotentialParams& pp,
                                 SolveCounter* counter = nullptr);

// U_y(y) = -min over the dispatch population of risk-adjusted severity, with
// gradient in y through the minimizing member (lowest index on ties).
PotentialEval contingency_potential(const Network& net, const DispatchBox& box,
                                    const std::vector<Eigen::VectorXd>& zs,
                                    const Contingency& y,
                                    const PotentialParams& pp,
                                    SolveCounter* counter = nullptr);

}  // namespace scopf
