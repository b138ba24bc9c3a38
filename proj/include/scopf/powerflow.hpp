#pragma once

#include <atomic>
#include <functional>
#include <stdexcept>

#include <Eigen/Dense>

#include "scopf/netmodel.hpp"

namespace scopf {

// Per-branch strength vector y: branch admittance is sigmoid(y_i) times
// nominal, so y_i >> 0 is a healthy line and y_i <= 0 an impaired one.
using Contingency = Eigen::VectorXd;

struct PowerFlowError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverOptions {
  double tol = 1e-8;          // infinity-norm mismatch tolerance, p.u.
  int max_iter = 20;
  double regularization = 1e-8;  // Tikhonov lambda for near-singular Jacobians
};

struct PowerFlowSolution {
  Eigen::VectorXd v;       // |V| per bus, p.u.
  Eigen::VectorXd theta;   // angle per bus, radians (slack = 0)
  Eigen::VectorXd p_g;     // per generator; dispatch value, slack gens get the
                           // recovered slack share
  Eigen::VectorXd q_g;     // per generator, recovered
  double slack_p = 0.0;    // slack generator injections (bus injection + local load)
  double slack_q = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual_norm = 0.0;  // mismatch infinity-norm at the returned state
};

// Thread-safe power-flow solve counter for budget accounting.
struct SolveCounter {
  std::atomic<long long> count{0};
};

// Bus admittance matrix with every branch scaled by sigmoid(y): series
// admittance and charging both scale, bus shunts do not.
Eigen::MatrixXcd assemble_ybus(const Network& net, const Contingency& y);

// Newton-Raphson in polar coordinates from a flat start. Never throws on
// non-convergence: the last finite iterate is returned with converged=false.
PowerFlowSolution solve_powerflow(const Network& net, const Dispatch& d,
                                  const Contingency& y,
                                  const SolverOptions& opts = {},
                                  SolveCounter* counter = nullptr);

// Partial derivatives of a scalar functional of the solved operating point
// with respect to the quantities it can see. Vectors may be empty (treated
// as zero).
struct ScalarPartials {
  double value = 0.0;
  Eigen::VectorXd d_vbus;    // wrt |V_i|, per bus
  Eigen::VectorXd d_gen_p;   // wrt generator P (solved share for slack gens)
  Eigen::VectorXd d_gen_q;   // wrt generator Q
  Eigen::VectorXd d_load_p;  // wrt load P, per load
  Eigen::VectorXd d_load_q;  // wrt load Q, per load
  Eigen::VectorXd d_y;       // direct dependence on the contingency, per branch
};

using ScalarFunctional = std::function<ScalarPartials(
    const Network&, const Dispatch&, const Contingency&, const PowerFlowSolution&)>;

struct ScalarGradient {
  double value = 0.0;
  Eigen::VectorXd wrt_z;  // unconstrained dispatch coordinates, box.dim()
  Eigen::VectorXd wrt_y;  // contingency strengths, per branch
};

// Adjoint / implicit-function gradients of a scalar functional through the
// power-flow solution, evaluated at the (possibly regularized) Newton
// Jacobian of the returned iterate. The chain rule through the logit box
// reparameterization is included in wrt_z.
ScalarGradient grad_scalar(const Network& net, const Dispatch& d,
                           const DispatchBox& box, const Contingency& y,
                           const PowerFlowSolution& sol,
                           const ScalarFunctional& fn,
                           const SolverOptions& opts = {});

}  // namespace scopf
