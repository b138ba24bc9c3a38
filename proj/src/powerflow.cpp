#include "scopf/powerflow.hpp"

#include <cmath>
#include <limits>

namespace scopf {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using cd = std::complex<double>;

void check_sizes(const Network& net, const Dispatch& d, const Contingency& y) {
  if (static_cast<std::size_t>(d.p_g.size()) != net.nonslack_gens.size() ||
      static_cast<std::size_t>(d.v_g.size()) != net.gen_buses.size() ||
      static_cast<std::size_t>(d.p_l.size()) != net.loads.size() ||
      static_cast<std::size_t>(d.q_l.size()) != net.loads.size())
    throw std::invalid_argument("dispatch does not match network layout");
  if (static_cast<std::size_t>(y.size()) != net.branches.size())
    throw std::invalid_argument("contingency does not match branch count");
}

// Buses whose angle is unknown (everything but slack), ascending.
std::vector<int> angle_buses(const Network& net) {
  std::vector<int> v;
  v.reserve(net.buses.size() - 1);
  for (int i = 0; i < static_cast<int>(net.buses.size()); ++i)
    if (i != net.slack) v.push_back(i);
  return v;
}

// Net scheduled injections from dispatch: generation minus load.
void scheduled_injections(const Network& net, const Dispatch& d, VectorXd& p_spec,
                          VectorXd& q_spec) {
  int n = static_cast<int>(net.buses.size());
  p_spec = VectorXd::Zero(n);
  q_spec = VectorXd::Zero(n);
  for (std::size_t i = 0; i < net.nonslack_gens.size(); ++i)
    p_spec[net.gens[net.nonslack_gens[i]].bus] += d.p_g[i];
  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    p_spec[net.loads[l].bus] -= d.p_l[l];
    q_spec[net.loads[l].bus] -= d.q_l[l];
  }
}

// dS/dVa and dS/dVm of the complex injection S = V .* conj(Y V), in polar
// coordinates: complex matrices whose real part is dP and imaginary part dQ.
void injection_jacobians(const MatrixXcd& Y, const VectorXcd& V,
                         const VectorXd& vm, MatrixXcd& dSdVa, MatrixXcd& dSdVm) {
  VectorXcd Ibus = Y * V;
  VectorXcd Vnorm = V.array() / vm.array().cast<cd>();
  MatrixXcd YV = Y * V.asDiagonal();
  MatrixXcd t = -YV;
  t += MatrixXcd(Ibus.asDiagonal());
  dSdVa = cd(0.0, 1.0) * (V.asDiagonal() * t.conjugate());
  dSdVm = MatrixXcd(Vnorm.asDiagonal()) * MatrixXcd(Ibus.asDiagonal()).conjugate() +
          V.asDiagonal() * (Y * Vnorm.asDiagonal()).conjugate();
}

// Mismatch residual r = calc - spec at the angle/PQ rows.
VectorXd mismatch(const Network& net, const std::vector<int>& ang,
                  const VectorXcd& S, const VectorXd& p_spec,
                  const VectorXd& q_spec) {
  Index na = static_cast<Index>(ang.size());
  Index nq = static_cast<Index>(net.pq.size());
  VectorXd f(na + nq);
  for (Index a = 0; a < na; ++a) f[a] = S[ang[a]].real() - p_spec[ang[a]];
  for (Index q = 0; q < nq; ++q)
    f[na + q] = S[net.pq[q]].imag() - q_spec[net.pq[q]];
  return f;
}

MatrixXd newton_jacobian(const Network& net, const std::vector<int>& ang,
                         const MatrixXcd& dSdVa, const MatrixXcd& dSdVm) {
  Index na = static_cast<Index>(ang.size());
  Index nq = static_cast<Index>(net.pq.size());
  MatrixXd J(na + nq, na + nq);
  for (Index r = 0; r < na; ++r) {
    for (Index c = 0; c < na; ++c) J(r, c) = dSdVa(ang[r], ang[c]).real();
    for (Index c = 0; c < nq; ++c) J(r, na + c) = dSdVm(ang[r], net.pq[c]).real();
  }
  for (Index r = 0; r < nq; ++r) {
    for (Index c = 0; c < na; ++c) J(na + r, c) = dSdVa(net.pq[r], ang[c]).imag();
    for (Index c = 0; c < nq; ++c) J(na + r, na + c) = dSdVm(net.pq[r], net.pq[c]).imag();
  }
  return J;
}

}  // namespace

Eigen::MatrixXcd assemble_ybus(const Network& net, const Contingency& y) {
  if (static_cast<std::size_t>(y.size()) != net.branches.size())
    throw std::invalid_argument("contingency does not match branch count");
  int n = static_cast<int>(net.buses.size());
  MatrixXcd Y = MatrixXcd::Zero(n, n);
  for (std::size_t k = 0; k < net.branches.size(); ++k) {
    const Branch& br = net.branches[k];
    double s = sigmoid(y[static_cast<Index>(k)]);
    cd ys = s * br.y_nom;
    cd bc(0.0, 0.5 * s * br.charge_b);
    Y(br.from, br.from) += ys + bc;
    Y(br.to, br.to) += ys + bc;
    Y(br.from, br.to) -= ys;
    Y(br.to, br.from) -= ys;
  }
  for (int i = 0; i < n; ++i) Y(i, i) += cd(net.buses[i].gs, net.buses[i].bs);
  return Y;
}

PowerFlowSolution solve_powerflow(const Network& net, const Dispatch& d,
                                  const Contingency& y, const SolverOptions& opts,
                                  SolveCounter* counter) {
  check_sizes(net, d, y);
  if (counter) counter->count.fetch_add(1, std::memory_order_relaxed);

  int n = static_cast<int>(net.buses.size());
  MatrixXcd Y = assemble_ybus(net, y);
  std::vector<int> ang = angle_buses(net);
  Index na = static_cast<Index>(ang.size());
  Index nq = static_cast<Index>(net.pq.size());

  VectorXd p_spec, q_spec;
  scheduled_injections(net, d, p_spec, q_spec);

  VectorXd vm = VectorXd::Ones(n);
  for (std::size_t s = 0; s < net.gen_buses.size(); ++s)
    vm[net.gen_buses[s]] = d.v_g[static_cast<Index>(s)];
  VectorXd va = VectorXd::Zero(n);

  PowerFlowSolution sol;
  sol.converged = false;
  sol.iterations = 0;

  VectorXcd V(n), S(n);
  VectorXd f;
  double res = 0.0;
  for (int it = 0; it <= opts.max_iter; ++it) {
    for (int i = 0; i < n; ++i) V[i] = std::polar(vm[i], va[i]);
    S = V.array() * (Y * V).conjugate().array();
    f = mismatch(net, ang, S, p_spec, q_spec);
    res = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
    sol.iterations = it;
    if (std::isfinite(res) && res <= opts.tol) {
      sol.converged = true;
      break;
    }
    if (it == opts.max_iter || !std::isfinite(res)) break;

    MatrixXcd dSdVa, dSdVm;
    injection_jacobians(Y, V, vm, dSdVa, dSdVm);
    MatrixXd J = newton_jacobian(net, ang, dSdVa, dSdVm);
    VectorXd dx = J.partialPivLu().solve(-f);
    if (!dx.allFinite()) {
      // Tikhonov-regularized fallback for singular or near-singular Jacobians
      MatrixXd JtJ = J.transpose() * J;
      JtJ.diagonal().array() += opts.regularization;
      dx = JtJ.ldlt().solve(J.transpose() * (-f));
      if (!dx.allFinite()) break;  // structurally broken; keep last iterate
    }
    VectorXd vm_new = vm, va_new = va;
    for (Index a = 0; a < na; ++a) va_new[ang[a]] += dx[a];
    for (Index q = 0; q < nq; ++q) vm_new[net.pq[q]] += dx[na + q];
    bool sane = va_new.allFinite() && vm_new.allFinite();
    for (Index q = 0; sane && q < nq; ++q)
      if (vm_new[net.pq[q]] <= 1e-6) sane = false;
    if (!sane) break;  // keep the last physical iterate
    vm = vm_new;
    va = va_new;
  }

  sol.v = vm;
  sol.theta = va;
  sol.residual_norm = std::isfinite(res) ? res : std::numeric_limits<double>::max();

  // Recover generator reactive injections and the slack injections from the
  // returned state; multiple generators on one bus split the bus total evenly.
  for (int i = 0; i < n; ++i) V[i] = std::polar(vm[i], va[i]);
  S = V.array() * (Y * V).conjugate().array();
  VectorXd p_load = VectorXd::Zero(n), q_load = VectorXd::Zero(n);
  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    p_load[net.loads[l].bus] += d.p_l[static_cast<Index>(l)];
    q_load[net.loads[l].bus] += d.q_l[static_cast<Index>(l)];
  }
  sol.p_g.resize(net.gens.size());
  sol.q_g.resize(net.gens.size());
  sol.slack_p = S[net.slack].real() + p_load[net.slack];
  sol.slack_q = S[net.slack].imag() + q_load[net.slack];
  std::vector<double> nonslack_p(net.gens.size(), 0.0);
  for (std::size_t i = 0; i < net.nonslack_gens.size(); ++i)
    nonslack_p[net.nonslack_gens[i]] = d.p_g[static_cast<Index>(i)];
  for (std::size_t g = 0; g < net.gens.size(); ++g) {
    int b = net.gens[g].bus;
    double share = 1.0 / static_cast<double>(net.gens_at[b].size());
    sol.q_g[static_cast<Index>(g)] = (S[b].imag() + q_load[b]) * share;
    sol.p_g[static_cast<Index>(g)] =
        (b == net.slack) ? sol.slack_p * share : nonslack_p[g];
  }
  return sol;
}

ScalarGradient grad_scalar(const Network& net, const Dispatch& d,
                           const DispatchBox& box, const Contingency& y,
                           const PowerFlowSolution& sol, const ScalarFunctional& fn,
                           const SolverOptions& opts) {
  check_sizes(net, d, y);
  int n = static_cast<int>(net.buses.size());
  int nb = static_cast<int>(net.branches.size());
  std::vector<int> ang = angle_buses(net);
  Index na = static_cast<Index>(ang.size());
  Index nq = static_cast<Index>(net.pq.size());
  Index m = na + nq;

  // Row position of each bus in the residual blocks; -1 if absent.
  std::vector<int> p_row(n, -1), q_row(n, -1);
  for (Index a = 0; a < na; ++a) p_row[ang[a]] = static_cast<int>(a);
  for (Index q = 0; q < nq; ++q) q_row[net.pq[q]] = static_cast<int>(na + q);

  MatrixXcd Y = assemble_ybus(net, y);
  VectorXcd V(n);
  for (int i = 0; i < n; ++i) V[i] = std::polar(sol.v[i], sol.theta[i]);
  MatrixXcd dSdVa, dSdVm;
  injection_jacobians(Y, V, sol.v, dSdVa, dSdVm);
  MatrixXd J = newton_jacobian(net, ang, dSdVa, dSdVm);

  ScalarPartials p = fn(net, d, y, sol);
  auto at = [](const VectorXd& v, Index i) -> double {
    return v.size() ? v[i] : 0.0;
  };

  // Bus-level weights of the recovery step: d(scalar)/d(P_calc[b]) and
  // d(scalar)/d(Q_calc[b]) coming from slack-share P and generator Q shares.
  VectorXd wp = VectorXd::Zero(n), wq = VectorXd::Zero(n);
  for (std::size_t g = 0; g < net.gens.size(); ++g) {
    int b = net.gens[g].bus;
    double share = 1.0 / static_cast<double>(net.gens_at[b].size());
    wq[b] += at(p.d_gen_q, static_cast<Index>(g)) * share;
    if (b == net.slack) wp[b] += at(p.d_gen_p, static_cast<Index>(g)) * share;
  }

  // d(scalar)/d(state): direct |V| dependence at PQ buses plus recovery rows.
  VectorXd Fu = VectorXd::Zero(m);
  for (Index q = 0; q < nq; ++q) Fu[na + q] += at(p.d_vbus, net.pq[q]);
  for (int b = 0; b < n; ++b) {
    if (wp[b] == 0.0 && wq[b] == 0.0) continue;
    for (Index a = 0; a < na; ++a)
      Fu[a] += wp[b] * dSdVa(b, ang[a]).real() + wq[b] * dSdVa(b, ang[a]).imag();
    for (Index q = 0; q < nq; ++q)
      Fu[na + q] +=
          wp[b] * dSdVm(b, net.pq[q]).real() + wq[b] * dSdVm(b, net.pq[q]).imag();
  }

  VectorXd mu = VectorXd::Zero(m);
  if (m > 0) {
    Eigen::PartialPivLU<MatrixXd> lu(J);
    mu = lu.transpose().solve(Fu);
    if (!mu.allFinite()) {
      MatrixXd JJt = J * J.transpose();
      JJt.diagonal().array() += opts.regularization;
      mu = JJt.ldlt().solve(J * Fu);
      if (!mu.allFinite())
        throw PowerFlowError("adjoint solve failed on a singular Jacobian");
    }
  }

  // Full-layout dispatch gradient.
  VectorXd gx = VectorXd::Zero(box.total());
  Index s = 0;
  for (std::size_t i = 0; i < net.nonslack_gens.size(); ++i, ++s) {
    int g = net.nonslack_gens[i];
    int b = net.gens[g].bus;
    gx[s] = at(p.d_gen_p, g) + mu[p_row[b]];
  }
  for (std::size_t vs = 0; vs < net.gen_buses.size(); ++vs, ++s) {
    int b = net.gen_buses[vs];
    double acc = at(p.d_vbus, b);
    for (int c = 0; c < n; ++c) {
      if (wp[c] != 0.0) acc += wp[c] * dSdVm(c, b).real();
      if (wq[c] != 0.0) acc += wq[c] * dSdVm(c, b).imag();
    }
    for (Index a = 0; a < na; ++a) acc -= mu[a] * dSdVm(ang[a], b).real();
    for (Index q = 0; q < nq; ++q) acc -= mu[na + q] * dSdVm(net.pq[q], b).imag();
    gx[s] = acc;
  }
  for (std::size_t l = 0; l < net.loads.size(); ++l, ++s) {
    int b = net.loads[l].bus;
    double acc = at(p.d_load_p, static_cast<Index>(l));
    if (b == net.slack)
      acc += wp[b];
    else
      acc -= mu[p_row[b]];
    gx[s] = acc;
  }
  for (std::size_t l = 0; l < net.loads.size(); ++l, ++s) {
    int b = net.loads[l].bus;
    double acc = at(p.d_load_q, static_cast<Index>(l));
    if (net.buses[b].type == BusType::PQ)
      acc -= mu[q_row[b]];
    else
      acc += wq[b];  // slack or PV: enters the recovered generator Q
    gx[s] = acc;
  }

  // Contingency gradient: direct term plus the Ybus dependence of both the
  // residual and the recovery rows.
  ScalarGradient out;
  out.value = p.value;
  out.wrt_y = VectorXd::Zero(nb);
  for (int k = 0; k < nb; ++k) {
    const Branch& br = net.branches[k];
    double sig = sigmoid(y[k]);
    double dsig = sig * (1.0 - sig);
    cd yb = br.y_nom + cd(0.0, 0.5 * br.charge_b);
    // dS/d(sigma_k) is nonzero only at the branch endpoints.
    cd ci = yb * V[br.from] - br.y_nom * V[br.to];
    cd cj = yb * V[br.to] - br.y_nom * V[br.from];
    cd si = V[br.from] * std::conj(ci);
    cd sj = V[br.to] * std::conj(cj);
    double acc = 0.0;
    for (int e = 0; e < 2; ++e) {
      int b = e ? br.to : br.from;
      cd sb = e ? sj : si;
      if (wp[b] != 0.0) acc += wp[b] * sb.real();
      if (wq[b] != 0.0) acc += wq[b] * sb.imag();
      if (p_row[b] >= 0) acc -= mu[p_row[b]] * sb.real();
      if (q_row[b] >= 0) acc -= mu[q_row[b]] * sb.imag();
    }
    out.wrt_y[k] = at(p.d_y, k) + dsig * acc;
  }

  // Chain rule through the logit reparameterization, written in terms of the
  // physical coordinate: dx/dz = (x - lo)(up - x)/(up - lo).
  VectorXd x = flatten(d);
  out.wrt_z.resize(box.dim());
  for (Index i = 0; i < box.dim(); ++i) {
    Index slot = box.free[i];
    double w = (x[slot] - box.lower[slot]) * (box.upper[slot] - x[slot]) /
               (box.upper[slot] - box.lower[slot]);
    out.wrt_z[i] = gx[slot] * w;
  }
  return out;
}

}  // namespace scopf
