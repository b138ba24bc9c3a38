#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace scopf {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class BusType { Slack, PV, PQ };

struct Bus {
  int id;            // external id from the case file
  BusType type;
  double vmin, vmax; // p.u. voltage limits
  double gs, bs;     // bus shunt admittance, p.u. on base MVA
};

struct Branch {
  int from, to;                // bus indices (not external ids)
  std::complex<double> y_nom;  // nominal series admittance 1/(r+jx), p.u.
  double charge_b;             // total line charging susceptance, p.u.
};

struct Gen {
  int bus;                     // bus index
  double pmin, pmax;           // p.u.
  double qmin, qmax;           // p.u.
  double c2, c1, c0;           // cost $/p.u.^2, $/p.u., $
  double vg;                   // voltage setpoint from the case, p.u.
  double pg_nom;               // nominal active output from the case, p.u.
};

struct Load {
  int bus;                     // bus index
  double p_nom, q_nom;         // p.u.
  bool dispatchable;
};

// All quantities per-unit on base_mva. Branches and generators are the
// in-service subset of the case tables; bus/branch/gen order follows the file.
struct Network {
  double base_mva = 0.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Gen> gens;
  std::vector<Load> loads;

  int slack = -1;                         // bus index of the single slack bus
  std::vector<int> pv, pq;                // bus indices, ascending
  std::vector<int> gen_buses;             // distinct bus indices with generators, ascending
  std::vector<int> nonslack_gens;         // generator indices not at the slack bus
  std::vector<std::vector<int>> gens_at;  // per bus: generator indices
  std::vector<std::string> warnings;      // non-fatal parse diagnostics

  int bus_index(int external_id) const {
    auto it = id_to_index.find(external_id);
    if (it == id_to_index.end())
      throw ParseError("unknown bus id " + std::to_string(external_id));
    return it->second;
  }

  // Position of a generator bus in the v_g dispatch segment, -1 if none.
  int v_slot(int bus) const {
    for (std::size_t s = 0; s < gen_buses.size(); ++s)
      if (gen_buses[s] == bus) return static_cast<int>(s);
    return -1;
  }

  std::unordered_map<int, int> id_to_index;
};

struct ParseOptions {
  bool dispatchable_loads = false;  // loads adjustable within [0.5, 1.0] x nominal
};

Network parse_case(const std::string& text, const ParseOptions& opts = {});
Network parse_case_file(const std::string& path, const ParseOptions& opts = {});

// Controllable operating point. p_l/q_l cover every load; non-dispatchable
// entries stay at nominal and are frozen out of the box coordinates.
struct Dispatch {
  Eigen::VectorXd p_g;  // per non-slack generator, order = Network::nonslack_gens
  Eigen::VectorXd v_g;  // per generator bus, order = Network::gen_buses
  Eigen::VectorXd p_l;  // per load
  Eigen::VectorXd q_l;  // per load
};

// Box limits aligned with the flattened dispatch layout
// [p_g | v_g | p_l | q_l]. Coordinates with equal bounds are frozen: they keep
// their value but do not appear in the unconstrained vector.
struct DispatchBox {
  Eigen::VectorXd lower, upper;    // full layout
  std::vector<Eigen::Index> free;  // slots with lower < upper, ascending
  Eigen::Index n_pg = 0, n_vg = 0, n_pl = 0, n_ql = 0;

  Eigen::Index total() const { return n_pg + n_vg + n_pl + n_ql; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(free.size()); }
};

DispatchBox dispatch_box(const Network& net);

// Operating point as stored in the case file: PG for non-slack generators,
// VG voltage setpoints, loads at nominal.
Dispatch nominal_dispatch(const Network& net);

Eigen::VectorXd flatten(const Dispatch& d);
Dispatch unflatten(const Network& net, const Eigen::VectorXd& x);

// Bijection between the open box and R^dim via the logit; frozen coordinates
// are reinstated at their pinned value on the way back.
Eigen::VectorXd to_unconstrained(const Dispatch& d, const DispatchBox& box);
Dispatch from_unconstrained(const Network& net, const Eigen::VectorXd& z,
                            const DispatchBox& box);

// Numerically stable logistic function.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace scopf
