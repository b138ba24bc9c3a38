#include "scopf/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace scopf {

namespace {

struct Table {
  std::vector<std::vector<double>> rows;
  std::vector<int> lines;  // source line per row, for diagnostics
};

std::string strip_comment(const std::string& line) {
  auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& tok, const std::string& where, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != tok.size())
    throw ParseError(where + " table, line " + std::to_string(line) +
                     ": bad number '" + tok + "'");
  return v;
}

}  // namespace

Network parse_case(const std::string& text, const ParseOptions& opts) {
  std::map<std::string, Table> tables;
  double base_mva = 0.0;
  bool have_base = false;
  std::vector<std::string> warnings;

  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::string open_table;  // table currently being filled
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;

    if (!open_table.empty()) {
      if (line.rfind("];", 0) == 0 || line == "]") {
        open_table.clear();
        continue;
      }
      bool closes = line.find("];") != std::string::npos;
      if (closes) line = trim(line.substr(0, line.find("];")));
      if (!line.empty()) {
        std::string row_text = line;
        std::vector<double> row;
        std::istringstream toks(row_text);
        std::string tok;
        while (toks >> tok) {
          if (!tok.empty() && tok.back() == ';') tok.pop_back();
          if (tok.empty()) continue;
          row.push_back(parse_number(tok, open_table, lineno));
        }
        if (!row.empty()) {
          tables[open_table].rows.push_back(std::move(row));
          tables[open_table].lines.push_back(lineno);
        }
      }
      if (closes) open_table.clear();
      continue;
    }

    if (line.rfind("function", 0) == 0) continue;
    if (line.rfind("mpc.", 0) != 0) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("line " + std::to_string(lineno) + ": expected '='");
    std::string name = trim(line.substr(4, eq - 4));
    std::string rhs = trim(line.substr(eq + 1));

    if (rhs.rfind('[', 0) == 0) {
      rhs = trim(rhs.substr(1));
      if (name != "bus" && name != "gen" && name != "branch" && name != "gencost") {
        warnings.push_back("ignoring unrecognized table mpc." + name);
        // skim to the closing bracket
        if (rhs.find("];") == std::string::npos) {
          while (std::getline(in, raw)) {
            ++lineno;
            if (strip_comment(raw).find("];") != std::string::npos) break;
          }
        }
        continue;
      }
      open_table = name;
      if (!rhs.empty()) {
        // row data on the same line as the opening bracket
        std::string rest = rhs;
        bool closes = rest.find("];") != std::string::npos;
        if (closes) rest = trim(rest.substr(0, rest.find("];")));
        std::istringstream rows(rest);
        std::string one;
        while (std::getline(rows, one, ';')) {
          one = trim(one);
          if (one.empty()) continue;
          std::vector<double> row;
          std::istringstream toks(one);
          std::string tok;
          while (toks >> tok) row.push_back(parse_number(tok, name, lineno));
          tables[name].rows.push_back(std::move(row));
          tables[name].lines.push_back(lineno);
        }
        if (closes) open_table.clear();
      }
    } else {
      std::string value = rhs;
      if (!value.empty() && value.back() == ';') value.pop_back();
      value = trim(value);
      if (name == "baseMVA") {
        base_mva = parse_number(value, "baseMVA", lineno);
        have_base = true;
      } else if (name == "version") {
        // accepted, unused
      } else {
        warnings.push_back("ignoring unrecognized field mpc." + name);
      }
    }
  }
  if (!open_table.empty())
    throw ParseError(open_table + " table: missing closing bracket");
  if (!have_base || base_mva <= 0.0) throw ParseError("missing or invalid baseMVA");
  for (const char* required : {"bus", "gen", "branch", "gencost"})
    if (tables.find(required) == tables.end())
      throw ParseError(std::string("missing table mpc.") + required);

  Network net;
  net.base_mva = base_mva;
  net.warnings = std::move(warnings);

  const Table& bus_t = tables["bus"];
  for (std::size_t r = 0; r < bus_t.rows.size(); ++r) {
    const auto& row = bus_t.rows[r];
    int line = bus_t.lines[r];
    if (row.size() < 13)
      throw ParseError("bus table, line " + std::to_string(line) +
                       ": expected 13 columns, got " + std::to_string(row.size()));
    Bus b;
    b.id = static_cast<int>(row[0]);
    int type = static_cast<int>(row[1]);
    switch (type) {
      case 1: b.type = BusType::PQ; break;
      case 2: b.type = BusType::PV; break;
      case 3: b.type = BusType::Slack; break;
      default:
        throw ParseError("bus table, line " + std::to_string(line) +
                         ": unsupported bus type " + std::to_string(type));
    }
    b.gs = row[4] / base_mva;
    b.bs = row[5] / base_mva;
    b.vmax = row[11];
    b.vmin = row[12];
    if (b.vmin > b.vmax)
      throw ParseError("bus table, line " + std::to_string(line) +
                       ": Vmin > Vmax at bus " + std::to_string(b.id));
    if (net.id_to_index.count(b.id))
      throw ParseError("bus table, line " + std::to_string(line) +
                       ": duplicate bus id " + std::to_string(b.id));
    net.id_to_index[b.id] = static_cast<int>(net.buses.size());
    net.buses.push_back(b);

    double pd = row[2] / base_mva, qd = row[3] / base_mva;
    if (pd != 0.0 || qd != 0.0) {
      Load ld;
      ld.bus = net.id_to_index[b.id];
      ld.p_nom = pd;
      ld.q_nom = qd;
      ld.dispatchable = opts.dispatchable_loads;
      net.loads.push_back(ld);
    }
  }

  int n = static_cast<int>(net.buses.size());
  if (n == 0) throw ParseError("bus table is empty");
  net.gens_at.assign(n, {});

  const Table& gen_t = tables["gen"];
  const Table& cost_t = tables["gencost"];
  if (cost_t.rows.size() != gen_t.rows.size())
    throw ParseError("gencost table must have one row per gen table row");
  for (std::size_t r = 0; r < gen_t.rows.size(); ++r) {
    const auto& row = gen_t.rows[r];
    int line = gen_t.lines[r];
    if (row.size() < 10)
      throw ParseError("gen table, line " + std::to_string(line) +
                       ": expected at least 10 columns");
    if (row[7] == 0.0) {
      net.warnings.push_back("gen table, line " + std::to_string(line) +
                             ": out-of-service generator skipped");
      continue;
    }
    Gen g;
    int bus_id = static_cast<int>(row[0]);
    if (!net.id_to_index.count(bus_id))
      throw ParseError("gen table, line " + std::to_string(line) +
                       ": unknown bus id " + std::to_string(bus_id));
    g.bus = net.id_to_index[bus_id];
    g.pg_nom = row[1] / base_mva;
    g.qmax = row[3] / base_mva;
    g.qmin = row[4] / base_mva;
    g.vg = row[5];
    g.pmax = row[8] / base_mva;
    g.pmin = row[9] / base_mva;
    if (g.pmin > g.pmax || g.qmin > g.qmax)
      throw ParseError("gen table, line " + std::to_string(line) +
                       ": inverted P or Q limits");

    const auto& cost = cost_t.rows[r];
    int cline = cost_t.lines[r];
    if (cost.size() < 4)
      throw ParseError("gencost table, line " + std::to_string(cline) +
                       ": expected at least 4 columns");
    if (static_cast<int>(cost[0]) != 2)
      throw ParseError("gencost table, line " + std::to_string(cline) +
                       ": only polynomial cost model 2 is supported");
    int ncost = static_cast<int>(cost[3]);
    if (ncost < 1 || ncost > 3 || cost.size() < 4 + static_cast<std::size_t>(ncost))
      throw ParseError("gencost table, line " + std::to_string(cline) +
                       ": need 1 to 3 polynomial coefficients");
    double c[3] = {0.0, 0.0, 0.0};  // c2, c1, c0 in MW terms
    for (int k = 0; k < ncost; ++k) c[3 - ncost + k] = cost[4 + k];
    g.c2 = c[0] * base_mva * base_mva;
    g.c1 = c[1] * base_mva;
    g.c0 = c[2];

    net.gens_at[g.bus].push_back(static_cast<int>(net.gens.size()));
    net.gens.push_back(g);
  }

  const Table& br_t = tables["branch"];
  for (std::size_t r = 0; r < br_t.rows.size(); ++r) {
    const auto& row = br_t.rows[r];
    int line = br_t.lines[r];
    if (row.size() < 11)
      throw ParseError("branch table, line " + std::to_string(line) +
                       ": expected at least 11 columns");
    if (row[10] == 0.0) {
      net.warnings.push_back("branch table, line " + std::to_string(line) +
                             ": out-of-service branch skipped");
      continue;
    }
    Branch br;
    int f_id = static_cast<int>(row[0]), t_id = static_cast<int>(row[1]);
    if (!net.id_to_index.count(f_id))
      throw ParseError("branch table, line " + std::to_string(line) +
                       ": unknown bus id " + std::to_string(f_id));
    if (!net.id_to_index.count(t_id))
      throw ParseError("branch table, line " + std::to_string(line) +
                       ": unknown bus id " + std::to_string(t_id));
    br.from = net.id_to_index[f_id];
    br.to = net.id_to_index[t_id];
    double rr = row[2], xx = row[3];
    if (rr == 0.0 && xx == 0.0)
      throw ParseError("branch table, line " + std::to_string(line) +
                       ": zero impedance branch " + std::to_string(f_id) + "-" +
                       std::to_string(t_id));
    br.y_nom = 1.0 / std::complex<double>(rr, xx);
    br.charge_b = row[4];
    if (row.size() > 8 && row[8] != 0.0 && row[8] != 1.0)
      net.warnings.push_back("branch table, line " + std::to_string(line) +
                             ": off-nominal tap ratio ignored");
    if (row.size() > 9 && row[9] != 0.0)
      net.warnings.push_back("branch table, line " + std::to_string(line) +
                             ": phase shift ignored");
    net.branches.push_back(br);
  }

  for (int i = 0; i < n; ++i) {
    if (net.buses[i].type == BusType::Slack) {
      if (net.slack >= 0) throw ParseError("multiple slack buses");
      net.slack = i;
    }
  }
  if (net.slack < 0) throw ParseError("no slack bus");

  for (int i = 0; i < n; ++i) {
    if (net.buses[i].type == BusType::PV) net.pv.push_back(i);
    if (net.buses[i].type == BusType::PQ) net.pq.push_back(i);
  }
  for (int i : net.pv)
    if (net.gens_at[i].empty())
      throw ParseError("PV bus " + std::to_string(net.buses[i].id) +
                       " has no in-service generator");
  if (net.gens_at[net.slack].empty())
    throw ParseError("slack bus " + std::to_string(net.buses[net.slack].id) +
                     " has no in-service generator");
  for (std::size_t g = 0; g < net.gens.size(); ++g) {
    if (net.buses[net.gens[g].bus].type == BusType::PQ)
      throw ParseError("generator at PQ bus " +
                       std::to_string(net.buses[net.gens[g].bus].id));
    if (net.gens[g].bus != net.slack)
      net.nonslack_gens.push_back(static_cast<int>(g));
  }
  std::set<int> gb;
  for (const Gen& g : net.gens) gb.insert(g.bus);
  net.gen_buses.assign(gb.begin(), gb.end());

  return net;
}

Network parse_case_file(const std::string& path, const ParseOptions& opts) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open case file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_case(ss.str(), opts);
}

namespace {

// Load box limits; non-dispatchable loads pin to nominal.
void load_bounds(const Load& l, double& plo, double& phi, double& qlo, double& qhi) {
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

}  // namespace

DispatchBox dispatch_box(const Network& net) {
  DispatchBox box;
  box.n_pg = static_cast<Eigen::Index>(net.nonslack_gens.size());
  box.n_vg = static_cast<Eigen::Index>(net.gen_buses.size());
  box.n_pl = static_cast<Eigen::Index>(net.loads.size());
  box.n_ql = box.n_pl;
  box.lower.resize(box.total());
  box.upper.resize(box.total());

  Eigen::Index s = 0;
  for (int g : net.nonslack_gens) {
    box.lower[s] = net.gens[g].pmin;
    box.upper[s] = net.gens[g].pmax;
    ++s;
  }
  for (int b : net.gen_buses) {
    box.lower[s] = net.buses[b].vmin;
    box.upper[s] = net.buses[b].vmax;
    ++s;
  }
  for (const Load& l : net.loads) {
    double plo, phi, qlo, qhi;
    load_bounds(l, plo, phi, qlo, qhi);
    box.lower[s] = plo;
    box.upper[s] = phi;
    ++s;
  }
  for (const Load& l : net.loads) {
    double plo, phi, qlo, qhi;
    load_bounds(l, plo, phi, qlo, qhi);
    box.lower[s] = qlo;
    box.upper[s] = qhi;
    ++s;
  }

  for (Eigen::Index i = 0; i < box.total(); ++i) {
    if (box.lower[i] > box.upper[i])
      throw ParseError("inverted dispatch limits at box slot " + std::to_string(i));
    if (box.lower[i] < box.upper[i]) box.free.push_back(i);
  }
  return box;
}

Dispatch nominal_dispatch(const Network& net) {
  Dispatch d;
  d.p_g.resize(net.nonslack_gens.size());
  for (std::size_t i = 0; i < net.nonslack_gens.size(); ++i)
    d.p_g[i] = net.gens[net.nonslack_gens[i]].pg_nom;
  d.v_g.resize(net.gen_buses.size());
  for (std::size_t s = 0; s < net.gen_buses.size(); ++s)
    d.v_g[s] = net.gens[net.gens_at[net.gen_buses[s]].front()].vg;
  d.p_l.resize(net.loads.size());
  d.q_l.resize(net.loads.size());
  for (std::size_t l = 0; l < net.loads.size(); ++l) {
    d.p_l[l] = net.loads[l].p_nom;
    d.q_l[l] = net.loads[l].q_nom;
  }
  return d;
}

Eigen::VectorXd flatten(const Dispatch& d) {
  Eigen::VectorXd x(d.p_g.size() + d.v_g.size() + d.p_l.size() + d.q_l.size());
  x << d.p_g, d.v_g, d.p_l, d.q_l;
  return x;
}

Dispatch unflatten(const Network& net, const Eigen::VectorXd& x) {
  Dispatch d;
  Eigen::Index npg = static_cast<Eigen::Index>(net.nonslack_gens.size());
  Eigen::Index nvg = static_cast<Eigen::Index>(net.gen_buses.size());
  Eigen::Index nl = static_cast<Eigen::Index>(net.loads.size());
  if (x.size() != npg + nvg + 2 * nl)
    throw std::invalid_argument("unflatten: wrong vector length");
  d.p_g = x.segment(0, npg);
  d.v_g = x.segment(npg, nvg);
  d.p_l = x.segment(npg + nvg, nl);
  d.q_l = x.segment(npg + nvg + nl, nl);
  return d;
}

Eigen::VectorXd to_unconstrained(const Dispatch& d, const DispatchBox& box) {
  Eigen::VectorXd x = flatten(d);
  if (x.size() != box.total())
    throw std::invalid_argument("to_unconstrained: dispatch/box size mismatch");
  Eigen::VectorXd z(box.dim());
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    Eigen::Index s = box.free[i];
    double t = (x[s] - box.lower[s]) / (box.upper[s] - box.lower[s]);
    if (!(t > 0.0 && t < 1.0))
      throw std::domain_error("to_unconstrained: coordinate " + std::to_string(s) +
                              " not strictly inside the box");
    z[i] = std::log(t / (1.0 - t));
  }
  return z;
}

Dispatch from_unconstrained(const Network& net, const Eigen::VectorXd& z,
                            const DispatchBox& box) {
  if (z.size() != box.dim())
    throw std::invalid_argument("from_unconstrained: wrong vector length");
  Eigen::VectorXd x = box.lower;  // frozen slots keep their pinned value
  for (Eigen::Index i = 0; i < box.dim(); ++i) {
    Eigen::Index s = box.free[i];
    x[s] = box.lower[s] + sigmoid(z[i]) * (box.upper[s] - box.lower[s]);
  }
  return unflatten(net, x);
}

}  // namespace scopf
