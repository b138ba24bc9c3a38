#include "scopf/json_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

namespace scopf::io {

namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vec_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw IoError(std::string(what) + " is not an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw IoError(std::string(what) + " has a non-numeric entry");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

json outcome_to_json(const ContingencyOutcome& o) {
  return json{{"y", vec_to_json(o.y)}, {"report", severity_to_json(o.report)}};
}

json parse_json_file(const std::string& path) {
  json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw IoError("malformed JSON in " + path);
  return j;
}

double num_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number())
    throw IoError(std::string("missing or non-numeric field \"") + key + "\"");
  return j[key].get<double>();
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("read failed on " + path);
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << content;
  f.flush();
  if (!f) throw IoError("write failed on " + path);
}

void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string fnv1a64_hex(const std::string& content) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : content) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

json severity_to_json(const SeverityReport& rep) {
  json v = json::object();
  for (const auto& [k, x] : rep.violations) v[k] = x;
  return json{{"economic_cost", rep.economic_cost},
              {"violations", v},
              {"severity", rep.severity},
              {"log_prior", rep.log_prior},
              {"risk_adjusted", rep.risk_adjusted},
              {"converged", rep.converged}};
}

SeverityReport severity_from_json(const json& j) {
  SeverityReport rep;
  rep.economic_cost = num_field(j, "economic_cost");
  rep.severity = num_field(j, "severity");
  rep.log_prior = num_field(j, "log_prior");
  rep.risk_adjusted = num_field(j, "risk_adjusted");
  if (!j.contains("converged") || !j["converged"].is_boolean())
    throw IoError("missing or non-boolean field \"converged\"");
  rep.converged = j["converged"].get<bool>();
  if (j.contains("violations")) {
    if (!j["violations"].is_object()) throw IoError("\"violations\" is not an object");
    for (const auto& [k, x] : j["violations"].items()) {
      if (!x.is_number()) throw IoError("violation \"" + k + "\" is not numeric");
      rep.violations[k] = x.get<double>();
    }
  }
  return rep;
}

json dispatch_to_json(const Dispatch& d) {
  return json{{"p_g", vec_to_json(d.p_g)},
              {"v_g", vec_to_json(d.v_g)},
              {"p_l", vec_to_json(d.p_l)},
              {"q_l", vec_to_json(d.q_l)}};
}

Dispatch dispatch_from_json(const json& j, const Network& net) {
  Dispatch d;
  d.p_g = vec_from_json(j.value("p_g", json::array()), "p_g");
  d.v_g = vec_from_json(j.value("v_g", json::array()), "v_g");
  d.p_l = vec_from_json(j.value("p_l", json::array()), "p_l");
  d.q_l = vec_from_json(j.value("q_l", json::array()), "q_l");
  if (static_cast<std::size_t>(d.p_g.size()) != net.nonslack_gens.size() ||
      static_cast<std::size_t>(d.v_g.size()) != net.gen_buses.size() ||
      static_cast<std::size_t>(d.p_l.size()) != net.loads.size() ||
      static_cast<std::size_t>(d.q_l.size()) != net.loads.size())
    throw IoError("dispatch vectors do not match the network layout");
  return d;
}

json scopf_result_to_json(const ScopfResult& r) {
  json cont = json::array();
  for (const auto& o : r.contingencies) cont.push_back(outcome_to_json(o));
  json hist = json::array();
  for (const auto& h : r.history)
    hist.push_back(json{{"round", h.round},
                        {"mean_ux", h.mean_ux},
                        {"min_ux", h.min_ux},
                        {"max_sr", h.max_sr},
                        {"accept_x", h.accept_x},
                        {"accept_y", h.accept_y}});
  return json{{"schema_version", schema_version},
              {"best_dispatch", dispatch_to_json(r.best_dispatch)},
              {"best_potential", r.best_potential},
              {"contingencies", cont},
              {"history", hist},
              {"solve_count", r.solve_count},
              {"budget", json{{"per_round_dispatch", r.ledger.per_round_dispatch},
                              {"per_round_contingency", r.ledger.per_round_contingency},
                              {"final_selection", r.ledger.final_selection},
                              {"total", r.ledger.total}}}};
}

json predict_result_to_json(const PredictResult& r) {
  json cont = json::array();
  for (const auto& o : r.contingencies) cont.push_back(outcome_to_json(o));
  return json{{"schema_version", schema_version},
              {"contingencies", cont},
              {"solve_count", r.solve_count}};
}

json stress_report_to_json(const StressReport& r) {
  json hist = json::object();
  for (const auto& [k, v] : r.outage_histogram) hist[std::to_string(k)] = v;
  json q{{"min", r.severity_quantiles.min}, {"p5", r.severity_quantiles.p5},
         {"p25", r.severity_quantiles.p25}, {"p50", r.severity_quantiles.p50},
         {"p75", r.severity_quantiles.p75}, {"p95", r.severity_quantiles.p95},
         {"max", r.severity_quantiles.max}};
  json j{{"schema_version", schema_version},
         {"samples", r.samples},
         {"seed", r.seed},
         {"prior_mu0", r.prior_mu0},
         {"prior_sigma0", r.prior_sigma0},
         {"failure_rate", r.failure_rate},
         {"severity_quantiles", q},
         {"outage_histogram", hist}};
  if (r.coverage_exceedance)
    j["coverage_exceedance"] = *r.coverage_exceedance;
  else
    j["coverage_exceedance"] = nullptr;
  return j;
}

StressReport stress_report_from_json(const json& j) {
  StressReport r;
  if (!j.contains("samples") || !j["samples"].is_number_integer())
    throw IoError("missing or non-integer field \"samples\"");
  r.samples = j["samples"].get<long>();
  if (!j.contains("seed") || !j["seed"].is_number_integer())
    throw IoError("missing or non-integer field \"seed\"");
  r.seed = j["seed"].get<std::uint64_t>();
  r.prior_mu0 = num_field(j, "prior_mu0");
  r.prior_sigma0 = num_field(j, "prior_sigma0");
  r.failure_rate = num_field(j, "failure_rate");
  if (!j.contains("severity_quantiles") || !j["severity_quantiles"].is_object())
    throw IoError("missing \"severity_quantiles\" object");
  const json& q = j["severity_quantiles"];
  r.severity_quantiles.min = num_field(q, "min");
  r.severity_quantiles.p5 = num_field(q, "p5");
  r.severity_quantiles.p25 = num_field(q, "p25");
  r.severity_quantiles.p50 = num_field(q, "p50");
  r.severity_quantiles.p75 = num_field(q, "p75");
  r.severity_quantiles.p95 = num_field(q, "p95");
  r.severity_quantiles.max = num_field(q, "max");
  if (j.contains("outage_histogram")) {
    if (!j["outage_histogram"].is_object())
      throw IoError("\"outage_histogram\" is not an object");
    for (const auto& [k, v] : j["outage_histogram"].items()) {
      try {
        r.outage_histogram[std::stoi(k)] = v.get<long>();
      } catch (const std::exception&) {
        throw IoError("bad outage_histogram key \"" + k + "\"");
      }
    }
  }
  if (j.contains("coverage_exceedance") && j["coverage_exceedance"].is_number())
    r.coverage_exceedance = j["coverage_exceedance"].get<double>();
  return r;
}

Dispatch load_dispatch(const std::string& path, const Network& net) {
  json j = parse_json_file(path);
  if (j.is_object() && j.contains("best_dispatch"))
    return dispatch_from_json(j["best_dispatch"], net);
  return dispatch_from_json(j, net);
}

std::vector<Contingency> load_contingencies(const std::string& path,
                                            const Network& net) {
  json j = parse_json_file(path);
  const json* arr = nullptr;
  if (j.is_object() && j.contains("contingencies") && j["contingencies"].is_array())
    arr = &j["contingencies"];
  else if (j.is_array())
    arr = &j;
  else
    throw IoError("no contingency list found in " + path);
  std::vector<Contingency> out;
  out.reserve(arr->size());
  for (const json& e : *arr) {
    const json& yv = e.is_object() && e.contains("y") ? e["y"] : e;
    Contingency y = vec_from_json(yv, "contingency");
    if (static_cast<std::size_t>(y.size()) != net.branches.size())
      throw IoError("contingency length does not match the branch count");
    out.push_back(std::move(y));
  }
  return out;
}

StressReport load_stress_report(const std::string& path) {
  return stress_report_from_json(parse_json_file(path));
}

}  // namespace scopf::io
