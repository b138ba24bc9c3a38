#include "scopf/cli.hpp"

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "scopf/json_io.hpp"

namespace scopf::cli {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_key(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

std::string parse_string(const std::string& raw, const std::string& where) {
  if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
    bad_key(where, "expected a quoted string");
  return raw.substr(1, raw.size() - 2);
}

bool parse_bool(const std::string& raw, const std::string& where) {
  if (raw == "true") return true;
  if (raw == "false") return false;
  bad_key(where, "expected true or false");
}

double parse_double(const std::string& raw, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(raw, &used);
    if (used != raw.size()) bad_key(where, "trailing characters after number");
    return v;
  } catch (const std::invalid_argument&) {
    bad_key(where, "expected a number");
  } catch (const std::out_of_range&) {
    bad_key(where, "number out of range");
  }
}

long long parse_int(const std::string& raw, const std::string& where) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(raw, &used);
    if (used != raw.size()) bad_key(where, "trailing characters after integer");
    return v;
  } catch (const std::invalid_argument&) {
    bad_key(where, "expected an integer");
  } catch (const std::out_of_range&) {
    bad_key(where, "integer out of range");
  }
}

std::uint64_t parse_u64(const std::string& raw, const std::string& where) {
  if (!raw.empty() && raw[0] == '-') bad_key(where, "expected a non-negative integer");
  try {
    std::size_t used = 0;
    std::uint64_t v = std::stoull(raw, &used);
    if (used != raw.size()) bad_key(where, "trailing characters after integer");
    return v;
  } catch (const std::invalid_argument&) {
    bad_key(where, "expected a non-negative integer");
  } catch (const std::out_of_range&) {
    bad_key(where, "integer out of range");
  }
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& config_schema() {
  static const std::map<std::string, Setter> schema = {
      {"case", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.case_path = parse_string(r, w);
       }},
      {"out_dir", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.out_dir = parse_string(r, w);
       }},
      {"seed", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.seed = parse_u64(r, w);
       }},
      {"threads", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.threads = static_cast<int>(parse_int(r, w));
       }},
      {"dispatchable_loads",
       [](RunConfig& c, const std::string& r, const std::string& w) {
         c.dispatchable_loads = parse_bool(r, w);
       }},
      {"solver.tol", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.solver.tol = parse_double(r, w);
       }},
      {"solver.max_iter",
       [](RunConfig& c, const std::string& r, const std::string& w) {
         c.solver.max_iter = static_cast<int>(parse_int(r, w));
       }},
      {"solver.regularization",
       [](RunConfig& c, const std::string& r, const std::string& w) {
         c.solver.regularization = parse_double(r, w);
       }},
      {"penalty.L", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.penalty.L = parse_double(r, w);
       }},
      {"penalty.L_res", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.penalty.L_res = parse_double(r, w);
       }},
      {"prior.mu0", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.prior.mu0 = parse_double(r, w);
       }},
      {"prior.sigma0", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.prior.sigma0 = parse_double(r, w);
       }},
      {"load_cost.c2p", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.load_cost.c2p = parse_double(r, w);
       }},
      {"load_cost.c1p", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.load_cost.c1p = parse_double(r, w);
       }},
      {"load_cost.c2q", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.load_cost.c2q = parse_double(r, w);
       }},
      {"load_cost.c1q", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.load_cost.c1q = parse_double(r, w);
       }},
      {"smc.n_x", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.smc.n_x = static_cast<int>(parse_int(r, w));
       }},
      {"smc.n_y", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.smc.n_y = static_cast<int>(parse_int(r, w));
       }},
      {"smc.rounds", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.smc.rounds = static_cast<int>(parse_int(r, w));
       }},
      {"smc.substeps", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.smc.substeps = static_cast<int>(parse_int(r, w));
       }},
      {"smc.tau_x", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.smc.tau_x = parse_double(r, w);
       }},
      {"smc.tau_y", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.smc.tau_y = parse_double(r, w);
       }},
      {"attack.n_y", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.attack.n_y = static_cast<int>(parse_int(r, w));
       }},
      {"attack.steps", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.attack.substeps = static_cast<int>(parse_int(r, w));
       }},
      {"attack.tau", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.attack.tau = parse_double(r, w);
       }},
      {"attack.dispatch", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.attack.dispatch = parse_string(r, w);
       }},
      {"attack.trace_csv", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.attack.trace_csv = parse_bool(r, w);
       }},
      {"stress.samples", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.stress.samples = static_cast<long>(parse_int(r, w));
       }},
      {"stress.dispatch", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.stress.dispatch = parse_string(r, w);
       }},
      {"stress.predicted", [](RunConfig& c, const std::string& r, const std::string& w) {
         c.stress.predicted = parse_string(r, w);
       }},
      {"stress.samples_csv",
       [](RunConfig& c, const std::string& r, const std::string& w) {
         c.stress.samples_csv = parse_bool(r, w);
       }},
  };
  return schema;
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  require(c.threads >= 0, "threads must be >= 0");
  require(c.solver.tol > 0, "solver.tol must be > 0");
  require(c.solver.max_iter >= 1, "solver.max_iter must be >= 1");
  require(c.solver.regularization >= 0, "solver.regularization must be >= 0");
  require(c.penalty.L >= 0, "penalty.L must be >= 0");
  require(c.penalty.L_res >= 0, "penalty.L_res must be >= 0");
  require(c.prior.sigma0 > 0, "prior.sigma0 must be > 0");
  require(c.smc.n_x >= 1 && c.smc.n_y >= 1, "smc population sizes must be >= 1");
  require(c.smc.rounds >= 0, "smc.rounds must be >= 0");
  require(c.smc.substeps >= 0, "smc.substeps must be >= 0");
  require(c.smc.tau_x > 0 && c.smc.tau_y > 0, "smc step sizes must be > 0");
  require(c.attack.n_y >= 1, "attack.n_y must be >= 1");
  require(c.attack.substeps >= 0, "attack.steps must be >= 0");
  require(c.attack.tau > 0, "attack.tau must be > 0");
  require(c.stress.samples >= 1, "stress.samples must be >= 1");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Collects written files and finishes with a manifest of their content hashes.
struct Emitter {
  explicit Emitter(std::string dir) : dir_(std::move(dir)) { io::ensure_dir(dir_); }

  void add(const std::string& rel, const std::string& content) {
    io::write_file(dir_ + "/" + rel, content);
    files_.push_back(json{{"path", rel}, {"hash", io::fnv1a64_hex(content)}});
  }

  std::string finish(const std::string& command, std::optional<double> wall) {
    json m{{"schema_version", io::schema_version},
           {"command", command},
           {"files", files_}};
    if (wall) m["wall_time_seconds"] = *wall;
    std::string path = dir_ + "/manifest.json";
    io::write_file(path, m.dump(2) + "\n");
    return path;
  }

 private:
  std::string dir_;
  json files_ = json::array();
};

std::string contingency_csv(const std::vector<ContingencyOutcome>& outcomes) {
  std::ostringstream ss;
  ss << "rank,risk_adjusted,severity,log_prior,economic_cost,converged,outages";
  Eigen::Index nb = outcomes.empty() ? 0 : outcomes.front().y.size();
  for (Eigen::Index k = 0; k < nb; ++k) ss << ",sigma_" << k;
  ss << "\n";
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    const ContingencyOutcome& o = outcomes[r];
    ss << r << "," << fmt(o.report.risk_adjusted) << "," << fmt(o.report.severity)
       << "," << fmt(o.report.log_prior) << "," << fmt(o.report.economic_cost)
       << "," << (o.report.converged ? 1 : 0) << "," << outage_count(o.y);
    for (Eigen::Index k = 0; k < o.y.size(); ++k) ss << "," << fmt(sigmoid(o.y[k]));
    ss << "\n";
  }
  return ss.str();
}

}  // namespace

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg;
  const auto& schema = config_schema();
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string where = "config line " + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string raw = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (raw.empty()) throw ConfigError(where + ": empty value");
    std::string full = section.empty() ? key : section + "." + key;
    auto it = schema.find(full);
    if (it == schema.end())
      throw ConfigError(where + ": unknown key \"" + full + "\"");
    if (++seen[full] > 1)
      throw ConfigError(where + ": duplicate key \"" + full + "\"");
    it->second(cfg, raw, where + " (" + full + ")");
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::string text;
  try {
    text = io::read_file(path);
  } catch (const io::IoError& e) {
    throw ConfigError(e.what());
  }
  return parse_config_text(text);
}

std::string emit_reports(const ScopfResult& r, const std::string& out_dir) {
  Emitter em(out_dir);
  em.add("result.json", io::scopf_result_to_json(r).dump(2) + "\n");
  std::ostringstream hist;
  hist << "round,mean_ux,min_ux,max_sr,accept_x,accept_y\n";
  for (const RoundStats& h : r.history)
    hist << h.round << "," << fmt(h.mean_ux) << "," << fmt(h.min_ux) << ","
         << fmt(h.max_sr) << "," << fmt(h.accept_x) << "," << fmt(h.accept_y)
         << "\n";
  em.add("history.csv", hist.str());
  em.add("contingencies.csv", contingency_csv(r.contingencies));
  return em.finish("scopf", r.wall_time);
}

std::string emit_reports(const PredictResult& r, const std::string& out_dir) {
  Emitter em(out_dir);
  em.add("result.json", io::predict_result_to_json(r).dump(2) + "\n");
  em.add("contingencies.csv", contingency_csv(r.contingencies));
  bool have_states = false;
  for (const ChainTrace& t : r.traces)
    if (!t.states.empty()) have_states = true;
  if (have_states) {
    std::ostringstream tr;
    tr << "chain,step,accepted,log_density";
    Eigen::Index dim = 0;
    for (const ChainTrace& t : r.traces)
      if (!t.states.empty()) {
        dim = t.states.front().size();
        break;
      }
    for (Eigen::Index k = 0; k < dim; ++k) tr << ",y_" << k;
    tr << "\n";
    for (std::size_t c = 0; c < r.traces.size(); ++c) {
      const ChainTrace& t = r.traces[c];
      for (std::size_t s = 0; s < t.states.size(); ++s) {
        tr << c << "," << s << "," << (t.accepted[s] ? 1 : 0) << ","
           << fmt(t.log_p[s]);
        for (Eigen::Index k = 0; k < t.states[s].size(); ++k)
          tr << "," << fmt(t.states[s][k]);
        tr << "\n";
      }
    }
    em.add("trace.csv", tr.str());
  }
  return em.finish("attack", r.wall_time);
}

std::string emit_reports(const StressReport& r, const std::string& out_dir) {
  Emitter em(out_dir);
  em.add("result.json", io::stress_report_to_json(r).dump(2) + "\n");
  std::ostringstream hist;
  hist << "outages,failures\n";
  for (const auto& [k, v] : r.outage_histogram) hist << k << "," << v << "\n";
  em.add("outage_histogram.csv", hist.str());
  if (!r.per_sample.empty()) {
    std::ostringstream ss;
    ss << "sample,outage_count,severity,failed,converged\n";
    for (std::size_t i = 0; i < r.per_sample.size(); ++i) {
      const StressReport::Sample& s = r.per_sample[i];
      ss << i << "," << s.outages << "," << fmt(s.severity) << ","
         << (s.failed ? 1 : 0) << "," << (s.converged ? 1 : 0) << "\n";
    }
    em.add("samples.csv", ss.str());
  }
  return em.finish("stress", std::nullopt);
}

std::string emit_reports(const std::vector<FailureModeRow>& rows,
                         const std::string& out_dir) {
  Emitter em(out_dir);
  json jrows = json::array();
  std::ostringstream ss;
  ss << "outages,failures_a,failures_b,ratio,flagged\n";
  for (const FailureModeRow& r : rows) {
    ss << r.outages << "," << r.failures_a << "," << r.failures_b << ","
       << fmt(r.ratio) << "," << (r.flagged ? 1 : 0) << "\n";
    jrows.push_back(json{{"outages", r.outages},
                         {"failures_a", r.failures_a},
                         {"failures_b", r.failures_b},
                         {"ratio", r.ratio},
                         {"flagged", r.flagged}});
  }
  em.add("result.json",
         json{{"schema_version", io::schema_version}, {"rows", jrows}}.dump(2) + "\n");
  em.add("compare.csv", ss.str());
  return em.finish("compare", std::nullopt);
}

namespace {

struct CommonFlags {
  std::string config;
  std::string case_override, out_override;
  std::uint64_t seed = 0;
  int threads = -1;
  bool seed_set = false;
};

void add_common(CLI::App* sub, CommonFlags& f, bool config_required) {
  auto* copt = sub->add_option("--config", f.config, "run configuration file");
  if (config_required) copt->required();
  sub->add_option("--case", f.case_override, "case file, overrides the config");
  sub->add_option("--out-dir", f.out_override, "output directory, overrides the config");
  sub->add_option("--seed", f.seed, "RNG seed, overrides the config")
      ->each([&f](const std::string&) { f.seed_set = true; });
  sub->add_option("--threads", f.threads, "worker threads (0 = all cores)");
}

RunConfig resolve_config(const CommonFlags& f, bool need_case) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config(f.config);
  if (!f.case_override.empty()) cfg.case_path = f.case_override;
  if (!f.out_override.empty()) cfg.out_dir = f.out_override;
  if (f.seed_set) cfg.seed = f.seed;
  if (f.threads >= 0) cfg.threads = f.threads;
  if (need_case && cfg.case_path.empty())
    throw ConfigError("no case file given (config \"case\" or --case)");
  if (cfg.out_dir.empty())
    throw ConfigError("no output directory given (config \"out_dir\" or --out-dir)");
  return cfg;
}

PotentialParams potential_params(const RunConfig& cfg) {
  PotentialParams pp;
  pp.solver = cfg.solver;
  pp.penalty = cfg.penalty;
  pp.prior = cfg.prior;
  pp.load_cost = cfg.load_cost;
  return pp;
}

Network load_case(const RunConfig& cfg) {
  ParseOptions po;
  po.dispatchable_loads = cfg.dispatchable_loads;
  return parse_case_file(cfg.case_path, po);
}

SmcOptions smc_options(const RunConfig& cfg) {
  SmcOptions so;
  so.n_x = cfg.smc.n_x;
  so.n_y = cfg.smc.n_y;
  so.rounds = cfg.smc.rounds;
  so.substeps = cfg.smc.substeps;
  so.tau_x = cfg.smc.tau_x;
  so.tau_y = cfg.smc.tau_y;
  so.seed = cfg.seed;
  so.threads = cfg.threads;
  so.params = potential_params(cfg);
  return so;
}

int dispatch_command(const std::string& name, const CommonFlags& flags,
                     const std::string& a_path, const std::string& b_path) {
  if (name == "compare") {
    RunConfig cfg = resolve_config(flags, false);
    StressReport a = io::load_stress_report(a_path);
    StressReport b = io::load_stress_report(b_path);
    std::cout << emit_reports(failure_mode_comparison(a, b), cfg.out_dir) << "\n";
    return kOk;
  }

  RunConfig cfg = resolve_config(flags, true);
  Network net = load_case(cfg);

  if (name == "solve" || name == "baseline") {
    SmcOptions so = smc_options(cfg);
    ScopfResult res = name == "solve" ? smc_scopf(net, so) : adversarial_opt(net, so);
    std::cout << emit_reports(res, cfg.out_dir) << "\n";
    return kOk;
  }
  if (name == "attack") {
    Dispatch d = cfg.attack.dispatch.empty()
                     ? nominal_dispatch(net)
                     : io::load_dispatch(cfg.attack.dispatch, net);
    PredictOptions po;
    po.n_y = cfg.attack.n_y;
    po.steps = cfg.attack.substeps;
    po.tau = cfg.attack.tau;
    po.seed = cfg.seed;
    po.threads = cfg.threads;
    po.params = potential_params(cfg);
    PredictResult res = predict_contingencies(net, d, po);
    if (!cfg.attack.trace_csv)
      for (ChainTrace& t : res.traces) {
        t.states.clear();
        t.log_p.clear();
        t.accepted.clear();
      }
    std::cout << emit_reports(res, cfg.out_dir) << "\n";
    return kOk;
  }
  if (name == "stress") {
    Dispatch d = cfg.stress.dispatch.empty()
                     ? nominal_dispatch(net)
                     : io::load_dispatch(cfg.stress.dispatch, net);
    std::vector<Contingency> predicted;
    bool have_predicted = !cfg.stress.predicted.empty();
    if (have_predicted)
      predicted = io::load_contingencies(cfg.stress.predicted, net);
    StressOptions so;
    so.samples = cfg.stress.samples;
    so.seed = cfg.seed;
    so.threads = cfg.threads;
    so.params = potential_params(cfg);
    StressReport rep = stress_test(net, d, so, have_predicted ? &predicted : nullptr,
                                   cfg.stress.samples_csv);
    std::cout << emit_reports(rep, cfg.out_dir) << "\n";
    return kOk;
  }
  throw ConfigError("unknown command " + name);
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Adversarial sampling for security-constrained AC optimal power flow"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string a_path, b_path;
  CLI::App* solve = app.add_subcommand("solve", "robust dispatch via alternating SMC");
  CLI::App* baseline =
      app.add_subcommand("baseline", "adversarial-optimization dispatch baseline");
  CLI::App* attack =
      app.add_subcommand("attack", "predict severe contingencies for a dispatch");
  CLI::App* stress =
      app.add_subcommand("stress", "Monte-Carlo stress test of a dispatch");
  CLI::App* compare =
      app.add_subcommand("compare", "per-outage-count failure comparison");
  for (CLI::App* sub : {solve, baseline, attack, stress})
    add_common(sub, flags, true);
  add_common(compare, flags, false);
  compare->add_option("--a", a_path, "first stress report JSON")->required();
  compare->add_option("--b", b_path, "second stress report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "scopf: error: config: " << e.what() << "\n";
    return kConfigInvalid;
  }

  try {
    for (CLI::App* sub : {solve, baseline, attack, stress, compare})
      if (sub->parsed()) return dispatch_command(sub->get_name(), flags, a_path, b_path);
    throw ConfigError("no command given");
  } catch (const ConfigError& e) {
    std::cerr << "scopf: error: config: " << e.what() << "\n";
    return kConfigInvalid;
  } catch (const ParseError& e) {
    std::cerr << "scopf: error: case: " << e.what() << "\n";
    return kCaseParse;
  } catch (const io::IoError& e) {
    std::cerr << "scopf: error: io: " << e.what() << "\n";
    return kIo;
  } catch (const PowerFlowError& e) {
    std::cerr << "scopf: error: solver: " << e.what() << "\n";
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "scopf: error: config: " << e.what() << "\n";
    return kConfigInvalid;
  } catch (const std::logic_error& e) {
    std::cerr << "scopf: error: solver: " << e.what() << "\n";
    return kSolver;
  } catch (const std::exception& e) {
    std::cerr << "scopf: error: internal: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace scopf::cli
