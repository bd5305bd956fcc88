#pragma once

// Experiment orchestration: network/method resolution, the convergence
// table, Monte-Carlo simulation of teams over several weight methods, JSON
// configuration and CSV reports.

#include <algorithm>
#include <cstdio>
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "cmab/bandit.hpp"
#include "cmab/coopucb2.hpp"
#include "cmab/csv.hpp"
#include "cmab/graph.hpp"
#include "cmab/metrics.hpp"
#include "cmab/optimizer.hpp"
#include "cmab/weights.hpp"

namespace cmab {

/// Bad user input (config, flags, names). Maps to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Networks

struct NamedGraph {
  std::string name;
  Graph graph;
};

/// Built-in names: complete<M>, star<M>, path<M>, cluster<k> (clusters of 5),
/// cluster<k>x<c>, cluster<k>x<c>star. Anything else is read as an edge-list
/// file path.
inline NamedGraph resolve_network(const std::string& spec) {
  static const std::regex sized(R"((complete|star|path)(\d+))");
  static const std::regex clustered(R"(cluster(\d+)(?:x(\d+))?(star)?)");
  std::smatch m;
  if (std::regex_match(spec, m, sized)) {
    const int n = std::stoi(m[2]);
    if (m[1] == "complete") return {spec, gen_complete(n)};
    if (m[1] == "star") return {spec, gen_star(n)};
    return {spec, gen_path(n)};
  }
  if (std::regex_match(spec, m, clustered)) {
    const int k = std::stoi(m[1]);
    const int c = m[2].matched ? std::stoi(m[2]) : 5;
    return {spec, gen_clustered(k, c, m[3].matched ? ClusterWiring::star : ClusterWiring::complete)};
  }
  if (!std::filesystem::exists(spec)) throw ConfigError("unknown network '" + spec + "' (not a built-in name or file)");
  return {std::filesystem::path(spec).stem().string(), load_graph(spec)};
}

// ---------------------------------------------------------------------------
// Methods

struct MethodSpec {
  Method method = Method::kappa;
  double kappa = kDefaultKappa;

  /// Report label: the method name, with the kappa value appended when it is
  /// not the default.
  std::string label() const {
    std::string s(to_string(method));
    if (method == Method::kappa && kappa != kDefaultKappa) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%g", kappa);
      s += "_";
      s += buf;
    }
    return s;
  }
};

inline MethodSpec parse_method_spec(const std::string& s) {
  auto m = parse_method(s);
  if (!m) throw ConfigError("unknown method '" + s + "'");
  return {*m, kDefaultKappa};
}

struct BuiltWeights {
  WeightMatrix weights;
  bool solver_converged = true;
  std::vector<TracePoint> trace;
};

inline BuiltWeights build_weights(const Graph& g, const MethodSpec& spec, const SolveOptions& opts = {}) {
  switch (spec.method) {
    case Method::kappa: return {kappa_weights(g, spec.kappa)};
    case Method::best_constant: return {best_constant_weights(g)};
    case Method::max_degree: return {max_degree_weights(g)};
    case Method::local_degree: return {local_degree_weights(g)};
    case Method::fmmc:
    case Method::fdla: {
      SolveResult r = spec.method == Method::fmmc ? solve_fmmc(g, opts) : solve_fdla(g, opts);
      return {std::move(r.weights), r.converged, std::move(r.trace)};
    }
  }
  throw ConfigError("unhandled method");
}

inline void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
  out << "iteration,rho\n";
  for (auto& tp : trace) out << csv_row({std::to_string(tp.iteration), format_g17(tp.rho)});
}

inline std::string format_tau(const std::optional<double>& tau) { return tau ? format_g17(*tau) : "inf"; }

// ---------------------------------------------------------------------------
// Convergence table: rows = methods, a (rho, tau) column pair per network.

struct TableCell {
  double rho = 0.0;
  std::optional<double> tau;
  bool solver_converged = true;
};

struct ConvergenceTable {
  std::vector<std::string> networks;
  std::vector<std::string> methods;
  /// cells[method][network]
  std::vector<std::vector<TableCell>> cells;

  bool all_converged() const {
    for (auto& row : cells)
      for (auto& c : row)
        if (!c.solver_converged) return false;
    return true;
  }
};

inline ConvergenceTable run_table(const std::vector<NamedGraph>& networks, const std::vector<MethodSpec>& methods,
                                  const SolveOptions& opts = {}) {
  ConvergenceTable t;
  for (auto& n : networks) {
    require_connected(n.graph);
    t.networks.push_back(n.name);
  }
  for (auto& m : methods) {
    t.methods.push_back(m.label());
    std::vector<TableCell> row;
    for (auto& n : networks) {
      BuiltWeights b = build_weights(n.graph, m, opts);
      row.push_back({b.weights.rho, b.weights.tau, b.solver_converged});
    }
    t.cells.push_back(std::move(row));
  }
  return t;
}

inline void write_table_csv(std::ostream& out, const ConvergenceTable& t) {
  std::vector<std::string> header{"method"};
  for (auto& n : t.networks) {
    header.push_back(n + "_rho");
    header.push_back(n + "_tau");
  }
  out << csv_row(header);
  for (std::size_t i = 0; i < t.methods.size(); ++i) {
    std::vector<std::string> row{t.methods[i]};
    for (auto& c : t.cells[i]) {
      row.push_back(format_g17(c.rho));
      row.push_back(format_tau(c.tau));
    }
    out << csv_row(row);
  }
}

// ---------------------------------------------------------------------------
// Configuration

struct ExperimentConfig {
  std::string network;
  std::vector<MethodSpec> methods;
  int n_arms = 100;
  double sigma = 1.0;
  long horizon = 1000;
  long runs = 10000;
  std::uint64_t seed = 0;
  double sigma_g = 1.0;
  double gamma = 1.1;
  double eta = 2.0;
  Growth f = Growth::sqrt_log;
  std::string out = "out";
  /// Worker threads; 0 picks the hardware concurrency.
  int threads = 0;
  double settle_fraction = kDefaultSettleFraction;
  SettlingReference settle_reference = SettlingReference::peak;
  SolveOptions solver;

  AlgoParams algo_params() const { return AlgoParams(sigma_g, gamma, eta, f); }

  void validate() const {
    if (network.empty()) throw ConfigError("config field 'network' is required");
    if (methods.empty()) throw ConfigError("config field 'methods' must be non-empty");
    if (n_arms < 2) throw ConfigError("config field 'n_arms' must be >= 2");
    if (!(sigma >= 0.0)) throw ConfigError("config field 'sigma' must be >= 0");
    if (runs < 1) throw ConfigError("config field 'runs' must be >= 1");
    if (horizon <= n_arms)
      throw ConfigError("config field 'horizon' (" + std::to_string(horizon) + ") must exceed 'n_arms' (" +
                        std::to_string(n_arms) + ") so initialization fits");
    if (threads < 0) throw ConfigError("config field 'threads' must be >= 0");
    if (!(settle_fraction > 0.0 && settle_fraction < 1.0))
      throw ConfigError("config field 'settle_fraction' must lie in (0, 1)");
    for (auto& m : methods)
      if (m.method == Method::kappa && !(m.kappa > 0.0 && m.kappa <= 1.0))
        throw ConfigError("method kappa: 'kappa' must lie in (0, 1]");
    try {
      algo_params();
      solver.check();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
};

namespace detail {

inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "network", "methods", "n_arms",   "sigma",           "horizon",          "runs",      "seed",
      "sigma_g", "gamma",   "eta",      "f",               "out",              "threads",   "settle_fraction",
      "settle_reference",   "max_iters", "step_scale",     "tol"};
  return keys;
}

template <class T>
T get_field(const nlohmann::json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type");
  }
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& keys = detail::config_keys();
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(keys.begin(), keys.end(), it.key()) != keys.end()) continue;
    std::string best;
    std::size_t best_d = 3;
    for (auto& k : keys) {
      auto d = detail::edit_distance(it.key(), k);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    throw ConfigError("unknown config key '" + it.key() + "'" + (best.empty() ? "" : " (did you mean '" + best + "'?)"));
  }
  if (!j.contains("network")) throw ConfigError("config field 'network' is required");
  if (!j.contains("methods")) throw ConfigError("config field 'methods' is required");

  ExperimentConfig c;
  c.network = detail::get_field<std::string>(j, "network");
  const auto& methods = j.at("methods");
  if (!methods.is_array()) throw ConfigError("config field 'methods' must be an array");
  for (auto& m : methods) {
    if (m.is_string()) {
      c.methods.push_back(parse_method_spec(m.get<std::string>()));
    } else if (m.is_object()) {
      for (auto it = m.begin(); it != m.end(); ++it)
        if (it.key() != "method" && it.key() != "kappa")
          throw ConfigError("unknown method field '" + it.key() + "'");
      if (!m.contains("method")) throw ConfigError("method entry needs a 'method' field");
      MethodSpec s = parse_method_spec(detail::get_field<std::string>(m, "method"));
      if (m.contains("kappa")) {
        if (s.method != Method::kappa) throw ConfigError("'kappa' only applies to method kappa");
        s.kappa = detail::get_field<double>(m, "kappa");
      }
      c.methods.push_back(s);
    } else {
      throw ConfigError("config field 'methods' entries must be strings or objects");
    }
  }
  if (j.contains("n_arms")) c.n_arms = detail::get_field<int>(j, "n_arms");
  if (j.contains("sigma")) c.sigma = detail::get_field<double>(j, "sigma");
  if (j.contains("horizon")) c.horizon = detail::get_field<long>(j, "horizon");
  if (j.contains("runs")) c.runs = detail::get_field<long>(j, "runs");
  if (j.contains("seed")) c.seed = detail::get_field<std::uint64_t>(j, "seed");
  if (j.contains("sigma_g")) c.sigma_g = detail::get_field<double>(j, "sigma_g");
  if (j.contains("gamma")) c.gamma = detail::get_field<double>(j, "gamma");
  if (j.contains("eta")) c.eta = detail::get_field<double>(j, "eta");
  if (j.contains("f")) {
    const auto f = detail::get_field<std::string>(j, "f");
    if (f == "sqrt_log") c.f = Growth::sqrt_log;
    else if (f == "zero") c.f = Growth::zero;
    else throw ConfigError("config field 'f' must be \"sqrt_log\" or \"zero\"");
  }
  if (j.contains("out")) c.out = detail::get_field<std::string>(j, "out");
  if (j.contains("threads")) c.threads = detail::get_field<int>(j, "threads");
  if (j.contains("settle_fraction")) c.settle_fraction = detail::get_field<double>(j, "settle_fraction");
  if (j.contains("settle_reference")) {
    const auto r = detail::get_field<std::string>(j, "settle_reference");
    if (r == "peak") c.settle_reference = SettlingReference::peak;
    else if (r == "final_value") c.settle_reference = SettlingReference::final_value;
    else throw ConfigError("config field 'settle_reference' must be \"peak\" or \"final_value\"");
  }
  if (j.contains("max_iters")) c.solver.max_iters = detail::get_field<long>(j, "max_iters");
  if (j.contains("step_scale")) c.solver.step_scale = detail::get_field<double>(j, "step_scale");
  if (j.contains("tol")) c.solver.tol = detail::get_field<double>(j, "tol");
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// ---------------------------------------------------------------------------
// Simulation

struct MethodOutcome {
  MethodSpec spec;
  WeightMatrix weights;
  bool solver_converged = true;
  AggregateCurve curve;
  /// Mean over runs of the group regret at the horizon.
  double final_regret_mean = 0.0;
  std::optional<long> settling_step;
};

struct SimulationResult {
  std::string network;
  /// Time index of the first curve entry (N + 1).
  long first_t = 0;
  double settle_threshold = 0.0;
  std::vector<MethodOutcome> methods;
};

struct EpisodeSummary {
  std::vector<double> delta;
  double final_regret = 0.0;
};

/// One run of one method. The bandit and the agent streams depend only on
/// (seed, run), so every method faces the same draws within a run.
inline EpisodeSummary run_one(const Graph& g, const WeightMatrix& w, const ExperimentConfig& cfg,
                              const AlgoParams& params, long run) {
  RngStream env_rng(cfg.seed, static_cast<std::uint64_t>(run), RngStream::kEnvironment);
  const Bandit bandit = sample_bandit(cfg.n_arms, env_rng, cfg.sigma);
  auto logs = run_episode(g, w, bandit, params, cfg.horizon, cfg.seed, static_cast<std::uint64_t>(run));
  EpisodeSummary s;
  s.delta.reserve(logs.size());
  for (auto& l : logs) s.delta.push_back(l.delta);
  s.final_regret = logs.empty() ? 0.0 : logs.back().cumulative_regret;
  return s;
}

inline SimulationResult run_simulation(const ExperimentConfig& cfg, const NamedGraph& net) {
  cfg.validate();
  require_connected(net.graph);
  const AlgoParams params = cfg.algo_params();

  SimulationResult res;
  res.network = net.name;
  res.first_t = cfg.n_arms + 1;
  for (auto& m : cfg.methods) {
    BuiltWeights b = build_weights(net.graph, m, cfg.solver);
    MethodOutcome o;
    o.spec = m;
    o.weights = std::move(b.weights);
    o.solver_converged = b.solver_converged;
    res.methods.push_back(std::move(o));
  }

  const std::size_t n_methods = res.methods.size();
  const int threads = cfg.threads > 0 ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  const long chunk = 64;
  std::vector<double> regret_sum(n_methods, 0.0);

  // Runs are computed in chunks by a worker pool, then folded into the
  // aggregates in run order so the output does not depend on scheduling.
  for (long start = 0; start < cfg.runs; start += chunk) {
    const long count = std::min(chunk, cfg.runs - start);
    std::vector<EpisodeSummary> slots(static_cast<std::size_t>(count) * n_methods);
    std::atomic<long> next{0};
    auto work = [&] {
      for (long job; (job = next.fetch_add(1)) < count * static_cast<long>(n_methods);) {
        const long run = start + job / static_cast<long>(n_methods);
        const std::size_t mi = static_cast<std::size_t>(job) % n_methods;
        slots[job] = run_one(net.graph, res.methods[mi].weights, cfg, params, run);
      }
    };
    if (threads == 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (int i = 0; i < threads; ++i) pool.emplace_back(work);
    }
    for (long r = 0; r < count; ++r)
      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        const EpisodeSummary& s = slots[static_cast<std::size_t>(r) * n_methods + mi];
        res.methods[mi].curve.add(s.delta);
        regret_sum[mi] += s.final_regret;
      }
  }

  std::map<std::string, AggregateCurve> curves;
  for (std::size_t mi = 0; mi < n_methods; ++mi) {
    res.methods[mi].final_regret_mean = regret_sum[mi] / static_cast<double>(cfg.runs);
    curves[res.methods[mi].spec.label()] = res.methods[mi].curve;
  }
  const SettlingReport settle = settling_time(curves, cfg.settle_fraction, cfg.settle_reference);
  res.settle_threshold = settle.threshold;
  for (auto& m : res.methods) m.settling_step = settle.step.at(m.spec.label());
  return res;
}

inline void write_curve_csv(std::ostream& out, const AggregateCurve& curve, long first_t) {
  out << "t,mean_delta,stderr\n";
  const auto se = curve.standard_error();
  for (std::size_t k = 0; k < curve.size(); ++k)
    out << csv_row({std::to_string(first_t + static_cast<long>(k)), format_g17(curve.mean()[k]), format_g17(se[k])});
}

inline void write_summary_csv(std::ostream& out, const SimulationResult& res) {
  out << "method,network,rho,tau,settling_step,settling_t,final_group_regret,runs\n";
  for (auto& m : res.methods) {
    const std::string step = m.settling_step ? std::to_string(*m.settling_step) : "NA";
    const std::string t = m.settling_step ? std::to_string(res.first_t + *m.settling_step) : "NA";
    out << csv_row({m.spec.label(), res.network, format_g17(m.weights.rho), format_tau(m.weights.tau), step, t,
                    format_g17(m.final_regret_mean), std::to_string(m.curve.runs())});
  }
}

/// Writes summary.csv, curve_<method>.csv and weights_<method>.csv under dir.
inline void write_simulation(const SimulationResult& res, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [](const std::filesystem::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    return f;
  };
  {
    auto f = open(dir / "summary.csv");
    write_summary_csv(f, res);
  }
  for (auto& m : res.methods) {
    auto c = open(dir / ("curve_" + m.spec.label() + ".csv"));
    write_curve_csv(c, m.curve, res.first_t);
    auto w = open(dir / ("weights_" + m.spec.label() + ".csv"));
    write_weight_csv(w, m.weights);
  }
}

}  // namespace cmab
