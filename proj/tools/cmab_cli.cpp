// Command-line front end: optimize | table | simulate.
//
// Exit codes: 0 success, 1 invalid input, 2 solver did not converge
// (only with --strict).

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cmab/cmab.hpp"

namespace {

constexpr int kExitInvalid = 1;
constexpr int kExitNotConverged = 2;

struct SolverFlags {
  long max_iters = cmab::SolveOptions{}.max_iters;
  double step_scale = cmab::SolveOptions{}.step_scale;
  double tol = cmab::SolveOptions{}.tol;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--max-iters", max_iters, "Subgradient iteration budget");
    app->add_option("--step-scale", step_scale, "a in the a/sqrt(t) step rule");
    app->add_option("--tol", tol, "Solver tolerance");
    app->add_option("--seed", seed, "Solver seed");
  }

  cmab::SolveOptions options() const {
    cmab::SolveOptions o;
    o.max_iters = max_iters;
    o.step_scale = step_scale;
    o.tol = tol;
    o.seed = seed;
    return o;
  }
};

std::vector<std::string> split_list(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (auto& s : items)
    for (auto& part : cmab::split(s, ','))
      if (!part.empty()) out.push_back(part);
  return out;
}

void write_to(const std::string& path, const std::function<void(std::ostream&)>& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  fn(f);
}

int cmd_optimize(const std::string& network, const std::string& graph_file, const std::string& method, double kappa,
                 const SolverFlags& solver, const std::string& out, const std::string& trace, bool strict) {
  if (network.empty() == graph_file.empty()) throw cmab::ConfigError("give exactly one of --network or --graph");
  cmab::NamedGraph net = cmab::resolve_network(network.empty() ? graph_file : network);
  if (!net.graph.connected()) throw cmab::ConfigError("network '" + net.name + "' is not connected");
  cmab::MethodSpec spec = cmab::parse_method_spec(method);
  spec.kappa = kappa;
  cmab::SolveOptions opts = solver.options();
  opts.record_trace = !trace.empty();
  cmab::BuiltWeights b = cmab::build_weights(net.graph, spec, opts);

  if (!out.empty()) write_to(out, [&](std::ostream& o) { cmab::write_weight_csv(o, b.weights); });
  if (!trace.empty()) write_to(trace, [&](std::ostream& o) { cmab::write_trace_csv(o, b.trace); });
  std::cout << "network=" << net.name << " method=" << spec.label() << " rho=" << cmab::format_g17(b.weights.rho)
            << " tau=" << cmab::format_tau(b.weights.tau) << '\n';
  if (!b.solver_converged) {
    std::cerr << "warning: solver did not settle within its iteration budget\n";
    if (strict) return kExitNotConverged;
  }
  return 0;
}

int cmd_table(const std::vector<std::string>& networks, const std::vector<std::string>& graphs,
              const std::vector<std::string>& methods, const SolverFlags& solver, const std::string& out, bool strict) {
  std::vector<cmab::NamedGraph> nets;
  for (auto& n : split_list(networks)) nets.push_back(cmab::resolve_network(n));
  for (auto& g : split_list(graphs)) nets.push_back(cmab::resolve_network(g));
  if (nets.empty()) {
    nets.push_back(cmab::resolve_network("complete5"));
    nets.push_back(cmab::resolve_network("star5"));
  }
  for (auto& n : nets)
    if (!n.graph.connected()) throw cmab::ConfigError("network '" + n.name + "' is not connected");

  std::vector<cmab::MethodSpec> specs;
  for (auto& m : split_list(methods)) specs.push_back(cmab::parse_method_spec(m));
  if (specs.empty())
    for (auto m : cmab::kAllMethods) specs.push_back({m, cmab::kDefaultKappa});

  const cmab::ConvergenceTable t = cmab::run_table(nets, specs, solver.options());
  write_to(out, [&](std::ostream& o) { cmab::write_table_csv(o, t); });
  if (!t.all_converged()) {
    std::cerr << "warning: a solver did not settle within its iteration budget\n";
    if (strict) return kExitNotConverged;
  }
  return 0;
}

int cmd_simulate(const std::string& config, std::optional<std::uint64_t> seed, std::optional<long> runs,
                 std::optional<int> threads, const std::string& out, bool strict) {
  cmab::ExperimentConfig cfg = cmab::load_config(config);
  if (seed) cfg.seed = *seed;
  if (runs) cfg.runs = *runs;
  if (threads) cfg.threads = *threads;
  if (!out.empty()) cfg.out = out;
  cfg.validate();

  const cmab::NamedGraph net = cmab::resolve_network(cfg.network);
  if (!net.graph.connected()) throw cmab::ConfigError("network '" + net.name + "' is not connected");
  const cmab::SimulationResult res = cmab::run_simulation(cfg, net);
  cmab::write_simulation(res, cfg.out);
  cmab::write_summary_csv(std::cout, res);

  bool converged = true;
  for (auto& m : res.methods) converged = converged && m.solver_converged;
  if (!converged) {
    std::cerr << "warning: a solver did not settle within its iteration budget\n";
    if (strict) return kExitNotConverged;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus weight design and cooperative bandit simulation"};
  app.require_subcommand(1);
  bool strict = false;
  app.add_flag("--strict", strict, "Exit with code 2 when a solver does not converge");

  SolverFlags solver;

  auto* opt = app.add_subcommand("optimize", "Build one weight matrix and report rho/tau");
  std::string network, graph_file, method, out, trace;
  double kappa = cmab::kDefaultKappa;
  opt->add_option("--network", network, "Built-in network name (complete5, star5, cluster3, ...)");
  opt->add_option("--graph", graph_file, "Edge-list file");
  opt->add_option("--method", method, "kappa|best_constant|max_degree|local_degree|fmmc|fdla")->required();
  opt->add_option("--kappa", kappa, "Step size for the kappa method");
  opt->add_option("--out", out, "Write the weight matrix CSV here ('-' for stdout)");
  opt->add_option("--trace", trace, "Write the solver objective trace CSV here");
  opt->add_flag("--strict", strict, "Exit with code 2 when the solver does not converge");
  solver.attach(opt);

  auto* tab = app.add_subcommand("table", "Convergence factors for several methods and networks");
  std::vector<std::string> t_networks, t_graphs, t_methods;
  std::string t_out;
  tab->add_option("--network", t_networks, "Network names (repeatable or comma-separated)");
  tab->add_option("--graph", t_graphs, "Edge-list files (repeatable)");
  tab->add_option("--method", t_methods, "Methods (repeatable or comma-separated; default: all)");
  tab->add_option("--out", t_out, "Output CSV path (default: stdout)");
  tab->add_flag("--strict", strict, "Exit with code 2 when a solver does not converge");
  solver.attach(tab);

  auto* sim = app.add_subcommand("simulate", "Monte-Carlo team simulation from a JSON config");
  std::string config, s_out;
  std::optional<std::uint64_t> s_seed;
  std::optional<long> s_runs;
  std::optional<int> s_threads;
  sim->add_option("--config", config, "Experiment config (JSON)")->required();
  sim->add_option("--seed", s_seed, "Override the config seed");
  sim->add_option("--runs", s_runs, "Override the run count");
  sim->add_option("--threads", s_threads, "Worker threads (0 = all cores)");
  sim->add_option("--out", s_out, "Output directory");
  sim->add_flag("--strict", strict, "Exit with code 2 when a solver does not converge");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInvalid;
  }

  try {
    if (*opt) return cmd_optimize(network, graph_file, method, kappa, solver, out, trace, strict);
    if (*tab) return cmd_table(t_networks, t_graphs, t_methods, solver, t_out, strict);
    if (*sim) return cmd_simulate(config, s_seed, s_runs, s_threads, s_out, strict);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
