#pragma once

// Coop-UCB2: every agent plays the arm with the largest upper confidence
// index built from running-consensus estimates, then the team mixes its
// reward and pull-count estimates through the consensus matrix P:
//   n_i <- P (n_i + xi_i),   s_i <- P (s_i + r_i)   (per arm i, over agents)

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cmab/bandit.hpp"
#include "cmab/graph.hpp"
#include "cmab/metrics.hpp"
#include "cmab/team_state.hpp"
#include "cmab/weights.hpp"

namespace cmab {

/// Sub-logarithmic growth term f in the exploration bonus.
enum class Growth {
  sqrt_log,  // sqrt(ln t), 0 for t < 1
  zero,
};

class AlgoParams {
 public:
  AlgoParams(double sigma_g = 1.0, double gamma = 1.1, double eta = 2.0, Growth f = Growth::sqrt_log)
      : sigma_g_(sigma_g), gamma_(gamma), eta_(eta), f_(f) {
    if (!(sigma_g_ > 0.0)) throw std::invalid_argument("sigma_g must be > 0");
    if (!(gamma_ > 1.0)) throw std::invalid_argument("gamma must be > 1");
    if (!(eta_ > 0.0 && eta_ < 4.0)) throw std::invalid_argument("eta must lie in (0, 4)");
  }

  double sigma_g() const noexcept { return sigma_g_; }
  double gamma() const noexcept { return gamma_; }
  double eta() const noexcept { return eta_; }
  Growth growth() const noexcept { return f_; }

  /// G(eta) = 1 - eta^2 / 16.
  double g_eta() const noexcept { return 1.0 - eta_ * eta_ / 16.0; }

  double f(double t) const {
    switch (f_) {
      case Growth::sqrt_log: return t < 1.0 ? 0.0 : std::sqrt(std::log(t));
      case Growth::zero: return 0.0;
    }
    return 0.0;
  }

 private:
  double sigma_g_, gamma_, eta_;
  Growth f_;
};

/// Upper confidence index at decision time t for a team of M agents:
///   Q = s/n + sigma_g * sqrt( 2 gamma / G(eta) * (n + f(t-1)) / (M n) * ln(t-1) / n )
/// The t-dependent factors are computed once per step.
class ConfidenceIndex {
 public:
  ConfidenceIndex(double t, int m, const AlgoParams& params)
      : m_(static_cast<double>(m)), sigma_g_(params.sigma_g()) {
    if (!(t >= 2.0)) throw std::domain_error("q_value: t must be >= 2");
    if (m < 1) throw std::domain_error("q_value: team size must be >= 1");
    const double tm1 = t - 1.0;
    scale_ = 2.0 * params.gamma() / params.g_eta();
    log_term_ = std::log(tm1);
    growth_ = params.f(tm1);
  }

  double operator()(double s_hat, double n_hat) const {
    return s_hat / n_hat + sigma_g_ * std::sqrt(scale_ * ((n_hat + growth_) / (m_ * n_hat)) * (log_term_ / n_hat));
  }

 private:
  double m_, sigma_g_;
  double scale_ = 0.0, log_term_ = 0.0, growth_ = 0.0;
};

inline double q_value(double s_hat, double n_hat, double t, int m, const AlgoParams& params) {
  if (!(n_hat > 0.0)) throw std::domain_error("q_value: n_hat must be > 0");
  return ConfidenceIndex(t, m, params)(s_hat, n_hat);
}

/// One stream per agent for a given (seed, run).
inline std::vector<RngStream> agent_streams(std::uint64_t seed, std::uint64_t run, int agents) {
  std::vector<RngStream> out;
  out.reserve(agents);
  for (int k = 0; k < agents; ++k) out.emplace_back(seed, run, static_cast<std::uint64_t>(k));
  return out;
}

/// Every agent samples every arm once: n_hat = 1, s_hat = the realized
/// reward, t = N. No consensus round happens during initialization.
template <Environment E>
TeamState init_team(const Graph& g, const WeightMatrix& p, const E& env, std::span<RngStream> rngs) {
  if (p.size() != g.size()) throw std::invalid_argument("init_team: weight matrix size differs from graph");
  if (static_cast<int>(rngs.size()) != g.size()) throw std::invalid_argument("init_team: need one stream per agent");
  const int m = g.size(), n = env.arms();
  TeamState st;
  st.p = p.p;
  st.n_hat = Eigen::MatrixXd::Ones(m, n);
  st.s_hat.resize(m, n);
  for (int k = 0; k < m; ++k)
    for (int i = 0; i < n; ++i) st.s_hat(k, i) = env.pull(i, rngs[k]);
  st.t = n;
  return st;
}

/// argmax_i Q(k, i) per agent, lowest index on ties, at decision time t+1.
/// Arms with n_hat <= 0 get an infinite index.
inline std::vector<int> select_arms(const TeamState& st, const AlgoParams& params) {
  const ConfidenceIndex q(static_cast<double>(st.t + 1), st.agents(), params);
  std::vector<int> actions(st.agents());
  for (int k = 0; k < st.agents(); ++k) {
    int best = 0;
    double best_q = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < st.arms(); ++i) {
      const double n = st.n_hat(k, i);
      // Signed weights can push a count estimate to <= 0; such an arm is
      // treated like an unexplored one.
      const double v = n > 0.0 ? q(st.s_hat(k, i), n) : std::numeric_limits<double>::infinity();
      if (v > best_q) {
        best_q = v;
        best = i;
      }
    }
    actions[k] = best;
  }
  return actions;
}

/// n <- P (n + xi), s <- P (s + r) with M x N indicator and reward matrices.
inline void consensus_update(TeamState& st, const Eigen::MatrixXd& xi, const Eigen::MatrixXd& r) {
  if (xi.rows() != st.n_hat.rows() || xi.cols() != st.n_hat.cols() || r.rows() != st.s_hat.rows() ||
      r.cols() != st.s_hat.cols())
    throw std::invalid_argument("consensus_update: shape mismatch");
  st.n_hat = st.p * (st.n_hat + xi);
  st.s_hat = st.p * (st.s_hat + r);
}

struct StepLog {
  long t = 0;
  std::vector<int> actions;
  std::vector<double> rewards;
  double delta = 0.0;
  double cumulative_regret = 0.0;
};

/// select -> pull -> consensus -> metrics; advances t by one.
template <Environment E>
StepLog step(TeamState& st, const E& env, std::span<RngStream> rngs, const AlgoParams& params) {
  const int m = st.agents();
  StepLog log;
  log.actions = select_arms(st, params);
  log.rewards.resize(m);
  Eigen::MatrixXd xi = Eigen::MatrixXd::Zero(m, st.arms());
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(m, st.arms());
  for (int k = 0; k < m; ++k) {
    const int a = log.actions[k];
    log.rewards[k] = env.pull(a, rngs[k]);
    xi(k, a) = 1.0;
    r(k, a) = log.rewards[k];
    st.cumulative_regret += env.mu_star() - env.mean(a);
  }
  consensus_update(st, xi, r);
  ++st.t;
  log.t = st.t;
  log.delta = team_error(st, env.mu_star(), env.best_arm());
  log.cumulative_regret = st.cumulative_regret;
  return log;
}

/// Plays a horizon of T steps; the first N go to initialization, so the
/// result holds T - N step logs.
template <Environment E>
std::vector<StepLog> run_episode(const Graph& g, const WeightMatrix& p, const E& env, const AlgoParams& params,
                                 long horizon, std::span<RngStream> rngs) {
  if (horizon <= env.arms())
    throw std::invalid_argument("horizon " + std::to_string(horizon) + " must exceed the arm count " +
                                std::to_string(env.arms()));
  TeamState st = init_team(g, p, env, rngs);
  std::vector<StepLog> logs;
  logs.reserve(horizon - env.arms());
  while (st.t < horizon) logs.push_back(step(st, env, rngs, params));
  return logs;
}

template <Environment E>
std::vector<StepLog> run_episode(const Graph& g, const WeightMatrix& p, const E& env, const AlgoParams& params,
                                 long horizon, std::uint64_t seed, std::uint64_t run = 0) {
  auto rngs = agent_streams(seed, run, g.size());
  return run_episode(g, p, env, params, horizon, std::span<RngStream>(rngs));
}

}  // namespace cmab
