#pragma once

// Fastest-mixing weight design. Both problems minimize
//   f(w) = || P(w) - 11'/M ||_2,   P(w) = I - B diag(w) B'
// over edge weights w. FDLA leaves w free; FMMC keeps P >= 0, i.e.
// w >= 0 and sum of incident weights <= 1 at every vertex.
//
// The solve has two phases:
//   1. projected subgradient, step (a / sqrt(t)) * g / ||g||, keeping the
//      best iterate, stopped after `stall_window` steps
//      without a gain of more than `tol`;
//   2. accelerated projected gradient (FISTA with backtracking) on the
//      log-sum-exp smoothing mu * log sum_k (e^{l_k/mu} + e^{-l_k/mu}),
//      warm-started from the best iterate, with mu shrunk geometrically.
// The smoothing overestimates f by at most mu*ln(2M), so phase 2 closes the
// gap that phase 1 leaves at nonsmooth optima (repeated extreme eigenvalues).
// Each phase gets max_iters iterations; running out of budget reports
// converged = false.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cmab/graph.hpp"
#include "cmab/spectral.hpp"
#include "cmab/weights.hpp"

namespace cmab {

struct SolveOptions {
  long max_iters = 50000;
  /// a in the a / sqrt(t) step rule.
  double step_scale = 1.0;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  /// Uniform warm-start perturbation of +-jitter per edge, drawn from `seed`.
  double jitter = 0.0;
  bool record_trace = false;
  long stall_window = 5000;
  bool polish = true;
  /// Accelerated steps per smoothing stage.
  int polish_iters = 300;

  void check() const {
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(step_scale > 0.0)) throw std::invalid_argument("step_scale must be > 0");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");
    if (jitter < 0.0) throw std::invalid_argument("jitter must be >= 0");
    if (stall_window < 1) throw std::invalid_argument("stall_window must be >= 1");
    if (polish_iters < 1) throw std::invalid_argument("polish_iters must be >= 1");
  }
};

struct TracePoint {
  long iteration;
  double rho;  // best so far
};

struct SolveResult {
  WeightMatrix weights;
  Eigen::VectorXd edge_weights;
  std::vector<TracePoint> trace;
  long iterations_used = 0;
  double best_objective = 0.0;
  /// False when the final smoothing stage still improved rho by more than
  /// tol, i.e. the iteration budget ran out before the objective settled.
  bool converged = true;
};

struct SpectralObjective {
  double value;
  Eigen::VectorXd subgradient;
};

/// f(w) and one subgradient. The subgradient comes from the extreme
/// eigenvector u of P(w) - J: -(u_i - u_j)^2 per edge when lambda_max binds,
/// +(u_i - u_j)^2 when -lambda_min binds; lambda_max wins ties within 1e-12.
inline SpectralObjective objective_and_subgradient(const Eigen::VectorXd& w, const Graph& g) {
  if (w.size() != g.edge_count()) throw std::invalid_argument("objective: weight vector length != edge count");
  const Spectrum sp = sym_eigs(deviation_from_average(matrix_from_edge_weights(g, w)), true);
  const Eigen::VectorXd& lam = sp.values;
  const Eigen::MatrixXd& v = *sp.vectors;
  const Eigen::Index last = lam.size() - 1;
  const double top = lam[0], bottom = lam[last];

  SpectralObjective out{std::max(top, -bottom), Eigen::VectorXd(g.edge_count())};
  const bool max_branch = top >= -bottom - 1e-12;
  Eigen::Index k = 0;
  if (!max_branch)
    while (lam[k] > bottom + 1e-12) ++k;  // first eigenvector of the lambda_min cluster
  const double sign = max_branch ? -1.0 : 1.0;
  for (int l = 0; l < g.edge_count(); ++l) {
    const double d = v(g.edges()[l].first, k) - v(g.edges()[l].second, k);
    out.subgradient[l] = sign * d * d;
  }
  return out;
}

inline constexpr int kProjectionMaxCycles = 500;
inline constexpr double kProjectionMoveTol = 1e-12;

/// Euclidean projection onto {w >= 0} intersected with
/// {sum of weights on edges at i <= 1} for every vertex i, by Dykstra's
/// alternating projections.
inline Eigen::VectorXd project_feasible(const Eigen::VectorXd& w, const Graph& g) {
  if (w.size() != g.edge_count()) throw std::invalid_argument("projection: weight vector length != edge count");
  const int m = g.size();
  std::vector<std::vector<int>> incident(m);
  for (int i = 0; i < m; ++i) incident[i] = g.incident_edges(i);

  Eigen::VectorXd x = w;
  std::vector<Eigen::VectorXd> corr(m + 1, Eigen::VectorXd::Zero(w.size()));
  for (int cycle = 0; cycle < kProjectionMaxCycles; ++cycle) {
    const Eigen::VectorXd before = x;

    Eigen::VectorXd y = x + corr[0];
    x = y.cwiseMax(0.0);
    corr[0] = y - x;

    for (int i = 0; i < m; ++i) {
      if (incident[i].empty()) continue;
      y = x + corr[i + 1];
      double s = 0.0;
      for (int l : incident[i]) s += y[l];
      x = y;
      if (s > 1.0) {
        const double shift = (s - 1.0) / static_cast<double>(incident[i].size());
        for (int l : incident[i]) x[l] -= shift;
      }
      corr[i + 1] = y - x;
    }
    if ((x - before).cwiseAbs().maxCoeff() < kProjectionMoveTol) break;
  }
  return x;
}

namespace detail {

struct SmoothedObjective {
  double value;     // smoothed
  double rho;       // exact spectral norm at the same point
  Eigen::VectorXd gradient;
};

inline SmoothedObjective smoothed_objective(const Eigen::VectorXd& w, const Graph& g, double mu) {
  const Spectrum sp = sym_eigs(deviation_from_average(matrix_from_edge_weights(g, w)), true);
  const Eigen::VectorXd& lam = sp.values;
  const Eigen::MatrixXd& v = *sp.vectors;
  const Eigen::Index n = lam.size();
  const double peak = std::max(lam[0], -lam[n - 1]);

  Eigen::VectorXd up(n), down(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    up[k] = std::exp((lam[k] - peak) / mu);
    down[k] = std::exp((-lam[k] - peak) / mu);
  }
  const double total = up.sum() + down.sum();
  const Eigen::VectorXd h = (up - down) / total;

  SmoothedObjective out{peak + mu * std::log(total), peak, Eigen::VectorXd(g.edge_count())};
  for (int l = 0; l < g.edge_count(); ++l) {
    const Eigen::VectorXd d = v.row(g.edges()[l].first) - v.row(g.edges()[l].second);
    out.gradient[l] = -(d.array().square() * h.array()).sum();
  }
  return out;
}

class WeightSolver {
 public:
  WeightSolver(const Graph& g, const SolveOptions& opts, bool nonnegative)
      : g_(g), opts_(opts), nonneg_(nonnegative) {}

  SolveResult run() {
    opts_.check();
    if (g_.size() < 2) throw GraphError("weight optimization needs at least two agents");
    require_connected(g_);

    Eigen::VectorXd w = Eigen::VectorXd::Constant(g_.edge_count(), 1.0 / g_.max_degree());
    if (opts_.jitter > 0.0) {
      std::mt19937_64 eng(opts_.seed);
      std::uniform_real_distribution<double> u(-opts_.jitter, opts_.jitter);
      for (auto& x : w) x += u(eng);
      w = feasible(w);
    }
    best_w_ = w;
    best_ = objective_and_subgradient(w, g_).value;

    subgradient_phase(w);
    if (opts_.polish && best_ > 0.0) polish_phase();

    SolveResult r;
    r.weights = make_weight_matrix(matrix_from_edge_weights(g_, best_w_), nonneg_ ? Method::fmmc : Method::fdla);
    r.edge_weights = best_w_;
    r.trace = std::move(trace_);
    r.iterations_used = iter_;
    r.best_objective = r.weights.rho;
    r.converged = converged_;
    return r;
  }

 private:
  Eigen::VectorXd feasible(const Eigen::VectorXd& w) const { return nonneg_ ? project_feasible(w, g_) : w; }

  void note(double rho, const Eigen::VectorXd& w) {
    ++iter_;
    if (rho < best_) {
      best_ = rho;
      best_w_ = w;
    }
    if (opts_.record_trace) trace_.push_back({iter_, best_});
  }

  void subgradient_phase(Eigen::VectorXd w) {
    double reference = best_;
    long last_gain = 0;
    converged_ = false;
    for (long t = 1; t <= opts_.max_iters; ++t) {
      const SpectralObjective obj = objective_and_subgradient(w, g_);
      note(obj.value, w);
      if (best_ < reference - opts_.tol) {
        reference = best_;
        last_gain = t;
      }
      const double norm = obj.subgradient.norm();
      if (norm == 0.0 || best_ == 0.0 || t - last_gain >= opts_.stall_window) {
        converged_ = true;  // optimal or stalled
        break;
      }
      w = feasible(w - (opts_.step_scale / std::sqrt(static_cast<double>(t)) / norm) * obj.subgradient);
    }
  }

  void polish_phase() {
    const double log2m = std::log(2.0 * g_.size());
    const double mu_min = 0.1 * opts_.tol / log2m;
    double mu = std::max(0.1 * best_, mu_min);
    double step = 1.0;
    converged_ = false;
    for (;;) {
      const double before = best_;
      step = fista_stage(mu, step);
      const double gain = before - best_;
      if (polish_used_ >= opts_.max_iters) break;
      if (mu <= mu_min) {
        converged_ = gain <= opts_.tol;
        break;
      }
      mu = std::max(0.3 * mu, mu_min);
    }
  }

  // One smoothing stage from the best point; returns the last step length.
  double fista_stage(double mu, double step) {
    Eigen::VectorXd x_prev = best_w_;
    Eigen::VectorXd y = best_w_;
    double momentum = 1.0;
    for (int k = 0; k < opts_.polish_iters && polish_used_ < opts_.max_iters; ++k, ++polish_used_) {
      const SmoothedObjective at_y = smoothed_objective(y, g_, mu);
      Eigen::VectorXd x;
      SmoothedObjective at_x;
      for (int tries = 0;; ++tries) {
        x = feasible(y - step * at_y.gradient);
        at_x = smoothed_objective(x, g_, mu);
        const Eigen::VectorXd d = x - y;
        const double model = at_y.value + at_y.gradient.dot(d) + 0.5 / step * d.squaredNorm();
        if (at_x.value <= model + 1e-15 || tries >= 60) break;
        step *= 0.5;
      }
      note(at_x.rho, x);
      const double next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum * momentum));
      y = x + ((momentum - 1.0) / next) * (x - x_prev);
      x_prev = std::move(x);
      momentum = next;
      step *= 1.2;
      if (best_ == 0.0) break;
    }
    return step;
  }

  const Graph& g_;
  SolveOptions opts_;
  bool nonneg_;
  Eigen::VectorXd best_w_;
  double best_ = 0.0;
  long iter_ = 0;
  long polish_used_ = 0;
  std::vector<TracePoint> trace_;
  bool converged_ = true;
};

}  // namespace detail

/// Fastest distributed linear averaging: signed weights allowed.
inline SolveResult solve_fdla(const Graph& g, const SolveOptions& opts = {}) {
  return detail::WeightSolver(g, opts, false).run();
}

/// Fastest mixing Markov chain: nonnegative P.
inline SolveResult solve_fmmc(const Graph& g, const SolveOptions& opts = {}) {
  return detail::WeightSolver(g, opts, true).run();
}

}  // namespace cmab
