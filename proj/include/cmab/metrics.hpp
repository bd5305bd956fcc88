#pragma once

// Team error, group regret, Monte-Carlo aggregation and the settling-time
// statistic used to compare error curves.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmab/team_state.hpp"

namespace cmab {

/// Signed team error: mean over agents of (s_hat/n_hat - mu*) on the best arm.
/// Negative n_hat (possible under signed weights) is taken as is.
inline double team_error(const TeamState& state, double mu_star, int best_arm) {
  if (best_arm < 0 || best_arm >= state.arms()) throw std::out_of_range("team_error: best arm out of range");
  double sum = 0.0;
  for (int k = 0; k < state.agents(); ++k) {
    const double n = state.n_hat(k, best_arm);
    if (n == 0.0) throw std::domain_error("team_error: zero pull estimate");
    sum += state.s_hat(k, best_arm) / n - mu_star;
  }
  return sum / state.agents();
}

/// Cumulative group regret after each step, from each step's per-agent
/// actions and the arms' suboptimality gaps.
template <class StepRange>
std::vector<double> group_regret(const StepRange& logs, std::span<const double> gaps) {
  std::vector<double> out;
  double total = 0.0;
  for (const auto& log : logs) {
    for (int a : log.actions) total += gaps[a];
    out.push_back(total);
  }
  return out;
}

struct ErrorCurve {
  std::vector<double> delta;
  long run = 0;
  std::string method;
  std::string network;
};

/// Pointwise mean of error curves across runs with its standard error.
/// Built incrementally (Welford) in the order runs are added.
class AggregateCurve {
 public:
  AggregateCurve() = default;
  explicit AggregateCurve(std::size_t length) : mean_(length, 0.0), m2_(length, 0.0) {}

  void add(std::span<const double> curve) {
    if (runs_ == 0 && mean_.empty()) {
      mean_.assign(curve.size(), 0.0);
      m2_.assign(curve.size(), 0.0);
    }
    if (curve.size() != mean_.size()) throw std::invalid_argument("aggregate: inconsistent curve lengths");
    ++runs_;
    for (std::size_t t = 0; t < curve.size(); ++t) {
      const double d = curve[t] - mean_[t];
      mean_[t] += d / static_cast<double>(runs_);
      m2_[t] += d * (curve[t] - mean_[t]);
    }
  }

  long runs() const noexcept { return runs_; }
  std::size_t size() const noexcept { return mean_.size(); }
  const std::vector<double>& mean() const noexcept { return mean_; }

  /// Sample standard deviation / sqrt(runs); zero for a single run.
  std::vector<double> standard_error() const {
    std::vector<double> se(mean_.size(), 0.0);
    if (runs_ < 2) return se;
    for (std::size_t t = 0; t < se.size(); ++t)
      se[t] = std::sqrt(std::max(m2_[t], 0.0) / static_cast<double>(runs_ - 1)) / std::sqrt(static_cast<double>(runs_));
    return se;
  }

 private:
  std::vector<double> mean_, m2_;
  long runs_ = 0;
};

inline AggregateCurve aggregate(std::span<const ErrorCurve> runs) {
  if (runs.empty()) throw std::invalid_argument("aggregate: no runs");
  AggregateCurve agg;
  for (const auto& r : runs) agg.add(r.delta);
  return agg;
}

/// What the 5% threshold is measured against.
enum class SettlingReference {
  /// Peak |delta| of the curve with the largest error among those compared.
  peak,
  /// |last value| of the curve whose final |delta| is largest.
  final_value,
};

inline constexpr double kDefaultSettleFraction = 0.05;

struct SettlingReport {
  double threshold = 0.0;
  /// Curve index after which |delta| stays at or below the threshold through
  /// the end; empty when the curve never settles.
  std::map<std::string, std::optional<long>> step;
};

inline std::optional<long> settling_index(std::span<const double> curve, double threshold) {
  long k = static_cast<long>(curve.size());
  while (k > 0 && std::abs(curve[k - 1]) <= threshold) --k;
  if (k == static_cast<long>(curve.size())) return std::nullopt;
  return k;
}

inline SettlingReport settling_time(const std::map<std::string, AggregateCurve>& curves,
                                    double fraction = kDefaultSettleFraction,
                                    SettlingReference reference = SettlingReference::peak) {
  if (curves.empty()) throw std::invalid_argument("settling_time: no curves");
  if (!(fraction > 0.0)) throw std::invalid_argument("settling_time: fraction must be > 0");
  const std::size_t len = curves.begin()->second.size();
  const long runs = curves.begin()->second.runs();
  double ref = 0.0;
  for (auto& [name, c] : curves) {
    if (c.size() != len || c.runs() != runs)
      throw std::invalid_argument("settling_time: curves differ in length or run count");
    if (len == 0) continue;
    if (reference == SettlingReference::final_value) {
      ref = std::max(ref, std::abs(c.mean().back()));
    } else {
      for (double x : c.mean()) ref = std::max(ref, std::abs(x));
    }
  }
  SettlingReport out;
  out.threshold = fraction * ref;
  for (auto& [name, c] : curves) out.step[name] = settling_index(c.mean(), out.threshold);
  return out;
}

}  // namespace cmab
