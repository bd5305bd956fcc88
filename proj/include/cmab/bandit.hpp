#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmab {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Deterministic random stream keyed by (seed, run, agent). Streams with
/// different keys are statistically independent; equal keys replay the same
/// sequence.
class RngStream {
 public:
  /// Agent id reserved for the environment draw (bandit means).
  static constexpr std::uint64_t kEnvironment = std::numeric_limits<std::uint64_t>::max();

  explicit RngStream(std::uint64_t seed, std::uint64_t run = 0, std::uint64_t agent = 0)
      : seed_(seed), run_(run), agent_(agent), engine_(derive(seed, run, agent)) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  std::uint64_t next() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t run() const noexcept { return run_; }
  std::uint64_t agent() const noexcept { return agent_; }

 private:
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t run, std::uint64_t agent) {
    return splitmix64(splitmix64(splitmix64(seed) ^ run) ^ agent);
  }

  std::uint64_t seed_, run_, agent_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Anything the team can play: fixed arm count, a known best arm for
/// bookkeeping, and a stochastic pull.
template <class E>
concept Environment = requires(const E& env, int arm, RngStream& rng) {
  { env.arms() } -> std::convertible_to<int>;
  { env.best_arm() } -> std::convertible_to<int>;
  { env.mu_star() } -> std::convertible_to<double>;
  { env.mean(arm) } -> std::convertible_to<double>;
  { env.pull(arm, rng) } -> std::convertible_to<double>;
};

/// N-armed bandit with Gaussian rewards N(mu_a, sigma^2).
class Bandit {
 public:
  Bandit(std::vector<double> means, double sigma = 1.0) : means_(std::move(means)), sigma_(sigma) {
    if (means_.size() < 2) throw std::invalid_argument("bandit needs at least two arms");
    if (!(sigma_ >= 0.0)) throw std::invalid_argument("reward sigma must be >= 0");
    best_ = static_cast<int>(std::max_element(means_.begin(), means_.end()) - means_.begin());
  }

  int arms() const noexcept { return static_cast<int>(means_.size()); }
  const std::vector<double>& means() const noexcept { return means_; }
  double mean(int arm) const { return means_.at(arm); }
  double sigma() const noexcept { return sigma_; }
  /// Lowest index among maximal means.
  int best_arm() const noexcept { return best_; }
  double mu_star() const noexcept { return means_[best_]; }

  double pull(int arm, RngStream& rng) const {
    if (arm < 0 || arm >= arms())
      throw std::out_of_range("arm " + std::to_string(arm) + " outside [0," + std::to_string(arms()) + ")");
    return means_[arm] + sigma_ * rng.normal();
  }

 private:
  std::vector<double> means_;
  double sigma_;
  int best_;
};

static_assert(Environment<Bandit>);

/// Means drawn i.i.d. from N(0, 1).
inline Bandit sample_bandit(int n_arms, RngStream& rng, double sigma = 1.0) {
  if (n_arms < 2) throw std::invalid_argument("bandit needs at least two arms");
  std::vector<double> means(n_arms);
  for (auto& m : means) m = rng.normal();
  return Bandit(std::move(means), sigma);
}

inline double pull(const Bandit& b, int arm, RngStream& rng) { return b.pull(arm, rng); }

/// Suboptimality gaps mu* - mu_a.
template <Environment E>
std::vector<double> regret_weights(const E& env) {
  std::vector<double> gaps(env.arms());
  for (int a = 0; a < env.arms(); ++a) gaps[a] = env.mu_star() - env.mean(a);
  return gaps;
}

}  // namespace cmab
