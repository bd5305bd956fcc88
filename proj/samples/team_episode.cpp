// One Coop-UCB2 episode on the 5-agent star with FMMC weights; prints the
// team error every 100 steps.

#include <cstdio>

#include "cmab/cmab.hpp"

int main() {
  const cmab::Graph g = cmab::gen_star(5);
  const cmab::WeightMatrix w = cmab::solve_fmmc(g).weights;

  cmab::RngStream env_rng(7, 0, cmab::RngStream::kEnvironment);
  const cmab::Bandit bandit = cmab::sample_bandit(100, env_rng);
  const auto logs = cmab::run_episode(g, w, bandit, cmab::AlgoParams{}, 1000, 7);

  std::printf("best arm %d, mu* = %.4f\n", bandit.best_arm(), bandit.mu_star());
  for (const auto& log : logs)
    if (log.t % 100 == 0) std::printf("t=%4ld  delta=% .5f  group regret=%.2f\n", log.t, log.delta, log.cumulative_regret);
}
