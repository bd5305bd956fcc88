#pragma once

#include <Eigen/Dense>

namespace cmab {

/// Running-consensus estimates of a team of M agents over N arms.
struct TeamState {
  /// s_hat(k, i): agent k's consensus estimate of total reward from arm i.
  Eigen::MatrixXd s_hat;
  /// n_hat(k, i): agent k's consensus estimate of the pull count of arm i.
  Eigen::MatrixXd n_hat;
  /// Consensus matrix in use (M x M).
  Eigen::MatrixXd p;
  /// Completed time steps; the next decision happens at t + 1.
  long t = 0;
  double cumulative_regret = 0.0;

  int agents() const { return static_cast<int>(s_hat.rows()); }
  int arms() const { return static_cast<int>(s_hat.cols()); }
};

}  // namespace cmab
