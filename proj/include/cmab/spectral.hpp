#pragma once

// Symmetric eigendecomposition (cyclic Jacobi) and the consensus
// convergence metrics: rho = spectral radius of P - 11'/M, tau = 1/ln(1/rho).

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace cmab {

struct Spectrum {
  /// Sorted descending.
  Eigen::VectorXd values;
  /// Column k pairs with values[k]. Present only when requested.
  std::optional<Eigen::MatrixXd> vectors;
};

namespace detail {

inline double max_asymmetry(const Eigen::MatrixXd& s) {
  return (s - s.transpose()).cwiseAbs().maxCoeff();
}

inline double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

}  // namespace detail

inline constexpr int kJacobiMaxSweeps = 100;
inline constexpr double kJacobiRelTol = 1e-12;

/// Eigenvalues (and optionally an orthonormal eigenbasis) of a symmetric
/// matrix by cyclic-by-row Jacobi rotations. Sweeps stop once the
/// off-diagonal Frobenius norm drops below 1e-12 * ||S||_F, or after 100
/// sweeps. Ties in the sorted order keep the lower diagonal position first.
inline Spectrum sym_eigs(const Eigen::MatrixXd& s, bool want_vectors = false) {
  if (s.rows() != s.cols()) throw std::invalid_argument("sym_eigs: matrix is not square");
  const Eigen::Index n = s.rows();
  if (n == 0) return {Eigen::VectorXd(), want_vectors ? std::optional(Eigen::MatrixXd()) : std::nullopt};
  if (detail::max_asymmetry(s) > 1e-12) throw std::invalid_argument("sym_eigs: matrix is not symmetric");

  Eigen::MatrixXd a = 0.5 * (s + s.transpose());
  Eigen::MatrixXd v;
  if (want_vectors) v = Eigen::MatrixXd::Identity(n, n);

  const double stop = kJacobiRelTol * a.norm();
  for (int sweep = 0; sweep < kJacobiMaxSweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) <= stop) break;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Symmetric Schur decomposition of the 2x2 block (p,q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;

        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
        if (want_vectors) {
          for (Eigen::Index k = 0; k < n; ++k) {
            const double vkp = v(k, p), vkq = v(k, q);
            v(k, p) = c * vkp - sn * vkq;
            v(k, q) = sn * vkp + c * vkq;
          }
        }
      }
    }
  }

  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x) > a(y, y); });

  Spectrum out;
  out.values.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) out.values[k] = a(order[k], order[k]);
  if (want_vectors) {
    Eigen::MatrixXd sorted(n, n);
    for (Eigen::Index k = 0; k < n; ++k) sorted.col(k) = v.col(order[k]);
    out.vectors = std::move(sorted);
  }
  return out;
}

/// P - (1/M) 11'.
inline Eigen::MatrixXd deviation_from_average(const Eigen::MatrixXd& p) {
  const auto m = p.rows();
  return p - Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
}

/// Asymptotic convergence factor of x(t+1) = P x(t): the spectral radius of
/// P - 11'/M. Requires P symmetric with unit row sums (1e-9).
inline double convergence_factor(const Eigen::MatrixXd& p) {
  if (p.rows() != p.cols() || p.rows() == 0)
    throw std::invalid_argument("convergence_factor: matrix must be square and non-empty");
  if (detail::max_asymmetry(p) > 1e-9)
    throw std::invalid_argument("convergence_factor: matrix is not symmetric");
  if ((p.rowwise().sum().array() - 1.0).abs().maxCoeff() > 1e-9)
    throw std::invalid_argument("convergence_factor: row sums differ from 1");
  const Eigen::MatrixXd sym = 0.5 * (p + p.transpose());
  const Eigen::VectorXd lam = sym_eigs(deviation_from_average(sym)).values;
  return std::max({lam[0], -lam[lam.size() - 1], 0.0});
}

/// rho values this close to 1 are treated as non-convergent.
inline constexpr double kNonConvergentRho = 1.0 - 1e-12;

/// tau = 1 / ln(1/rho). Empty for rho >= 1 (no convergence); 0 at rho = 0.
inline std::optional<double> convergence_time(double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("convergence_time: rho must be >= 0");
  if (rho >= kNonConvergentRho) return std::nullopt;
  if (rho == 0.0) return 0.0;
  return 1.0 / std::log(1.0 / rho);
}

}  // namespace cmab
