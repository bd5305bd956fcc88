#pragma once

// Consensus weight matrices: the kappa-scaled Perron matrix, the three
// closed-form heuristics, structural validation and the CSV format.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cmab/csv.hpp"
#include "cmab/graph.hpp"
#include "cmab/spectral.hpp"

namespace cmab {

enum class Method { kappa, best_constant, max_degree, local_degree, fmmc, fdla };

inline constexpr Method kAllMethods[] = {Method::kappa,        Method::best_constant, Method::max_degree,
                                         Method::local_degree, Method::fmmc,          Method::fdla};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kappa: return "kappa";
    case Method::best_constant: return "best_constant";
    case Method::max_degree: return "max_degree";
    case Method::local_degree: return "local_degree";
    case Method::fmmc: return "fmmc";
    case Method::fdla: return "fdla";
  }
  return "?";
}

/// Accepts canonical names plus the short aliases used on the command line.
inline std::optional<Method> parse_method(std::string_view s) {
  static const std::pair<std::string_view, Method> names[] = {
      {"kappa", Method::kappa},
      {"best_constant", Method::best_constant},
      {"constant", Method::best_constant},
      {"constant_edge", Method::best_constant},
      {"max_degree", Method::max_degree},
      {"maxdeg", Method::max_degree},
      {"local_degree", Method::local_degree},
      {"localdeg", Method::local_degree},
      {"fmmc", Method::fmmc},
      {"fdla", Method::fdla},
  };
  for (auto& [name, m] : names)
    if (name == s) return m;
  return std::nullopt;
}

inline constexpr double kDefaultKappa = 0.02;

/// Symmetric consensus matrix with its provenance and achieved metrics.
struct WeightMatrix {
  Eigen::MatrixXd p;
  Method method = Method::kappa;
  /// Method parameters in insertion order (e.g. {"kappa", 0.02}).
  std::vector<std::pair<std::string, double>> params;
  double rho = 0.0;
  /// Empty when rho >= 1.
  std::optional<double> tau;

  int size() const { return static_cast<int>(p.rows()); }

  std::optional<double> param(std::string_view key) const {
    for (auto& [k, v] : params)
      if (k == key) return v;
    return std::nullopt;
  }
};

inline WeightMatrix make_weight_matrix(Eigen::MatrixXd p, Method method,
                                       std::vector<std::pair<std::string, double>> params = {}) {
  WeightMatrix w;
  w.rho = convergence_factor(p);
  w.tau = convergence_time(w.rho);
  w.p = std::move(p);
  w.method = method;
  w.params = std::move(params);
  return w;
}

namespace detail {

inline void require_weightable(const Graph& g) {
  if (g.size() < 2) throw GraphError("weight construction needs at least two agents");
  require_connected(g);
}

}  // namespace detail

/// P = I - (kappa / d_max) L.
inline WeightMatrix kappa_weights(const Graph& g, double kappa = kDefaultKappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0, 1]");
  detail::require_weightable(g);
  const int m = g.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m, m) - (kappa / g.max_degree()) * laplacian(g);
  return make_weight_matrix(std::move(p), Method::kappa, {{"kappa", kappa}});
}

/// Constant edge weight alpha = 2 / (lambda_1(L) + lambda_{M-1}(L)), the
/// best constant for the spectral radius.
inline WeightMatrix best_constant_weights(const Graph& g) {
  detail::require_weightable(g);
  const int m = g.size();
  const Eigen::MatrixXd l = laplacian(g);
  const Eigen::VectorXd lam = sym_eigs(l).values;
  const double alpha = 2.0 / (lam[0] + lam[m - 2]);
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m, m) - alpha * l;
  return make_weight_matrix(std::move(p), Method::best_constant, {{"alpha", alpha}});
}

/// P = I - L / d_max.
inline WeightMatrix max_degree_weights(const Graph& g) {
  detail::require_weightable(g);
  const int m = g.size();
  const double alpha = 1.0 / g.max_degree();
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m, m) - alpha * laplacian(g);
  return make_weight_matrix(std::move(p), Method::max_degree, {{"alpha", alpha}});
}

/// P_ij = 1 / max(d_i, d_j) on edges; the diagonal takes the remainder.
inline WeightMatrix local_degree_weights(const Graph& g) {
  detail::require_weightable(g);
  const int m = g.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(m, m);
  for (auto [i, j] : g.edges()) p(i, j) = p(j, i) = 1.0 / std::max(g.degree(i), g.degree(j));
  for (int i = 0; i < m; ++i) p(i, i) = 1.0 - (p.row(i).sum() - p(i, i));
  return make_weight_matrix(std::move(p), Method::local_degree);
}

/// P(w) = I - B diag(w) B' for edge weights in canonical edge order.
inline Eigen::MatrixXd matrix_from_edge_weights(const Graph& g, const Eigen::VectorXd& w) {
  if (w.size() != g.edge_count()) throw std::invalid_argument("edge weight vector has wrong length");
  const int m = g.size();
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(m, m);
  for (int l = 0; l < g.edge_count(); ++l) {
    auto [i, j] = g.edges()[l];
    p(i, j) += w[l];
    p(j, i) += w[l];
    p(i, i) -= w[l];
    p(j, j) -= w[l];
  }
  return p;
}

/// Edge weights read back from P (the off-diagonal entry for each edge).
inline Eigen::VectorXd edge_weights_of(const Graph& g, const Eigen::MatrixXd& p) {
  Eigen::VectorXd w(g.edge_count());
  for (int l = 0; l < g.edge_count(); ++l) w[l] = p(g.edges()[l].first, g.edges()[l].second);
  return w;
}

// ---------------------------------------------------------------------------
// Validation

enum class SignMode { nonnegative, signed_entries };

/// FDLA and best-constant may produce negative entries (best-constant does
/// whenever alpha * d_i > 1, e.g. the star hub); the rest must be nonnegative.
inline SignMode sign_mode_for(Method m) {
  return m == Method::fdla || m == Method::best_constant ? SignMode::signed_entries : SignMode::nonnegative;
}

inline constexpr double kValidationTol = 1e-8;

/// Largest violation of each structural constraint; `passed` iff all are
/// within kValidationTol.
struct ValidationReport {
  bool shape_ok = true;
  double symmetry = 0.0;
  double row_sum = 0.0;
  double column_sum = 0.0;
  double sparsity = 0.0;
  double negativity = 0.0;
  bool passed = false;
};

inline ValidationReport validate(const Eigen::MatrixXd& p, const Graph& g, SignMode mode) {
  ValidationReport r;
  if (p.rows() != g.size() || p.cols() != g.size()) {
    r.shape_ok = false;
    return r;
  }
  r.symmetry = (p - p.transpose()).cwiseAbs().maxCoeff();
  r.row_sum = (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
  r.column_sum = (p.colwise().sum().array() - 1.0).abs().maxCoeff();
  for (int i = 0; i < g.size(); ++i)
    for (int j = 0; j < g.size(); ++j) {
      if (i != j && !g.has_edge(i, j)) r.sparsity = std::max(r.sparsity, std::abs(p(i, j)));
      if (mode == SignMode::nonnegative) r.negativity = std::max(r.negativity, -p(i, j));
    }
  r.passed = r.symmetry <= kValidationTol && r.row_sum <= kValidationTol && r.column_sum <= kValidationTol &&
             r.sparsity <= kValidationTol && r.negativity <= kValidationTol;
  return r;
}

inline ValidationReport validate(const WeightMatrix& w, const Graph& g) {
  return validate(w.p, g, sign_mode_for(w.method));
}

// ---------------------------------------------------------------------------
// CSV: a metadata line "# method=... [param=...] rho=... tau=..." followed by
// M rows of M comma-separated values.

inline void write_weight_csv(std::ostream& out, const WeightMatrix& w) {
  out << "# method=" << to_string(w.method);
  for (auto& [k, v] : w.params) out << ' ' << k << '=' << format_g17(v);
  out << " rho=" << format_g17(w.rho) << " tau=" << (w.tau ? format_g17(*w.tau) : std::string("inf")) << '\n';
  for (Eigen::Index i = 0; i < w.p.rows(); ++i) {
    std::vector<std::string> cells;
    for (Eigen::Index j = 0; j < w.p.cols(); ++j) cells.push_back(format_g17(w.p(i, j)));
    out << csv_row(cells);
  }
}

inline void save_weight_csv(const WeightMatrix& w, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  write_weight_csv(out, w);
}

struct WeightCsv {
  Eigen::MatrixXd p;
  std::map<std::string, std::string> meta;
};

inline WeightCsv read_weight_csv(std::istream& in) {
  WeightCsv out;
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string kv;
      while (ls >> kv) {
        auto eq = kv.find('=');
        if (eq != std::string::npos) out.meta[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      continue;
    }
    std::vector<double> row;
    for (auto& cell : split(line, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ParseError(lineno, "bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  out.p.resize(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != m) throw ParseError(0, "weight matrix is not square");
    for (Eigen::Index j = 0; j < m; ++j) out.p(i, j) = rows[i][j];
  }
  return out;
}

inline WeightCsv load_weight_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_weight_csv(in);
}

}  // namespace cmab
