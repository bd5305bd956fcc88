#pragma once

// Undirected communication graphs for agent teams: construction, Laplacian,
// incidence, topology generators and the edge-list text format.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cmab {

/// Unordered vertex pair stored as (min, max).
using Edge = std::pair<int, int>;

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Edge-list parse failure; `line()` is 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

/// Simple undirected graph on vertices 0..m-1. Immutable after construction.
///
/// The edge list is kept in canonical order (lexicographic by (min, max)),
/// which doubles as the edge numbering used by the weight optimizer.
class Graph {
 public:
  Graph(int m, std::vector<Edge> edges, std::vector<std::string> labels = {})
      : m_(m), edges_(std::move(edges)), labels_(std::move(labels)) {
    if (m_ < 1) throw GraphError("graph needs at least one vertex");
    if (!labels_.empty() && static_cast<int>(labels_.size()) != m_)
      throw GraphError("label count does not match vertex count");
    for (auto& [i, j] : edges_) {
      if (i < 0 || j < 0 || i >= m_ || j >= m_)
        throw GraphError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                         ") has an endpoint outside [0," + std::to_string(m_) + ")");
      if (i == j) throw GraphError("self-loop at vertex " + std::to_string(i));
      if (i > j) std::swap(i, j);
    }
    std::sort(edges_.begin(), edges_.end());
    auto dup = std::adjacent_find(edges_.begin(), edges_.end());
    if (dup != edges_.end())
      throw GraphError("duplicate edge (" + std::to_string(dup->first) + "," +
                       std::to_string(dup->second) + ")");

    degree_.assign(m_, 0);
    adjacency_.assign(m_, {});
    for (auto [i, j] : edges_) {
      ++degree_[i];
      ++degree_[j];
      adjacency_[i].push_back(j);
      adjacency_[j].push_back(i);
    }
    for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
    connected_ = compute_connected();
  }

  int size() const noexcept { return m_; }
  int edge_count() const noexcept { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<int>& neighbors(int i) const { return adjacency_.at(i); }

  int degree(int i) const { return degree_.at(i); }
  const std::vector<int>& degrees() const noexcept { return degree_; }
  int max_degree() const noexcept {
    return degree_.empty() ? 0 : *std::max_element(degree_.begin(), degree_.end());
  }

  bool connected() const noexcept { return connected_; }

  bool has_edge(int i, int j) const { return edge_id(i, j).has_value(); }

  /// Position of edge {i,j} in the canonical edge numbering.
  std::optional<int> edge_id(int i, int j) const {
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), Edge{i, j});
    if (it == edges_.end() || *it != Edge{i, j}) return std::nullopt;
    return static_cast<int>(it - edges_.begin());
  }

  /// Edge ids incident to vertex i, ascending.
  std::vector<int> incident_edges(int i) const {
    std::vector<int> out;
    for (int l = 0; l < edge_count(); ++l)
      if (edges_[l].first == i || edges_[l].second == i) out.push_back(l);
    return out;
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.m_ == b.m_ && a.edges_ == b.edges_;
  }

 private:
  bool compute_connected() const {
    std::vector<char> seen(m_, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int reached = 1;
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (int u : adjacency_[v])
        if (!seen[u]) {
          seen[u] = 1;
          ++reached;
          stack.push_back(u);
        }
    }
    return reached == m_;
  }

  int m_;
  std::vector<Edge> edges_;
  std::vector<std::string> labels_;
  std::vector<int> degree_;
  std::vector<std::vector<int>> adjacency_;
  bool connected_ = false;
};

inline Graph build_graph(int m, std::vector<Edge> edges) { return Graph(m, std::move(edges)); }

inline void require_connected(const Graph& g) {
  if (!g.connected()) throw GraphError("graph is not connected");
}

inline Eigen::MatrixXd adjacency(const Graph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.size(), g.size());
  for (auto [i, j] : g.edges()) a(i, j) = a(j, i) = 1.0;
  return a;
}

/// L = D - A. Entries are small integers, so the result is exact.
inline Eigen::MatrixXd laplacian(const Graph& g) {
  Eigen::MatrixXd l = -adjacency(g);
  for (int i = 0; i < g.size(); ++i) l(i, i) = g.degree(i);
  return l;
}

/// Column l for edge (i,j), i<j, holds +1 at row i and -1 at row j.
inline Eigen::MatrixXd incidence(const Graph& g) {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(g.size(), g.edge_count());
  for (int l = 0; l < g.edge_count(); ++l) {
    b(g.edges()[l].first, l) = 1.0;
    b(g.edges()[l].second, l) = -1.0;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Generators

inline Graph gen_complete(int m) {
  if (m < 2) throw GraphError("complete graph needs m >= 2");
  std::vector<Edge> e;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) e.emplace_back(i, j);
  return Graph(m, std::move(e));
}

/// Star with hub 0.
inline Graph gen_star(int m) {
  if (m < 2) throw GraphError("star graph needs m >= 2");
  std::vector<Edge> e;
  for (int i = 1; i < m; ++i) e.emplace_back(0, i);
  return Graph(m, std::move(e));
}

inline Graph gen_path(int m) {
  if (m < 2) throw GraphError("path graph needs m >= 2");
  std::vector<Edge> e;
  for (int i = 0; i + 1 < m; ++i) e.emplace_back(i, i + 1);
  return Graph(m, std::move(e));
}

enum class ClusterWiring { complete, star };

/// k clusters of c vertices each, plus a parent vertex (index k*c) joined to
/// the first vertex of every cluster. With star wiring the first vertex is
/// also the cluster hub. The parent is an articulation point.
inline Graph gen_clustered(int k, int c, ClusterWiring intra = ClusterWiring::complete) {
  if (k < 2) throw GraphError("clustered graph needs k >= 2 clusters");
  if (c < 2) throw GraphError("clustered graph needs cluster size c >= 2");
  const int parent = k * c;
  std::vector<Edge> e;
  for (int q = 0; q < k; ++q) {
    const int base = q * c;
    if (intra == ClusterWiring::complete) {
      for (int i = 0; i < c; ++i)
        for (int j = i + 1; j < c; ++j) e.emplace_back(base + i, base + j);
    } else {
      for (int i = 1; i < c; ++i) e.emplace_back(base, base + i);
    }
    e.emplace_back(base, parent);
  }
  return Graph(parent + 1, std::move(e));
}

/// Random connected graph: a uniform random recursive tree plus each remaining
/// pair independently with probability `extra_edge_prob`.
inline Graph gen_random_connected(int m, double extra_edge_prob, std::uint64_t seed) {
  if (m < 2) throw GraphError("random graph needs m >= 2");
  std::mt19937_64 eng(seed);
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), eng);
  std::vector<Edge> e;
  for (int v = 1; v < m; ++v) {
    std::uniform_int_distribution<int> pick(0, v - 1);
    int a = order[v], b = order[pick(eng)];
    e.emplace_back(std::min(a, b), std::max(a, b));
  }
  std::bernoulli_distribution coin(extra_edge_prob);
  std::sort(e.begin(), e.end());
  std::vector<Edge> extra;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (!std::binary_search(e.begin(), e.end(), Edge{i, j}) && coin(eng)) extra.emplace_back(i, j);
  e.insert(e.end(), extra.begin(), extra.end());
  return Graph(m, std::move(e));
}

/// Graph with vertex `v` and its edges removed; remaining vertices renumbered
/// in order.
inline Graph remove_vertex(const Graph& g, int v) {
  if (g.size() < 2) throw GraphError("cannot remove the only vertex");
  auto remap = [v](int x) { return x < v ? x : x - 1; };
  std::vector<Edge> e;
  for (auto [i, j] : g.edges())
    if (i != v && j != v) e.emplace_back(remap(i), remap(j));
  return Graph(g.size() - 1, std::move(e));
}

// ---------------------------------------------------------------------------
// Edge-list text format:
//   m <count>
//   e <i> <j>      (one per edge)
// '#' starts a comment; blank lines ignored; order-insensitive apart from
// "m" needing to appear once.

inline Graph parse_graph(std::istream& in) {
  std::optional<int> m;
  std::vector<std::pair<Edge, int>> edges;  // edge, line number
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ls(raw);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "m") {
      int v;
      if (!(ls >> v)) throw ParseError(lineno, "expected vertex count after 'm'");
      if (m) throw ParseError(lineno, "vertex count given twice");
      if (v < 1) throw ParseError(lineno, "vertex count must be >= 1");
      m = v;
    } else if (tag == "e") {
      int i, j;
      if (!(ls >> i >> j)) throw ParseError(lineno, "expected two vertex indices after 'e'");
      edges.push_back({{i, j}, lineno});
    } else {
      throw ParseError(lineno, "unknown record '" + tag + "'");
    }
    std::string rest;
    if (ls >> rest) throw ParseError(lineno, "trailing token '" + rest + "'");
  }
  if (!m) throw ParseError(lineno + 1, "missing 'm <count>' line");

  // Per-edge validation so errors point at the offending line.
  std::vector<std::pair<Edge, int>> seen;
  std::vector<Edge> out;
  for (auto [e, line] : edges) {
    auto [i, j] = e;
    if (i < 0 || j < 0 || i >= *m || j >= *m)
      throw ParseError(line, "endpoint out of range [0," + std::to_string(*m) + ")");
    if (i == j) throw ParseError(line, "self-loop at vertex " + std::to_string(i));
    Edge c{std::min(i, j), std::max(i, j)};
    for (auto& [prev, pl] : seen)
      if (prev == c) throw ParseError(line, "duplicate edge (first at line " + std::to_string(pl) + ")");
    seen.push_back({c, line});
    out.push_back(c);
  }
  return Graph(*m, std::move(out));
}

inline Graph parse_graph(const std::string& text) {
  std::istringstream in(text);
  return parse_graph(in);
}

/// Loads an edge-list file. Disconnected graphs load fine; check
/// `connected()` on the result.
inline Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file '" + path + "'");
  return parse_graph(in);
}

inline void write_graph(std::ostream& out, const Graph& g) {
  out << "m " << g.size() << '\n';
  for (auto [i, j] : g.edges()) out << "e " << i << ' ' << j << '\n';
}

inline void save_graph(const Graph& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write graph file '" + path + "'");
  write_graph(out, g);
}

}  // namespace cmab
