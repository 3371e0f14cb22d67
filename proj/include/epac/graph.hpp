#pragma once

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "epac/matrix.hpp"

namespace epac {

using Edge = std::pair<int, int>;

/// Directed communication topology. Agent ids are 1-based and an edge (i, j)
/// means "agent i sends to agent j". The adjacency matrix follows the
/// receiver-row convention: a(i, j) = 1 iff (j, i) is an edge, so row i lists
/// agent i's in-neighbors.
///
/// Immutable after build; safe to share across threads.
class Digraph {
 public:
  /// Assembles the topology from an explicit edge list. Rejects self-loops,
  /// out-of-range ids, duplicate edges and networks of fewer than 3 agents.
  /// Balance and strong connectivity are NOT checked here; see validate().
  static Digraph build(int n, std::vector<Edge> edges) {
    if (n < 3) throw std::invalid_argument("graph: need at least 3 agents, got " + std::to_string(n));
    std::sort(edges.begin(), edges.end());
    Digraph g;
    g.n_ = n;
    g.out_.assign(static_cast<std::size_t>(n) + 1, {});
    g.in_.assign(static_cast<std::size_t>(n) + 1, {});
    const Edge* prev = nullptr;
    for (const Edge& e : edges) {
      auto [i, j] = e;
      if (i < 1 || i > n || j < 1 || j > n)
        throw std::invalid_argument("graph: edge (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") out of range 1.." + std::to_string(n));
      if (i == j)
        throw std::invalid_argument("graph: self-loop at agent " + std::to_string(i));
      if (prev && *prev == e)
        throw std::invalid_argument("graph: duplicate edge (" + std::to_string(i) + "," +
                                    std::to_string(j) + ")");
      prev = &e;
      g.out_[static_cast<std::size_t>(i)].push_back(j);
      g.in_[static_cast<std::size_t>(j)].push_back(i);
    }
    g.edges_ = std::move(edges);
    for (auto& v : g.out_) std::sort(v.begin(), v.end());
    for (auto& v : g.in_) std::sort(v.begin(), v.end());
    return g;
  }

  /// Directed ring 1 -> 2 -> ... -> n -> 1, the smallest balanced strongly
  /// connected family.
  static Digraph ring(int n) {
    std::vector<Edge> e;
    for (int i = 1; i <= n; ++i) e.emplace_back(i, i % n + 1);
    return build(n, std::move(e));
  }

  /// Fixed 5-agent demo topology: a ring plus the chord cycle 3 -> 5 -> 4 -> 3.
  /// Balanced with degrees (1, 1, 2, 2, 2) and strongly connected.
  static Digraph demo5() {
    return build(5, {{1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 1}, {3, 5}, {4, 3}, {5, 4}});
  }

  int size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }

  bool has_edge(int i, int j) const {
    const auto& o = out_neighbors(i);
    return std::binary_search(o.begin(), o.end(), j);
  }

  const std::vector<int>& out_neighbors(int i) const { return out_[check(i)]; }
  const std::vector<int>& in_neighbors(int i) const { return in_[check(i)]; }
  int out_degree(int i) const { return static_cast<int>(out_neighbors(i).size()); }
  int in_degree(int i) const { return static_cast<int>(in_neighbors(i).size()); }

  /// Degree of agent i. Meaningful on balanced graphs, where in- and
  /// out-degree coincide; returns the in-degree otherwise.
  int degree(int i) const { return in_degree(i); }

  /// Receiver-row adjacency matrix (0-based storage; row r is agent r + 1).
  Matrix adjacency() const {
    Matrix a(n_, n_);
    for (const auto& [i, j] : edges_) a(j - 1, i - 1) = 1.0;
    return a;
  }

 private:
  std::size_t check(int i) const {
    if (i < 1 || i > n_) throw std::out_of_range("graph: agent id " + std::to_string(i));
    return static_cast<std::size_t>(i);
  }

  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

/// Outcome of checking the standing topology assumptions. Report-returning:
/// each failed invariant is listed by name instead of thrown.
struct ValidationReport {
  bool balanced = false;
  bool strongly_connected = false;
  std::vector<int> unbalanced_agents;      // in-degree != out-degree
  std::vector<Edge> unreachable_pairs;     // (from, to) with no directed path

  bool ok() const { return balanced && strongly_connected; }

  std::string to_string() const {
    if (ok()) return "ok";
    std::ostringstream os;
    if (!balanced) {
      os << "unbalanced at agents {";
      for (std::size_t k = 0; k < unbalanced_agents.size(); ++k)
        os << (k ? "," : "") << unbalanced_agents[k];
      os << "}";
    }
    if (!strongly_connected) {
      if (!balanced) os << "; ";
      os << "not strongly connected (" << unreachable_pairs.size() << " unreachable pairs";
      std::size_t shown = std::min<std::size_t>(unreachable_pairs.size(), 8);
      for (std::size_t k = 0; k < shown; ++k)
        os << (k ? ", " : ": ") << unreachable_pairs[k].first << "->" << unreachable_pairs[k].second;
      if (shown < unreachable_pairs.size()) os << ", ...";
      os << ")";
    }
    return os.str();
  }
};

namespace detail {

/// (L x)_i = d_i x_i - sum of in-neighbor states, without forming L.
inline void apply_laplacian_into(const Digraph& g, const Vec& x, Vec& out) {
  const int n = g.size();
  out.assign(static_cast<std::size_t>(n), 0.0);
  for (int i = 1; i <= n; ++i) {
    double acc = static_cast<double>(g.in_degree(i)) * x[static_cast<std::size_t>(i - 1)];
    for (int j : g.in_neighbors(i)) acc -= x[static_cast<std::size_t>(j - 1)];
    out[static_cast<std::size_t>(i - 1)] = acc;
  }
}

inline void require_dimension(const Digraph& g, const Vec& x) {
  if (static_cast<int>(x.size()) != g.size())
    throw std::invalid_argument("state vector has " + std::to_string(x.size()) + " entries, graph has " +
                                std::to_string(g.size()) + " agents");
}

/// Iterative Tarjan SCC; returns the number of strongly connected components.
inline int scc_count(const Digraph& g) {
  const int n = g.size();
  std::vector<int> index(static_cast<std::size_t>(n) + 1, 0);
  std::vector<int> lowlink(static_cast<std::size_t>(n) + 1, 0);
  std::vector<bool> on_stack(static_cast<std::size_t>(n) + 1, false);
  std::vector<int> stack;
  int next_index = 1;
  int components = 0;

  struct Frame {
    int node;
    std::size_t child;
  };
  for (int start = 1; start <= n; ++start) {
    if (index[static_cast<std::size_t>(start)] != 0) continue;
    std::vector<Frame> call;
    call.push_back({start, 0});
    index[static_cast<std::size_t>(start)] = lowlink[static_cast<std::size_t>(start)] = next_index++;
    stack.push_back(start);
    on_stack[static_cast<std::size_t>(start)] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      const auto& succ = g.out_neighbors(f.node);
      if (f.child < succ.size()) {
        int w = succ[f.child++];
        if (index[static_cast<std::size_t>(w)] == 0) {
          index[static_cast<std::size_t>(w)] = lowlink[static_cast<std::size_t>(w)] = next_index++;
          stack.push_back(w);
          on_stack[static_cast<std::size_t>(w)] = true;
          call.push_back({w, 0});
        } else if (on_stack[static_cast<std::size_t>(w)]) {
          lowlink[static_cast<std::size_t>(f.node)] =
              std::min(lowlink[static_cast<std::size_t>(f.node)], index[static_cast<std::size_t>(w)]);
        }
      } else {
        if (lowlink[static_cast<std::size_t>(f.node)] == index[static_cast<std::size_t>(f.node)]) {
          ++components;
          int w;
          do {
            w = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(w)] = false;
          } while (w != f.node);
        }
        int done = f.node;
        call.pop_back();
        if (!call.empty()) {
          int parent = call.back().node;
          lowlink[static_cast<std::size_t>(parent)] =
              std::min(lowlink[static_cast<std::size_t>(parent)], lowlink[static_cast<std::size_t>(done)]);
        }
      }
    }
  }
  return components;
}

inline std::vector<bool> reachable_from(const Digraph& g, int src) {
  std::vector<bool> seen(static_cast<std::size_t>(g.size()) + 1, false);
  std::vector<int> queue{src};
  seen[static_cast<std::size_t>(src)] = true;
  while (!queue.empty()) {
    int v = queue.back();
    queue.pop_back();
    for (int w : g.out_neighbors(v)) {
      if (!seen[static_cast<std::size_t>(w)]) {
        seen[static_cast<std::size_t>(w)] = true;
        queue.push_back(w);
      }
    }
  }
  return seen;
}

}  // namespace detail

/// Checks the standing assumptions: balanced and strongly connected.
/// Strong connectivity is decided by a single SCC decomposition; the
/// unreachable-pair listing is only assembled when that check fails.
inline ValidationReport validate(const Digraph& g) {
  ValidationReport report;
  report.balanced = true;
  for (int i = 1; i <= g.size(); ++i) {
    if (g.in_degree(i) != g.out_degree(i)) {
      report.balanced = false;
      report.unbalanced_agents.push_back(i);
    }
  }
  report.strongly_connected = detail::scc_count(g) == 1;
  if (!report.strongly_connected) {
    for (int i = 1; i <= g.size(); ++i) {
      auto seen = detail::reachable_from(g, i);
      for (int j = 1; j <= g.size(); ++j)
        if (i != j && !seen[static_cast<std::size_t>(j)]) report.unreachable_pairs.emplace_back(i, j);
    }
  }
  return report;
}

/// Laplacian L = D - A with the receiver-row adjacency convention. Entries
/// are small integers assembled exactly, so L*1 = 0 holds with no rounding;
/// on balanced graphs the column sums vanish as well.
inline Matrix laplacian(const Digraph& g) {
  Matrix l(g.size(), g.size());
  for (int i = 1; i <= g.size(); ++i) l(i - 1, i - 1) = static_cast<double>(g.in_degree(i));
  for (const auto& [i, j] : g.edges()) l(j - 1, i - 1) -= 1.0;
  return l;
}

/// Upper end of the admissible range for the convergence-phase gain:
/// the gain must be chosen strictly inside (0, 1/max_i d_i).
inline double epsilon_bound(const Digraph& g) {
  int max_degree = 0;
  for (int i = 1; i <= g.size(); ++i) max_degree = std::max(max_degree, g.degree(i));
  return 1.0 / static_cast<double>(max_degree);
}

}  // namespace epac
