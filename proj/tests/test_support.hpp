#pragma once

#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "epac/adversary.hpp"
#include "epac/graph.hpp"
#include "epac/matrix.hpp"
#include "epac/rng.hpp"

namespace epac::test {

/// Random balanced strongly connected digraph: a directed ring over a random
/// permutation overlaid with extra directed cycles (each overlay preserves
/// balance and cannot break connectivity). `extra_cycles` counts successful
/// overlays; duplicate-edge candidates are skipped.
inline Digraph random_balanced_graph(SeededRng& rng, int n, int extra_cycles) {
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i + 1;
  for (int i = n - 1; i > 0; --i) std::swap(perm[static_cast<std::size_t>(i)],
                                            perm[static_cast<std::size_t>(rng.integer(0, i))]);
  std::set<Edge> edges;
  for (int i = 0; i < n; ++i)
    edges.insert({perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>((i + 1) % n)]});

  int added = 0, attempts = 0;
  while (added < extra_cycles && attempts < 30 * extra_cycles + 30) {
    ++attempts;
    const int len = rng.integer(2, n);
    std::vector<int> nodes(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) nodes[static_cast<std::size_t>(i)] = i + 1;
    for (int i = n - 1; i > 0; --i) std::swap(nodes[static_cast<std::size_t>(i)],
                                              nodes[static_cast<std::size_t>(rng.integer(0, i))]);
    nodes.resize(static_cast<std::size_t>(len));
    bool fresh = true;
    for (int i = 0; i < len && fresh; ++i)
      if (edges.count({nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>((i + 1) % len)]}))
        fresh = false;
    if (!fresh) continue;
    for (int i = 0; i < len; ++i)
      edges.insert({nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>((i + 1) % len)]});
    ++added;
  }
  return Digraph::build(n, {edges.begin(), edges.end()});
}

/// Arbitrary random digraph (each ordered pair an edge with probability p);
/// frequently violates balance or connectivity, which is the point.
inline Digraph random_arbitrary_graph(SeededRng& rng, int n, double p) {
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i)
    for (int j = 1; j <= n; ++j)
      if (i != j && rng.unit() < p) edges.emplace_back(i, j);
  return Digraph::build(n, std::move(edges));
}

/// Pendant-pair topology: agent 1 talks only to agent 2 (both directions),
/// the remaining n-1 agents form a random balanced strongly connected core
/// containing agent 2. Agent 1 has degree 1, so it is vulnerable to m = 2.
inline Digraph pendant_pair_graph(SeededRng& rng, int n, int extra_cycles = 2) {
  const Digraph core = random_balanced_graph(rng, n - 1, extra_cycles);
  std::vector<Edge> edges;
  for (const auto& [i, j] : core.edges()) edges.emplace_back(i + 1, j + 1);  // shift core to ids 2..n
  edges.emplace_back(1, 2);
  edges.emplace_back(2, 1);
  return Digraph::build(n, std::move(edges));
}

/// Strong-connectivity oracle: breadth-first search from every node.
inline bool strongly_connected_bfs(const Digraph& g) {
  for (int src = 1; src <= g.size(); ++src) {
    std::vector<bool> seen(static_cast<std::size_t>(g.size()) + 1, false);
    std::vector<int> queue{src};
    seen[static_cast<std::size_t>(src)] = true;
    std::size_t head = 0;
    while (head < queue.size()) {
      const int v = queue[head++];
      for (int w : g.out_neighbors(v))
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = true;
          queue.push_back(w);
        }
    }
    for (int j = 1; j <= g.size(); ++j)
      if (!seen[static_cast<std::size_t>(j)]) return false;
  }
  return true;
}

/// Balance oracle: per-node degree recount straight from the edge list.
inline std::vector<int> unbalanced_agents_recount(const Digraph& g) {
  std::vector<int> in(static_cast<std::size_t>(g.size()) + 1, 0);
  std::vector<int> out(static_cast<std::size_t>(g.size()) + 1, 0);
  for (const auto& [i, j] : g.edges()) {
    ++out[static_cast<std::size_t>(i)];
    ++in[static_cast<std::size_t>(j)];
  }
  std::vector<int> bad;
  for (int a = 1; a <= g.size(); ++a)
    if (in[static_cast<std::size_t>(a)] != out[static_cast<std::size_t>(a)]) bad.push_back(a);
  return bad;
}

/// Vulnerability oracle: evaluates the reconstruction condition (degree one,
/// attacker on both sides) directly from the raw edge list.
inline std::vector<int> vulnerable_set_recount(const Digraph& g, int m) {
  std::vector<int> in(static_cast<std::size_t>(g.size()) + 1, 0);
  std::vector<int> out(static_cast<std::size_t>(g.size()) + 1, 0);
  std::set<Edge> edges(g.edges().begin(), g.edges().end());
  for (const auto& [i, j] : g.edges()) {
    ++out[static_cast<std::size_t>(i)];
    ++in[static_cast<std::size_t>(j)];
  }
  std::vector<int> result;
  for (int v = 1; v <= g.size(); ++v) {
    if (v == m) continue;
    if (in[static_cast<std::size_t>(v)] == 1 && out[static_cast<std::size_t>(v)] == 1 &&
        edges.count({m, v}) && edges.count({v, m}))
      result.push_back(v);
  }
  return result;
}

inline Vec random_states(SeededRng& rng, int n, double amplitude) {
  Vec x(static_cast<std::size_t>(n));
  for (auto& v : x) v = rng.uniform(-amplitude, amplitude);
  return x;
}

/// Largest absolute discrepancy between two discrete insider views.
/// Infinity-like sentinel (1e300) when the views differ structurally.
inline double view_discrepancy(const DtInternalView& a, const DtInternalView& b) {
  if (a.attacker != b.attacker || a.received.size() != b.received.size() ||
      a.neighbor_states.size() != b.neighbor_states.size() ||
      a.own_states.size() != b.own_states.size() ||
      a.own_perturbations.size() != b.own_perturbations.size())
    return 1e300;
  double d = std::fabs(a.eps1 - b.eps1);
  d = std::max(d, std::fabs(a.eps2 - b.eps2));
  for (std::size_t i = 0; i < a.own_states.size(); ++i)
    d = std::max(d, std::fabs(a.own_states[i] - b.own_states[i]));
  for (std::size_t i = 0; i < a.received.size(); ++i) {
    if (a.received[i].from != b.received[i].from || a.received[i].step != b.received[i].step) return 1e300;
    d = std::max(d, std::fabs(a.received[i].value - b.received[i].value));
  }
  for (std::size_t i = 0; i < a.neighbor_states.size(); ++i) {
    if (a.neighbor_states[i].agent != b.neighbor_states[i].agent ||
        a.neighbor_states[i].step != b.neighbor_states[i].step)
      return 1e300;
    d = std::max(d, std::fabs(a.neighbor_states[i].value - b.neighbor_states[i].value));
  }
  for (std::size_t i = 0; i < a.own_perturbations.size(); ++i) {
    if (a.own_perturbations[i].first != b.own_perturbations[i].first) return 1e300;
    d = std::max(d, std::fabs(a.own_perturbations[i].second - b.own_perturbations[i].second));
  }
  return d;
}

/// Largest absolute discrepancy between two discrete eavesdropper views.
inline double view_discrepancy(const DtExternalView& a, const DtExternalView& b) {
  if (a.messages.size() != b.messages.size()) return 1e300;
  double d = std::fabs(a.eps2 - b.eps2);
  for (std::size_t i = 0; i < a.messages.size(); ++i) {
    if (a.messages[i].from != b.messages[i].from || a.messages[i].to != b.messages[i].to ||
        a.messages[i].step != b.messages[i].step)
      return 1e300;
    d = std::max(d, std::fabs(a.messages[i].value - b.messages[i].value));
  }
  return d;
}

/// Continuous insider views, compared on the shared sample grid. Own edge
/// signals are compared by evaluation at the sample times.
inline double view_discrepancy(const CtInternalView& a, const CtInternalView& b) {
  if (a.attacker != b.attacker || a.received.size() != b.received.size() ||
      a.neighbor_states.size() != b.neighbor_states.size() ||
      a.own_states.size() != b.own_states.size() || a.own_signals.size() != b.own_signals.size())
    return 1e300;
  double d = std::max(std::fabs(a.c1 - b.c1), std::fabs(a.c2 - b.c2));
  for (std::size_t i = 0; i < a.own_states.size(); ++i)
    d = std::max(d, std::fabs(a.own_states[i] - b.own_states[i]));
  for (std::size_t i = 0; i < a.received.size(); ++i) {
    if (a.received[i].from != b.received[i].from) return 1e300;
    d = std::max(d, std::fabs(a.received[i].value - b.received[i].value));
  }
  for (std::size_t i = 0; i < a.neighbor_states.size(); ++i) {
    if (a.neighbor_states[i].agent != b.neighbor_states[i].agent) return 1e300;
    d = std::max(d, std::fabs(a.neighbor_states[i].value - b.neighbor_states[i].value));
  }
  for (std::size_t i = 0; i < a.own_signals.size(); ++i) {
    if (a.own_signals[i].first != b.own_signals[i].first) return 1e300;
    for (double t : a.sample_times) {
      if (t > a.t0) break;
      d = std::max(d, std::fabs(a.own_signals[i].second->value(t) - b.own_signals[i].second->value(t)));
    }
  }
  return d;
}

inline double view_discrepancy(const CtExternalView& a, const CtExternalView& b) {
  if (a.messages.size() != b.messages.size()) return 1e300;
  double d = std::max(std::fabs(a.c2 - b.c2), std::fabs(a.t0 - b.t0));
  for (std::size_t i = 0; i < a.messages.size(); ++i) {
    if (a.messages[i].from != b.messages[i].from || a.messages[i].to != b.messages[i].to) return 1e300;
    d = std::max(d, std::fabs(a.messages[i].value - b.messages[i].value));
  }
  return d;
}

}  // namespace epac::test
