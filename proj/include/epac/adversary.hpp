#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "epac/ct_engine.hpp"
#include "epac/dt_engine.hpp"
#include "epac/graph.hpp"
#include "epac/perturbation.hpp"
#include "json.hpp"

namespace epac {

/// A true-state observation: agent `agent` was seen holding `value` at the
/// given step or sample time.
struct DtStateRecord {
  int step;
  int agent;
  double value;
};

struct CtStateRecord {
  double t;
  int agent;
  double value;
};

/// Everything an honest-but-curious insider m accumulates over a discrete
/// run: the topology, both gains, its own full state history and outgoing
/// perturbations, the scrambled step-0 messages addressed to it, and its
/// in-neighbors' true states from step 1 on. Immutable snapshot.
struct DtInternalView {
  int attacker = 0;
  Digraph graph;
  double eps1 = 0.0;
  double eps2 = 0.0;
  Vec own_states;                                   // x_m[k], k = 0..K
  std::vector<DtMessage> received;                  // step-0 messages with to == attacker
  std::vector<DtStateRecord> neighbor_states;       // in-neighbor true states, k >= 1
  std::vector<std::pair<int, double>> own_perturbations;  // (to, p_m^(to))

  nlohmann::json to_json() const {
    nlohmann::json received_j = nlohmann::json::array();
    for (const auto& m : received)
      received_j.push_back({{"k", m.step}, {"from", m.from}, {"to", m.to}, {"value", m.value}});
    nlohmann::json states_j = nlohmann::json::array();
    for (const auto& s : neighbor_states)
      states_j.push_back({{"k", s.step}, {"agent", s.agent}, {"value", s.value}});
    nlohmann::json perturb_j = nlohmann::json::array();
    for (const auto& [to, v] : own_perturbations) perturb_j.push_back({{"to", to}, {"value", v}});
    return {{"attacker", attacker}, {"eps1", eps1},     {"eps2", eps2},
            {"own_states", own_states}, {"received", received_j},
            {"neighbor_states", states_j}, {"own_perturbations", perturb_j}};
  }
};

/// An external eavesdropper's haul from a discrete run: every message on
/// every edge plus the public convergence gain. The scrambling gain eps1 is
/// withheld by construction; the type has no field for it.
struct DtExternalView {
  Digraph graph;
  double eps2 = 0.0;
  std::vector<DtMessage> messages;            // all steps, all edges
  std::vector<DtStateRecord> states;          // true states read off the wire, k >= 1

  nlohmann::json to_json() const {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages)
      msgs.push_back({{"k", m.step}, {"from", m.from}, {"to", m.to}, {"value", m.value}});
    return {{"eps2", eps2}, {"messages", std::move(msgs)}};
  }
};

/// Continuous-time insider view. In-neighbor true states are recorded from
/// the t0 boundary on: states are continuous across the phase switch, so the
/// post-switch observations determine x_j(t0).
struct CtInternalView {
  int attacker = 0;
  Digraph graph;
  double c1 = 0.0;
  double c2 = 0.0;
  double t0 = 0.0;
  std::vector<double> sample_times;
  Vec own_states;                                   // aligned with sample_times
  std::vector<CtMessage> received;                  // scrambled messages with to == attacker
  std::vector<CtStateRecord> neighbor_states;       // in-neighbor true states, t >= t0
  std::vector<std::pair<int, SignalPtr>> own_signals;  // (to, p_m^(to))

  nlohmann::json to_json() const {
    nlohmann::json received_j = nlohmann::json::array();
    for (const auto& m : received)
      received_j.push_back({{"t", m.t}, {"from", m.from}, {"to", m.to}, {"value", m.value}});
    nlohmann::json states_j = nlohmann::json::array();
    for (const auto& s : neighbor_states)
      states_j.push_back({{"t", s.t}, {"agent", s.agent}, {"value", s.value}});
    nlohmann::json signals_j = nlohmann::json::array();
    for (const auto& [to, s] : own_signals) signals_j.push_back({{"to", to}, {"signal", s->to_json()}});
    return {{"attacker", attacker}, {"c1", c1}, {"c2", c2}, {"t0", t0},
            {"sample_times", sample_times}, {"own_states", own_states},
            {"received", received_j}, {"neighbor_states", states_j}, {"own_signals", signals_j}};
  }
};

struct CtExternalView {
  Digraph graph;
  double c2 = 0.0;
  double t0 = 0.0;
  std::vector<CtMessage> messages;
  std::vector<CtStateRecord> states;  // true states read off the wire, t > t0

  nlohmann::json to_json() const {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : messages)
      msgs.push_back({{"t", m.t}, {"from", m.from}, {"to", m.to}, {"value", m.value}});
    return {{"c2", c2}, {"t0", t0}, {"messages", std::move(msgs)}};
  }
};

/// Filters a discrete run down to what insider m legitimately saw.
inline DtInternalView internal_view(const DtRunResult& result, const Digraph& g, const DtConfig& cfg,
                                    const DiscretePerturbation& p, int m) {
  if (m < 1 || m > g.size()) throw std::out_of_range("attacker id out of range");
  DtInternalView view;
  view.attacker = m;
  view.graph = g;
  view.eps1 = cfg.eps1;
  view.eps2 = result.eps2_used;
  for (const auto& x : result.trajectory.states) view.own_states.push_back(x[static_cast<std::size_t>(m - 1)]);
  for (const auto& msg : result.transcript.messages) {
    if (msg.to != m) continue;
    if (msg.step == 0)
      view.received.push_back(msg);
    else
      view.neighbor_states.push_back({msg.step, msg.from, msg.value});
  }
  for (int j : g.out_neighbors(m)) view.own_perturbations.emplace_back(j, p.entry(m, j));
  return view;
}

/// Copies the full wire contents; parameters restricted to the public eps2.
inline DtExternalView external_view(const DtRunResult& result, const Digraph& g, double eps2) {
  DtExternalView view;
  view.graph = g;
  view.eps2 = eps2;
  view.messages = result.transcript.messages;
  std::vector<bool> seen;
  int last_step = -1;
  for (const auto& msg : view.messages) {
    if (msg.step == 0) continue;
    if (msg.step != last_step) {
      seen.assign(static_cast<std::size_t>(g.size()) + 1, false);
      last_step = msg.step;
    }
    if (!seen[static_cast<std::size_t>(msg.from)]) {
      seen[static_cast<std::size_t>(msg.from)] = true;
      view.states.push_back({msg.step, msg.from, msg.value});
    }
  }
  return view;
}

inline CtInternalView internal_view(const CtRunResult& result, const Digraph& g, const CtConfig& cfg,
                                    const ContinuousPerturbation& p, int m) {
  if (m < 1 || m > g.size()) throw std::out_of_range("attacker id out of range");
  CtInternalView view;
  view.attacker = m;
  view.graph = g;
  view.c1 = cfg.c1;
  view.c2 = cfg.c2;
  view.t0 = cfg.t0;
  view.sample_times = result.trajectory.times;
  for (const auto& x : result.trajectory.states) view.own_states.push_back(x[static_cast<std::size_t>(m - 1)]);

  const auto& traj = result.trajectory;
  const std::size_t edge_count = g.edges().size();
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    const bool scrambled = traj.scrambling[s];
    for (std::size_t e = 0; e < edge_count; ++e) {
      const CtMessage& msg = result.transcript.messages[s * edge_count + e];
      if (msg.to != m) continue;
      if (scrambled) view.received.push_back(msg);
      else view.neighbor_states.push_back({msg.t, msg.from, msg.value});
    }
    // The boundary sample carries scrambled messages, but continuity of the
    // states across the switch hands the insider its in-neighbors' states at
    // t0 as well; record them from the trajectory.
    if (scrambled && s + 1 < traj.times.size() && !traj.scrambling[s + 1]) {
      for (int j : g.in_neighbors(m))
        view.neighbor_states.push_back({traj.times[s], j, traj.states[s][static_cast<std::size_t>(j - 1)]});
    }
  }
  for (int j : g.out_neighbors(m)) view.own_signals.emplace_back(j, p.edge_signal(m, j));
  return view;
}

inline CtExternalView external_view(const CtRunResult& result, const Digraph& g, double c2, double t0) {
  CtExternalView view;
  view.graph = g;
  view.c2 = c2;
  view.t0 = t0;
  view.messages = result.transcript.messages;
  const std::size_t edge_count = g.edges().size();
  const auto& traj = result.trajectory;
  for (std::size_t s = 0; s < traj.times.size(); ++s) {
    if (traj.scrambling[s]) continue;
    std::vector<bool> seen(static_cast<std::size_t>(g.size()) + 1, false);
    for (std::size_t e = 0; e < edge_count; ++e) {
      const CtMessage& msg = result.transcript.messages[s * edge_count + e];
      if (!seen[static_cast<std::size_t>(msg.from)]) {
        seen[static_cast<std::size_t>(msg.from)] = true;
        view.states.push_back({msg.t, msg.from, msg.value});
      }
    }
  }
  return view;
}

/// Agents whose initial value insider m can provably reconstruct: exactly
/// the degree-1 agents whose sole in- and out-neighbor is m.
inline std::vector<int> vulnerable_set(const Digraph& g, int m) {
  if (m < 1 || m > g.size()) throw std::out_of_range("attacker id out of range");
  std::vector<int> out;
  for (int v = 1; v <= g.size(); ++v) {
    if (v == m) continue;
    if (g.in_degree(v) == 1 && g.out_degree(v) == 1 && g.has_edge(m, v) && g.has_edge(v, m))
      out.push_back(v);
  }
  return out;
}

/// Reconstructs x_target[0] from a discrete insider view via
///   x_v[0] = x_v[1] + eps1 (y_v^(m)[0] - y_m^(v)[0]).
/// Returns nullopt (a refusal) when the target is not in the vulnerable set;
/// the formula is invalid there and privacy provably holds.
inline std::optional<double> attack_internal_dt(const DtInternalView& view, int target) {
  const auto vulnerable = vulnerable_set(view.graph, view.attacker);
  if (!std::binary_search(vulnerable.begin(), vulnerable.end(), target)) return std::nullopt;

  std::optional<double> y_from_target;  // y_v^(m)[0]
  for (const auto& msg : view.received)
    if (msg.from == target) y_from_target = msg.value;
  std::optional<double> p_to_target;
  for (const auto& [to, v] : view.own_perturbations)
    if (to == target) p_to_target = v;
  std::optional<double> x_target_1;  // x_v[1]
  for (const auto& rec : view.neighbor_states)
    if (rec.agent == target && rec.step == 1) x_target_1 = rec.value;
  if (!y_from_target || !p_to_target || !x_target_1) return std::nullopt;

  const double y_to_target = view.own_states[0] + *p_to_target;  // y_m^(v)[0]
  return *x_target_1 + view.eps1 * (*y_from_target - y_to_target);
}

/// Reconstructs x_target(0) from a continuous insider view via
///   x_v(0) = x_v(t0) - c1 * integral_0^t0 [y_m^(v) - y_v^(m)] dt,
/// with the integral taken by composite trapezoid on the stored sample grid.
inline std::optional<double> attack_internal_ct(const CtInternalView& view, int target) {
  const auto vulnerable = vulnerable_set(view.graph, view.attacker);
  if (!std::binary_search(vulnerable.begin(), vulnerable.end(), target)) return std::nullopt;

  SignalPtr own_signal;  // p_m^(v)
  for (const auto& [to, s] : view.own_signals)
    if (to == target) own_signal = s;
  if (!own_signal) return std::nullopt;

  // Integrand samples over the scrambling phase, in time order.
  std::vector<double> times, integrand;
  std::size_t own_index = 0;
  for (const auto& msg : view.received) {
    if (msg.from != target) continue;
    while (own_index < view.sample_times.size() && view.sample_times[own_index] < msg.t) ++own_index;
    if (own_index >= view.sample_times.size()) break;
    const double own_sent = view.own_states[own_index] + own_signal->value(msg.t);  // y_m^(v)(t)
    times.push_back(msg.t);
    integrand.push_back(own_sent - msg.value);
    ++own_index;
  }
  if (times.size() < 2) return std::nullopt;

  // x_v(t0): the earliest true-state record (the view captures the boundary).
  std::optional<double> x_target_t0;
  double record_t = 0.0;
  for (const auto& rec : view.neighbor_states) {
    if (rec.agent != target) continue;
    if (!x_target_t0 || rec.t < record_t) {
      x_target_t0 = rec.value;
      record_t = rec.t;
    }
  }
  if (!x_target_t0) return std::nullopt;

  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    integral += 0.5 * (times[k + 1] - times[k]) * (integrand[k] + integrand[k + 1]);
  return *x_target_t0 - view.c1 * integral;
}

/// Coalition hook: collapses a group of agents into a single super node,
/// dropping internal edges and deduplicating the rest. The result need not
/// be balanced; callers must re-validate. Returns the merged graph and the
/// old-to-new label map (group members map to the same new id).
struct MergedGraph {
  Digraph graph;
  std::vector<int> label_map;  // index a (1-based) -> new id of agent a
};

inline MergedGraph merge_agents(const Digraph& g, const std::vector<int>& group) {
  if (group.size() < 2) throw std::invalid_argument("merge: need at least 2 agents");
  std::vector<bool> in_group(static_cast<std::size_t>(g.size()) + 1, false);
  for (int a : group) {
    if (a < 1 || a > g.size()) throw std::out_of_range("merge: agent id out of range");
    in_group[static_cast<std::size_t>(a)] = true;
  }
  std::vector<int> map(static_cast<std::size_t>(g.size()) + 1, 0);
  int next = 1;
  const int super_id = next++;  // merged node takes label 1
  for (int a = 1; a <= g.size(); ++a)
    map[static_cast<std::size_t>(a)] = in_group[static_cast<std::size_t>(a)] ? super_id : next++;

  std::set<Edge> edges;
  for (const auto& [i, j] : g.edges()) {
    const int mi = map[static_cast<std::size_t>(i)];
    const int mj = map[static_cast<std::size_t>(j)];
    if (mi != mj) edges.insert({mi, mj});
  }
  MergedGraph merged{Digraph::build(next - 1, {edges.begin(), edges.end()}),
                     std::vector<int>(map.begin() + 1, map.end())};
  return merged;
}

}  // namespace epac
