#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "epac/graph.hpp"
#include "epac/matrix.hpp"
#include "epac/perturbation.hpp"

namespace epac {

/// Parameters of a discrete-time run. eps1 is the scrambling gain (any
/// nonzero real); eps2 the convergence gain, which must lie strictly inside
/// (0, epsilon_bound(g)) and defaults to 0.9 / max degree when unset.
struct DtConfig {
  double eps1 = 1.0;
  std::optional<double> eps2;
  int iterations = 100;
  double convergence_tol = 1e-9;
  bool stop_on_convergence = false;
};

inline std::vector<std::string> config_errors(const DtConfig& cfg, const Digraph& g) {
  std::vector<std::string> errors;
  if (cfg.eps1 == 0.0) errors.push_back("eps1 must be nonzero");
  if (cfg.eps2) {
    const double bound = epsilon_bound(g);
    if (!(*cfg.eps2 > 0.0 && *cfg.eps2 < bound))
      errors.push_back("eps2 = " + std::to_string(*cfg.eps2) + " outside the admissible range (0, " +
                       std::to_string(bound) + ") = (0, 1/max degree)");
  }
  if (cfg.iterations < 1) errors.push_back("iterations must be >= 1");
  if (!(cfg.convergence_tol > 0.0)) errors.push_back("convergence_tol must be positive");
  return errors;
}

inline double resolve_eps2(const DtConfig& cfg, const Digraph& g) {
  return cfg.eps2 ? *cfg.eps2 : 0.9 * epsilon_bound(g);
}

/// One transmission record. At step 0 the value is the scrambled message
/// x_i[0] + p_i^(j); from step 1 on it is the sender's true state.
struct DtMessage {
  int step;
  int from;
  int to;
  double value;
};

struct DtTranscript {
  std::vector<DtMessage> messages;  // step-major, edges in sorted order

  /// Messages of one step as a contiguous range (every step carries |E| of them).
  std::pair<const DtMessage*, const DtMessage*> at_step(int k, std::size_t edge_count) const {
    const std::size_t begin = static_cast<std::size_t>(k) * edge_count;
    return {messages.data() + begin, messages.data() + begin + edge_count};
  }
};

struct DtTrajectory {
  std::vector<Vec> states;  // states[k], k = 0..K

  const Vec& at(int k) const { return states[static_cast<std::size_t>(k)]; }
  int last_step() const { return static_cast<int>(states.size()) - 1; }
};

struct DtRunResult {
  DtTrajectory trajectory;
  DtTranscript transcript;
  std::optional<int> converged_at;
  double eps2_used = 0.0;
};

/// The scrambled first iteration: every agent sends x_i[0] + p_i^(j) on each
/// out-edge and updates to (I - eps1 L) x0 + eps1 transpose(P) 1. The update
/// leaves the state sum unchanged.
inline std::pair<Vec, std::vector<DtMessage>> scramble_step(const Vec& x0, const DiscretePerturbation& p,
                                                            double eps1, const Digraph& g) {
  detail::require_dimension(g, x0);
  if (p.graph().size() != g.size())
    throw std::invalid_argument("perturbation built for a different graph size");
  if (eps1 == 0.0) throw std::invalid_argument("eps1 must be nonzero");

  std::vector<DtMessage> messages;
  messages.reserve(g.edges().size());
  for (const auto& [i, j] : g.edges())
    messages.push_back({0, i, j, x0[static_cast<std::size_t>(i - 1)] + p.entry(i, j)});

  Vec lx;
  detail::apply_laplacian_into(g, x0, lx);
  const Vec injected = p.column_sums();
  Vec x1(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) x1[i] = x0[i] - eps1 * lx[i] + eps1 * injected[i];
  return {std::move(x1), std::move(messages)};
}

/// The plain consensus iteration x + eps2 * sum_j a_ij (x_j - x_i), i.e.
/// (I - eps2 L) x. Sum-preserving; contracts the spread for admissible eps2.
inline Vec normal_step(const Vec& x, double eps2, const Digraph& g) {
  detail::require_dimension(g, x);
  Vec lx;
  detail::apply_laplacian_into(g, x, lx);
  Vec next(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) next[i] = x[i] - eps2 * lx[i];
  return next;
}

/// Executes the two-phase protocol: scrambled step at k = 0, then the normal
/// rule. Records every transmission; from k = 1 agents transmit true states.
inline DtRunResult run(const Digraph& g, const Vec& x0, const DiscretePerturbation& p, const DtConfig& cfg) {
  detail::require_dimension(g, x0);
  if (auto errors = config_errors(cfg, g); !errors.empty()) {
    std::string what = "invalid discrete config:";
    for (const auto& e : errors) what += " " + e + ";";
    throw std::invalid_argument(what);
  }

  DtRunResult result;
  result.eps2_used = resolve_eps2(cfg, g);
  result.trajectory.states.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  result.trajectory.states.push_back(x0);
  if (spread(x0) < cfg.convergence_tol) result.converged_at = 0;

  auto [x1, messages] = scramble_step(x0, p, cfg.eps1, g);
  result.transcript.messages = std::move(messages);
  result.trajectory.states.push_back(std::move(x1));
  if (!result.converged_at && spread(result.trajectory.states.back()) < cfg.convergence_tol)
    result.converged_at = 1;

  for (int k = 1; k < cfg.iterations; ++k) {
    if (cfg.stop_on_convergence && result.converged_at) break;
    const Vec& x = result.trajectory.states.back();
    for (const auto& [i, j] : g.edges())
      result.transcript.messages.push_back({k, i, j, x[static_cast<std::size_t>(i - 1)]});
    result.trajectory.states.push_back(normal_step(x, result.eps2_used, g));
    if (!result.converged_at && spread(result.trajectory.states.back()) < cfg.convergence_tol)
      result.converged_at = k + 1;
  }
  return result;
}

}  // namespace epac
