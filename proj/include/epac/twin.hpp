#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "epac/ct_engine.hpp"
#include "epac/dt_engine.hpp"
#include "epac/graph.hpp"
#include "epac/perturbation.hpp"
#include "json.hpp"

namespace epac {

enum class TwinVariant { internal_dt, external_dt, internal_ct, external_ct };

inline const char* to_string(TwinVariant v) {
  switch (v) {
    case TwinVariant::internal_dt: return "internal-dt";
    case TwinVariant::external_dt: return "external-dt";
    case TwinVariant::internal_ct: return "internal-ct";
    case TwinVariant::external_ct: return "external-ct";
  }
  return "?";
}

/// Which second implementation to construct and what its free parameter is.
/// Internal variants shift the target agent's initial value to
/// `target_initial`, compensated by a chosen in-neighbor; external variants
/// shift the scrambling gain by `delta`.
struct TwinSpec {
  TwinVariant variant = TwinVariant::internal_dt;
  int target = 0;
  int neighbor = 0;
  double target_initial = 0.0;
  double delta = 0.0;
};

struct DtInstance {
  Digraph graph;
  Vec x0;
  DiscretePerturbation perturbation;
  DtConfig config;
};

struct CtInstance {
  Digraph graph;
  Vec x0;
  ContinuousPerturbation perturbation;
  CtConfig config;
};

struct DtTwin {
  Vec x0;
  DiscretePerturbation perturbation;
  double eps1 = 0.0;
};

struct CtTwin {
  Vec x0;
  ContinuousPerturbation perturbation;
  double c1 = 0.0;
};

namespace detail {

inline void require_internal_roles(const Digraph& g, int target, int neighbor) {
  if (target < 1 || target > g.size() || neighbor < 1 || neighbor > g.size())
    throw std::invalid_argument("twin: agent id out of range");
  if (target == neighbor) throw std::invalid_argument("twin: target and neighbor must differ");
  if (!g.has_edge(neighbor, target))
    throw std::invalid_argument("twin: (" + std::to_string(neighbor) + "," + std::to_string(target) +
                                ") is not an edge; the compensating agent must be an in-neighbor of the target");
}

}  // namespace detail

/// Second implementation that moves the target's initial value while leaving
/// every agent's view unchanged except on the compensating edge. The
/// compensating in-neighbor absorbs the shift; the perturbation rows of the
/// two touched agents are adjusted so all their outgoing messages, bar the
/// one on (neighbor -> target), stay identical.
inline DtTwin twin_internal_dt(const DtInstance& base, int target, int neighbor, double target_initial) {
  detail::require_internal_roles(base.graph, target, neighbor);
  if (base.config.eps1 == 0.0) throw std::invalid_argument("twin: eps1 must be nonzero");

  const double shift = target_initial - base.x0[static_cast<std::size_t>(target - 1)];
  const double neighbor_shift = -shift;

  DtTwin twin{base.x0, base.perturbation, base.config.eps1};
  twin.x0[static_cast<std::size_t>(target - 1)] = target_initial;
  twin.x0[static_cast<std::size_t>(neighbor - 1)] += neighbor_shift;

  for (int j : base.graph.out_neighbors(target)) twin.perturbation.add_to_edge(target, j, -shift);
  twin.perturbation.add_to_edge(neighbor, target, (1.0 / base.config.eps1 - 1.0) * neighbor_shift);
  for (int j : base.graph.out_neighbors(neighbor))
    if (j != target) twin.perturbation.add_to_edge(neighbor, j, -neighbor_shift);
  return twin;
}

/// Second implementation with a shifted scrambling gain. Initial states move
/// along L x0 - transpose(P) 1 and each edge perturbation absorbs its
/// sender's shift, so every transmitted message is bit-for-bit reproduced.
inline DtTwin twin_external_dt(const DtInstance& base, double delta_eps) {
  const double eps1_hat = base.config.eps1 + delta_eps;
  if (eps1_hat == 0.0)
    throw std::invalid_argument("twin: eps1 + delta must be nonzero for a valid second implementation");

  Vec lx;
  detail::apply_laplacian_into(base.graph, base.x0, lx);
  const Vec injected = base.perturbation.column_sums();

  DtTwin twin{base.x0, base.perturbation, eps1_hat};
  Vec state_shift(base.x0.size());
  for (std::size_t i = 0; i < base.x0.size(); ++i) {
    state_shift[i] = delta_eps * (lx[i] - injected[i]);
    twin.x0[i] += state_shift[i];
  }
  for (const auto& [i, j] : base.graph.edges())
    twin.perturbation.add_to_edge(i, j, -state_shift[static_cast<std::size_t>(i - 1)]);
  return twin;
}

/// Continuous counterpart of the internal twin. The shift is carried by the
/// decaying profile s(t), which starts at the initial-value shift and dies
/// out exactly at t0, so both implementations coincide from t0 on.
inline CtTwin twin_internal_ct(const CtInstance& base, int target, int neighbor, double target_initial) {
  detail::require_internal_roles(base.graph, target, neighbor);
  const double c1 = base.config.c1;
  const double t0 = base.config.t0;
  if (c1 == 0.0) throw std::invalid_argument("twin: c1 must be nonzero");
  const double tail = std::exp(-c1 * t0);
  const double denom = 1.0 - tail;
  if (std::fabs(denom) < 1e-8)
    throw std::invalid_argument("twin: |1 - exp(-c1*t0)| < 1e-8, construction ill-conditioned");

  const double shift = target_initial - base.x0[static_cast<std::size_t>(target - 1)];
  const SignalPtr s = std::make_shared<ExpDecaySignal>(c1, t0, shift);
  const double boundary_term = tail * shift / denom;

  CtTwin twin{base.x0, base.perturbation, c1};
  twin.x0[static_cast<std::size_t>(target - 1)] = target_initial;
  twin.x0[static_cast<std::size_t>(neighbor - 1)] -= shift;

  for (int j : base.graph.out_neighbors(target))
    twin.perturbation.set_edge_signal(target, j, make_sum(base.perturbation.edge_signal(target, j),
                                                          make_scaled(-1.0, s)));
  twin.perturbation.set_edge_signal(neighbor, target,
                                    make_sum(base.perturbation.edge_signal(neighbor, target),
                                             make_constant(-boundary_term)));
  for (int j : base.graph.out_neighbors(neighbor))
    if (j != target)
      twin.perturbation.set_edge_signal(neighbor, j,
                                        make_sum(base.perturbation.edge_signal(neighbor, j), s));
  return twin;
}

/// Continuous external twin. The initial offset direction xi and the
/// correction h(t) = (delta/c1) (x(t) - x(t0)) come from a dense reference
/// run of the base instance on the same grid, so h is evaluable at every
/// integrator stage time.
inline CtTwin twin_external_ct(const CtInstance& base, double delta_c) {
  const double c1 = base.config.c1;
  const double c1_hat = c1 + delta_c;
  if (c1 == 0.0) throw std::invalid_argument("twin: c1 must be nonzero");
  if (c1_hat == 0.0)
    throw std::invalid_argument("twin: c1 + delta must be nonzero for a valid second implementation");

  const DensePhase dense = integrate_scramble_dense(base.graph, base.x0, base.perturbation, c1,
                                                    base.config.t0, base.config.step);
  const Vec& x_t0 = dense.states.back();

  CtTwin twin{base.x0, base.perturbation, c1_hat};
  for (std::size_t i = 0; i < base.x0.size(); ++i)
    twin.x0[i] += delta_c * (-(x_t0[i] - base.x0[i]) / c1);

  std::vector<SignalPtr> correction(base.x0.size());  // h_i(t), built lazily per sender
  for (const auto& [i, j] : base.graph.edges()) {
    auto& h_i = correction[static_cast<std::size_t>(i - 1)];
    if (!h_i)
      h_i = make_scaled(delta_c / c1, make_sum(component_signal(dense, i),
                                               make_constant(-x_t0[static_cast<std::size_t>(i - 1)])));
    twin.perturbation.set_edge_signal(i, j, make_sum(base.perturbation.edge_signal(i, j),
                                                     make_scaled(-1.0, h_i)));
  }
  return twin;
}

/// One transcript entry that differs between the implementations.
/// delta is twin minus base; time is the step index (discrete) or sample
/// time (continuous).
struct EdgeDiff {
  double time;
  int from;
  int to;
  double delta;
};

/// Outcome of re-running both implementations and diffing what an observer
/// sees. `diffs` lists every transcript entry differing beyond tolerance;
/// an empty list means the transcripts are indistinguishable. For internal
/// twins the construction predicts exactly one differing edge, which is
/// listed in `diffs` but is only a violation if its value is off.
struct DiffReport {
  bool pass = false;
  std::vector<double> max_state_diff;   // per time index
  std::vector<EdgeDiff> diffs;
  std::vector<std::string> violations;

  nlohmann::json to_json() const {
    nlohmann::json diffs_j = nlohmann::json::array();
    for (const auto& d : diffs)
      diffs_j.push_back({{"time", d.time}, {"from", d.from}, {"to", d.to}, {"delta", d.delta}});
    return {{"pass", pass}, {"max_state_diff", max_state_diff}, {"diffs", diffs_j},
            {"violations", violations}};
  }

  std::string to_table() const {
    std::ostringstream os;
    os << "verdict: " << (pass ? "pass" : "FAIL") << "\n";
    os << "transcript entries differing beyond tolerance: " << diffs.size() << "\n";
    for (const auto& d : diffs)
      os << "  time " << d.time << "  edge " << d.from << "->" << d.to << "  delta " << d.delta << "\n";
    for (const auto& v : violations) os << "  violation: " << v << "\n";
    return os.str();
  }
};

/// Constant-delta prediction for the single differing edge of an internal
/// discrete twin.
struct DtEdgePrediction {
  int from = 0;
  int to = 0;
  double delta = 0.0;
};

/// Time-dependent predictions for an internal continuous twin: the state
/// offsets on target/neighbor and the message offset on (neighbor -> target).
struct CtInternalPrediction {
  int target = 0;
  int neighbor = 0;
  std::function<double(double)> state_offset;  // delta x_target(t) during scrambling
  std::function<double(double)> edge_delta;    // message delta on (neighbor -> target)
};

/// Diffs two discrete runs. States must agree from k = 1 on; transcript
/// entries must agree except, when `predicted` is set, the one scrambled
/// entry on the predicted edge, which must carry the predicted delta.
inline DiffReport compare_dt_runs(const DtRunResult& base, const DtRunResult& twin, double tol,
                                  const std::optional<DtEdgePrediction>& predicted) {
  DiffReport report;
  if (base.transcript.messages.size() != twin.transcript.messages.size() ||
      base.trajectory.states.size() != twin.trajectory.states.size()) {
    report.violations.push_back("structural mismatch: runs have different lengths");
    return report;
  }

  for (std::size_t k = 0; k < base.trajectory.states.size(); ++k) {
    const double d = max_abs_diff(base.trajectory.states[k], twin.trajectory.states[k]);
    report.max_state_diff.push_back(d);
    if (k >= 1 && d > tol)
      report.violations.push_back("states differ at k = " + std::to_string(k) + " by " + std::to_string(d));
  }

  for (std::size_t idx = 0; idx < base.transcript.messages.size(); ++idx) {
    const DtMessage& a = base.transcript.messages[idx];
    const DtMessage& b = twin.transcript.messages[idx];
    const double delta = b.value - a.value;
    const bool is_predicted_entry =
        predicted && a.step == 0 && a.from == predicted->from && a.to == predicted->to;
    if (is_predicted_entry) {
      if (std::fabs(delta - predicted->delta) > tol)
        report.violations.push_back("edge " + std::to_string(a.from) + "->" + std::to_string(a.to) +
                                    " at k = 0 carries delta " + std::to_string(delta) +
                                    ", predicted " + std::to_string(predicted->delta));
      if (std::fabs(delta) > tol) report.diffs.push_back({static_cast<double>(a.step), a.from, a.to, delta});
    } else if (std::fabs(delta) > tol) {
      report.diffs.push_back({static_cast<double>(a.step), a.from, a.to, delta});
      report.violations.push_back("unexpected transcript difference at k = " + std::to_string(a.step) +
                                  " on edge " + std::to_string(a.from) + "->" + std::to_string(a.to));
    }
  }

  report.pass = report.violations.empty();
  return report;
}

/// Diffs two continuous runs on the shared sample grid.
inline DiffReport compare_ct_runs(const CtRunResult& base, const CtRunResult& twin, double tol,
                                  const std::optional<CtInternalPrediction>& predicted) {
  DiffReport report;
  if (base.transcript.messages.size() != twin.transcript.messages.size() ||
      base.trajectory.times.size() != twin.trajectory.times.size()) {
    report.violations.push_back("structural mismatch: runs have different sample grids");
    return report;
  }

  const std::size_t samples = base.trajectory.times.size();
  const std::size_t edge_count = samples ? base.transcript.messages.size() / samples : 0;

  for (std::size_t s = 0; s < samples; ++s) {
    const bool scrambling = base.trajectory.scrambling[s];
    const double t = base.trajectory.times[s];
    const Vec& xa = base.trajectory.states[s];
    const Vec& xb = twin.trajectory.states[s];
    report.max_state_diff.push_back(max_abs_diff(xa, xb));

    if (scrambling && predicted) {
      const double expected = predicted->state_offset(t);
      for (std::size_t i = 0; i < xa.size(); ++i) {
        const int agent = static_cast<int>(i) + 1;
        double want = 0.0;
        if (agent == predicted->target) want = expected;
        else if (agent == predicted->neighbor) want = -expected;
        if (std::fabs((xb[i] - xa[i]) - want) > tol)
          report.violations.push_back("state of agent " + std::to_string(agent) + " at t = " +
                                      std::to_string(t) + " off the predicted offset by " +
                                      std::to_string((xb[i] - xa[i]) - want));
      }
    } else if (!scrambling) {
      if (report.max_state_diff.back() > tol)
        report.violations.push_back("states differ at t = " + std::to_string(t) + " by " +
                                    std::to_string(report.max_state_diff.back()));
    }

    for (std::size_t e = 0; e < edge_count; ++e) {
      const CtMessage& a = base.transcript.messages[s * edge_count + e];
      const CtMessage& b = twin.transcript.messages[s * edge_count + e];
      const double delta = b.value - a.value;
      const bool is_predicted_entry = predicted && scrambling && a.from == predicted->neighbor &&
                                      a.to == predicted->target;
      if (is_predicted_entry) {
        const double want = predicted->edge_delta(t);
        if (std::fabs(delta - want) > tol)
          report.violations.push_back("edge " + std::to_string(a.from) + "->" + std::to_string(a.to) +
                                      " at t = " + std::to_string(t) + " carries delta " +
                                      std::to_string(delta) + ", predicted " + std::to_string(want));
        if (std::fabs(delta) > tol) report.diffs.push_back({t, a.from, a.to, delta});
      } else if (std::fabs(delta) > tol) {
        report.diffs.push_back({t, a.from, a.to, delta});
        report.violations.push_back("unexpected transcript difference at t = " + std::to_string(t) +
                                    " on edge " + std::to_string(a.from) + "->" + std::to_string(a.to));
      }
    }
  }

  report.pass = report.violations.empty();
  return report;
}

/// Builds the requested twin, re-runs both implementations and checks the
/// observable consequences the constructions promise.
inline DiffReport verify_twin(const DtInstance& base, const TwinSpec& spec, double tol) {
  DtConfig cfg = base.config;
  cfg.stop_on_convergence = false;  // both runs must cover the same steps

  if (spec.variant == TwinVariant::internal_dt) {
    const DtTwin twin = twin_internal_dt(base, spec.target, spec.neighbor, spec.target_initial);
    const DtRunResult a = run(base.graph, base.x0, base.perturbation, cfg);
    const DtRunResult b = run(base.graph, twin.x0, twin.perturbation, cfg);
    const double neighbor_shift = twin.x0[static_cast<std::size_t>(spec.neighbor - 1)] -
                                  base.x0[static_cast<std::size_t>(spec.neighbor - 1)];
    const DtEdgePrediction predicted{spec.neighbor, spec.target, neighbor_shift / cfg.eps1};
    return compare_dt_runs(a, b, tol, predicted);
  }
  if (spec.variant == TwinVariant::external_dt) {
    const DtTwin twin = twin_external_dt(base, spec.delta);
    const DtRunResult a = run(base.graph, base.x0, base.perturbation, cfg);
    DtConfig twin_cfg = cfg;
    twin_cfg.eps1 = twin.eps1;
    const DtRunResult b = run(base.graph, twin.x0, twin.perturbation, twin_cfg);
    return compare_dt_runs(a, b, tol, std::nullopt);
  }
  throw std::invalid_argument("twin: variant does not apply to a discrete instance");
}

inline DiffReport verify_twin(const CtInstance& base, const TwinSpec& spec, double tol) {
  const CtConfig& cfg = base.config;

  if (spec.variant == TwinVariant::internal_ct) {
    const CtTwin twin = twin_internal_ct(base, spec.target, spec.neighbor, spec.target_initial);
    const CtRunResult a = integrate(base.graph, base.x0, base.perturbation, cfg);
    const CtRunResult b = integrate(base.graph, twin.x0, twin.perturbation, cfg);
    const double shift = spec.target_initial - base.x0[static_cast<std::size_t>(spec.target - 1)];
    const double c1 = cfg.c1, t0 = cfg.t0;
    const double denom = 1.0 - std::exp(-c1 * t0);
    CtInternalPrediction predicted;
    predicted.target = spec.target;
    predicted.neighbor = spec.neighbor;
    predicted.state_offset = [shift, c1, t0, denom](double t) {
      return (std::exp(-c1 * t) - std::exp(-c1 * t0)) / denom * shift;
    };
    predicted.edge_delta = [shift, c1, denom](double t) { return -std::exp(-c1 * t) * shift / denom; };
    return compare_ct_runs(a, b, tol, predicted);
  }
  if (spec.variant == TwinVariant::external_ct) {
    const CtTwin twin = twin_external_ct(base, spec.delta);
    const CtRunResult a = integrate(base.graph, base.x0, base.perturbation, cfg);
    CtConfig twin_cfg = cfg;
    twin_cfg.c1 = twin.c1;
    const CtRunResult b = integrate(base.graph, twin.x0, twin.perturbation, twin_cfg);
    return compare_ct_runs(a, b, tol, std::nullopt);
  }
  throw std::invalid_argument("twin: variant does not apply to a continuous instance");
}

}  // namespace epac
