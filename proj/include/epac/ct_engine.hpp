#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "epac/graph.hpp"
#include "epac/matrix.hpp"
#include "epac/perturbation.hpp"

namespace epac {

/// Parameters of a continuous-time run. c1 is the scrambling gain (nonzero),
/// c2 > 0 the convergence gain. The fixed step must divide both t0 and
/// t_end - t0 so the phase switch lands exactly on a grid point.
struct CtConfig {
  double c1 = 1.0;
  double c2 = 1.0;
  double t0 = 1.0;
  double step = 1e-3;
  double t_end = 2.0;
  int sample_stride = 10;
};

namespace detail {

inline bool divides_evenly(double span, double h) {
  const double ratio = span / h;
  return std::fabs(ratio - std::llround(ratio)) <= 1e-9 * std::max(1.0, std::fabs(ratio));
}

}  // namespace detail

inline std::vector<std::string> config_errors(const CtConfig& cfg, const Digraph&) {
  std::vector<std::string> errors;
  if (cfg.c1 == 0.0) errors.push_back("c1 must be nonzero");
  if (!(cfg.c2 > 0.0)) errors.push_back("c2 must be positive");
  if (!(cfg.t0 > 0.0)) errors.push_back("t0 must be positive");
  if (!(cfg.step > 0.0)) errors.push_back("step must be positive");
  if (!(cfg.t_end > cfg.t0)) errors.push_back("t_end must exceed t0");
  if (cfg.sample_stride < 1) errors.push_back("sample_stride must be >= 1");
  if (cfg.step > 0.0 && cfg.t0 > 0.0 && !detail::divides_evenly(cfg.t0, cfg.step))
    errors.push_back("step must divide t0 (phase switch must land on the grid)");
  if (cfg.step > 0.0 && cfg.t_end > cfg.t0 && !detail::divides_evenly(cfg.t_end - cfg.t0, cfg.step))
    errors.push_back("step must divide t_end - t0");
  return errors;
}

/// One transmission record at a sample time. For t <= t0 the value is the
/// scrambled message x_i(t) + p_i^(j)(t); afterwards the sender's true state.
struct CtMessage {
  double t;
  int from;
  int to;
  double value;
};

struct CtTranscript {
  std::vector<CtMessage> messages;  // sample-major, edges in sorted order
};

struct CtTrajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<bool> scrambling;  // sample taken at t <= t0 (by grid index)
};

struct CtRunResult {
  CtTrajectory trajectory;
  CtTranscript transcript;
};

/// Scrambling-phase vector field -c1 L x + c1 transpose(P(t)) 1. Defined for
/// t in [0, t0] only; the ones-direction component is zero pointwise.
inline Vec rhs_scramble(const Vec& x, double t, const ContinuousPerturbation& p, double c1, const Matrix& l) {
  if (static_cast<int>(x.size()) != l.rows())
    throw std::invalid_argument("state dimension does not match Laplacian");
  Vec lx = matvec(l, x);
  Vec injected;
  p.eval_column_sums(t, injected);  // throws outside [0, t0]
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = c1 * (injected[i] - lx[i]);
  return out;
}

/// Convergence-phase vector field -c2 L x.
inline Vec rhs_normal(const Vec& x, double c2, const Matrix& l) {
  if (static_cast<int>(x.size()) != l.rows())
    throw std::invalid_argument("state dimension does not match Laplacian");
  Vec lx = matvec(l, x);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = -c2 * lx[i];
  return out;
}

namespace detail {

/// Classical 4th-order fixed-step integrator state, with preallocated
/// stage buffers. The right-hand side switches hard at the t0 grid index.
class Rk4Stepper {
 public:
  Rk4Stepper(const Digraph& g, const ContinuousPerturbation* p, double c1, double c2, double h,
             std::int64_t scramble_steps)
      : graph_(g), perturbation_(p), c1_(c1), c2_(c2), h_(h), scramble_steps_(scramble_steps) {}

  /// Derivative at (t, x) for the phase the step index k belongs to.
  void eval(std::int64_t k, double t, const Vec& x, Vec& out) {
    apply_laplacian_into(graph_, x, out);
    if (k < scramble_steps_) {
      perturbation_->eval_column_sums(t, injected_);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = c1_ * (injected_[i] - out[i]);
    } else {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = -c2_ * out[i];
    }
  }

  /// Advances x across step k (from t = k h to (k+1) h) in place.
  void step(std::int64_t k, Vec& x) {
    const double t = static_cast<double>(k) * h_;
    const std::size_t n = x.size();
    eval(k, t, x, k1_);
    stage_.resize(n);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = x[i] + 0.5 * h_ * k1_[i];
    eval(k, t + 0.5 * h_, stage_, k2_);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = x[i] + 0.5 * h_ * k2_[i];
    eval(k, t + 0.5 * h_, stage_, k3_);
    for (std::size_t i = 0; i < n; ++i) stage_[i] = x[i] + h_ * k3_[i];
    eval(k, t + h_, stage_, k4_);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += h_ / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

  const Vec& last_k1() const { return k1_; }

 private:
  const Digraph& graph_;
  const ContinuousPerturbation* perturbation_;
  double c1_, c2_, h_;
  std::int64_t scramble_steps_;
  Vec k1_, k2_, k3_, k4_, stage_, injected_;
};

}  // namespace detail

/// Integrates the two-phase dynamics on the uniform grid and records the
/// sampled trajectory and transcript. Samples are taken every sample_stride
/// steps plus at the t0 boundary and at t_end.
inline CtRunResult integrate(const Digraph& g, const Vec& x0, const ContinuousPerturbation& p,
                             const CtConfig& cfg) {
  detail::require_dimension(g, x0);
  if (auto errors = config_errors(cfg, g); !errors.empty()) {
    std::string what = "invalid continuous config:";
    for (const auto& e : errors) what += " " + e + ";";
    throw std::invalid_argument(what);
  }
  if (std::fabs(p.horizon() - cfg.t0) > 1e-9 * std::max(1.0, cfg.t0))
    throw std::invalid_argument("perturbation horizon differs from config t0");

  const std::int64_t m0 = std::llround(cfg.t0 / cfg.step);
  const std::int64_t total = m0 + std::llround((cfg.t_end - cfg.t0) / cfg.step);

  CtRunResult result;
  detail::Rk4Stepper stepper(g, &p, cfg.c1, cfg.c2, cfg.step, m0);
  Vec x = x0;

  auto sample = [&](std::int64_t k) {
    const bool in_scramble = k <= m0;
    const double t = (k == m0) ? cfg.t0 : static_cast<double>(k) * cfg.step;
    result.trajectory.times.push_back(t);
    result.trajectory.states.push_back(x);
    result.trajectory.scrambling.push_back(in_scramble);
    for (const auto& [i, j] : g.edges()) {
      double value = x[static_cast<std::size_t>(i - 1)];
      if (in_scramble) value += p.eval_edge(i, j, t);
      result.transcript.messages.push_back({t, i, j, value});
    }
  };

  std::int64_t next_sample = 0;
  for (std::int64_t k = 0; k <= total; ++k) {
    const bool due = (k == next_sample) || (k == m0) || (k == total);
    if (due) {
      sample(k);
      while (next_sample <= k) next_sample += cfg.sample_stride;
    }
    if (k < total) stepper.step(k, x);
  }
  return result;
}

/// Full-resolution record of the scrambling phase: state and derivative at
/// every grid point of [0, t0]. This is the dense reference the
/// trajectory-tracking corrections are built from.
struct DensePhase {
  double step = 0.0;
  double t0 = 0.0;
  std::vector<Vec> states;  // one per grid point, 0..m0
  std::vector<Vec> derivs;
};

inline DensePhase integrate_scramble_dense(const Digraph& g, const Vec& x0, const ContinuousPerturbation& p,
                                           double c1, double t0, double h) {
  detail::require_dimension(g, x0);
  if (c1 == 0.0) throw std::invalid_argument("c1 must be nonzero");
  if (!(t0 > 0.0) || !(h > 0.0) || !detail::divides_evenly(t0, h))
    throw std::invalid_argument("dense scramble: step must divide t0");

  const std::int64_t m0 = std::llround(t0 / h);
  DensePhase dense;
  dense.step = h;
  dense.t0 = t0;
  dense.states.reserve(static_cast<std::size_t>(m0) + 1);
  dense.derivs.reserve(static_cast<std::size_t>(m0) + 1);

  detail::Rk4Stepper stepper(g, &p, c1, /*c2=*/1.0, h, m0);
  Vec x = x0;
  Vec f;
  for (std::int64_t k = 0; k < m0; ++k) {
    dense.states.push_back(x);
    stepper.step(k, x);
    dense.derivs.push_back(stepper.last_k1());  // k1 is the derivative at the grid point
  }
  dense.states.push_back(x);
  stepper.eval(m0 - 1, t0, x, f);
  dense.derivs.push_back(f);
  return dense;
}

/// Dense-output signal for one component of a recorded scrambling phase.
inline SignalPtr component_signal(const DensePhase& dense, int agent) {
  std::vector<double> values, derivs;
  values.reserve(dense.states.size());
  derivs.reserve(dense.derivs.size());
  for (std::size_t k = 0; k < dense.states.size(); ++k) {
    values.push_back(dense.states[k][static_cast<std::size_t>(agent - 1)]);
    derivs.push_back(dense.derivs[k][static_cast<std::size_t>(agent - 1)]);
  }
  return std::make_shared<SampledSignal>(dense.t0, dense.step, std::move(values), std::move(derivs));
}

}  // namespace epac
