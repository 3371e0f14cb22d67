#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace epac {

/// Bounded continuous scalar signal on the scrambling interval [0, t0].
/// Implementations are analytically continuous; bound() returns a computable
/// upper bound for sup |value(t)| over the interval.
class Signal {
 public:
  virtual ~Signal() = default;
  virtual double value(double t) const = 0;
  virtual double bound() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using SignalPtr = std::shared_ptr<const Signal>;

class ConstantSignal final : public Signal {
 public:
  explicit ConstantSignal(double value) : value_(value) {}
  double value(double) const override { return value_; }
  double bound() const override { return std::fabs(value_); }
  nlohmann::json to_json() const override {
    return {{"type", "constant"}, {"value", value_}};
  }

 private:
  double value_;
};

/// Truncated Fourier series with period t0:
///   a0 + sum_k a_k cos(2 pi k t / t0) + b_k sin(2 pi k t / t0).
class FourierSignal final : public Signal {
 public:
  FourierSignal(double t0, double a0, std::vector<double> a, std::vector<double> b)
      : t0_(t0), a0_(a0), a_(std::move(a)), b_(std::move(b)) {
    if (t0_ <= 0.0) throw std::invalid_argument("fourier signal: period must be positive");
    if (a_.empty() || a_.size() != b_.size())
      throw std::invalid_argument("fourier signal: need matching, non-empty coefficient lists");
  }

  double value(double t) const override {
    double acc = a0_;
    const double w = 2.0 * std::numbers::pi * t / t0_;
    for (std::size_t k = 0; k < a_.size(); ++k) {
      const double kw = static_cast<double>(k + 1) * w;
      acc += a_[k] * std::cos(kw) + b_[k] * std::sin(kw);
    }
    return acc;
  }

  double bound() const override {
    double acc = std::fabs(a0_);
    for (std::size_t k = 0; k < a_.size(); ++k) acc += std::fabs(a_[k]) + std::fabs(b_[k]);
    return acc;
  }

  nlohmann::json to_json() const override {
    return {{"type", "fourier"}, {"t0", t0_}, {"a0", a0_}, {"a", a_}, {"b", b_}};
  }

 private:
  double t0_;
  double a0_;
  std::vector<double> a_, b_;
};

/// The decaying profile
///   (exp(-rate t) - exp(-rate t0)) / (1 - exp(-rate t0)) * amplitude,
/// which equals `amplitude` at t = 0 and vanishes at t = t0. Refuses
/// construction when |1 - exp(-rate t0)| < 1e-8 (ill-conditioned).
class ExpDecaySignal final : public Signal {
 public:
  ExpDecaySignal(double rate, double horizon, double amplitude)
      : rate_(rate), horizon_(horizon), amplitude_(amplitude) {
    tail_ = std::exp(-rate_ * horizon_);
    denom_ = 1.0 - tail_;
    if (std::fabs(denom_) < 1e-8)
      throw std::invalid_argument("exp-decay signal: |1 - exp(-rate*t0)| < 1e-8, ill-conditioned");
  }

  double value(double t) const override {
    return (std::exp(-rate_ * t) - tail_) / denom_ * amplitude_;
  }

  // The normalized profile decreases monotonically from 1 to 0 for either
  // sign of rate, so the amplitude bounds it.
  double bound() const override { return std::fabs(amplitude_); }

  nlohmann::json to_json() const override {
    return {{"type", "exp_decay"}, {"rate", rate_}, {"t0", horizon_}, {"amplitude", amplitude_}};
  }

 private:
  double rate_;
  double horizon_;
  double amplitude_;
  double tail_;
  double denom_;
};

class SumSignal final : public Signal {
 public:
  explicit SumSignal(std::vector<SignalPtr> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_)
      if (!t) throw std::invalid_argument("sum signal: null term");
  }

  double value(double t) const override {
    double acc = 0.0;
    for (const auto& s : terms_) acc += s->value(t);
    return acc;
  }

  double bound() const override {
    double acc = 0.0;
    for (const auto& s : terms_) acc += s->bound();
    return acc;
  }

  nlohmann::json to_json() const override {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& s : terms_) terms.push_back(s->to_json());
    return {{"type", "sum"}, {"terms", std::move(terms)}};
  }

 private:
  std::vector<SignalPtr> terms_;
};

class ScaledSignal final : public Signal {
 public:
  ScaledSignal(double factor, SignalPtr inner) : factor_(factor), inner_(std::move(inner)) {
    if (!inner_) throw std::invalid_argument("scaled signal: null inner signal");
  }

  double value(double t) const override { return factor_ * inner_->value(t); }
  double bound() const override { return std::fabs(factor_) * inner_->bound(); }

  nlohmann::json to_json() const override {
    return {{"type", "scale"}, {"factor", factor_}, {"inner", inner_->to_json()}};
  }

 private:
  double factor_;
  SignalPtr inner_;
};

/// Dense output of a recorded trajectory component on a uniform grid:
/// cubic Hermite interpolation between the stored states and derivatives.
/// Used for corrections that track a co-integrated reference run, where the
/// signal has to be evaluable at every integrator stage time.
class SampledSignal final : public Signal {
 public:
  SampledSignal(double horizon, double step, std::vector<double> values, std::vector<double> derivatives)
      : horizon_(horizon), step_(step), values_(std::move(values)), derivs_(std::move(derivatives)) {
    if (values_.size() < 2 || values_.size() != derivs_.size())
      throw std::invalid_argument("sampled signal: need >= 2 aligned samples");
    if (step_ <= 0.0 || horizon_ <= 0.0)
      throw std::invalid_argument("sampled signal: positive step and horizon required");
  }

  double value(double t) const override {
    if (t <= 0.0) return values_.front();
    if (t >= horizon_) return values_.back();
    const std::size_t last = values_.size() - 2;
    std::size_t k = static_cast<std::size_t>(t / step_);
    if (k > last) k = last;
    const double u = (t - static_cast<double>(k) * step_) / step_;
    const double p0 = values_[k], p1 = values_[k + 1];
    const double m0 = derivs_[k] * step_, m1 = derivs_[k + 1] * step_;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * p0 + (u3 - 2 * u2 + u) * m0 +
           (-2 * u3 + 3 * u2) * p1 + (u3 - u2) * m1;
  }

  double bound() const override {
    double vmax = 0.0, dmax = 0.0;
    for (double v : values_) vmax = std::max(vmax, std::fabs(v));
    for (double d : derivs_) dmax = std::max(dmax, std::fabs(d));
    return vmax + 0.5 * step_ * dmax;  // interpolation overshoot allowance
  }

  nlohmann::json to_json() const override {
    return {{"type", "sampled"}, {"t0", horizon_}, {"step", step_}, {"values", values_}, {"derivs", derivs_}};
  }

 private:
  double horizon_;
  double step_;
  std::vector<double> values_;
  std::vector<double> derivs_;
};

inline SignalPtr make_constant(double v) { return std::make_shared<ConstantSignal>(v); }

inline SignalPtr make_sum(SignalPtr a, SignalPtr b) {
  return std::make_shared<SumSignal>(std::vector<SignalPtr>{std::move(a), std::move(b)});
}

inline SignalPtr make_scaled(double factor, SignalPtr inner) {
  return std::make_shared<ScaledSignal>(factor, std::move(inner));
}

inline SignalPtr signal_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "constant") return make_constant(j.at("value").get<double>());
  if (type == "fourier")
    return std::make_shared<FourierSignal>(j.at("t0").get<double>(), j.at("a0").get<double>(),
                                           j.at("a").get<std::vector<double>>(),
                                           j.at("b").get<std::vector<double>>());
  if (type == "exp_decay")
    return std::make_shared<ExpDecaySignal>(j.at("rate").get<double>(), j.at("t0").get<double>(),
                                            j.at("amplitude").get<double>());
  if (type == "sum") {
    std::vector<SignalPtr> terms;
    for (const auto& t : j.at("terms")) terms.push_back(signal_from_json(t));
    return std::make_shared<SumSignal>(std::move(terms));
  }
  if (type == "scale")
    return make_scaled(j.at("factor").get<double>(), signal_from_json(j.at("inner")));
  if (type == "sampled")
    return std::make_shared<SampledSignal>(j.at("t0").get<double>(), j.at("step").get<double>(),
                                           j.at("values").get<std::vector<double>>(),
                                           j.at("derivs").get<std::vector<double>>());
  throw std::invalid_argument("signal: unknown type tag '" + type + "'");
}

}  // namespace epac
