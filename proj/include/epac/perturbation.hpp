#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "epac/graph.hpp"
#include "epac/matrix.hpp"
#include "epac/rng.hpp"
#include "epac/signal.hpp"
#include "json.hpp"

namespace epac {

/// Edge-based perturbation matrix for the discrete scrambling step. Entry
/// (i, j) is the value agent i adds on its edge to agent j; entries off the
/// out-edge pattern are zero and each diagonal entry is derived as the
/// negated row sum, so every row sums to zero by construction.
class DiscretePerturbation {
 public:
  explicit DiscretePerturbation(Digraph g)
      : graph_(std::move(g)), values_(graph_.size(), graph_.size()) {}

  const Digraph& graph() const { return graph_; }
  int size() const { return graph_.size(); }

  double entry(int i, int j) const { return values_(i - 1, j - 1); }

  void set_edge(int i, int j, double v) {
    require_edge(i, j);
    values_(i - 1, j - 1) = v;
    rederive_diagonal(i);
  }

  void add_to_edge(int i, int j, double delta) {
    require_edge(i, j);
    values_(i - 1, j - 1) += delta;
    rederive_diagonal(i);
  }

  const Matrix& matrix() const { return values_; }

  /// Column sums, i.e. transpose(P) * ones; the aggregate each receiver picks
  /// up during the scrambled step.
  Vec column_sums() const { return epac::column_sums(values_); }

  nlohmann::json to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < size(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (int j = 0; j < size(); ++j) row.push_back(values_(i, j));
      rows.push_back(std::move(row));
    }
    return {{"n", size()}, {"matrix", std::move(rows)}};
  }

  static DiscretePerturbation from_json(const Digraph& g, const nlohmann::json& j) {
    if (j.at("n").get<int>() != g.size())
      throw std::invalid_argument("perturbation: size mismatch with graph");
    DiscretePerturbation p(g);
    const auto& rows = j.at("matrix");
    for (int i = 1; i <= g.size(); ++i)
      for (int jj : g.out_neighbors(i))
        p.set_edge(i, jj, rows.at(static_cast<std::size_t>(i - 1)).at(static_cast<std::size_t>(jj - 1)).get<double>());
    return p;
  }

 private:
  void require_edge(int i, int j) const {
    if (!graph_.has_edge(i, j))
      throw std::invalid_argument("perturbation: (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") is not an edge");
  }

  void rederive_diagonal(int i) {
    double acc = 0.0;
    for (int j : graph_.out_neighbors(i)) acc += values_(i - 1, j - 1);
    values_(i - 1, i - 1) = -acc;
  }

  Digraph graph_;
  Matrix values_;
};

/// Draws one perturbation value per out-edge, i.i.d. uniform on
/// [-amplitude, amplitude] from a deterministic seeded stream, with the
/// diagonal entries derived. amplitude = 0 yields the zero perturbation and
/// the protocol degenerates to the plain consensus rule.
inline DiscretePerturbation random_discrete(const Digraph& g, std::uint64_t seed, double amplitude) {
  if (amplitude < 0.0) throw std::invalid_argument("perturbation: amplitude must be >= 0");
  DiscretePerturbation p(g);
  SeededRng rng(seed);
  for (const auto& [i, j] : g.edges()) p.set_edge(i, j, rng.uniform(-amplitude, amplitude));
  return p;
}

/// Edge-based perturbation signals for the continuous scrambling phase:
/// one signal per out-edge on [0, t0]. Diagonal signals are always derived
/// as the negated sum of the row's edge signals, which keeps the pointwise
/// locally zero-sum property unviolable.
class ContinuousPerturbation {
 public:
  ContinuousPerturbation(Digraph g, double horizon)
      : graph_(std::move(g)), horizon_(horizon),
        signals_(graph_.edges().size()) {
    if (horizon_ <= 0.0) throw std::invalid_argument("perturbation: horizon must be positive");
    for (auto& s : signals_) s = make_constant(0.0);
  }

  const Digraph& graph() const { return graph_; }
  double horizon() const { return horizon_; }

  SignalPtr edge_signal(int i, int j) const { return signals_[edge_index(i, j)]; }

  void set_edge_signal(int i, int j, SignalPtr s) {
    if (!s) throw std::invalid_argument("perturbation: null signal");
    signals_[edge_index(i, j)] = std::move(s);
  }

  double eval_edge(int i, int j, double t) const {
    return signals_[edge_index(i, j)]->value(clamp_time(t));
  }

  /// Derived self-term: negated sum of agent i's edge signals at time t.
  double eval_diagonal(int i, double t) const {
    const double tc = clamp_time(t);
    double acc = 0.0;
    for (int j : graph_.out_neighbors(i)) acc += signals_[edge_index(i, j)]->value(tc);
    return -acc;
  }

  /// Full perturbation matrix at time t; rows sum to zero.
  Matrix eval_matrix(double t) const {
    const double tc = clamp_time(t);
    Matrix m(graph_.size(), graph_.size());
    const auto& edges = graph_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto& [i, j] = edges[k];
      const double v = signals_[k]->value(tc);
      m(i - 1, j - 1) = v;
      m(i - 1, i - 1) -= v;
    }
    return m;
  }

  /// Column sums transpose(P(t)) * ones without forming the matrix.
  void eval_column_sums(double t, Vec& out) const {
    const double tc = clamp_time(t);
    out.assign(static_cast<std::size_t>(graph_.size()), 0.0);
    const auto& edges = graph_.edges();
    for (std::size_t k = 0; k < edges.size(); ++k) {
      const auto& [i, j] = edges[k];
      const double v = signals_[k]->value(tc);
      out[static_cast<std::size_t>(j - 1)] += v;
      out[static_cast<std::size_t>(i - 1)] -= v;  // derived diagonal contribution
    }
  }

  nlohmann::json to_json() const {
    nlohmann::json edges = nlohmann::json::array();
    const auto& e = graph_.edges();
    for (std::size_t k = 0; k < e.size(); ++k)
      edges.push_back({{"from", e[k].first}, {"to", e[k].second}, {"signal", signals_[k]->to_json()}});
    return {{"n", graph_.size()}, {"t0", horizon_}, {"edges", std::move(edges)}};
  }

  static ContinuousPerturbation from_json(const Digraph& g, const nlohmann::json& j) {
    if (j.at("n").get<int>() != g.size())
      throw std::invalid_argument("perturbation: size mismatch with graph");
    ContinuousPerturbation p(g, j.at("t0").get<double>());
    for (const auto& e : j.at("edges"))
      p.set_edge_signal(e.at("from").get<int>(), e.at("to").get<int>(), signal_from_json(e.at("signal")));
    return p;
  }

 private:
  std::size_t edge_index(int i, int j) const {
    const auto& edges = graph_.edges();
    auto it = std::lower_bound(edges.begin(), edges.end(), Edge{i, j});
    if (it == edges.end() || *it != Edge{i, j})
      throw std::invalid_argument("perturbation: (" + std::to_string(i) + "," + std::to_string(j) +
                                  ") is not an edge");
    return static_cast<std::size_t>(it - edges.begin());
  }

  /// Signals are undefined outside [0, t0]; a few-ulp slack absorbs grid
  /// rounding at the phase boundary.
  double clamp_time(double t) const {
    const double slack = 1e-12 * std::max(1.0, horizon_);
    if (t < -slack || t > horizon_ + slack)
      throw std::domain_error("perturbation: t = " + std::to_string(t) + " outside [0, " +
                              std::to_string(horizon_) + "]");
    return std::min(std::max(t, 0.0), horizon_);
  }

  Digraph graph_;
  double horizon_;
  std::vector<SignalPtr> signals_;  // aligned with graph_.edges()
};

/// One truncated Fourier series per out-edge with coefficients uniform on
/// [-amplitude, amplitude]; admissible by construction (bounded, continuous,
/// pointwise locally zero-sum via derived diagonals).
inline ContinuousPerturbation random_continuous(const Digraph& g, std::uint64_t seed, double amplitude,
                                                int fourier_terms, double t0) {
  if (amplitude < 0.0) throw std::invalid_argument("perturbation: amplitude must be >= 0");
  if (fourier_terms < 1) throw std::invalid_argument("perturbation: need at least 1 Fourier term");
  ContinuousPerturbation p(g, t0);
  SeededRng rng(seed);
  for (const auto& [i, j] : g.edges()) {
    const double a0 = rng.uniform(-amplitude, amplitude);
    std::vector<double> a(static_cast<std::size_t>(fourier_terms));
    std::vector<double> b(static_cast<std::size_t>(fourier_terms));
    for (int k = 0; k < fourier_terms; ++k) {
      a[static_cast<std::size_t>(k)] = rng.uniform(-amplitude, amplitude);
      b[static_cast<std::size_t>(k)] = rng.uniform(-amplitude, amplitude);
    }
    p.set_edge_signal(i, j, std::make_shared<FourierSignal>(t0, a0, std::move(a), std::move(b)));
  }
  return p;
}

}  // namespace epac
