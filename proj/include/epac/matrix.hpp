#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace epac {

using Vec = std::vector<double>;

/// Dense row-major matrix sized for desk-scale networks (n up to ~100).
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int r, int c) {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }
  double operator()(int r, int c) const {
    assert(r >= 0 && r < rows_ && c >= 0 && c < cols_);
    return data_[static_cast<std::size_t>(r) * cols_ + c];
  }

  const std::vector<double>& data() const { return data_; }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline void matvec_into(const Matrix& m, const Vec& x, Vec& out) {
  assert(static_cast<int>(x.size()) == m.cols());
  out.assign(static_cast<std::size_t>(m.rows()), 0.0);
  for (int r = 0; r < m.rows(); ++r) {
    double acc = 0.0;
    for (int c = 0; c < m.cols(); ++c) acc += m(r, c) * x[c];
    out[r] = acc;
  }
}

inline Vec matvec(const Matrix& m, const Vec& x) {
  Vec out;
  matvec_into(m, x, out);
  return out;
}

/// Column sums, i.e. transpose(m) * ones.
inline Vec column_sums(const Matrix& m) {
  Vec out(static_cast<std::size_t>(m.cols()), 0.0);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out[c] += m(r, c);
  return out;
}

inline Vec row_sums(const Matrix& m) {
  Vec out(static_cast<std::size_t>(m.rows()), 0.0);
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) out[r] += m(r, c);
  return out;
}

inline double vec_sum(const Vec& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return acc;
}

inline double vec_mean(const Vec& v) {
  assert(!v.empty());
  return vec_sum(v) / static_cast<double>(v.size());
}

/// max(v) - min(v); the convergence measure used throughout.
inline double spread(const Vec& v) {
  assert(!v.empty());
  auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

inline double norm1(const Vec& v) {
  double acc = 0.0;
  for (double x : v) acc += std::fabs(x);
  return acc;
}

inline double max_abs(const Vec& v) {
  double acc = 0.0;
  for (double x : v) acc = std::max(acc, std::fabs(x));
  return acc;
}

inline double max_abs_diff(const Vec& a, const Vec& b) {
  assert(a.size() == b.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::fabs(a[i] - b[i]));
  return acc;
}

}  // namespace epac
