#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace gujian {

// Deterministic generator. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the conversions to floats and ranges
// below are written out by hand because the std distributions are
// implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next();
    } while (x >= limit);
    return x % n;
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

using Vec = std::vector<double>;

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                           " does not match " + shape_string(rows, cols));
    }
  }
  Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
      if (r.size() != cols_) throw DimensionError("ragged matrix literal");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static Matrix row_vector(std::span<const double> v) {
    return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  std::string shape() const { return shape_string(rows_, cols_); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

  static std::string shape_string(std::size_t r, std::size_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {
inline void require_same(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": shape mismatch " + a.shape() + " vs " + b.shape());
  }
}
inline void require_len(const char* op, std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw DimensionError(std::string(op) + ": expected length " + std::to_string(expected) +
                         ", got " + std::to_string(got));
  }
}
}  // namespace detail

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: shape mismatch " + a.shape() + " vs " + b.shape());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

inline Matrix add(const Matrix& a, const Matrix& b) {
  detail::require_same("add", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

inline Matrix hadamard(const Matrix& a, const Matrix& b) {
  detail::require_same("hadamard", a, b);
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= b.data()[i];
  return out;
}

// Stacks a on top of b.
inline Matrix concat_rows(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("concat_rows: shape mismatch " + a.shape() + " vs " + b.shape());
  }
  std::vector<double> data = a.data();
  data.insert(data.end(), b.data().begin(), b.data().end());
  return Matrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

// Places b to the right of a.
inline Matrix concat_cols(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_cols: shape mismatch " + a.shape() + " vs " + b.shape());
  }
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    std::copy(a.row(r).begin(), a.row(r).end(), out.row(r).begin());
    std::copy(b.row(r).begin(), b.row(r).end(), out.row(r).begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return out;
}

inline Matrix map(const Matrix& a, double (*f)(double)) {
  Matrix out = a;
  for (double& v : out.data()) v = f(v);
  return out;
}
inline Matrix sigmoid(const Matrix& a) { return map(a, [](double x) { return sigmoid(x); }); }
inline Matrix tanh(const Matrix& a) { return map(a, [](double x) { return std::tanh(x); }); }

// Vector kernels used by the recurrent code paths. Matrices act on column
// vectors: y = W x with W of shape out x in.

// y += W x
inline void gemv_acc(const Matrix& w, std::span<const double> x, std::span<double> y) {
  detail::require_len("gemv", w.cols(), x.size());
  detail::require_len("gemv", w.rows(), y.size());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double* wr = w.row(i).data();
    double s = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) s += wr[j] * x[j];
    y[i] += s;
  }
}

// y += W^T x
inline void gemv_t_acc(const Matrix& w, std::span<const double> x, std::span<double> y) {
  detail::require_len("gemv_t", w.rows(), x.size());
  detail::require_len("gemv_t", w.cols(), y.size());
  for (std::size_t i = 0; i < w.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* wr = w.row(i).data();
    for (std::size_t j = 0; j < w.cols(); ++j) y[j] += wr[j] * xi;
  }
}

// G += u v^T
inline void outer_acc(Matrix& g, std::span<const double> u, std::span<const double> v) {
  detail::require_len("outer", g.rows(), u.size());
  detail::require_len("outer", g.cols(), v.size());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const double ui = u[i];
    if (ui == 0.0) continue;
    double* gr = g.row(i).data();
    for (std::size_t j = 0; j < g.cols(); ++j) gr[j] += ui * v[j];
  }
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  detail::require_len("axpy", y.size(), x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Trainable tensor with a gradient buffer of the same shape.
struct Param {
  std::string name;
  Matrix value;
  Matrix grad;

  Param() = default;
  Param(std::string n, std::size_t rows, std::size_t cols)
      : name(std::move(n)), value(rows, cols), grad(rows, cols) {}
  Param(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}

  void zero_grad() { grad.fill(0.0); }

  // Uniform in [-limit, limit].
  void init_uniform(Rng& rng, double limit) {
    for (double& v : value.data()) v = rng.uniform(-limit, limit);
  }

  // Glorot/Xavier uniform; fan_in = cols, fan_out = rows.
  void init_glorot(Rng& rng) {
    init_uniform(rng, std::sqrt(6.0 / static_cast<double>(value.rows() + value.cols())));
  }
};

using ParamList = std::vector<Param*>;

enum class ClipMode : std::uint8_t { Value, GlobalNorm };

struct SgdConfig {
  double learning_rate = 0.01;
  double clip_norm = 5.0;
  double dropout_rate = 0.5;
  ClipMode clip_mode = ClipMode::Value;

  void validate() const {
    // A zero learning rate is accepted so a run can be replayed without updates.
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must be in [0, 1)");
  }
};

// Global-norm clipping. Returns the factor applied to every gradient.
inline double clip_gradients(std::span<Param* const> params, double clip_norm) {
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  double sq = 0.0;
  for (const Param* p : params) {
    for (double g : p->grad.data()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + p->name + "'");
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm <= clip_norm) return 1.0;
  const double scale = clip_norm / norm;
  for (Param* p : params) {
    for (double& g : p->grad.data()) g *= scale;
  }
  return scale;
}

// Element-wise clamp to [-clip, clip]. Returns the number of entries clamped.
inline std::size_t clip_values(std::span<Param* const> params, double clip) {
  if (!(clip > 0.0)) throw ConfigError("clip must be > 0");
  std::size_t clamped = 0;
  for (Param* p : params) {
    for (double& g : p->grad.data()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter '" + p->name + "'");
      if (g > clip || g < -clip) {
        g = std::clamp(g, -clip, clip);
        ++clamped;
      }
    }
  }
  return clamped;
}

inline void sgd_step(std::span<Param* const> params, const SgdConfig& cfg) {
  if (cfg.clip_mode == ClipMode::GlobalNorm) {
    clip_gradients(params, cfg.clip_norm);
  } else {
    clip_values(params, cfg.clip_norm);
  }
  for (Param* p : params) {
    auto& v = p->value.data();
    auto& g = p->grad.data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= cfg.learning_rate * g[i];
    p->zero_grad();
  }
}

// Inverted dropout: 0 with probability rate, 1/(1-rate) otherwise.
inline Matrix dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
  Matrix m(rows, cols, 1.0);
  if (rate == 0.0) return m;
  const double keep = 1.0 / (1.0 - rate);
  for (double& v : m.data()) v = rng.uniform() < rate ? 0.0 : keep;
  return m;
}

inline Vec dropout_mask(std::size_t n, double rate, Rng& rng) {
  return dropout_mask(1, n, rate, rng).data();
}

// Compares analytic gradients against central differences.
//
// `loss` evaluates the scalar objective at the current parameter values.
// When called with `true` it must also accumulate analytic gradients into
// Param::grad (which the harness zeroes beforehand). Returns the maximum
// over all entries of |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
inline double grad_check(const std::function<double(bool)>& loss, std::span<Param* const> params,
                         double epsilon = 1e-5) {
  for (Param* p : params) p->zero_grad();
  loss(true);
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad);

  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& values = params[k]->value.data();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double orig = values[i];
      values[i] = orig + epsilon;
      const double up = loss(false);
      values[i] = orig - epsilon;
      const double down = loss(false);
      values[i] = orig;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic[k].data()[i];
      const double rel = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
  }
  for (Param* p : params) p->zero_grad();
  return worst;
}

}  // namespace gujian
