#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "errors.hpp"
#include "nncore.hpp"

// Linear-chain CRF over k tags with two extra boundary states.
//
// Transitions live in a (k+2)x(k+2) matrix A where index k is START and
// k+1 is STOP, so a path y_1..y_n scores
//
//   A[START, y_1] + sum_i A[y_i, y_{i+1}] + A[y_n, STOP] + sum_i P[i, y_i].
//
// Transitions into START and out of STOP are pinned at kForbidden.
namespace gujian::crf {

inline constexpr double kForbidden = -1e4;

// n x k emission scores.
using Emissions = Matrix;

struct CrfParams {
  Param transitions;

  CrfParams() = default;
  explicit CrfParams(std::size_t num_tags) : transitions("crf.A", num_tags + 2, num_tags + 2) { pin(); }

  std::size_t num_tags() const { return transitions.value.rows() - 2; }
  std::size_t start() const { return num_tags(); }
  std::size_t stop() const { return num_tags() + 1; }

  double operator()(std::size_t from, std::size_t to) const { return transitions.value(from, to); }

  // Restores the fixed boundary entries.
  void pin() {
    auto& a = transitions.value;
    const std::size_t s = a.rows();
    for (std::size_t i = 0; i < s; ++i) {
      a(i, start()) = kForbidden;
      a(stop(), i) = kForbidden;
    }
  }
};

struct TagPath {
  std::vector<int> tags;
  double score = 0.0;
};

inline double log_sum_exp(std::span<const double> xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

namespace detail {
inline void check_shapes(const Emissions& p, const CrfParams& a) {
  if (p.cols() != a.num_tags()) {
    throw DimensionError("crf: emissions " + p.shape() + " do not match " + std::to_string(a.num_tags()) + " tags");
  }
}
}  // namespace detail

inline double path_score(const Emissions& p, const CrfParams& a, std::span<const int> y) {
  detail::check_shapes(p, a);
  if (y.size() != p.rows()) {
    throw DimensionError("path_score: path length " + std::to_string(y.size()) + " vs " + std::to_string(p.rows()) +
                         " positions");
  }
  const int k = static_cast<int>(a.num_tags());
  for (int t : y) {
    if (t < 0 || t >= k) throw std::out_of_range("path_score: tag index " + std::to_string(t) + " out of range");
  }
  if (y.empty()) return a(a.start(), a.stop());
  double s = a(a.start(), static_cast<std::size_t>(y[0]));
  for (std::size_t i = 0; i < y.size(); ++i) {
    s += p(i, static_cast<std::size_t>(y[i]));
    if (i + 1 < y.size()) s += a(static_cast<std::size_t>(y[i]), static_cast<std::size_t>(y[i + 1]));
  }
  return s + a(static_cast<std::size_t>(y.back()), a.stop());
}

// alpha(t, y): log-sum of scores of all prefixes ending in y at t,
// including the START transition and emission at t.
inline Matrix forward_table(const Emissions& p, const CrfParams& a) {
  detail::check_shapes(p, a);
  const std::size_t n = p.rows();
  const std::size_t k = a.num_tags();
  Matrix alpha(n, k);
  if (n == 0) return alpha;
  for (std::size_t y = 0; y < k; ++y) alpha(0, y) = a(a.start(), y) + p(0, y);
  Vec terms(k);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t x = 0; x < k; ++x) terms[x] = alpha(t - 1, x) + a(x, y);
      alpha(t, y) = log_sum_exp(terms) + p(t, y);
    }
  }
  return alpha;
}

// beta(t, y): log-sum of scores of all suffixes after position t given y at
// t, including the STOP transition but not the emission at t.
inline Matrix backward_table(const Emissions& p, const CrfParams& a) {
  detail::check_shapes(p, a);
  const std::size_t n = p.rows();
  const std::size_t k = a.num_tags();
  Matrix beta(n, k);
  if (n == 0) return beta;
  for (std::size_t y = 0; y < k; ++y) beta(n - 1, y) = a(y, a.stop());
  Vec terms(k);
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t x = 0; x < k; ++x) terms[x] = a(y, x) + p(t + 1, x) + beta(t + 1, x);
      beta(t, y) = log_sum_exp(terms);
    }
  }
  return beta;
}

inline double log_partition(const Emissions& p, const CrfParams& a) {
  if (p.rows() == 0) throw ConfigError("log_partition: empty sequence");
  const Matrix alpha = forward_table(p, a);
  const std::size_t k = a.num_tags();
  const std::size_t last = p.rows() - 1;
  Vec terms(k);
  for (std::size_t y = 0; y < k; ++y) terms[y] = alpha(last, y) + a(y, a.stop());
  return log_sum_exp(terms);
}

// Same quantity evaluated from the right end.
inline double log_partition_from_right(const Emissions& p, const CrfParams& a) {
  if (p.rows() == 0) throw ConfigError("log_partition: empty sequence");
  const Matrix beta = backward_table(p, a);
  const std::size_t k = a.num_tags();
  Vec terms(k);
  for (std::size_t y = 0; y < k; ++y) terms[y] = a(a.start(), y) + p(0, y) + beta(0, y);
  return log_sum_exp(terms);
}

// Max-score path; ties go to the lowest tag index.
inline TagPath viterbi_decode(const Emissions& p, const CrfParams& a) {
  detail::check_shapes(p, a);
  const std::size_t n = p.rows();
  const std::size_t k = a.num_tags();
  if (n == 0) throw ConfigError("viterbi_decode: empty sequence");
  Matrix delta(n, k);
  std::vector<std::vector<int>> back(n, std::vector<int>(k, 0));
  for (std::size_t y = 0; y < k; ++y) delta(0, y) = a(a.start(), y) + p(0, y);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t y = 0; y < k; ++y) {
      std::size_t arg = 0;
      double best = delta(t - 1, 0) + a(0, y);
      for (std::size_t x = 1; x < k; ++x) {
        const double s = delta(t - 1, x) + a(x, y);
        if (s > best) {
          best = s;
          arg = x;
        }
      }
      delta(t, y) = best + p(t, y);
      back[t][y] = static_cast<int>(arg);
    }
  }
  std::size_t arg = 0;
  double best = delta(n - 1, 0) + a(0, a.stop());
  for (std::size_t y = 1; y < k; ++y) {
    const double s = delta(n - 1, y) + a(y, a.stop());
    if (s > best) {
      best = s;
      arg = y;
    }
  }
  TagPath path;
  path.tags.assign(n, 0);
  path.tags[n - 1] = static_cast<int>(arg);
  for (std::size_t t = n - 1; t > 0; --t) {
    path.tags[t - 1] = back[t][static_cast<std::size_t>(path.tags[t])];
  }
  path.score = best;
  return path;
}

struct NllResult {
  double loss = 0.0;
  Matrix d_emissions;    // n x k
  Matrix d_transitions;  // (k+2) x (k+2)
};

// Negative log-likelihood of `gold` and its gradients, via forward-backward.
inline NllResult crf_nll(const Emissions& p, const CrfParams& a, std::span<const int> gold) {
  const std::size_t n = p.rows();
  const std::size_t k = a.num_tags();
  if (n == 0) throw ConfigError("crf_nll: empty sequence");
  const double gold_score = path_score(p, a, gold);
  const Matrix alpha = forward_table(p, a);
  const Matrix beta = backward_table(p, a);
  Vec terms(k);
  for (std::size_t y = 0; y < k; ++y) terms[y] = alpha(n - 1, y) + a(y, a.stop());
  const double log_z = log_sum_exp(terms);

  NllResult r;
  r.loss = log_z - gold_score;
  r.d_emissions = Matrix(n, k);
  r.d_transitions = Matrix(k + 2, k + 2);

  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t y = 0; y < k; ++y) {
      r.d_emissions(t, y) = std::exp(alpha(t, y) + beta(t, y) - log_z);
    }
  }
  for (std::size_t y = 0; y < k; ++y) {
    r.d_transitions(a.start(), y) += r.d_emissions(0, y);
    r.d_transitions(y, a.stop()) += r.d_emissions(n - 1, y);
  }
  for (std::size_t t = 0; t + 1 < n; ++t) {
    for (std::size_t x = 0; x < k; ++x) {
      for (std::size_t y = 0; y < k; ++y) {
        r.d_transitions(x, y) += std::exp(alpha(t, x) + a(x, y) + p(t + 1, y) + beta(t + 1, y) - log_z);
      }
    }
  }

  r.d_transitions(a.start(), static_cast<std::size_t>(gold[0])) -= 1.0;
  for (std::size_t t = 0; t < n; ++t) {
    const auto g = static_cast<std::size_t>(gold[t]);
    r.d_emissions(t, g) -= 1.0;
    if (t + 1 < n) r.d_transitions(g, static_cast<std::size_t>(gold[t + 1])) -= 1.0;
  }
  r.d_transitions(static_cast<std::size_t>(gold[n - 1]), a.stop()) -= 1.0;
  return r;
}

}  // namespace gujian::crf
