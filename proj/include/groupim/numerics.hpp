#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace groupim {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow; equals -log(sigmoid(-x)).
inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

inline double logsumexp(const Eigen::VectorXd& v) {
  double m = v.maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) s += std::exp(v[i] - m);
  return m + std::log(s);
}

// log softmax with max subtraction; safe for any finite logits.
inline Eigen::VectorXd log_softmax(const Eigen::VectorXd& logits) {
  double lse = logsumexp(logits);
  return logits.array() - lse;
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  return log_softmax(logits).array().exp();
}

inline double population_std(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return std::sqrt(var);
}

// Nearest-rank percentile on a sorted copy: value at index ceil(p*n) - 1.
inline double percentile(std::vector<double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("percentile of empty sample");
  std::sort(xs.begin(), xs.end());
  auto n = static_cast<double>(xs.size());
  auto idx = static_cast<std::size_t>(std::ceil(p * n));
  if (idx == 0) idx = 1;
  if (idx > xs.size()) idx = xs.size();
  return xs[idx - 1];
}

inline double median(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty sample");
  std::vector<double> s(xs);
  std::sort(s.begin(), s.end());
  std::size_t n = s.size();
  if (n % 2 == 1) return s[n / 2];
  return 0.5 * (s[n / 2 - 1] + s[n / 2]);
}

// Strict lexicographic order on equal-length vectors; the canonical order
// used to make floating-point set reductions independent of input order.
inline bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace groupim
