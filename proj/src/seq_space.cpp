#include "interplab/seq_space.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "interplab/errors.hpp"

namespace interplab {

namespace {

void check_q(double q) {
  if (!(q >= 1.0)) throw InvalidParameter("q must lie in [1, inf], got " + std::to_string(q));
}

// log2 of |x| 2^{s n}; -inf for x = 0.
double log2_weighted(double x, double s, std::size_t n) {
  if (x == 0.0) return -kInf;
  return s * static_cast<double>(n) + std::log2(std::fabs(x));
}

}  // namespace

WeightedSequence WeightedSequence::truncated(std::size_t n) const {
  std::vector<double> e(entries_.begin(), entries_.begin() + std::min(n, entries_.size()));
  return WeightedSequence(std::move(e));
}

double weighted_norm(const WeightedSequence& x, double s, double q) {
  check_q(q);
  const auto e = x.entries();
  double top = -kInf;
  for (std::size_t i = 0; i < e.size(); ++i) top = std::max(top, log2_weighted(e[i], s, i + 1));
  if (top == -kInf) return 0.0;
  if (std::isinf(q)) return std::exp2(top);
  // Scale by the largest term so the q-th powers stay in range.
  double acc = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const double l = log2_weighted(e[i], s, i + 1);
    if (l != -kInf) acc += std::exp2(q * (l - top));
  }
  return std::exp2(top) * std::pow(acc, 1.0 / q);
}

WeightedSequence standard_test_sequence(double theta, double q_low, std::size_t n_terms) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("theta must lie in (0, 1)");
  if (!(q_low >= 1.0) || std::isinf(q_low)) throw InvalidParameter("q_low must lie in [1, inf)");
  if (n_terms < 1) throw InvalidParameter("N must be at least 1");
  std::vector<double> a(n_terms);
  for (std::size_t n = 1; n <= n_terms; ++n) {
    const double nn = static_cast<double>(n);
    a[n - 1] = std::exp2(-theta * nn - std::log2(nn) / q_low);
  }
  return WeightedSequence(std::move(a));
}

WeightedSequence multiplier_apply(const WeightedSequence& a, const WeightedSequence& x) {
  const std::size_t n = std::min(a.size(), x.size());
  std::vector<double> out(n);
  for (std::size_t i = 1; i <= n; ++i) out[i - 1] = a.at(i) * x.at(i);
  return WeightedSequence(std::move(out));
}

double exact_k_ell1_pair(double lambda, const WeightedSequence& x, double s0, double s1) {
  if (!(lambda > 0.0)) throw InvalidParameter("lambda must be positive");
  const double log_lambda = std::log2(lambda);
  const auto e = x.entries();
  double k = 0.0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e[i] == 0.0) continue;
    const double n = static_cast<double>(i + 1);
    const double l = std::min(s0 * n, log_lambda + s1 * n) + std::log2(std::fabs(e[i]));
    k += std::exp2(l);
  }
  return k;
}

}  // namespace interplab
