#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace interplab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Finitely supported real sequence indexed from n = 1; entries beyond size()
/// are zero.
class WeightedSequence {
 public:
  WeightedSequence() = default;
  explicit WeightedSequence(std::vector<double> entries) : entries_(std::move(entries)) {}

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// x_n for n >= 1 (zero past the stored support).
  double at(std::size_t n) const noexcept {
    return n >= 1 && n <= entries_.size() ? entries_[n - 1] : 0.0;
  }

  std::span<const double> entries() const noexcept { return entries_; }
  std::vector<double>& mutable_entries() noexcept { return entries_; }

  /// First n entries (a^N of the test sequence).
  WeightedSequence truncated(std::size_t n) const;

 private:
  std::vector<double> entries_;
};

/// ||(2^{s n} x_n)_n||_{l_q}, q in [1, inf]. Weights are applied in log2
/// space so that 2^{s n} never overflows on its own.
double weighted_norm(const WeightedSequence& x, double s, double q);

/// alpha_n = 2^{-theta n} n^{-1/q_low}, n = 1..N. Its l_{q_low}^{(theta)} norm
/// is the q_low-th root of the harmonic sum H_N, while every l_q^{(theta)}
/// norm with q > q_low stays bounded in N.
WeightedSequence standard_test_sequence(double theta, double q_low, std::size_t n_terms);

/// Pointwise multiplier (a_n x_n)_n; the support is the shorter of the two.
WeightedSequence multiplier_apply(const WeightedSequence& a, const WeightedSequence& x);

/// K(lambda, x; l_1^{(s0)}, l_1^{(s1)}) = sum_n min(2^{s0 n}, lambda 2^{s1 n}) |x_n|.
double exact_k_ell1_pair(double lambda, const WeightedSequence& x, double s0, double s1);

}  // namespace interplab
