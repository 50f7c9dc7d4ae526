#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "interplab/seq_space.hpp"

namespace interplab {

/// Monte-Carlo result record.
struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  std::uint64_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// K(2^{-k}, x; E0, E1) sampled for k = k_min..k_max, with optional standard
/// errors, and a proxy for ||x||_{E0} that bounds the lambda >= 1 tail.
struct KProfile {
  int k_min = 0;
  int k_max = -1;
  std::vector<double> values;
  std::vector<double> se;  // empty for exact profiles
  double e0_norm = 0.0;
  double e0_se = 0.0;

  std::size_t size() const noexcept { return values.size(); }
  double se_at(std::size_t i) const noexcept { return se.empty() ? 0.0 : se[i]; }
};

/// Violations of the K-functional shape constraints, each tested within 3
/// standard errors: values bounded by e0_factor * e0_norm, nondecreasing and
/// concave in lambda. Exact K-functionals use e0_factor = 1; estimators that
/// are only equivalent to K pass their equivalence constant.
std::vector<std::string> profile_violations(const KProfile& p, double e0_factor = 1.0);

struct SignVector {
  std::vector<int> signs;
  std::uint64_t seed = 0;
};

/// One canonical-decomposition piece: J_n bounds J(2^{-n}, x_n; E0, E1).
struct JTerm {
  int n = 1;
  double j = 0.0;
};

/// Discretized K-method norm: the l_q norm of (2^{k theta} K_k)_{k in Z}, where
/// the unsampled lambda = 2^{-k} > 2^{-k_min} are bounded by K <= e0_norm:
///   ( sum_{k=k_min}^{k_max} (2^{k theta} K_k)^q + T^q )^{1/q},
///   T^q = e0^q sum_{k < k_min} 2^{k theta q} = e0^q 2^{k_min theta q} / (2^{theta q} - 1),
/// and max(2^{k theta} K_k, 2^{(k_min - 1) theta} e0) for q = inf. Being an
/// l_q norm of a fixed sequence, it is nonincreasing in q.
double k_method_norm(const KProfile& profile, double theta, double q);

/// ||(2^{n theta} J_n)_n||_{l_q}: the J-method norm of the caller's
/// decomposition, an upper bound for the interpolation norm up to the J-K
/// equivalence constant.
double j_method_upper(std::span<const JTerm> terms, double theta, double q);

/// Constant C with k_method_norm(P) <= C * j_method_upper(J) whenever
/// P_k <= profile_constant * K(2^{-k}, x) for k >= 0, e0_norm <= ||x||_{E0},
/// and x = sum_n x_n with J_n bounding J(2^{-n}, x_n), n >= 1. Combines the
/// discrete Hardy kernel sum with the tail term.
double jk_slack(double theta, double q, double profile_constant);

/// N i.i.d. fair signs from the counter-based stream keyed by seed.
SignVector rademacher_sample(std::size_t n, std::uint64_t seed);

using NormOracle = std::function<McEstimate(const SignVector&, const WeightedSequence&)>;

struct SandwichReport {
  double seq_norm = 0.0;
  double avg_norm = 0.0;
  double avg_se = 0.0;  // standard error of avg_norm over sign draws
  double sup_norm = 0.0;
  double ratio_lo = 0.0;
  double ratio_hi = 0.0;
  /// (mean over draws of norm^q)^{1/q} / avg_norm.
  double khintchine_ratio = 0.0;
  std::vector<McEstimate> draws;
};

/// Averages the oracle's norm of sum_n alpha_n eps_n b_n over n_sign_draws
/// Rademacher vectors (draw i keyed by derive_seed(seed, i)) and compares it
/// with ||a||_{l_q^{(theta)}}.
SandwichReport sandwich_experiment(const NormOracle& oracle, const WeightedSequence& a,
                                   double theta, double q, std::size_t n_sign_draws,
                                   std::uint64_t seed);

}  // namespace interplab
