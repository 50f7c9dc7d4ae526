#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "interplab/errors.hpp"
#include "interplab/interp_core.hpp"
#include "interplab/random.hpp"

using namespace interplab;

namespace {

KProfile ell1_profile(const WeightedSequence& x, int k_max) {
  KProfile p;
  p.k_max = k_max;
  for (int k = 0; k <= k_max; ++k) p.values.push_back(exact_k_ell1_pair(std::exp2(-k), x, 0.0, 1.0));
  p.e0_norm = weighted_norm(x, 0.0, 1.0);
  return p;
}

KProfile random_profile(CounterRng& rng, int n) {
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  KProfile p;
  p.k_max = n - 1;
  for (int k = 0; k < n; ++k) p.values.push_back(ud(rng) * std::exp2(-0.5 * k));
  p.e0_norm = 1.0 + ud(rng);
  return p;
}

}  // namespace

TEST_CASE("k_method_norm examples") {
  KProfile zero;
  zero.k_max = 3;
  zero.values.assign(4, 0.0);
  CHECK(k_method_norm(zero, 0.5, 2.0) == 0.0);
  CHECK(k_method_norm(zero, 0.5, kInf) == 0.0);

  CounterRng rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    KProfile p = random_profile(rng, 12);
    KProfile scaled_p = p;
    const double c = 0.1 + 5.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    for (auto& v : scaled_p.values) v *= c;
    scaled_p.e0_norm *= c;
    for (double q : {1.0, 2.0, 3.5, kInf}) {
      CHECK(k_method_norm(scaled_p, 0.4, q) == doctest::Approx(c * k_method_norm(p, 0.4, q)));
    }
  }
  KProfile empty;
  CHECK_THROWS_AS(k_method_norm(empty, 0.5, 2.0), InvalidInput);
  KProfile nan_profile = zero;
  nan_profile.values[2] = std::nan("");
  CHECK_THROWS_AS(k_method_norm(nan_profile, 0.5, 2.0), InvalidInput);
  CHECK_THROWS_AS(k_method_norm(zero, 1.0, 2.0), InvalidParameter);
}

TEST_CASE("k_method_norm closed form on a single value") {
  KProfile p;
  p.k_max = 0;
  p.values = {2.0};
  p.e0_norm = 3.0;
  const double theta = 0.5;
  const double q = 2.0;
  // tail: 9 * sum_{j>=1} 2^{-j} = 9
  CHECK(k_method_norm(p, theta, q) == doctest::Approx(std::sqrt(4.0 + 9.0)).epsilon(1e-14));
  CHECK(k_method_norm(p, theta, kInf) == doctest::Approx(3.0 / std::sqrt(2.0)));
  p.k_min = 2;
  // terms 2^{2 theta} * 2 = 4 and tail 9 * 2^{2} * 1 = 36 (squared)
  CHECK(k_method_norm(p, theta, q) == doctest::Approx(std::sqrt(16.0 + 36.0)).epsilon(1e-14));
}

TEST_CASE("k_method_norm is nonincreasing in q and obeys the crude bound") {
  CounterRng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    const KProfile p = random_profile(rng, 1 + static_cast<int>(rng() % 20));
    const double theta = 0.2 + 0.6 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    double prev = kInf;
    for (double q : {1.0, 1.5, 2.0, 4.0, 16.0, kInf}) {
      const double v = k_method_norm(p, theta, q);
      CHECK(v <= prev * (1.0 + 1e-12));
      prev = v;
      double top = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) top = std::max(top, std::exp2(k * theta) * p.values[k]);
      const double tail = std::isinf(q) ? p.e0_norm : p.e0_norm * std::pow(std::exp2(theta * q) - 1.0, -1.0 / q);
      const double terms = static_cast<double>(p.size() + 1);
      const double crude = std::isinf(q) ? std::max(top, tail) : std::pow(terms, 1.0 / q) * std::max(top, tail);
      CHECK(v <= crude * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("j_method_upper examples") {
  const std::vector<JTerm> one{{1, 1.0}};
  for (double q : {1.0, 2.0, kInf}) CHECK(j_method_upper(one, 0.5, q) == doctest::Approx(std::sqrt(2.0)));
  CHECK(j_method_upper(std::vector<JTerm>{}, 0.5, 2.0) == 0.0);

  const auto a = standard_test_sequence(0.5, 2.0, 12);
  const double kappa = 0.8;
  std::vector<JTerm> terms;
  for (std::size_t n = 1; n <= a.size(); ++n) terms.push_back({static_cast<int>(n), std::fabs(a.at(n)) * kappa});
  for (double q : {1.0, 2.0, 3.0, kInf}) {
    CHECK(j_method_upper(terms, 0.5, q) == doctest::Approx(kappa * weighted_norm(a, 0.5, q)));
  }
}

TEST_CASE("jk_slack bounds the K-norm of the l1 pair by its canonical J decomposition") {
  // For (l_1^{(0)}, l_1^{(1)}), x = sum x_n e_n with J(2^{-n}, x_n e_n) = |x_n|.
  CounterRng rng(47);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng() % 15;
    std::vector<double> e(n);
    for (auto& v : e) v = nd(rng);
    const WeightedSequence x(e);
    std::vector<JTerm> terms;
    for (std::size_t i = 1; i <= n; ++i) terms.push_back({static_cast<int>(i), std::fabs(x.at(i))});
    const auto p = ell1_profile(x, static_cast<int>(n) + 8);
    for (double theta : {0.3, 0.5, 0.7}) {
      for (double q : {1.0, 2.0, kInf}) {
        CHECK(k_method_norm(p, theta, q) <= jk_slack(theta, q, 1.0) * j_method_upper(terms, theta, q));
      }
    }
  }
  CHECK(jk_slack(0.5, 2.0, 3.0) > jk_slack(0.5, 2.0, 1.0));
}

TEST_CASE("exact l1-pair profiles satisfy the shape invariants") {
  CounterRng rng(53);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> e(1 + rng() % 10);
    for (auto& v : e) v = nd(rng);
    CHECK(profile_violations(ell1_profile(WeightedSequence(e), 20)).empty());
  }
  KProfile bad;
  bad.k_max = 2;
  bad.values = {1.0, 2.0, 0.1};
  bad.e0_norm = 1.5;
  CHECK_FALSE(profile_violations(bad).empty());
}

TEST_CASE("l1-pair K-norm is equivalent to the interpolated sequence norm") {
  CounterRng rng(59);
  std::normal_distribution<double> nd;
  for (double theta : {0.3, 0.5, 0.7}) {
    for (double q : {1.0, 2.0, kInf}) {
      double lo = kInf;
      double hi = 0.0;
      for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 1 + rng() % 20;
        std::vector<double> e(n);
        for (std::size_t i = 0; i < n; ++i) e[i] = nd(rng) * std::exp2(-theta * (i + 1));
        const WeightedSequence x(e);
        const double r = k_method_norm(ell1_profile(x, static_cast<int>(n) + 8), theta, q) /
                         weighted_norm(x, theta, q);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      CHECK(hi / lo <= 8.0);
    }
  }
}

TEST_CASE("rademacher_sample") {
  const auto a = rademacher_sample(50, 7);
  const auto b = rademacher_sample(50, 7);
  CHECK(a.signs == b.signs);
  CHECK(a.seed == 7);
  CHECK(rademacher_sample(50, 8).signs != a.signs);
  const auto one = rademacher_sample(1, 3);
  CHECK(one.signs.size() == 1);
  CHECK(std::abs(one.signs[0]) == 1);
  const std::size_t n = 100000;
  for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
    const auto s = rademacher_sample(n, seed);
    double sum = 0.0;
    for (int v : s.signs) {
      CHECK((v == 1 || v == -1));
      sum += v;
    }
    CHECK(std::fabs(sum / n) < 4.0 / std::sqrt(static_cast<double>(n)));
  }
  CHECK_THROWS_AS(rademacher_sample(0, 1), InvalidParameter);
}

TEST_CASE("sandwich on the exact l1-pair model") {
  // b_n = e_n in (l_1^{(0)}, l_1^{(1)}): J(2^{-n}, e_n) = 1 and the K-functional
  // ignores signs, so every draw gives the same norm.
  const double theta = 0.5;
  const double q = 2.0;
  const NormOracle oracle = [&](const SignVector& s, const WeightedSequence& a) {
    std::vector<double> e(a.size());
    for (std::size_t n = 1; n <= a.size(); ++n) e[n - 1] = s.signs[n - 1] * a.at(n);
    const WeightedSequence x(e);
    McEstimate m;
    m.mean = k_method_norm(ell1_profile(x, static_cast<int>(a.size()) + 8), theta, q);
    m.seed = s.seed;
    m.n_samples = 1;
    return m;
  };
  double lo = kInf;
  double hi = 0.0;
  for (std::size_t n : {2, 4, 8, 16, 32}) {
    const auto a = standard_test_sequence(theta, 2.0, n);
    const auto r = sandwich_experiment(oracle, a, theta, q, 8, 1234);
    CHECK(r.avg_norm == doctest::Approx(r.sup_norm));
    CHECK(r.ratio_lo <= r.ratio_hi + 1e-15);
    CHECK(r.khintchine_ratio == doctest::Approx(1.0));
    lo = std::min(lo, r.ratio_lo);
    hi = std::max(hi, r.ratio_hi);
  }
  // K(2^{-k}, x) >= |x_k| gives ratio >= 1; the J decomposition x = sum x_n e_n
  // gives ratio <= jk_slack.
  CHECK(lo >= 1.0 - 1e-12);
  CHECK(hi <= jk_slack(theta, q, 1.0));

  const auto zero = sandwich_experiment(oracle, WeightedSequence({0.0, 0.0}), theta, q, 4, 1);
  CHECK(zero.seq_norm == 0.0);
  CHECK(zero.avg_norm == 0.0);
  CHECK(zero.sup_norm == 0.0);
  CHECK_THROWS_AS(sandwich_experiment(oracle, WeightedSequence({1.0}), theta, kInf, 4, 1), InvalidParameter);
}
