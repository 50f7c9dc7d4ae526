#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "interplab/errors.hpp"
#include "interplab/gauss_analysis.hpp"

using namespace interplab;

namespace {

bool within_3se(const McEstimate& e, double expected) {
  return std::fabs(e.mean - expected) <= 3.0 * e.se + 1e-12;
}

}  // namespace

TEST_CASE("hermite_eval examples") {
  for (double x : {-2.0, 0.0, 0.3, 5.0}) CHECK(hermite_eval(0, x) == 1.0);
  CHECK(hermite_eval(2, 1.0) == doctest::Approx(0.0));
  // explicit polynomial He_3(x) = x^3 - 3x
  CHECK(hermite_eval(3, 2.0) == doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-14));
  CHECK(hermite_eval(3, 2.0) == doctest::Approx(0.816497).epsilon(1e-6));
  // He_5(x) = x^5 - 10x^3 + 15x
  for (double x : {-1.3, 0.4, 2.2}) {
    const double he5 = std::pow(x, 5) - 10.0 * std::pow(x, 3) + 15.0 * x;
    CHECK(hermite_eval(5, x) == doctest::Approx(he5 / std::sqrt(120.0)).epsilon(1e-13));
  }
  CHECK_THROWS_AS(hermite_eval(kMaxHermiteDegree + 1, 0.5), Unsupported);
  CHECK_THROWS_AS(hermite_eval(-1, 0.5), InvalidParameter);
}

TEST_CASE("Gauss-Hermite rule examples") {
  const auto r1 = gauss_hermite_nodes(1);
  CHECK(r1.nodes[0] == 0.0);
  CHECK(r1.weights[0] == 1.0);
  auto moment = [](const QuadratureRule& r, int p) {
    double s = 0.0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
    return s;
  };
  CHECK(std::fabs(moment(gauss_hermite_nodes(2), 2) - 1.0) < 1e-12);
  CHECK(std::fabs(moment(gauss_hermite_nodes(3), 4) - 3.0) < 1e-12);
  for (int m : {5, 32, 64, 128, 256}) {
    const auto r = gauss_hermite_nodes(m);
    CHECK(std::fabs(std::accumulate(r.weights.begin(), r.weights.end(), 0.0) - 1.0) < 1e-12);
  }
  // exact up to degree 2m - 1: E X^{2j} = (2j - 1)!!
  const auto r8 = gauss_hermite_nodes(8);
  double dfact = 1.0;
  for (int j = 1; j <= 7; ++j) {
    dfact *= 2 * j - 1;
    CHECK(moment(r8, 2 * j) == doctest::Approx(dfact).epsilon(1e-12));
    CHECK(std::fabs(moment(r8, 2 * j - 1)) < 1e-10);
  }
  CHECK_THROWS_AS(gauss_hermite_nodes(0), InvalidParameter);
  CHECK_THROWS_AS(gauss_hermite_nodes(257), InvalidParameter);
}

TEST_CASE("Gauss-Legendre rule integrates polynomials exactly") {
  for (int m : {1, 2, 5, 16, 64}) {
    const auto r = gauss_legendre_nodes(m);
    for (int p = 0; p <= 2 * m - 1; ++p) {
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
      const double exact = p % 2 == 1 ? 0.0 : 2.0 / (p + 1);
      CHECK(std::fabs(s - exact) < 1e-13);
    }
  }
}

TEST_CASE("Gram matrix of h_0..h_12 is the identity") {
  const auto r = gauss_hermite_nodes(64);
  std::vector<double> h(13);
  std::vector<double> gram(13 * 13, 0.0);
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    hermite_values(12, r.nodes[i], h);
    for (int a = 0; a <= 12; ++a)
      for (int b = 0; b <= 12; ++b) gram[a * 13 + b] += r.weights[i] * h[a] * h[b];
  }
  double dev = 0.0;
  for (int a = 0; a <= 12; ++a)
    for (int b = 0; b <= 12; ++b) dev = std::max(dev, std::fabs(gram[a * 13 + b] - (a == b ? 1.0 : 0.0)));
  CHECK(dev < 1e-10);
}

TEST_CASE("L2 and D12 norms") {
  const Quadrature quad{64};
  CHECK(l2_gamma_norm(constant_function(-2.5), quad).mean == doctest::Approx(2.5));
  CHECK(d12_norm(constant_function(-2.5), quad).mean == doctest::Approx(2.5));
  for (int k = 0; k <= 12; ++k) {
    const auto hk = hermite_function(k);
    CHECK(std::fabs(l2_gamma_norm(hk, quad).mean - 1.0) < 1e-8);
    CHECK(std::fabs(d12_norm(hk, quad).mean - std::sqrt(1.0 + k)) < 1e-8);
  }
  CHECK(l2_gamma_norm(coordinate_function(0, 2), Quadrature{16}).mean == doctest::Approx(1.0));
  CHECK(d12_norm(coordinate_function(0, 1), quad).mean == doctest::Approx(std::sqrt(2.0)));
  const auto mc = l2_gamma_norm(coordinate_function(1, 2), MonteCarlo{50000, 3});
  CHECK(within_3se(mc, 1.0));
  CHECK(mc.se > 0.0);
  CHECK_THROWS_AS(l2_gamma_norm(coordinate_function(0, 4), quad), Unsupported);
  GaussianFunction no_grad;
  no_grad.eval = [](std::span<const double> x) { return x[0]; };
  CHECK_THROWS_AS(d12_norm(no_grad, quad), Unsupported);
}

TEST_CASE("cell-stratified quadrature agrees with Gauss-Hermite on smooth functions") {
  const auto h3 = hermite_function(3);
  const auto strat = l2_gamma_norm(h3, Quadrature{8, 0.25});
  CHECK(std::fabs(strat.mean - 1.0) < 1e-10);
}

TEST_CASE("Parseval for random Hermite expansions") {
  CounterRng rng(61);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 5; ++trial) {
    HermiteCoeffs c(1, 12);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = nd(rng);
    CHECK(std::fabs(l2_gamma_norm(from_hermite(c), Quadrature{64}).mean - c.norm()) < 1e-8);
  }
  HermiteCoeffs c2(2, 4);
  for (std::size_t i = 0; i < c2.size(); ++i) c2[i] = nd(rng);
  CHECK(std::fabs(l2_gamma_norm(from_hermite(c2), Quadrature{16}).mean - c2.norm()) < 1e-10);
}

TEST_CASE("gradients of Hermite expansions match finite differences") {
  CounterRng rng(67);
  std::normal_distribution<double> nd;
  HermiteCoeffs c(2, 3);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = nd(rng);
  CHECK(gradient_check(from_hermite(c), 100, 5) < 1e-4);
  CHECK(gradient_check(hermite_function(6), 100, 6) < 1e-4);
}

TEST_CASE("coupling distance examples") {
  const MonteCarlo mc{100000, 77};
  const auto zero = coupling_distance(constant_function(3.0), 0.5, mc);
  CHECK(zero.mean == 0.0);
  for (double t : {0.25, 0.75}) {
    CHECK(within_3se(coupling_distance(hermite_function(1), t, mc), std::sqrt(2.0 * (1.0 - t))));
  }
  for (int k : {2, 4}) {
    for (double t : {0.75, 0.9375}) {
      CHECK(within_3se(coupling_distance(hermite_function(k), t, mc), std::sqrt(2.0 * (1.0 - std::pow(t, k)))));
    }
  }
  CHECK_THROWS_AS(coupling_distance(hermite_function(1), 0.5, MonteCarlo{99, 1}), InvalidParameter);
  CHECK_THROWS_AS(coupling_distance(hermite_function(1), 1.0, mc), InvalidParameter);
}

TEST_CASE("coupling distance is reproducible and roughly monotone") {
  const auto f = hermite_function(3);
  const MonteCarlo mc{20000, 5};
  CHECK(coupling_distance(f, 0.6, mc).mean == coupling_distance(f, 0.6, mc).mean);
  double prev = kInf;
  double prev_se = 0.0;
  for (double t : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
    const auto e = coupling_distance(f, t, mc);
    CHECK(e.mean <= prev + 3.0 * (e.se + prev_se));
    CHECK(e.mean <= 2.0 * l2_gamma_norm(f, Quadrature{64}).mean + 3.0 * e.se);
    prev = e.mean;
    prev_se = e.se;
  }
}

TEST_CASE("mehler distance") {
  HermiteCoeffs c0(1, 3);
  c0[0] = 1.0;
  CHECK(mehler_distance(c0, 0.4) == 0.0);
  for (int k : {1, 2, 5}) {
    HermiteCoeffs ek(1, k);
    ek[k] = 1.0;
    for (double t : {0.1, 0.75, 0.99}) {
      CHECK(mehler_distance(ek, t) == doctest::Approx(std::sqrt(2.0 * (1.0 - std::pow(t, k)))));
    }
  }
  CounterRng rng(71);
  std::normal_distribution<double> nd;
  HermiteCoeffs c(1, 10);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = nd(rng);
  CHECK(mehler_distance(c, 1.0 - 1e-6) < 1e-2 * c.norm());
  // complement form keeps precision where 1 - t underflows
  HermiteCoeffs e1(1, 1);
  e1[1] = 1.0;
  CHECK(mehler_distance_complement(e1, 0x1.0p-100) == doctest::Approx(std::sqrt(2.0) * 0x1.0p-50));
}

TEST_CASE("Gaussian K-profile examples") {
  const MonteCarlo mc{20000, 13};
  const auto zero = gaussian_k_profile(constant_function(0.0), 6, mc);
  for (double v : zero.values) CHECK(v == 0.0);

  HermiteCoeffs e1(1, 1);
  e1[1] = 1.0;
  const auto exact = mehler_k_profile(e1, 12);
  for (int k = 0; k <= 12; ++k) {
    CHECK(exact.values[k] == doctest::Approx((std::sqrt(2.0) + 1.0) * std::exp2(-k)).epsilon(1e-12));
  }
  const auto est = gaussian_k_profile(hermite_function(1), 12, mc, Quadrature{64});
  for (int k = 0; k <= 12; ++k) {
    CHECK(std::fabs(est.values[k] - exact.values[k]) <= 3.0 * est.se[k] + 1e-14);
  }
  // coupling + lambda ||f|| <= 3 ||f||; monotonicity and concavity hold as for K
  CHECK(profile_violations(est, 3.0).empty());
  for (int k : {2, 3, 4}) {
    CHECK(profile_violations(gaussian_k_profile(hermite_function(k), 10, mc), 3.0).empty());
  }
}

TEST_CASE("besov norm examples") {
  const MonteCarlo mc{20000, 21};
  CHECK(besov_norm(constant_function(0.0), 0.5, 2.0, 8, mc).mean == 0.0);
  const auto b1 = besov_norm(hermite_function(1), 0.5, 2.0, 10, mc);
  CHECK(std::isfinite(b1.mean));
  CHECK(b1.mean > 0.0);
  const auto b3 = besov_norm(scaled(hermite_function(1), -3.0), 0.5, 2.0, 10, mc);
  CHECK(b3.mean == doctest::Approx(3.0 * b1.mean).epsilon(1e-12));
  double prev = kInf;
  for (double q : {1.0, 2.0, 4.0, kInf}) {
    const auto b = besov_norm(hermite_function(2), 0.5, q, 10, mc);
    CHECK(b.mean <= prev * (1.0 + 1e-12));
    prev = b.mean;
  }
}

TEST_CASE("besov ratios of Hermite functions match Mehler profiles") {
  const MonteCarlo mc{40000, 31};
  const int k_max = 12;
  HermiteCoeffs e1(1, 1);
  e1[1] = 1.0;
  const double exact1 = k_method_norm(mehler_k_profile(e1, k_max), 0.5, 2.0);
  const auto b1 = besov_norm(hermite_function(1), 0.5, 2.0, k_max, mc, Quadrature{64});
  for (int k : {2, 4}) {
    HermiteCoeffs ek(1, k);
    ek[k] = 1.0;
    const double exact_ratio = k_method_norm(mehler_k_profile(ek, k_max), 0.5, 2.0) / exact1;
    const auto bk = besov_norm(hermite_function(k), 0.5, 2.0, k_max, mc, Quadrature{64});
    const double ratio = bk.mean / b1.mean;
    const double ratio_se = ratio * std::hypot(bk.se / bk.mean, b1.se / b1.mean);
    CHECK(std::fabs(ratio - exact_ratio) <= 3.0 * ratio_se);
  }
}
