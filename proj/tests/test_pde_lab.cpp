#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "doctest.h"
#include "interplab/errors.hpp"
#include "interplab/extremal_system.hpp"
#include "interplab/holder_space.hpp"
#include "interplab/pde_lab.hpp"
#include "interplab/random.hpp"

using namespace interplab;

TEST_CASE("heat extension of Hermite polynomials") {
  const auto h1 = hermite_function(1);
  const auto h2 = hermite_function(2);
  CounterRng rng(3);
  std::uniform_real_distribution<double> ut(0.0, 0.999);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 200; ++i) {
    const double t = ut(rng);
    const double x = 2.0 * nd(rng);
    CHECK(heat_eval(h1, t, x, 0) == doctest::Approx(x).scale(1.0));
    CHECK(heat_eval(h1, t, x, 1) == doctest::Approx(1.0));
    CHECK(std::fabs(heat_eval(h1, t, x, 2)) < 1e-8);
    CHECK(std::fabs(heat_eval(h2, t, x, 0) - (x * x - t) / std::sqrt(2.0)) < 1e-8);
    CHECK(std::fabs(heat_eval(h2, t, x, 1) - std::sqrt(2.0) * x) < 1e-8);
    CHECK(std::fabs(heat_eval(h2, t, x, 2) - std::sqrt(2.0)) < 1e-8);
  }
  CHECK_THROWS_AS(heat_eval(h2, 1.0, 0.0, 2), InvalidParameter);
  CHECK_THROWS_AS(heat_eval(h2, 0.5, 0.0, 3), InvalidParameter);
  CHECK_THROWS_AS(HeatExtension(coordinate_function(0, 2)), Unsupported);
}

TEST_CASE("heat extension: finite differences in x reproduce the derivatives") {
  auto s = make_extremal_system(1, 1.0);
  const auto fN = build_fN(s, standard_test_sequence(0.5, 2.0, 5), rademacher_sample(5, 2));
  const auto h3 = hermite_function(3);
  CounterRng rng(5);
  std::uniform_real_distribution<double> ut(0.0, 0.99);
  std::normal_distribution<double> nd;
  for (const auto* f : {&h3, &fN}) {
    const HeatExtension F(*f);
    for (int i = 0; i < 100; ++i) {
      const double t = ut(rng);
      const double x = nd(rng);
      const double h = 1e-4 * std::sqrt(1.0 - t);
      const double d0 = (F(t, x + h, 0) - F(t, x - h, 0)) / (2 * h);
      const double d1 = (F(t, x + h, 1) - F(t, x - h, 1)) / (2 * h);
      const double g1 = F(t, x, 1);
      const double g2 = F(t, x, 2);
      // relative to the derivative scale of the term mix at this time
      const double s1 = std::max(std::fabs(g1), 1.0 / std::sqrt(1.0 - t) * 1e-2);
      const double s2 = std::max(std::fabs(g2), 1.0 / (1.0 - t) * 1e-2);
      CHECK(std::fabs(d0 - g1) <= 1e-4 * s1);
      CHECK(std::fabs(d1 - g2) <= 1e-4 * s2);
    }
  }
}

TEST_CASE("heat extension: maximum principle and the hook against quadrature") {
  auto s = make_extremal_system(1, 1.0);
  const auto a = standard_test_sequence(0.5, 2.0, 4);
  const auto fN = build_fN(s, a, rademacher_sample(4, 8));
  double sup = 0.0;
  for (double v : a.entries()) sup += std::fabs(v) * s.bump.amplitude;
  const HeatExtension F(fN);
  CounterRng rng(6);
  std::uniform_real_distribution<double> ut(0.0, 0.999999);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 1000; ++i) {
    const double t = ut(rng);
    const double x = 3.0 * nd(rng);
    CHECK(std::fabs(F(t, x, 0)) <= sup);
  }
  // composite Gauss-Legendre oracle in z over [-12, 12] with the weights
  // 1, z / sqrt(tau), (z^2 - 1) / tau
  const auto gl = gauss_legendre_nodes(16);
  auto oracle = [&](double t, double x, int order) {
    const double tau = 1.0 - t;
    const double sd = std::sqrt(tau);
    constexpr int kCells = 4000;
    const double hw = 12.0 / kCells;
    double acc = 0.0;
    for (int c = 0; c < kCells; ++c) {
      for (int k = 0; k < 16; ++k) {
        const double z = -12.0 + (2 * c + 1) * hw + hw * gl.nodes[k];
        const double w = hw * gl.weights[k] * std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        const double v = fN(x + sd * z);
        acc += w * v * (order == 0 ? 1.0 : order == 1 ? z / sd : (z * z - 1.0) / tau);
      }
    }
    return acc;
  };
  for (double t : {0.0, 0.6, 0.99}) {
    for (double x : {-0.7, 0.1, 1.3}) {
      for (int order : {0, 1, 2}) {
        CHECK(F(t, x, order) == doctest::Approx(oracle(t, x, order)).scale(1e-3).epsilon(1e-7));
      }
    }
  }
}

TEST_CASE("path configuration") {
  const auto pc = PathConfig::geometric(65, 1e-8, 100, 1);
  CHECK(pc.nodes() == 65);
  CHECK(pc.tau.front() == 1.0);
  CHECK(pc.tau.back() == 1e-8);
  CHECK(pc.u(0) == 0.0);
  pc.validate();
  const auto with = pc.with_node(0.9);
  CHECK(with.nodes() == 66);
  with.validate();
  CHECK(with.with_node(0.9).nodes() == 66);
  PathConfig bad = pc;
  bad.tau[3] = bad.tau[2];
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  bad = pc;
  bad.tau.front() = 0.5;
  CHECK_THROWS_AS(bad.validate(), InvalidParameter);
  CHECK_THROWS_AS(PathConfig::geometric(1, 1e-8, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(PathConfig::geometric(10, 1.0, 10, 1), InvalidParameter);
}

TEST_CASE("fractional integral along a path") {
  using Path = std::vector<std::pair<double, double>>;
  CHECK_THROWS_AS(frac_integral_path(Path{}, 0.5, 0.2), InvalidInput);
  CHECK_THROWS_AS(frac_integral_path(Path{{0.0, 1.0}}, 0.0, 0.2), InvalidParameter);
  CHECK_THROWS_AS(frac_integral_path(Path{{0.0, 1.0}, {0.0, 2.0}}, 0.5, 0.2), InvalidInput);

  const Path p{{0.0, 1.5}, {0.2, -1.0}, {0.5, 3.0}, {0.9, 2.0}};
  CHECK(frac_integral_path(p, 0.3, 0.0) == 1.5);
  const Path c{{0.0, 2.0}, {0.3, 2.0}, {0.8, 2.0}};
  for (double alpha : {0.1, 0.5, 1.0, 2.0}) {
    for (double t : {0.0, 0.4, 0.95}) CHECK(frac_integral_path(c, alpha, t) == doctest::Approx(2.0));
  }
  // piecewise evaluation by hand: alpha = 1, t = 0.6
  CHECK(frac_integral_path(p, 1.0, 0.6) == doctest::Approx(1.5 * 0.2 + -1.0 * 0.3 + 3.0 * 0.5));

  // phi_u = u, alpha = 1, t -> 1: int_0^1 u du = 1/2
  Path lin;
  for (int j = 0; j <= 4000; ++j) lin.push_back({j / 4000.0 * (1 - 1e-9), j / 4000.0 * (1 - 1e-9)});
  CHECK(std::fabs(frac_integral_path(lin, 1.0, 1 - 1e-9) - 0.5) < 1e-3);

  // linearity and monotonicity
  Path q = p;
  Path sum = p;
  for (std::size_t j = 0; j < p.size(); ++j) {
    q[j].second = std::cos(3.0 * j);
    sum[j].second = 2.0 * p[j].second - q[j].second;
  }
  for (double t : {0.1, 0.55, 0.99}) {
    CHECK(frac_integral_path(sum, 0.4, t) ==
          doctest::Approx(2.0 * frac_integral_path(p, 0.4, t) - frac_integral_path(q, 0.4, t)));
    Path up = p;
    for (auto& [u, v] : up) v += 0.25 * (1.0 + u);
    CHECK(frac_integral_path(up, 0.4, t) > frac_integral_path(p, 0.4, t));
  }
}

TEST_CASE("weighted Ito integral") {
  const auto pc = PathConfig::geometric(256, 1e-8, 500, 4);
  const double theta = 0.5;
  const auto z = weighted_ito_integral(hermite_function(1), theta, pc);
  CHECK(std::fabs(z.mean) < 1e-12);
  const auto w = weighted_ito_integral(hermite_function(2), theta, pc);
  CHECK(std::fabs(w.mean - 2.0 / (2.0 - theta)) <= 3.0 * w.se + 1e-9);
  const auto w3 = weighted_ito_integral(scaled(hermite_function(2), 3.0), theta, pc);
  CHECK(w3.mean == doctest::Approx(9.0 * w.mean).epsilon(1e-9));
  CHECK(w.n_samples == 500);
  CHECK_THROWS_AS(weighted_ito_integral(hermite_function(2), theta, PathConfig::geometric(64, 1e-4, 10, 1)),
                  InvalidParameter);
  CHECK_THROWS_AS(weighted_ito_integral(hermite_function(2), 1.0, pc), InvalidParameter);
}

TEST_CASE("Ito isometry for the fractional integral") {
  const auto pc = PathConfig::geometric(256, 1e-8, 4000, 12);
  const double theta = 0.5;
  const double alpha = 0.5 * (1.0 - theta);
  const auto zero = ito_isometry_check(hermite_function(1), theta, 0.9, pc);
  CHECK(std::fabs(zero.lhs.mean) < 1e-20);
  CHECK(std::fabs(zero.rhs.mean) < 1e-20);

  for (double t : {0.5, 0.9}) {
    const auto r = ito_isometry_check(hermite_function(2), theta, t, pc);
    const double exact = 2.0 * (1.0 - std::pow(1.0 - t, 2 * alpha + 1)) / (2 * alpha + 1);
    CHECK(r.rhs.mean == doctest::Approx(exact).epsilon(1e-12));
    CHECK(std::fabs(r.lhs.mean - r.rhs.mean) <= 3.0 * std::hypot(r.lhs.se, r.rhs.se));
  }
  const auto small = ito_isometry_check(hermite_function(2), theta, 1e-3, pc);
  CHECK(small.rhs.mean < 3e-3);
  CHECK(small.lhs.mean < 3e-3);
  CHECK_THROWS_AS(ito_isometry_check(hermite_function(2), theta, 0.0, pc), InvalidParameter);
}

TEST_CASE("divergence experiment") {
  auto s = make_extremal_system(1, 1.0);
  const auto a = standard_test_sequence(0.5, 2.0, 16);
  const auto base = PathConfig::geometric(65, 1e-8, 600, 3);
  const std::size_t unverified_N[] = {2};
  CHECK_THROWS_AS(divergence_experiment(s, a, 0.5, unverified_N, 1, base), VerificationError);
  verify_system(s, 128);
  const std::size_t too_long[] = {17};
  CHECK_THROWS_AS(divergence_experiment(s, a, 0.5, too_long, 1, base), InvalidInput);

  const std::size_t Ns[] = {0, 2, 8};
  const auto rows = divergence_experiment(s, a, 0.5, Ns, 1, base);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].weighted.mean == 0.0);
  CHECK(rows[0].holder_upper == 0.0);
  CHECK(rows[2].weighted.mean - rows[1].weighted.mean >
        2.0 * std::hypot(rows[1].weighted.se, rows[2].weighted.se));
  CHECK(rows[2].holder_upper == doctest::Approx(rows[1].holder_upper));
  CHECK(rows[2].grid_nodes > rows[1].grid_nodes);

  // another sign draw moves the integral by a bounded factor
  const auto other = divergence_experiment(s, a, 0.5, Ns, 99, base);
  const double ratio = other[2].weighted.mean / rows[2].weighted.mean;
  CHECK(ratio > 0.5);
  CHECK(ratio < 2.0);
}
