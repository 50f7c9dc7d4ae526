#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "interplab/fixed_real.hpp"
#include "interplab/interp_core.hpp"

namespace interplab {

/// Coefficients <f, h_{k_1} ... h_{k_d}> for all multi-indices with k_i <= k_cap,
/// stored row-major (first coordinate slowest).
class HermiteCoeffs {
 public:
  HermiteCoeffs(int dim, int k_cap);

  int dim() const noexcept { return dim_; }
  int k_cap() const noexcept { return k_cap_; }
  std::size_t size() const noexcept { return c_.size(); }

  double& operator[](std::size_t flat) { return c_[flat]; }
  double operator[](std::size_t flat) const { return c_[flat]; }
  double& at(std::span<const int> multi) { return c_[flat_index(multi)]; }

  std::size_t flat_index(std::span<const int> multi) const;
  std::vector<int> multi_index(std::size_t flat) const;
  int total_degree(std::size_t flat) const;

  /// Euclidean norm of the coefficients (= ||f||_{L2(gamma_d)} by Parseval).
  double norm() const;

 private:
  int dim_;
  int k_cap_;
  std::vector<double> c_;
};

/// Extended-precision evaluation for functions whose values depend on bits
/// of the argument beyond double precision. `diff` returns f(x) - f(y)
/// without cancellation when x and y are close.
struct FineEvaluator {
  std::function<double(std::span<const FixedReal>)> eval;
  std::function<double(std::span<const FixedReal>, std::span<const FixedReal>)> diff;
  explicit operator bool() const noexcept { return static_cast<bool>(eval); }
};

/// Closed-form heat-semigroup derivative for d = 1:
/// d^order/dx^order E g(x + sqrt(tau) Z), order in {0, 1, 2}.
using HeatHook = std::function<double(double tau, const FixedReal& x, int order)>;

/// f : R^d -> R with optional gradient, Hermite representation and fast paths.
struct GaussianFunction {
  int dim = 1;
  std::function<double(std::span<const double>)> eval;
  std::function<void(std::span<const double>, std::span<double>)> grad;
  std::optional<HermiteCoeffs> hermite;
  FineEvaluator fine;
  HeatHook heat;
  /// Distance to the nearest point where f is not differentiable (empty: none).
  std::function<double(std::span<const double>)> kink_distance;

  double operator()(double x) const { return eval(std::span<const double>(&x, 1)); }
};

GaussianFunction constant_function(double c, int dim = 1);
/// x -> x_i (0-based coordinate).
GaussianFunction coordinate_function(int i, int dim);
/// Orthonormal h_k in d = 1.
GaussianFunction hermite_function(int k);
GaussianFunction from_hermite(HermiteCoeffs coeffs);
/// c * f, preserving every optional representation.
GaussianFunction scaled(const GaussianFunction& f, double c);

/// Largest degree accepted by hermite_eval.
inline constexpr int kMaxHermiteDegree = 60;

/// Orthonormal probabilists' Hermite polynomial h_k(x) = He_k(x)/sqrt(k!).
double hermite_eval(int k, double x);

/// h_0(x), ..., h_{kmax}(x) by the normalized three-term recurrence; no
/// degree guard.
void hermite_values(int kmax, double x, std::span<double> out);

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Nodes and weights with sum_i w_i g(x_i) ~ int g d gamma_1, exact for
/// polynomials of degree <= 2m - 1. 1 <= m <= 256.
QuadratureRule gauss_hermite_nodes(int m);

/// Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre_nodes(int m);

/// Tensor Gauss-Hermite (cell == 0) or Gauss-Legendre stratified over cells
/// of length `cell` tiling [-half_width, half_width]^d (cell > 0; the cells
/// are aligned with the origin). Tensor rules are limited to d <= 3.
struct Quadrature {
  int m = 64;
  double cell = 0.0;
  double half_width = 8.0;
};

struct MonteCarlo {
  std::uint64_t n = 100000;
  std::uint64_t seed = 0;
};

using IntegrationMethod = std::variant<Quadrature, MonteCarlo>;

/// E g(X), X ~ gamma_d. Quadrature results carry se = 0.
McEstimate gaussian_expectation(const std::function<double(std::span<const double>)>& g,
                                int dim, const IntegrationMethod& method);

/// ||f||_{L2(gamma_d)}. Monte Carlo uses f.fine when present.
McEstimate l2_gamma_norm(const GaussianFunction& f, const IntegrationMethod& method);

/// sqrt(||f||^2 + ||grad f||^2) in L2(gamma_d). Requires f.grad.
McEstimate d12_norm(const GaussianFunction& f, const IntegrationMethod& method);

/// Minimum number of samples accepted by the coupling estimator.
inline constexpr std::uint64_t kMinCouplingSamples = 100;

/// ||f(W_1) - f(W_t + W'_{1-t})||_{L2} via (G + Z, G + Z') with
/// G ~ N(0, t I), Z, Z' ~ N(0, (1-t) I). t in [0, 1); t = 0 couples two
/// independent copies.
McEstimate coupling_distance(const GaussianFunction& f, double t, const MonteCarlo& mc);

/// Same as coupling_distance with the complement tau = 1 - t passed directly,
/// so that t = 1 - 4^{-k} keeps full precision for large k. tau in (0, 1].
McEstimate coupling_distance_complement(const GaussianFunction& f, double tau,
                                        const MonteCarlo& mc);

/// Exact coupling distance of a Hermite expansion:
/// sqrt(2 sum_k (1 - t^{|k|}) c_k^2).
double mehler_distance(const HermiteCoeffs& c, double t);
double mehler_distance_complement(const HermiteCoeffs& c, double tau);

/// K_k = coupling_distance(f, 1 - 4^{-k}) + 2^{-k} ||f||_{L2}, k = 0..k_max,
/// e0_norm = ||f||_{L2}. The L2 norm uses `l2_method` when given, otherwise
/// Monte Carlo with mc.n samples.
KProfile gaussian_k_profile(const GaussianFunction& f, int k_max, const MonteCarlo& mc,
                            const std::optional<IntegrationMethod>& l2_method = std::nullopt);

/// The same profile computed exactly from Hermite coefficients.
KProfile mehler_k_profile(const HermiteCoeffs& c, int k_max);

/// k_method_norm of a noisy profile; se by resampling each profile value
/// (and e0_norm) within its standard error.
McEstimate besov_from_profile(const KProfile& profile, double theta, double q,
                              std::uint64_t seed);

/// Gaussian Besov norm estimate of f: besov_from_profile(gaussian_k_profile(...)).
McEstimate besov_norm(const GaussianFunction& f, double theta, double q, int k_max,
                      const MonteCarlo& mc,
                      const std::optional<IntegrationMethod>& l2_method = std::nullopt);

/// Largest relative deviation between central finite differences of f.eval
/// (step h) and f.grad at n standard-normal points, skipping points within
/// 1e-3 of declared kinks.
double gradient_check(const GaussianFunction& f, int n_points, std::uint64_t seed,
                      double h = 1e-5);

}  // namespace interplab
