#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "interplab/gauss_analysis.hpp"
#include "interplab/interp_core.hpp"
#include "interplab/seq_space.hpp"

namespace interplab {

/// psi(u) = exp(1 - 1/(1 - u^2)) on (-1, 1), 0 elsewhere; psi(0) = 1.
double bump_profile(double u);
double bump_profile_d1(double u);
double bump_profile_d2(double u);

/// B(x) = A prod_i psi((x_i - center) / radius): a C^infinity bump supported in
/// [center - radius, center + radius]^d.
struct MotherBump {
  int dim = 1;
  double amplitude = 0.0;
  double center = 0.5;
  double radius = 0.25;

  double eval(std::span<const double> x) const;
  void grad(std::span<const double> x, std::span<double> g) const;
  /// Univariate derivatives (d = 1 only), order in {0, 1, 2}.
  double derivative_1d(double x, int order) const;
};

/// Largest |psi'| from a dense scan (cached).
double bump_profile_max_slope();

/// Bump with center 1/2 and radius 1/4 whose amplitude is calibrated so that
/// sup B <= kappa and |B|_Lip <= kappa (a 1e-4 relative margin absorbs the
/// scan error). B(0) = 0 since the support excludes the origin.
MotherBump make_mother_bump(int dim, double kappa);

/// b(x) = B(x - 2 k(x)), k_i(x) = round(x_i / 2): period 2 in each coordinate.
GaussianFunction periodize(const MotherBump& bump);

/// b_n(x) = b(2^{n-1} x) for n >= 1, with gradient scaled by 2^{n-1} and an
/// exact fine evaluator (the dyadic phase is read from the fixed-point
/// argument). Requires b produced by periodize.
GaussianFunction rescale(const MotherBump& bump, int n);

struct AssumptionReport {
  double sup_hat = 0.0;
  double lip_hat = 0.0;
  double osc_lower = 0.0;
};

struct ExtremeReport {
  int n = 0;
  double j_upper = 0.0;
  McEstimate l2;
  McEstimate d12;
  McEstimate delta_hat;
};

struct ExtremalSystem {
  int dim = 1;
  double kappa = 1.0;
  MotherBump bump;
  GaussianFunction period_map;
  /// Period-cell radius sqrt(d) and M = 2R.
  double R = 1.0;
  double M = 2.0;

  struct Measured {
    bool assumption_verified = false;
    AssumptionReport assumption;
    std::map<int, ExtremeReport> extreme;
  } measured;
};

ExtremalSystem make_extremal_system(int dim, double kappa);

/// Checks sup|b| <= kappa and |b|_Lip <= kappa by grid scans of one period cell
/// [-1, 1]^d at `resolution` points per unit, and computes
///   osc_lower = min_x int int_{|y|, |y'| <= M} |b(x + y) - b(x + y')|^2 dy dy'
/// over an x grid of the cell. The double integral is evaluated over the cube
/// [-M/sqrt(d), M/sqrt(d)]^d inscribed in the ball, through
/// int int |g(y) - g(y')|^2 = 2 |C| int g^2 - 2 (int g)^2, with composite
/// Gauss-Legendre quadrature; for d > 1 this is a lower bound of the ball
/// integral. Throws VerificationError naming the failed condition.
AssumptionReport verify_assumption(const GaussianFunction& b, double kappa, double M,
                                   int resolution);

/// verify_assumption on the system's b; records the result and sets the flag.
const AssumptionReport& verify_system(ExtremalSystem& system, int resolution = 512);

/// Composite Gauss-Legendre quadrature with cells aligned to the support of b_n
/// (d = 1), else Monte Carlo.
IntegrationMethod system_quadrature(const ExtremalSystem& system, int n, const MonteCarlo& mc);

/// j_upper = max(||b_n||_{L2}, 2^{-n} ||b_n||_{D12}) and
/// delta_hat = coupling_distance(b_n, 1 - 4^{-n}); recorded in system.measured.
/// Throws VerificationError if j_upper > kappa (1 + j_tolerance) or
/// delta_hat is not positive at 5 standard errors.
ExtremeReport verify_extreme(ExtremalSystem& system, int n, const MonteCarlo& mc,
                             double j_tolerance = 0.05);

/// f_N = sum_{n <= N} eps_n alpha_n b_n with N = a.size(); carries the fine
/// evaluator and, for d = 1, the closed-form heat-semigroup derivatives.
GaussianFunction build_fN(const ExtremalSystem& system, const WeightedSequence& a,
                          const SignVector& signs);

/// Derivatives d^order/dy^order E b(y + sqrt(sigma) Z) of the d = 1 periodic
/// bump: the mean for sigma >= 10, a Fourier series down to sigma = 2e-5 and
/// Gauss-Hermite on b^{(order)} below.
class PeriodicHeat {
 public:
  explicit PeriodicHeat(const MotherBump& bump);
  double operator()(double sigma, double y, int order) const;
  double mean() const noexcept { return cos_[0]; }

 private:
  MotherBump bump_;
  std::vector<double> cos_;
  std::vector<double> sin_;
  QuadratureRule gh_;
};

/// Flat `key = value` lines: dim, kappa, amplitude, center, radius, R, M and
/// every measured constant.
std::string serialize(const ExtremalSystem& system);

}  // namespace interplab
