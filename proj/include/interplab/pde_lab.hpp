#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "interplab/extremal_system.hpp"
#include "interplab/fixed_real.hpp"
#include "interplab/gauss_analysis.hpp"
#include "interplab/interp_core.hpp"

namespace interplab {

/// F(t, x) = E f(x + W_{1-t}) for f : R -> R and its x-derivatives.
/// Uses f.heat when present, otherwise m-node Gauss-Hermite quadrature with
/// the integration-by-parts weights z / sqrt(1-t) and (z^2 - 1) / (1-t).
class HeatExtension {
 public:
  explicit HeatExtension(GaussianFunction f, int m = 64);

  /// t in [0, 1), order in {0, 1, 2}.
  double operator()(double t, double x, int order) const;
  /// Same with the complement tau = 1 - t in (0, 1] and an exact argument.
  double at_complement(double tau, const FixedReal& x, int order) const;

 private:
  GaussianFunction f_;
  QuadratureRule rule_;
};

double heat_eval(const GaussianFunction& f, double t, double x, int order, int m = 64);

/// Time grid u_0 = 0 < u_1 < ... < u_m < 1, stored through the complements
/// tau_j = 1 - u_j (exact near u = 1), with the path count and seed.
struct PathConfig {
  std::vector<double> tau;
  std::uint64_t n_paths = 2000;
  std::uint64_t seed = 0;

  /// tau_j = tau_min^{j/(nodes-1)}: uniform in log(1 - u).
  static PathConfig geometric(int nodes, double tau_min, std::uint64_t n_paths, std::uint64_t seed);

  std::size_t nodes() const noexcept { return tau.size(); }
  double u(std::size_t j) const { return 1.0 - tau[j]; }
  /// Throws unless tau starts at 1 and decreases strictly towards (0, 1).
  void validate() const;
  /// A copy with 1 - t inserted as a node (no-op when present).
  PathConfig with_node(double t) const;
};

/// alpha int_0^1 (1-u)^{alpha-1} phi_{u ^ t} du for a path that is constant
/// on [u_j, u_{j+1}): the weight is integrated exactly on every cell.
double frac_integral_path(std::span<const std::pair<double, double>> phi_path, double alpha,
                          double t);

/// E int_0^1 (1-u)^{1-theta} |d^2F/dx^2(u, W_u)|^2 du with d^2F held constant
/// on each grid cell (the cell weight is integrated exactly); se over paths.
/// Requires the last node at or beyond 1 - 1e-6.
McEstimate weighted_ito_integral(const GaussianFunction& f, double theta, const PathConfig& paths);

struct IsometryReport {
  McEstimate lhs;
  McEstimate rhs;
};

/// With alpha = (1-theta)/2 and phi_u = dF/dx(u, W_u):
///   lhs = E |I^alpha_t phi - phi_0|^2,
///   rhs = E int_0^t (1-u)^{2 alpha} |d^2F/dx^2(u, W_u)|^2 du,
/// on the grid with t inserted as a node.
IsometryReport ito_isometry_check(const GaussianFunction& f, double theta, double t,
                                  const PathConfig& paths);

struct DivergenceRow {
  std::size_t N = 0;
  McEstimate weighted;
  double holder_upper = 0.0;
  std::size_t grid_nodes = 0;
};

/// For each N: f_N = build_fN(system, a^N, eps) with eps =
/// rademacher_sample(N, signs_seed), its weighted Ito integral and
/// holder_j_upper(a^N, theta, q_high). The grid for N keeps the node density
/// (per unit of log2(1/tau)) of `paths` and extends down to
/// min(paths' last tau, 4^{-(N + 8)}).
std::vector<DivergenceRow> divergence_experiment(const ExtremalSystem& system,
                                                 const WeightedSequence& a, double theta,
                                                 std::span<const std::size_t> N_list,
                                                 std::uint64_t signs_seed,
                                                 const PathConfig& paths, double q_high = kInf);

}  // namespace interplab
