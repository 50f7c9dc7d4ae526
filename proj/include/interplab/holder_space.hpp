#pragma once

#include "interplab/gauss_analysis.hpp"
#include "interplab/interp_core.hpp"
#include "interplab/seq_space.hpp"

namespace interplab {

struct ExtremalSystem;

/// Regular grid on [-half_width, half_width]^d (shifted by `origin` in every
/// coordinate) with `resolution` points per unit length.
struct BoxGrid {
  double half_width = 1.0;
  double resolution = 512.0;
  double origin = 0.0;

  /// Points per axis, at least 2.
  std::size_t points_per_axis() const;
  double spacing() const;
};

/// max |f| over the grid: a lower estimate of ||f||_inf.
double sup_norm_estimate(const GaussianFunction& f, const BoxGrid& grid);

/// max |f(x + h e_i) - f(x)| / h over adjacent grid pairs: a lower estimate
/// of the Lipschitz constant.
double lipschitz_estimate(const GaussianFunction& f, const BoxGrid& grid);

/// J-method bound for || sum_n eps_n alpha_n b_n ||_{(C_b^0, Lip^0)_{theta,q}}:
/// each b_n has sup <= kappa and Lipschitz constant <= 2^{n-1} kappa, so
/// J(2^{-(n-1)}, alpha_n eps_n b_n) <= |alpha_n| kappa. Returns
/// 2^theta kappa ||a||_{l_q^{(theta)}}. The system must have passed
/// verify_system.
double holder_j_upper(const ExtremalSystem& system, const WeightedSequence& a,
                      const SignVector& signs, double theta, double q);

}  // namespace interplab
