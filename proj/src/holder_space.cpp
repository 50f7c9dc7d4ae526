#include "interplab/holder_space.hpp"

#include <algorithm>
#include <cmath>

#include "interplab/errors.hpp"
#include "interplab/extremal_system.hpp"
#include "interplab/parallel.hpp"

namespace interplab {

std::size_t BoxGrid::points_per_axis() const {
  if (!(half_width > 0.0) || !(resolution > 0.0)) {
    throw InvalidParameter("BoxGrid: half_width and resolution must be positive");
  }
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(2.0 * half_width * resolution)) + 1);
}

double BoxGrid::spacing() const {
  return 2.0 * half_width / static_cast<double>(points_per_axis() - 1);
}

namespace {

// Calls visit(x, f(x)) on every grid point, one tile per value of the first
// coordinate, and folds the tile results with max.
template <class TileFn>
double scan_max(const GaussianFunction& f, const BoxGrid& grid, TileFn&& tile) {
  if (!f.eval) throw InvalidInput("grid scan: function has no evaluator");
  const std::size_t n = grid.points_per_axis();
  double total = 1.0;
  for (int i = 0; i < f.dim; ++i) total *= static_cast<double>(n);
  if (total > 1e9) throw Unsupported("grid scan: too many points");
  const auto part = parallel_map<double>(n, tile);
  return *std::max_element(part.begin(), part.end());
}

double coord(const BoxGrid& g, std::size_t i) {
  return g.origin - g.half_width + static_cast<double>(i) * g.spacing();
}

// Visits the points of the (d-1)-dimensional slab with first index i0.
template <class Fn>
void for_slab(const BoxGrid& g, int d, std::size_t i0, Fn&& fn) {
  const std::size_t n = g.points_per_axis();
  std::vector<std::size_t> idx(d, 0);
  idx[0] = i0;
  std::vector<double> x(d);
  for (;;) {
    for (int i = 0; i < d; ++i) x[i] = coord(g, idx[i]);
    fn(x, idx);
    int k = d - 1;
    while (k >= 1 && ++idx[k] == n) idx[k--] = 0;
    if (k < 1) return;
  }
}

}  // namespace

double sup_norm_estimate(const GaussianFunction& f, const BoxGrid& grid) {
  return scan_max(f, grid, [&](std::size_t i0) {
    double m = 0.0;
    for_slab(grid, f.dim, i0, [&](const std::vector<double>& x, const std::vector<std::size_t>&) {
      m = std::max(m, std::fabs(f.eval(x)));
    });
    return m;
  });
}

double lipschitz_estimate(const GaussianFunction& f, const BoxGrid& grid) {
  const std::size_t n = grid.points_per_axis();
  const double h = grid.spacing();
  return scan_max(f, grid, [&](std::size_t i0) {
    double m = 0.0;
    std::vector<double> y(f.dim);
    for_slab(grid, f.dim, i0, [&](const std::vector<double>& x, const std::vector<std::size_t>& idx) {
      const double fx = f.eval(x);
      for (int i = 0; i < f.dim; ++i) {
        if (idx[i] + 1 >= n) continue;
        y = x;
        y[i] = coord(grid, idx[i] + 1);
        m = std::max(m, std::fabs(f.eval(y) - fx) / h);
      }
    });
    return m;
  });
}

double holder_j_upper(const ExtremalSystem& system, const WeightedSequence& a,
                      const SignVector& signs, double theta, double q) {
  if (!system.measured.assumption_verified) {
    throw VerificationError("holder_j_upper: system has not passed verify_system");
  }
  if (signs.signs.size() < a.size()) throw InvalidInput("holder_j_upper: fewer signs than coefficients");
  std::vector<JTerm> terms;
  terms.reserve(a.size());
  for (std::size_t n = 1; n <= a.size(); ++n) {
    terms.push_back({static_cast<int>(n), std::fabs(a.at(n)) * system.kappa});
  }
  if (terms.empty()) {
    if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("theta must lie in (0, 1)");
    return 0.0;
  }
  return std::exp2(theta) * j_method_upper(terms, theta, q);
}

}  // namespace interplab
