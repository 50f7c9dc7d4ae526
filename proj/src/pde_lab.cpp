#include "interplab/pde_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "interplab/errors.hpp"
#include "interplab/holder_space.hpp"
#include "interplab/parallel.hpp"
#include "interplab/random.hpp"

namespace interplab {

namespace {

constexpr std::uint64_t kPathBlock = 64;

void check_order(int order) {
  if (order < 0 || order > 2) throw InvalidParameter("heat derivative order must be 0, 1 or 2");
}

void check_theta(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("theta must lie in (0, 1)");
}

// int over a cell [u_a, u_b] of (1-u)^{p-1} du, times p: tau_a^p - tau_b^p
double cell_weight(double tau_a, double tau_b, double p) {
  return std::pow(tau_a, p) - std::pow(tau_b, p);
}

struct PathSums {
  double s1[2] = {0.0, 0.0};
  double s2[2] = {0.0, 0.0};
};

// Simulates W on the grid (path p keyed by derive_seed(seed, p)) and collects
// mean and se of the two values path_fn returns for each path.
template <class PathFn>
std::pair<McEstimate, McEstimate> run_paths(const PathConfig& pc, PathFn&& path_fn) {
  const std::uint64_t n = pc.n_paths;
  if (n < 2) throw InvalidParameter("at least 2 paths required");
  const std::size_t blocks = static_cast<std::size_t>((n + kPathBlock - 1) / kPathBlock);
  const auto parts = parallel_map<PathSums>(blocks, [&](std::size_t b) {
    PathSums s;
    const std::uint64_t end = std::min<std::uint64_t>(n, (b + 1) * kPathBlock);
    std::vector<FixedReal> w(pc.nodes());
    for (std::uint64_t p = b * kPathBlock; p < end; ++p) {
      CounterRng rng(pc.seed, p);
      std::normal_distribution<double> nd;
      FixedReal x;
      for (std::size_t j = 0; j < pc.nodes(); ++j) {
        w[j] = x;
        if (j + 1 < pc.nodes()) {
          x += FixedReal::dithered(std::sqrt(pc.tau[j] - pc.tau[j + 1]) * nd(rng), rng);
        }
      }
      const auto [v0, v1] = path_fn(std::span<const FixedReal>(w));
      s.s1[0] += v0;
      s.s2[0] += v0 * v0;
      s.s1[1] += v1;
      s.s2[1] += v1 * v1;
    }
    return s;
  });
  std::pair<McEstimate, McEstimate> out;
  McEstimate* e[2] = {&out.first, &out.second};
  const double nn = static_cast<double>(n);
  for (int k = 0; k < 2; ++k) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (const auto& p : parts) {
      s1 += p.s1[k];
      s2 += p.s2[k];
    }
    e[k]->mean = s1 / nn;
    e[k]->se = std::sqrt(std::max(0.0, (s2 - nn * e[k]->mean * e[k]->mean) / (nn - 1.0)) / nn);
    e[k]->n_samples = n;
    e[k]->seed = pc.seed;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------- heat

HeatExtension::HeatExtension(GaussianFunction f, int m) : f_(std::move(f)) {
  if (f_.dim != 1) throw Unsupported("heat_eval: d = 1 only");
  if (!f_.heat) rule_ = gauss_hermite_nodes(m);
}

double HeatExtension::operator()(double t, double x, int order) const {
  if (!(t >= 0.0 && t < 1.0)) throw InvalidParameter("heat_eval: t must lie in [0, 1)");
  return at_complement(1.0 - t, FixedReal::from_double(x), order);
}

double HeatExtension::at_complement(double tau, const FixedReal& x, int order) const {
  check_order(order);
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidParameter("heat_eval: 1 - t must lie in (0, 1]");
  if (f_.heat) return f_.heat(tau, x, order);
  const auto& rule = rule_;
  const double s = std::sqrt(tau);
  const double x0 = x.to_double();
  double acc = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double z = rule.nodes[i];
    const double v = f_(x0 + s * z);
    switch (order) {
      case 0: acc += rule.weights[i] * v; break;
      case 1: acc += rule.weights[i] * v * z; break;
      default: acc += rule.weights[i] * v * (z * z - 1.0); break;
    }
  }
  if (order == 1) return acc / s;
  if (order == 2) return acc / tau;
  return acc;
}

double heat_eval(const GaussianFunction& f, double t, double x, int order, int m) {
  return HeatExtension(f, m)(t, x, order);
}

// ---------------------------------------------------------------- grid

PathConfig PathConfig::geometric(int nodes, double tau_min, std::uint64_t n_paths,
                                 std::uint64_t seed) {
  if (nodes < 2) throw InvalidParameter("PathConfig: at least 2 nodes");
  if (!(tau_min > 0.0 && tau_min < 1.0)) throw InvalidParameter("PathConfig: tau_min must lie in (0, 1)");
  PathConfig pc;
  pc.n_paths = n_paths;
  pc.seed = seed;
  const double l = std::log2(tau_min);
  for (int j = 0; j < nodes; ++j) pc.tau.push_back(std::exp2(l * j / (nodes - 1)));
  pc.tau.front() = 1.0;
  pc.tau.back() = tau_min;
  return pc;
}

void PathConfig::validate() const {
  if (tau.size() < 2) throw InvalidParameter("PathConfig: at least 2 nodes");
  if (tau.front() != 1.0) throw InvalidParameter("PathConfig: the grid must start at u = 0");
  for (std::size_t j = 1; j < tau.size(); ++j) {
    if (!(tau[j] < tau[j - 1] && tau[j] > 0.0)) {
      throw InvalidParameter("PathConfig: grid must increase strictly inside [0, 1)");
    }
  }
}

PathConfig PathConfig::with_node(double t) const {
  if (!(t >= 0.0 && t < 1.0)) throw InvalidParameter("PathConfig: node must lie in [0, 1)");
  PathConfig pc = *this;
  const double c = 1.0 - t;
  const auto it = std::lower_bound(pc.tau.begin(), pc.tau.end(), c, std::greater<>());
  if (it == pc.tau.end() || *it != c) pc.tau.insert(it, c);
  return pc;
}

// ---------------------------------------------------------------- integrals

double frac_integral_path(std::span<const std::pair<double, double>> phi_path, double alpha,
                          double t) {
  if (phi_path.empty()) throw InvalidInput("frac_integral_path: empty path");
  if (!(alpha > 0.0)) throw InvalidParameter("frac_integral_path: alpha must be positive");
  if (!(t >= 0.0 && t < 1.0)) throw InvalidParameter("frac_integral_path: t must lie in [0, 1)");
  // sum over cells [u_j, u_{j+1}) ^ [0, t] of phi_j ((1-u_j)^alpha - (1-u_{j+1})^alpha),
  // the value before the first node being phi_0, then phi at t times (1-t)^alpha
  double acc = 0.0;
  double lo = 0.0;
  double current = phi_path.front().second;
  for (std::size_t j = 0; j < phi_path.size(); ++j) {
    const double u = phi_path[j].first;
    if (j > 0 && !(u > phi_path[j - 1].first)) {
      throw InvalidInput("frac_integral_path: nodes must increase");
    }
    if (u > t) break;
    if (u > lo) {
      acc += current * (std::pow(1.0 - lo, alpha) - std::pow(1.0 - u, alpha));
      lo = u;
    }
    current = phi_path[j].second;
  }
  // [lo, t] at the current value, then the stopped value on [t, 1)
  acc += current * std::pow(1.0 - lo, alpha);
  return acc;
}

McEstimate weighted_ito_integral(const GaussianFunction& f, double theta, const PathConfig& paths) {
  check_theta(theta);
  paths.validate();
  if (paths.tau.back() > 1e-6) {
    throw InvalidParameter("weighted_ito_integral: last grid node must reach 1 - 1e-6");
  }
  const HeatExtension F(f);
  const double p = 2.0 - theta;
  const std::size_t m = paths.nodes();
  std::vector<double> w(m);
  for (std::size_t j = 0; j < m; ++j) {
    w[j] = cell_weight(paths.tau[j], j + 1 < m ? paths.tau[j + 1] : 0.0, p) / p;
  }
  return run_paths(paths, [&](std::span<const FixedReal> x) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double d2 = F.at_complement(paths.tau[j], x[j], 2);
      s += w[j] * d2 * d2;
    }
    return std::pair{s, 0.0};
  }).first;
}

IsometryReport ito_isometry_check(const GaussianFunction& f, double theta, double t,
                                  const PathConfig& paths) {
  check_theta(theta);
  if (!(t > 0.0 && t < 1.0)) throw InvalidParameter("ito_isometry_check: t must lie in (0, 1)");
  const PathConfig pc = paths.with_node(t);
  pc.validate();
  const double alpha = 0.5 * (1.0 - theta);
  const double p = 2.0 * alpha + 1.0;
  const double c = 1.0 - t;
  const std::size_t jt = static_cast<std::size_t>(
      std::find(pc.tau.begin(), pc.tau.end(), c) - pc.tau.begin());
  std::vector<double> w(jt);
  for (std::size_t j = 0; j < jt; ++j) w[j] = cell_weight(pc.tau[j], pc.tau[j + 1], p) / p;
  const HeatExtension F(f);
  const auto [lhs, rhs] = run_paths(pc, [&](std::span<const FixedReal> x) {
    std::vector<std::pair<double, double>> phi(jt + 1);
    double r = 0.0;
    for (std::size_t j = 0; j <= jt; ++j) {
      phi[j] = {pc.u(j), F.at_complement(pc.tau[j], x[j], 1)};
      if (j < jt) {
        const double d2 = F.at_complement(pc.tau[j], x[j], 2);
        r += w[j] * d2 * d2;
      }
    }
    const double dev = frac_integral_path(phi, alpha, t) - phi[0].second;
    return std::pair{dev * dev, r};
  });
  return {lhs, rhs};
}

std::vector<DivergenceRow> divergence_experiment(const ExtremalSystem& system,
                                                 const WeightedSequence& a, double theta,
                                                 std::span<const std::size_t> N_list,
                                                 std::uint64_t signs_seed,
                                                 const PathConfig& paths, double q_high) {
  check_theta(theta);
  paths.validate();
  if (system.dim != 1) throw Unsupported("divergence_experiment: d = 1 only");
  const double octaves = -std::log2(paths.tau.back());
  const double density = static_cast<double>(paths.nodes() - 1) / octaves;
  std::vector<DivergenceRow> rows;
  for (std::size_t N : N_list) {
    if (N > a.size()) {
      throw InvalidInput("divergence_experiment: N=" + std::to_string(N) + " exceeds the sequence length");
    }
    const WeightedSequence aN = a.truncated(N);
    const SignVector eps = N == 0 ? SignVector{{}, signs_seed} : rademacher_sample(N, signs_seed);
    DivergenceRow row;
    row.N = N;
    row.holder_upper = holder_j_upper(system, aN, eps, theta, q_high);
    const double tau_min = std::min(paths.tau.back(), std::exp2(-2.0 * (static_cast<double>(N) + 8.0)));
    const int nodes = static_cast<int>(std::ceil(density * -std::log2(tau_min))) + 1;
    const PathConfig pc = PathConfig::geometric(nodes, tau_min, paths.n_paths, paths.seed);
    row.grid_nodes = pc.nodes();
    if (N == 0) {
      row.weighted = McEstimate{0.0, 0.0, pc.n_paths, pc.seed};
    } else {
      row.weighted = weighted_ito_integral(build_fN(system, aN, eps), theta, pc);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace interplab
