#include "interplab/gauss_analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <string>

#include "interplab/errors.hpp"
#include "interplab/parallel.hpp"
#include "interplab/random.hpp"

namespace interplab {

namespace {

constexpr std::uint64_t kBlock = 4096;

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// sum and sum of squares of one Monte-Carlo block
struct Moments {
  double s1 = 0.0;
  double s2 = 0.0;
};

// mean and se of a quantity from per-block moments
McEstimate reduce(const std::vector<Moments>& blocks, std::uint64_t n, std::uint64_t seed) {
  double s1 = 0.0;
  double s2 = 0.0;
  for (const auto& b : blocks) {
    s1 += b.s1;
    s2 += b.s2;
  }
  const double nn = static_cast<double>(n);
  McEstimate e;
  e.mean = s1 / nn;
  e.n_samples = n;
  e.seed = seed;
  if (n > 1) {
    const double var = std::max(0.0, (s2 - nn * e.mean * e.mean) / (nn - 1.0));
    e.se = std::sqrt(var / nn);
  }
  return e;
}

// sqrt of a nonnegative estimate with delta-method se
McEstimate sqrt_estimate(McEstimate e) {
  const double m = std::max(e.mean, 0.0);
  e.mean = std::sqrt(m);
  e.se = m > 0.0 ? e.se / (2.0 * e.mean) : 0.0;
  return e;
}

std::uint64_t block_count(std::uint64_t n) { return (n + kBlock - 1) / kBlock; }

std::uint64_t block_size(std::uint64_t b, std::uint64_t n) {
  return std::min(kBlock, n - b * kBlock);
}

// 1-D rule whose tensor power integrates against gamma_d.
QuadratureRule gamma_rule_1d(const Quadrature& q) {
  if (q.cell <= 0.0) return gauss_hermite_nodes(q.m);
  const auto base = gauss_legendre_nodes(q.m);
  const auto cells = static_cast<long>(std::llround(2.0 * q.half_width / q.cell));
  if (cells < 1) throw InvalidParameter("quadrature cell larger than the domain");
  QuadratureRule r;
  r.nodes.reserve(cells * q.m);
  r.weights.reserve(cells * q.m);
  const double h = 2.0 * q.half_width / static_cast<double>(cells);
  for (long c = 0; c < cells; ++c) {
    const double mid = -q.half_width + (static_cast<double>(c) + 0.5) * h;
    for (int i = 0; i < q.m; ++i) {
      const double x = mid + 0.5 * h * base.nodes[i];
      r.nodes.push_back(x);
      r.weights.push_back(0.5 * h * base.weights[i] * normal_pdf(x));
    }
  }
  return r;
}

double tensor_sum(const std::function<double(std::span<const double>)>& g, int dim,
                  const QuadratureRule& rule) {
  const std::size_t p = rule.nodes.size();
  std::size_t total = 1;
  for (int i = 0; i < dim; ++i) total *= p;
  std::vector<double> x(dim);
  double acc = 0.0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rest = flat;
    double w = 1.0;
    for (int i = dim - 1; i >= 0; --i) {
      const std::size_t j = rest % p;
      rest /= p;
      x[i] = rule.nodes[j];
      w *= rule.weights[j];
    }
    acc += w * g(x);
  }
  return acc;
}

}  // namespace

// ---------------------------------------------------------------- Hermite

HermiteCoeffs::HermiteCoeffs(int dim, int k_cap) : dim_(dim), k_cap_(k_cap) {
  if (dim < 1 || k_cap < 0) throw InvalidParameter("HermiteCoeffs: dim >= 1 and k_cap >= 0");
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(k_cap + 1);
  c_.assign(n, 0.0);
}

std::size_t HermiteCoeffs::flat_index(std::span<const int> multi) const {
  if (static_cast<int>(multi.size()) != dim_) throw InvalidInput("multi-index has wrong length");
  std::size_t flat = 0;
  for (int k : multi) {
    if (k < 0 || k > k_cap_) throw InvalidInput("multi-index entry out of range");
    flat = flat * static_cast<std::size_t>(k_cap_ + 1) + static_cast<std::size_t>(k);
  }
  return flat;
}

std::vector<int> HermiteCoeffs::multi_index(std::size_t flat) const {
  std::vector<int> m(dim_);
  for (int i = dim_ - 1; i >= 0; --i) {
    m[i] = static_cast<int>(flat % static_cast<std::size_t>(k_cap_ + 1));
    flat /= static_cast<std::size_t>(k_cap_ + 1);
  }
  return m;
}

int HermiteCoeffs::total_degree(std::size_t flat) const {
  int s = 0;
  for (int k : multi_index(flat)) s += k;
  return s;
}

double HermiteCoeffs::norm() const {
  double s = 0.0;
  for (double c : c_) s += c * c;
  return std::sqrt(s);
}

void hermite_values(int kmax, double x, std::span<double> out) {
  out[0] = 1.0;
  if (kmax >= 1) out[1] = x;
  for (int k = 1; k < kmax; ++k) {
    out[k + 1] = (x * out[k] - std::sqrt(static_cast<double>(k)) * out[k - 1]) /
                 std::sqrt(static_cast<double>(k + 1));
  }
}

double hermite_eval(int k, double x) {
  if (k < 0) throw InvalidParameter("hermite_eval: negative degree");
  if (k > kMaxHermiteDegree) {
    throw Unsupported("hermite_eval: degree " + std::to_string(k) + " exceeds precision guard " +
                      std::to_string(kMaxHermiteDegree));
  }
  std::vector<double> h(k + 1);
  hermite_values(k, x, h);
  return h[k];
}

QuadratureRule gauss_hermite_nodes(int m) {
  if (m < 1 || m > 256) throw InvalidParameter("gauss_hermite_nodes: m must lie in [1, 256]");
  QuadratureRule r;
  if (m == 1) {
    r.nodes = {0.0};
    r.weights = {1.0};
    return r;
  }
  // Golub-Welsch on the Jacobi matrix of the orthonormal family.
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd sub(m - 1);
  for (int k = 1; k < m; ++k) sub[k - 1] = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  std::vector<double> h(m + 1);
  r.nodes.resize(m);
  r.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    double x = es.eigenvalues()[i];
    for (int it = 0; it < 3; ++it) {  // Newton polish: h_m' = sqrt(m) h_{m-1}
      hermite_values(m, x, h);
      const double step = h[m] / (std::sqrt(static_cast<double>(m)) * h[m - 1]);
      x -= step;
      if (std::fabs(step) < 1e-15 * std::max(1.0, std::fabs(x))) break;
    }
    hermite_values(m - 1, x, h);
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += h[k] * h[k];
    r.nodes[i] = x;
    r.weights[i] = 1.0 / s;  // Christoffel number
  }
  for (int i = 0; i < m / 2; ++i) {  // enforce exact symmetry
    const double x = 0.5 * (r.nodes[m - 1 - i] - r.nodes[i]);
    const double w = 0.5 * (r.weights[i] + r.weights[m - 1 - i]);
    r.nodes[i] = -x;
    r.nodes[m - 1 - i] = x;
    r.weights[i] = r.weights[m - 1 - i] = w;
  }
  if (m % 2 == 1) r.nodes[m / 2] = 0.0;
  return r;
}

QuadratureRule gauss_legendre_nodes(int m) {
  if (m < 1) throw InvalidParameter("gauss_legendre_nodes: m must be positive");
  QuadratureRule r;
  r.nodes.resize(m);
  r.weights.resize(m);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = m * (x * p1 - p0) / (x * x - 1.0);
      const double step = p1 / dp;
      x -= step;
      if (std::fabs(step) < 1e-16) break;
    }
    r.nodes[i] = -x;
    r.nodes[m - 1 - i] = x;
    r.weights[i] = r.weights[m - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// ---------------------------------------------------------------- functions

GaussianFunction constant_function(double c, int dim) {
  GaussianFunction f;
  f.dim = dim;
  f.eval = [c](std::span<const double>) { return c; };
  f.grad = [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); };
  HermiteCoeffs h(dim, 0);
  h[0] = c;
  f.hermite = h;
  f.fine.eval = [c](std::span<const FixedReal>) { return c; };
  f.fine.diff = [](std::span<const FixedReal>, std::span<const FixedReal>) { return 0.0; };
  return f;
}

GaussianFunction coordinate_function(int i, int dim) {
  if (i < 0 || i >= dim) throw InvalidParameter("coordinate_function: index out of range");
  GaussianFunction f;
  f.dim = dim;
  f.eval = [i](std::span<const double> x) { return x[i]; };
  f.grad = [i](std::span<const double>, std::span<double> g) {
    std::fill(g.begin(), g.end(), 0.0);
    g[i] = 1.0;
  };
  HermiteCoeffs h(dim, 1);
  std::vector<int> multi(dim, 0);
  multi[i] = 1;
  h.at(multi) = 1.0;
  f.hermite = h;
  return f;
}

GaussianFunction hermite_function(int k) {
  HermiteCoeffs c(1, k);
  c[k] = 1.0;
  return from_hermite(std::move(c));
}

GaussianFunction from_hermite(HermiteCoeffs coeffs) {
  GaussianFunction f;
  f.dim = coeffs.dim();
  const int kc = coeffs.k_cap();
  auto shared = std::make_shared<const HermiteCoeffs>(coeffs);
  // Per-coordinate tables of h_k(x_i) and h_k'(x_i) = sqrt(k) h_{k-1}(x_i).
  auto tables = [kc](std::span<const double> x, std::vector<double>& h, std::vector<double>& dh) {
    const std::size_t d = x.size();
    h.assign(d * (kc + 1), 0.0);
    dh.assign(d * (kc + 1), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      hermite_values(kc, x[i], std::span<double>(h.data() + i * (kc + 1), kc + 1));
      for (int k = 1; k <= kc; ++k) {
        dh[i * (kc + 1) + k] = std::sqrt(static_cast<double>(k)) * h[i * (kc + 1) + k - 1];
      }
    }
  };
  f.eval = [shared, tables, kc](std::span<const double> x) {
    std::vector<double> h, dh;
    tables(x, h, dh);
    double s = 0.0;
    for (std::size_t flat = 0; flat < shared->size(); ++flat) {
      const double c = (*shared)[flat];
      if (c == 0.0) continue;
      double p = c;
      const auto multi = shared->multi_index(flat);
      for (std::size_t i = 0; i < multi.size(); ++i) p *= h[i * (kc + 1) + multi[i]];
      s += p;
    }
    return s;
  };
  f.grad = [shared, tables, kc](std::span<const double> x, std::span<double> g) {
    std::vector<double> h, dh;
    tables(x, h, dh);
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t flat = 0; flat < shared->size(); ++flat) {
      const double c = (*shared)[flat];
      if (c == 0.0) continue;
      const auto multi = shared->multi_index(flat);
      for (std::size_t j = 0; j < multi.size(); ++j) {
        double p = c;
        for (std::size_t i = 0; i < multi.size(); ++i) {
          p *= (i == j ? dh : h)[i * (kc + 1) + multi[i]];
        }
        g[j] += p;
      }
    }
  };
  f.hermite = std::move(coeffs);
  return f;
}

GaussianFunction scaled(const GaussianFunction& f, double c) {
  GaussianFunction g;
  g.dim = f.dim;
  g.kink_distance = f.kink_distance;
  g.eval = [f, c](std::span<const double> x) { return c * f.eval(x); };
  if (f.grad) {
    g.grad = [f, c](std::span<const double> x, std::span<double> out) {
      f.grad(x, out);
      for (auto& v : out) v *= c;
    };
  }
  if (f.hermite) {
    HermiteCoeffs h = *f.hermite;
    for (std::size_t i = 0; i < h.size(); ++i) h[i] *= c;
    g.hermite = h;
  }
  if (f.fine) {
    g.fine.eval = [f, c](std::span<const FixedReal> x) { return c * f.fine.eval(x); };
    g.fine.diff = [f, c](std::span<const FixedReal> x, std::span<const FixedReal> y) {
      return c * f.fine.diff(x, y);
    };
  }
  if (f.heat) {
    g.heat = [f, c](double tau, const FixedReal& x, int order) { return c * f.heat(tau, x, order); };
  }
  return g;
}

// ---------------------------------------------------------------- integration

McEstimate gaussian_expectation(const std::function<double(std::span<const double>)>& g,
                                int dim, const IntegrationMethod& method) {
  if (dim < 1) throw InvalidParameter("dimension must be positive");
  if (const auto* q = std::get_if<Quadrature>(&method)) {
    if (dim > 3) {
      throw Unsupported("tensor quadrature is limited to d <= 3; use Monte Carlo for d = " +
                        std::to_string(dim));
    }
    const auto rule = gamma_rule_1d(*q);
    McEstimate e;
    e.mean = tensor_sum(g, dim, rule);
    e.n_samples = static_cast<std::uint64_t>(std::pow(rule.nodes.size(), dim));
    return e;
  }
  const auto& mc = std::get<MonteCarlo>(method);
  if (mc.n < 2) throw InvalidParameter("Monte Carlo needs at least 2 samples");
  const auto blocks = parallel_map<Moments>(block_count(mc.n), [&](std::size_t b) {
    CounterRng rng(mc.seed, b);
    std::normal_distribution<double> nd;
    std::vector<double> x(dim);
    Moments m;
    for (std::uint64_t i = 0; i < block_size(b, mc.n); ++i) {
      for (auto& xi : x) xi = nd(rng);
      const double v = g(x);
      m.s1 += v;
      m.s2 += v * v;
    }
    return m;
  });
  return reduce(blocks, mc.n, mc.seed);
}

namespace {

// E f(X)^2 (plus |grad f|^2 when with_grad), Monte Carlo through f.fine.
McEstimate fine_second_moment(const GaussianFunction& f, const MonteCarlo& mc) {
  const int d = f.dim;
  const auto blocks = parallel_map<Moments>(block_count(mc.n), [&](std::size_t b) {
    CounterRng rng(mc.seed, b);
    std::normal_distribution<double> nd;
    std::vector<FixedReal> x(d);
    Moments m;
    for (std::uint64_t i = 0; i < block_size(b, mc.n); ++i) {
      for (auto& xi : x) xi = FixedReal::dithered(nd(rng), rng);
      const double v = f.fine.eval(x);
      m.s1 += v * v;
      m.s2 += v * v * v * v;
    }
    return m;
  });
  return reduce(blocks, mc.n, mc.seed);
}

}  // namespace

McEstimate l2_gamma_norm(const GaussianFunction& f, const IntegrationMethod& method) {
  if (std::holds_alternative<MonteCarlo>(method) && f.fine) {
    const auto& mc = std::get<MonteCarlo>(method);
    if (mc.n < 2) throw InvalidParameter("Monte Carlo needs at least 2 samples");
    return sqrt_estimate(fine_second_moment(f, mc));
  }
  return sqrt_estimate(gaussian_expectation(
      [&f](std::span<const double> x) {
        const double v = f.eval(x);
        return v * v;
      },
      f.dim, method));
}

McEstimate d12_norm(const GaussianFunction& f, const IntegrationMethod& method) {
  if (!f.grad) throw Unsupported("d12_norm requires an explicit gradient");
  return sqrt_estimate(gaussian_expectation(
      [&f](std::span<const double> x) {
        std::vector<double> g(x.size());
        f.grad(x, g);
        const double v = f.eval(x);
        double s = v * v;
        for (double gi : g) s += gi * gi;
        return s;
      },
      f.dim, method));
}

// ---------------------------------------------------------------- coupling

McEstimate coupling_distance(const GaussianFunction& f, double t, const MonteCarlo& mc) {
  if (!(t >= 0.0 && t < 1.0)) throw InvalidParameter("coupling_distance: t must lie in [0, 1)");
  return coupling_distance_complement(f, 1.0 - t, mc);
}

McEstimate coupling_distance_complement(const GaussianFunction& f, double tau,
                                        const MonteCarlo& mc) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw InvalidParameter("coupling_distance: complement 1 - t must lie in (0, 1]");
  }
  if (mc.n < kMinCouplingSamples) {
    throw InvalidParameter("coupling_distance: at least " + std::to_string(kMinCouplingSamples) +
                           " samples required");
  }
  const int d = f.dim;
  const double sg = std::sqrt(1.0 - tau);  // rounds to 1 when tau is tiny: harmless
  const double sz = std::sqrt(tau);
  const bool use_fine = static_cast<bool>(f.fine.diff);
  const auto blocks = parallel_map<Moments>(block_count(mc.n), [&](std::size_t b) {
    CounterRng rng(mc.seed, b);
    std::normal_distribution<double> nd;
    Moments m;
    std::vector<double> x(d), y(d);
    std::vector<FixedReal> fx(d), fy(d);
    for (std::uint64_t i = 0; i < block_size(b, mc.n); ++i) {
      double diff;
      if (use_fine) {
        for (int j = 0; j < d; ++j) {
          const FixedReal g = FixedReal::dithered(sg * nd(rng), rng);
          fx[j] = g + FixedReal::dithered(sz * nd(rng), rng);
          fy[j] = g + FixedReal::dithered(sz * nd(rng), rng);
        }
        diff = f.fine.diff(fx, fy);
      } else {
        for (int j = 0; j < d; ++j) {
          const double g = sg * nd(rng);
          x[j] = g + sz * nd(rng);
          y[j] = g + sz * nd(rng);
        }
        diff = f.eval(x) - f.eval(y);
      }
      const double d2 = diff * diff;
      m.s1 += d2;
      m.s2 += d2 * d2;
    }
    return m;
  });
  return sqrt_estimate(reduce(blocks, mc.n, mc.seed));
}

double mehler_distance(const HermiteCoeffs& c, double t) {
  if (!(t >= 0.0 && t < 1.0)) throw InvalidParameter("mehler_distance: t must lie in [0, 1)");
  return mehler_distance_complement(c, 1.0 - t);
}

double mehler_distance_complement(const HermiteCoeffs& c, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidParameter("mehler_distance: 1 - t must lie in (0, 1]");
  double s = 0.0;
  const double log_t = std::log1p(-tau);  // -inf when tau = 1
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] == 0.0) continue;
    const int deg = c.total_degree(i);
    if (deg == 0) continue;
    const double one_minus = tau == 1.0 ? 1.0 : -std::expm1(deg * log_t);
    s += one_minus * c[i] * c[i];
  }
  return std::sqrt(2.0 * s);
}

KProfile gaussian_k_profile(const GaussianFunction& f, int k_max, const MonteCarlo& mc,
                            const std::optional<IntegrationMethod>& l2_method) {
  if (k_max < 0) throw InvalidParameter("gaussian_k_profile: k_max must be >= 0");
  const IntegrationMethod l2m = l2_method.value_or(MonteCarlo{mc.n, derive_seed(mc.seed, 0)});
  const McEstimate l2 = l2_gamma_norm(f, l2m);
  const auto coupling = parallel_map<McEstimate>(k_max + 1, [&](std::size_t k) {
    return coupling_distance_complement(f, std::exp2(-2.0 * static_cast<double>(k)),
                                        MonteCarlo{mc.n, derive_seed(mc.seed, k + 1)});
  });
  KProfile p;
  p.k_min = 0;
  p.k_max = k_max;
  p.e0_norm = l2.mean;
  p.e0_se = l2.se;
  for (int k = 0; k <= k_max; ++k) {
    const double lam = std::exp2(-static_cast<double>(k));
    const auto& c = coupling[k];
    if (std::isnan(c.mean)) throw InvalidInput("gaussian_k_profile: NaN coupling estimate");
    p.values.push_back(c.mean + lam * l2.mean);
    p.se.push_back(std::hypot(c.se, lam * l2.se));
  }
  return p;
}

KProfile mehler_k_profile(const HermiteCoeffs& c, int k_max) {
  if (k_max < 0) throw InvalidParameter("mehler_k_profile: k_max must be >= 0");
  KProfile p;
  p.k_min = 0;
  p.k_max = k_max;
  p.e0_norm = c.norm();
  for (int k = 0; k <= k_max; ++k) {
    p.values.push_back(mehler_distance_complement(c, std::exp2(-2.0 * k)) +
                       std::exp2(-static_cast<double>(k)) * p.e0_norm);
  }
  return p;
}

McEstimate besov_from_profile(const KProfile& profile, double theta, double q,
                              std::uint64_t seed) {
  McEstimate e;
  e.mean = k_method_norm(profile, theta, q);
  e.seed = seed;
  e.n_samples = 0;
  constexpr int kResamples = 200;
  const bool noisy = !profile.se.empty() || profile.e0_se > 0.0;
  if (!noisy) return e;
  CounterRng rng(seed, 0xB00757A9ULL);
  std::normal_distribution<double> nd;
  double s1 = 0.0;
  double s2 = 0.0;
  KProfile pert = profile;
  for (int r = 0; r < kResamples; ++r) {
    for (std::size_t i = 0; i < profile.size(); ++i) {
      pert.values[i] = std::max(0.0, profile.values[i] + profile.se_at(i) * nd(rng));
    }
    pert.e0_norm = std::max(0.0, profile.e0_norm + profile.e0_se * nd(rng));
    const double v = k_method_norm(pert, theta, q);
    s1 += v;
    s2 += v * v;
  }
  const double m = s1 / kResamples;
  e.se = std::sqrt(std::max(0.0, (s2 - kResamples * m * m) / (kResamples - 1)));
  return e;
}

McEstimate besov_norm(const GaussianFunction& f, double theta, double q, int k_max,
                      const MonteCarlo& mc, const std::optional<IntegrationMethod>& l2_method) {
  const KProfile p = gaussian_k_profile(f, k_max, mc, l2_method);
  McEstimate e = besov_from_profile(p, theta, q, mc.seed);
  e.n_samples = mc.n;
  return e;
}

double gradient_check(const GaussianFunction& f, int n_points, std::uint64_t seed, double h) {
  if (!f.grad) throw Unsupported("gradient_check requires an explicit gradient");
  CounterRng rng(seed);
  std::normal_distribution<double> nd;
  const int d = f.dim;
  std::vector<double> x(d), g(d), xp(d), xm(d);
  double worst = 0.0;
  for (int p = 0; p < n_points; ++p) {
    for (auto& xi : x) xi = nd(rng);
    if (f.kink_distance && f.kink_distance(x) < 1e-3) continue;
    f.grad(x, g);
    for (int i = 0; i < d; ++i) {
      xp = x;
      xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (f.eval(xp) - f.eval(xm)) / (2.0 * h);
      worst = std::max(worst, std::fabs(fd - g[i]) / std::max(1.0, std::fabs(g[i])));
    }
  }
  return worst;
}

}  // namespace interplab
