#include "interplab/extremal_system.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <memory>
#include <numbers>
#include <sstream>

#include "interplab/errors.hpp"
#include "interplab/holder_space.hpp"
#include "interplab/parallel.hpp"

namespace interplab {

namespace {

// exp(1 - 1/s) underflows to zero beyond this; also keeps the polynomial
// factors of the derivatives finite.
constexpr double kInvCut = 700.0;

// Below this |2^{n-1}(x - x')| the fine difference switches to the midpoint
// derivative.
constexpr double kLinearDiff = 1e-6;

constexpr double kFourierMin = 2e-5;
constexpr double kDirectMax = 1e-12;
constexpr int kHeatNodes = 128;
constexpr int kFourierSamples = 1 << 14;
constexpr int kFourierModes = 640;
// e^{-pi^2 sigma / 2} < e^{-49}: the series is its mean.
constexpr double kFlatSigma = 10.0;

// Wraps into the half-open cell [-1, 1).
double wrap(double x) { return x - 2.0 * std::floor(0.5 * (x + 1.0)); }

// [0, 2) -> [-1, 1)
double wrap_phase(double y) { return y >= 1.0 ? y - 2.0 : y; }

}  // namespace

double bump_profile(double u) {
  if (!(std::fabs(u) < 1.0)) return 0.0;
  const double inv = 1.0 / (1.0 - u * u);
  return inv > kInvCut ? 0.0 : std::exp(1.0 - inv);
}

double bump_profile_d1(double u) {
  if (!(std::fabs(u) < 1.0)) return 0.0;
  const double inv = 1.0 / (1.0 - u * u);
  if (inv > kInvCut) return 0.0;
  return std::exp(1.0 - inv) * (-2.0 * u * inv * inv);
}

double bump_profile_d2(double u) {
  if (!(std::fabs(u) < 1.0)) return 0.0;
  const double inv = 1.0 / (1.0 - u * u);
  if (inv > kInvCut) return 0.0;
  const double g1 = -2.0 * u * inv * inv;
  const double g2 = -2.0 * inv * inv - 8.0 * u * u * inv * inv * inv;
  return std::exp(1.0 - inv) * (g1 * g1 + g2);
}

double bump_profile_max_slope() {
  static const double value = [] {
    constexpr int kScan = 1 << 20;
    double m = 0.0;
    for (int i = 0; i <= kScan; ++i) {
      m = std::max(m, std::fabs(bump_profile_d1(static_cast<double>(i) / kScan)));
    }
    return m;
  }();
  return value;
}

double MotherBump::eval(std::span<const double> x) const {
  double v = amplitude;
  for (int i = 0; i < dim && v != 0.0; ++i) v *= bump_profile((x[i] - center) / radius);
  return v;
}

void MotherBump::grad(std::span<const double> x, std::span<double> g) const {
  std::vector<double> p(dim), dp(dim);
  for (int i = 0; i < dim; ++i) {
    const double u = (x[i] - center) / radius;
    p[i] = bump_profile(u);
    dp[i] = bump_profile_d1(u) / radius;
  }
  for (int i = 0; i < dim; ++i) {
    double v = amplitude * dp[i];
    for (int j = 0; j < dim; ++j) {
      if (j != i) v *= p[j];
    }
    g[i] = v;
  }
}

double MotherBump::derivative_1d(double x, int order) const {
  const double u = (x - center) / radius;
  switch (order) {
    case 0: return amplitude * bump_profile(u);
    case 1: return amplitude * bump_profile_d1(u) / radius;
    case 2: return amplitude * bump_profile_d2(u) / (radius * radius);
    default: throw InvalidParameter("derivative order must be 0, 1 or 2");
  }
}

MotherBump make_mother_bump(int dim, double kappa) {
  if (dim < 1) throw InvalidParameter("make_mother_bump: dim must be >= 1");
  if (!(kappa > 0.0) || !std::isfinite(kappa)) {
    throw InvalidParameter("make_mother_bump: kappa must be positive");
  }
  MotherBump b;
  b.dim = dim;
  // |grad B| <= A sqrt(d) max|psi'| / r since 0 <= psi <= 1
  const double lip_unit = std::sqrt(static_cast<double>(dim)) * bump_profile_max_slope() / b.radius;
  b.amplitude = kappa * std::min(1.0, 1.0 / lip_unit) * (1.0 - 1e-4);
  return b;
}

GaussianFunction periodize(const MotherBump& bump) {
  if (bump.center - bump.radius < -1.0 || bump.center + bump.radius > 1.0) {
    throw InvalidParameter("periodize: bump support must lie in [-1, 1]^d");
  }
  return rescale(bump, 1);
}

// ---------------------------------------------------------------- heat

PeriodicHeat::PeriodicHeat(const MotherBump& bump) : bump_(bump) {
  if (bump.dim != 1) throw Unsupported("PeriodicHeat: d = 1 only");
  std::vector<double> samples(kFourierSamples);
  for (int j = 0; j < kFourierSamples; ++j) {
    samples[j] = bump.derivative_1d(-1.0 + 2.0 * j / kFourierSamples, 0);
  }
  cos_.assign(kFourierModes + 1, 0.0);
  sin_.assign(kFourierModes + 1, 0.0);
  const auto modes = parallel_map<std::pair<double, double>>(kFourierModes + 1, [&](std::size_t m) {
    double c = 0.0;
    double s = 0.0;
    for (int j = 0; j < kFourierSamples; ++j) {
      if (samples[j] == 0.0) continue;
      // y_j = -1 + 2j/P; reduce the angle pi m y_j exactly modulo 2 pi
      const long k = static_cast<long>((static_cast<long>(m) * (2L * j - kFourierSamples)) %
                                       (2L * kFourierSamples));
      const double ang = std::numbers::pi * static_cast<double>(k) / kFourierSamples;
      c += samples[j] * std::cos(ang);
      s += samples[j] * std::sin(ang);
    }
    const double scale = (m == 0 ? 1.0 : 2.0) / kFourierSamples;
    return std::pair{c * scale, s * scale};
  });
  for (int m = 0; m <= kFourierModes; ++m) {
    cos_[m] = modes[m].first;
    sin_[m] = modes[m].second;
  }
  gh_ = gauss_hermite_nodes(kHeatNodes);
}

double PeriodicHeat::operator()(double sigma, double y, int order) const {
  if (order < 0 || order > 2) throw InvalidParameter("heat derivative order must be 0, 1 or 2");
  if (sigma < 0.0) throw InvalidParameter("heat: negative time");
  if (sigma >= kFlatSigma) return order == 0 ? cos_[0] : 0.0;
  if (sigma < kFourierMin) {
    // every node lands outside the support: the bump and its derivatives vanish
    const double s = std::sqrt(sigma);
    const double reach = s * gh_.nodes.back();
    const double off = std::fabs(wrap(y - bump_.center)) - bump_.radius;
    if (off > reach) return 0.0;
    if (sigma < kDirectMax) return bump_.derivative_1d(wrap(y), order);
    double acc = 0.0;
    for (int i = 0; i < kHeatNodes; ++i) {
      acc += gh_.weights[i] * bump_.derivative_1d(wrap(y + s * gh_.nodes[i]), order);
    }
    return acc;
  }
  const double w = std::numbers::pi * y;
  const double c1 = std::cos(w);
  const double s1 = std::sin(w);
  double cm = 1.0;
  double sm = 0.0;
  double acc = order == 0 ? cos_[0] : 0.0;
  const double decay = -0.5 * std::numbers::pi * std::numbers::pi * sigma;
  for (int m = 1; m <= kFourierModes; ++m) {
    const double cn = cm * c1 - sm * s1;
    sm = sm * c1 + cm * s1;
    cm = cn;
    const double damp = std::exp(decay * m * m);
    if (damp < 1e-18) break;
    const double pm = std::numbers::pi * m;
    double term;
    switch (order) {
      case 0: term = cos_[m] * cm + sin_[m] * sm; break;
      case 1: term = pm * (sin_[m] * cm - cos_[m] * sm); break;
      default: term = -pm * pm * (cos_[m] * cm + sin_[m] * sm); break;
    }
    acc += damp * term;
  }
  return acc;
}

// ---------------------------------------------------------------- rescaling

namespace {

// Fine pieces of the term b(2^{n-1} x), shared by rescale and build_fN.
struct DyadicTerm {
  MotherBump bump;
  int shift = 0;  // n - 1

  double fine_eval(std::span<const FixedReal> x) const {
    if (bump.dim == 1) return bump.derivative_1d(wrap_phase(x[0].mod2_scaled(shift)), 0);
    std::vector<double> y(bump.dim);
    for (int i = 0; i < bump.dim; ++i) y[i] = wrap_phase(x[i].mod2_scaled(shift));
    return bump.eval(y);
  }

  // dx: (x - x') rounded to double
  double fine_diff(std::span<const FixedReal> x, std::span<const FixedReal> xp,
                   std::span<const double> dx) const {
    const int d = bump.dim;
    double big = 0.0;
    for (int i = 0; i < d; ++i) big = std::max(big, std::fabs(std::ldexp(dx[i], shift)));
    if (d == 1) {
      const double y = x[0].mod2_scaled(shift);
      if (big < kLinearDiff) {
        const double delta = std::ldexp(dx[0], shift);
        return bump.derivative_1d(wrap(y - 0.5 * delta), 1) * delta;
      }
      return bump.derivative_1d(wrap_phase(y), 0) -
             bump.derivative_1d(wrap_phase(xp[0].mod2_scaled(shift)), 0);
    }
    std::vector<double> y(d), yp(d);
    for (int i = 0; i < d; ++i) {
      y[i] = x[i].mod2_scaled(shift);
      yp[i] = xp[i].mod2_scaled(shift);
    }
    if (big < kLinearDiff) {
      std::vector<double> mid(d), g(d);
      for (int i = 0; i < d; ++i) mid[i] = wrap(y[i] - 0.5 * std::ldexp(dx[i], shift));
      bump.grad(mid, g);
      double s = 0.0;
      for (int i = 0; i < d; ++i) s += g[i] * std::ldexp(dx[i], shift);
      return s;
    }
    for (int i = 0; i < d; ++i) {
      y[i] = wrap_phase(y[i]);
      yp[i] = wrap_phase(yp[i]);
    }
    return bump.eval(y) - bump.eval(yp);
  }
};

std::vector<double> fine_delta(std::span<const FixedReal> x, std::span<const FixedReal> xp) {
  std::vector<double> dx(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = (x[i] - xp[i]).to_double();
  return dx;
}

}  // namespace

GaussianFunction rescale(const MotherBump& bump, int n) {
  if (n < 1) throw InvalidParameter("rescale: n must be >= 1");
  const int d = bump.dim;
  const int shift = n - 1;
  const double scale = std::ldexp(1.0, shift);
  GaussianFunction f;
  f.dim = d;
  f.eval = [bump, shift, d](std::span<const double> x) {
    std::vector<double> y(d);
    for (int i = 0; i < d; ++i) y[i] = wrap(std::ldexp(x[i], shift));
    return bump.eval(y);
  };
  f.grad = [bump, shift, scale, d](std::span<const double> x, std::span<double> g) {
    std::vector<double> y(d);
    for (int i = 0; i < d; ++i) y[i] = wrap(std::ldexp(x[i], shift));
    bump.grad(y, g);
    for (int i = 0; i < d; ++i) g[i] *= scale;
  };
  const DyadicTerm term{bump, shift};
  f.fine.eval = [term](std::span<const FixedReal> x) { return term.fine_eval(x); };
  f.fine.diff = [term](std::span<const FixedReal> x, std::span<const FixedReal> xp) {
    const auto dx = fine_delta(x, xp);
    return term.fine_diff(x, xp, dx);
  };
  if (d == 1) {
    auto heat = std::make_shared<const PeriodicHeat>(bump);
    f.heat = [heat, shift](double tau, const FixedReal& x, int order) {
      return std::ldexp((*heat)(std::ldexp(tau, 2 * shift), x.mod2_scaled(shift), order),
                        shift * order);
    };
  }
  return f;
}

// ---------------------------------------------------------------- system

ExtremalSystem make_extremal_system(int dim, double kappa) {
  ExtremalSystem s;
  s.dim = dim;
  s.kappa = kappa;
  s.bump = make_mother_bump(dim, kappa);
  s.period_map = periodize(s.bump);
  s.R = std::sqrt(static_cast<double>(dim));
  s.M = 2.0 * s.R;
  return s;
}

AssumptionReport verify_assumption(const GaussianFunction& b, double kappa, double M,
                                   int resolution) {
  if (!b.eval) throw InvalidInput("verify_assumption: function has no evaluator");
  if (resolution < 2) throw InvalidParameter("verify_assumption: resolution must be >= 2");
  if (!(M > 0.0)) throw InvalidParameter("verify_assumption: M must be positive");
  const int d = b.dim;
  AssumptionReport r;
  BoxGrid cell{1.0, static_cast<double>(resolution), 0.0};
  r.sup_hat = sup_norm_estimate(b, cell);
  r.lip_hat = lipschitz_estimate(b, cell);

  // composite Gauss-Legendre over [-h, h]^d; the edge layers of the bump need
  // fine cells, affordable only in d = 1
  const double h = M / std::sqrt(static_cast<double>(d));
  const int order = d == 1 ? 16 : 8;
  const double per_unit = d == 1 ? 32.0 : 8.0;
  const auto gl = gauss_legendre_nodes(order);
  const auto cells = static_cast<long>(std::ceil(2.0 * h * per_unit));
  const double w = 2.0 * h / static_cast<double>(cells);
  std::vector<double> nodes, weights;
  for (long c = 0; c < cells; ++c) {
    const double mid = -h + (static_cast<double>(c) + 0.5) * w;
    for (int i = 0; i < order; ++i) {
      nodes.push_back(mid + 0.5 * w * gl.nodes[i]);
      weights.push_back(0.5 * w * gl.weights[i]);
    }
  }
  const std::size_t per_axis = nodes.size();
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= per_axis;
  if (total > (std::size_t{1} << 26)) {
    throw Unsupported("verify_assumption: oscillation quadrature too large for this dimension");
  }
  const double volume = std::pow(2.0 * h, d);
  const int x_per_axis = d == 1 ? 16 : 4;
  std::size_t x_total = 1;
  for (int i = 0; i < d; ++i) x_total *= x_per_axis;

  const auto osc = parallel_map<double>(x_total, [&](std::size_t xi) {
    std::vector<double> x0(d), pt(d);
    std::size_t rest = xi;
    for (int i = d - 1; i >= 0; --i) {
      x0[i] = -1.0 + 2.0 * static_cast<double>(rest % x_per_axis) / x_per_axis;
      rest /= x_per_axis;
    }
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t k = 0; k < total; ++k) {
      std::size_t idx = k;
      double wk = 1.0;
      for (int i = d - 1; i >= 0; --i) {
        const std::size_t a = idx % per_axis;
        idx /= per_axis;
        pt[i] = x0[i] + nodes[a];
        wk *= weights[a];
      }
      const double v = b.eval(pt);
      s1 += wk * v;
      s2 += wk * v * v;
    }
    // scale-aware floor: rounding leaves ~1e-16 of 2|C| int g^2 for constant g
    const double value = 2.0 * volume * s2 - 2.0 * s1 * s1;
    return value <= 1e-12 * 2.0 * volume * s2 ? 0.0 : value;
  });
  r.osc_lower = *std::min_element(osc.begin(), osc.end());

  auto fail = [&](const std::string& what) {
    std::ostringstream os;
    os << std::setprecision(17) << "assumption check failed: " << what << " (sup_hat=" << r.sup_hat
       << ", lip_hat=" << r.lip_hat << ", osc_lower=" << r.osc_lower << ", kappa=" << kappa << ")";
    throw VerificationError(os.str());
  };
  if (r.sup_hat > kappa) fail("sup|b| <= kappa");
  if (r.lip_hat > kappa) fail("|b|_Lip <= kappa");
  if (!(r.osc_lower > 0.0)) fail("b is not constant on balls of radius M (osc_lower > 0)");
  return r;
}

const AssumptionReport& verify_system(ExtremalSystem& system, int resolution) {
  system.measured.assumption_verified = false;
  system.measured.assumption = verify_assumption(system.period_map, system.kappa, system.M, resolution);
  system.measured.assumption_verified = true;
  return system.measured.assumption;
}

IntegrationMethod system_quadrature(const ExtremalSystem& system, int n, const MonteCarlo& mc) {
  if (system.dim == 1) {
    // cell edges at multiples of 2^{-(n-1)}/4 match the support edges of b_n
    return Quadrature{8, std::ldexp(0.25, -(n - 1)), 8.0};
  }
  return mc;
}

ExtremeReport verify_extreme(ExtremalSystem& system, int n, const MonteCarlo& mc,
                             double j_tolerance) {
  if (n < 1) throw InvalidParameter("verify_extreme: n must be >= 1");
  const GaussianFunction bn = rescale(system.bump, n);
  ExtremeReport r;
  r.n = n;
  const IntegrationMethod method = system_quadrature(system, n, MonteCarlo{mc.n, derive_seed(mc.seed, 1)});
  r.l2 = l2_gamma_norm(bn, method);
  r.d12 = d12_norm(bn, method);
  r.j_upper = std::max(r.l2.mean, std::ldexp(r.d12.mean, -n));
  r.delta_hat = coupling_distance_complement(bn, std::ldexp(1.0, -2 * n), mc);
  system.measured.extreme[n] = r;
  if (r.j_upper > system.kappa * (1.0 + j_tolerance)) {
    throw VerificationError("extreme check failed at n=" + std::to_string(n) +
                            ": max(||b_n||, 2^{-n}||b_n||_{D12}) <= kappa");
  }
  if (!(r.delta_hat.mean > 5.0 * r.delta_hat.se)) {
    throw VerificationError("extreme check failed at n=" + std::to_string(n) +
                            ": coupling distance not positive at 5 se");
  }
  return r;
}

GaussianFunction build_fN(const ExtremalSystem& system, const WeightedSequence& a,
                          const SignVector& signs) {
  const std::size_t N = a.size();
  if (signs.signs.size() < N) throw InvalidInput("build_fN: fewer signs than coefficients");
  const int d = system.dim;
  struct Term {
    double coeff;
    DyadicTerm fine;
  };
  auto terms = std::make_shared<std::vector<Term>>();
  for (std::size_t n = 1; n <= N; ++n) {
    const double c = signs.signs[n - 1] * a.at(n);
    if (c != 0.0) terms->push_back({c, DyadicTerm{system.bump, static_cast<int>(n) - 1}});
  }
  const MotherBump bump = system.bump;
  GaussianFunction f;
  f.dim = d;
  f.eval = [terms, bump, d](std::span<const double> x) {
    std::vector<double> y(d);
    double s = 0.0;
    for (const auto& t : *terms) {
      for (int i = 0; i < d; ++i) y[i] = wrap(std::ldexp(x[i], t.fine.shift));
      s += t.coeff * bump.eval(y);
    }
    return s;
  };
  f.grad = [terms, bump, d](std::span<const double> x, std::span<double> g) {
    std::vector<double> y(d), gt(d);
    std::fill(g.begin(), g.end(), 0.0);
    for (const auto& t : *terms) {
      for (int i = 0; i < d; ++i) y[i] = wrap(std::ldexp(x[i], t.fine.shift));
      bump.grad(y, gt);
      const double c = std::ldexp(t.coeff, t.fine.shift);
      for (int i = 0; i < d; ++i) g[i] += c * gt[i];
    }
  };
  f.fine.eval = [terms](std::span<const FixedReal> x) {
    double s = 0.0;
    for (const auto& t : *terms) s += t.coeff * t.fine.fine_eval(x);
    return s;
  };
  f.fine.diff = [terms](std::span<const FixedReal> x, std::span<const FixedReal> xp) {
    const auto dx = fine_delta(x, xp);
    double s = 0.0;
    for (const auto& t : *terms) s += t.coeff * t.fine.fine_diff(x, xp, dx);
    return s;
  };
  if (d == 1) {
    auto heat = std::make_shared<const PeriodicHeat>(bump);
    f.heat = [terms, heat](double tau, const FixedReal& x, int order) {
      double s = 0.0;
      for (const auto& t : *terms) {
        const double sigma = std::ldexp(tau, 2 * t.fine.shift);
        if (sigma >= kFlatSigma) {
          if (order == 0) s += t.coeff * heat->mean();
          continue;
        }
        s += std::ldexp(t.coeff, t.fine.shift * order) * (*heat)(sigma, x.mod2_scaled(t.fine.shift), order);
      }
      return s;
    };
  }
  return f;
}

std::string serialize(const ExtremalSystem& system) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "dim = " << system.dim << '\n';
  os << "kappa = " << system.kappa << '\n';
  os << "amplitude = " << system.bump.amplitude << '\n';
  os << "center = " << system.bump.center << '\n';
  os << "radius = " << system.bump.radius << '\n';
  os << "R = " << system.R << '\n';
  os << "M = " << system.M << '\n';
  const auto& m = system.measured;
  os << "assumption_verified = " << (m.assumption_verified ? 1 : 0) << '\n';
  if (m.assumption_verified) {
    os << "sup_hat = " << m.assumption.sup_hat << '\n';
    os << "lip_hat = " << m.assumption.lip_hat << '\n';
    os << "osc_lower = " << m.assumption.osc_lower << '\n';
  }
  for (const auto& [n, r] : m.extreme) {
    os << "j_upper_" << n << " = " << r.j_upper << '\n';
    os << "delta_hat_" << n << " = " << r.delta_hat.mean << '\n';
    os << "delta_hat_se_" << n << " = " << r.delta_hat.se << '\n';
  }
  return os.str();
}

}  // namespace interplab
