#include "interplab/interp_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "interplab/errors.hpp"
#include "interplab/parallel.hpp"
#include "interplab/random.hpp"

namespace interplab {

namespace {

void check_theta_q(double theta, double q) {
  if (!(theta > 0.0 && theta < 1.0)) throw InvalidParameter("theta must lie in (0, 1)");
  if (!(q >= 1.0)) throw InvalidParameter("q must lie in [1, inf]");
}

// ||v||_q with v >= 0, rescaled by the maximum to avoid overflow.
double lq_norm(std::span<const double> v, double q) {
  double top = 0.0;
  for (double x : v) top = std::max(top, x);
  if (top == 0.0) return 0.0;
  if (std::isinf(q)) return top;
  double acc = 0.0;
  for (double x : v) acc += std::pow(x / top, q);
  return top * std::pow(acc, 1.0 / q);
}

// ||(2^{-j theta})_{j >= 1}||_q
double dyadic_tail(double theta, double q) {
  if (std::isinf(q)) return std::exp2(-theta);
  return std::pow(std::exp2(theta * q) - 1.0, -1.0 / q);
}

}  // namespace

std::vector<std::string> profile_violations(const KProfile& p, double e0_factor) {
  std::vector<std::string> out;
  auto note = [&](const std::string& what, std::size_t i) {
    std::ostringstream os;
    os << what << " at k=" << (p.k_min + static_cast<int>(i));
    out.push_back(os.str());
  };
  const std::size_t n = p.size();
  // rounding slack so exact profiles are not flagged
  double scale = std::fabs(p.e0_norm);
  for (double v : p.values) scale = std::max(scale, std::fabs(v));
  const double eps = 1e-12 * scale;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = p.se_at(i) + eps;
    if (p.values[i] < -3.0 * s) note("negative value", i);
    if (p.values[i] > e0_factor * (p.e0_norm + 3.0 * p.e0_se) + 3.0 * s) note("exceeds e0_norm", i);
    if (i + 1 < n) {
      const double tol = 3.0 * (s + p.se_at(i + 1) + eps);
      // lambda_{i+1} = lambda_i / 2
      if (p.values[i] < p.values[i + 1] - tol) note("not nondecreasing in lambda", i);
      if (2.0 * p.values[i + 1] < p.values[i] - 2.0 * tol) note("K(lambda)/lambda increasing", i);
    }
    if (i >= 1 && i + 1 < n) {
      const double chord = (p.values[i - 1] + 2.0 * p.values[i + 1]) / 3.0;
      const double tol = 3.0 * (s + p.se_at(i - 1) + p.se_at(i + 1) + 2.0 * eps);
      if (p.values[i] < chord - tol) note("not concave in lambda", i);
    }
  }
  return out;
}

double k_method_norm(const KProfile& profile, double theta, double q) {
  check_theta_q(theta, q);
  if (profile.values.empty()) throw InvalidInput("k_method_norm: empty profile");
  if (!profile.se.empty() && profile.se.size() != profile.values.size()) {
    throw InvalidInput("k_method_norm: se length does not match values");
  }
  if (std::isnan(profile.e0_norm)) throw InvalidInput("k_method_norm: e0_norm is NaN");
  std::vector<double> terms;
  terms.reserve(profile.size() + 1);
  for (std::size_t i = 0; i < profile.size(); ++i) {
    const double v = profile.values[i];
    if (std::isnan(v)) {
      throw InvalidInput("k_method_norm: NaN in profile at k=" +
                         std::to_string(profile.k_min + static_cast<int>(i)));
    }
    const int k = profile.k_min + static_cast<int>(i);
    terms.push_back(std::exp2(k * theta) * std::max(v, 0.0));
  }
  terms.push_back(std::max(profile.e0_norm, 0.0) * std::exp2(profile.k_min * theta) *
                  dyadic_tail(theta, q));
  return lq_norm(terms, q);
}

double j_method_upper(std::span<const JTerm> terms, double theta, double q) {
  check_theta_q(theta, q);
  std::vector<double> v;
  v.reserve(terms.size());
  for (const auto& t : terms) {
    if (t.j < 0.0 || std::isnan(t.j)) throw InvalidInput("j_method_upper: J values must be >= 0");
    v.push_back(std::exp2(t.n * theta) * t.j);
  }
  return lq_norm(v, q);
}

double jk_slack(double theta, double q, double profile_constant) {
  check_theta_q(theta, q);
  const double kernel = 1.0 / (1.0 - std::exp2(theta - 1.0)) +
                        std::exp2(-theta) / (1.0 - std::exp2(-theta));
  // ||(2^{-n theta})_{n>=1}||_{q'} bounds sum_n J_n by ||(2^{n theta} J_n)||_q.
  double tail;
  if (std::isinf(q)) {
    tail = std::exp2(-theta) / (1.0 - std::exp2(-theta));
  } else if (q == 1.0) {
    tail = std::exp2(-theta);
  } else {
    const double qc = q / (q - 1.0);
    const double r = std::exp2(-theta * qc);
    tail = std::pow(r / (1.0 - r), 1.0 / qc);
  }
  const double head = profile_constant * kernel;
  const double t = tail * dyadic_tail(theta, q);
  if (std::isinf(q)) return std::max(head, t);
  return std::pow(std::pow(head, q) + std::pow(t, q), 1.0 / q);
}

SignVector rademacher_sample(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidParameter("rademacher_sample: N must be at least 1");
  SignVector s;
  s.seed = seed;
  s.signs.resize(n);
  CounterRng rng(seed);
  for (auto& e : s.signs) e = (rng() >> 63) ? 1 : -1;
  return s;
}

SandwichReport sandwich_experiment(const NormOracle& oracle, const WeightedSequence& a,
                                   double theta, double q, std::size_t n_sign_draws,
                                   std::uint64_t seed) {
  check_theta_q(theta, q);
  if (std::isinf(q)) throw InvalidParameter("sandwich_experiment: q must be finite");
  if (n_sign_draws < 1) throw InvalidParameter("sandwich_experiment: need at least one draw");
  SandwichReport r;
  r.seq_norm = weighted_norm(a, theta, q);
  const std::size_t n = std::max<std::size_t>(a.size(), 1);
  r.draws = parallel_map<McEstimate>(n_sign_draws, [&](std::size_t i) {
    return oracle(rademacher_sample(n, derive_seed(seed, i)), a);
  });
  double sum = 0.0;
  double sum_sq = 0.0;
  double sum_q = 0.0;
  for (const auto& d : r.draws) {
    sum += d.mean;
    sum_sq += d.mean * d.mean;
    sum_q += std::pow(d.mean, q);
    r.sup_norm = std::max(r.sup_norm, d.mean);
  }
  const double m = static_cast<double>(n_sign_draws);
  r.avg_norm = sum / m;
  if (n_sign_draws > 1) {
    const double var = std::max(0.0, (sum_sq - m * r.avg_norm * r.avg_norm) / (m - 1.0));
    r.avg_se = std::sqrt(var / m);
  }
  if (r.seq_norm > 0.0) {
    r.ratio_lo = r.avg_norm / r.seq_norm;
    r.ratio_hi = r.sup_norm / r.seq_norm;
  }
  if (r.avg_norm > 0.0) r.khintchine_ratio = std::pow(sum_q / m, 1.0 / q) / r.avg_norm;
  return r;
}

}  // namespace interplab
