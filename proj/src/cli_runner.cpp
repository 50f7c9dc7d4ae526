#include "interplab/cli_runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include <json.hpp>

#include "interplab/extremal_system.hpp"
#include "interplab/gauss_analysis.hpp"
#include "interplab/holder_space.hpp"
#include "interplab/interp_core.hpp"
#include "interplab/pde_lab.hpp"
#include "interplab/random.hpp"
#include "interplab/seq_space.hpp"

namespace interplab {

namespace {

// ---------------------------------------------------------------- formatting

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }

std::string fmt_list(const std::vector<std::size_t>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(xs[i]);
  }
  return s;
}

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) {
          return fmt(v);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else {
          return std::to_string(v);
        }
      },
      c);
}

// ------------------------------------------------------------------- parsing

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, std::string_view text, const char* what) {
  throw UsageError("config key '" + key + "': " + what + " (got '" + std::string(text) + "')");
}

double parse_double(const std::string& key, std::string_view text) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size() || std::isnan(v)) {
    bad_value(key, text, "malformed number");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, std::string_view text) {
  std::uint64_t v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    bad_value(key, text, "malformed unsigned integer");
  }
  return v;
}

int parse_int(const std::string& key, std::string_view text) {
  int v = 0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    bad_value(key, text, "malformed integer");
  }
  return v;
}

std::vector<std::size_t> parse_list(const std::string& key, std::string_view text) {
  std::vector<std::size_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    out.push_back(static_cast<std::size_t>(parse_u64(key, item)));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) bad_value(key, text, "empty list");
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, const std::string&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field field(const char* key, T RunConfig::*member) {
  Field f;
  f.key = key;
  f.set = [member](RunConfig& c, const std::string& k, std::string_view v) {
    if constexpr (std::is_same_v<T, double>) {
      c.*member = parse_double(k, v);
    } else if constexpr (std::is_same_v<T, int>) {
      c.*member = parse_int(k, v);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      c.*member = parse_u64(k, v);
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      c.*member = parse_list(k, v);
    } else {
      c.*member = std::string(v);
    }
  };
  f.get = [member](const RunConfig& c) {
    if constexpr (std::is_same_v<T, double>) {
      return fmt(c.*member);
    } else if constexpr (std::is_same_v<T, int>) {
      return std::to_string(c.*member);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      return fmt(c.*member);
    } else if constexpr (std::is_same_v<T, std::vector<std::size_t>>) {
      return fmt_list(c.*member);
    } else {
      return std::string(c.*member);
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      field("theta", &RunConfig::theta),
      field("q_low", &RunConfig::q_low),
      field("q_high", &RunConfig::q_high),
      field("kappa", &RunConfig::kappa),
      field("dim", &RunConfig::dim),
      field("mc_samples", &RunConfig::mc_samples),
      field("coupling_samples", &RunConfig::coupling_samples),
      field("k_max", &RunConfig::k_max),
      field("k_extra", &RunConfig::k_extra),
      field("n_sign_draws", &RunConfig::n_sign_draws),
      field("n_random_sequences", &RunConfig::n_random_sequences),
      field("N_list", &RunConfig::N_list),
      field("sandwich_N_list", &RunConfig::sandwich_N_list),
      field("pde_N_list", &RunConfig::pde_N_list),
      field("extreme_n_max", &RunConfig::extreme_n_max),
      field("grid_resolution", &RunConfig::grid_resolution),
      field("path_nodes", &RunConfig::path_nodes),
      field("tau_min", &RunConfig::tau_min),
      field("n_paths", &RunConfig::n_paths),
      field("iso_t", &RunConfig::iso_t),
      field("seed", &RunConfig::seed),
      field("out_path", &RunConfig::out_path),
      field("format", &RunConfig::format),
      field("tol_gram", &RunConfig::tol_gram),
      field("tol_d12", &RunConfig::tol_d12),
      field("tol_se", &RunConfig::tol_se),
      field("tol_j", &RunConfig::tol_j),
      field("tol_delta_z", &RunConfig::tol_delta_z),
      field("tol_delta_variation", &RunConfig::tol_delta_variation),
      field("tol_seq_band", &RunConfig::tol_seq_band),
      field("tol_sandwich_band", &RunConfig::tol_sandwich_band),
      field("tol_growth", &RunConfig::tol_growth),
      field("tol_plateau", &RunConfig::tol_plateau),
      field("tol_iso", &RunConfig::tol_iso),
      field("tol_divergence_se", &RunConfig::tol_divergence_se),
  };
  return table;
}

void set_key(RunConfig& c, const std::string& key, std::string_view value) {
  for (const auto& f : fields()) {
    if (key == f.key) {
      if (value.empty()) throw UsageError("config key '" + key + "': missing value");
      f.set(c, key, value);
      return;
    }
  }
  throw UsageError("unknown config key '" + key + "'");
}

void require(bool ok, const char* key, const std::string& what) {
  if (!ok) throw UsageError(std::string("config key '") + key + "': " + what);
}

void validate(const RunConfig& c) {
  require(c.theta > 0.0 && c.theta < 1.0, "theta", "must lie in (0, 1)");
  require(c.q_low >= 1.0, "q_low", "must lie in [1, inf]");
  require(c.q_high >= 1.0, "q_high", "must lie in [1, inf]");
  require(c.kappa > 0.0 && std::isfinite(c.kappa), "kappa", "must be positive and finite");
  require(c.dim >= 1 && c.dim <= 8, "dim", "must lie in [1, 8]");
  require(c.mc_samples >= kMinCouplingSamples, "mc_samples", "must be at least 100");
  require(c.coupling_samples >= kMinCouplingSamples, "coupling_samples", "must be at least 100");
  require(c.k_max >= 0 && c.k_max <= kMaxHermiteDegree, "k_max", "must lie in [0, 60]");
  require(c.k_extra >= 0 && c.k_extra <= 64, "k_extra", "must lie in [0, 64]");
  require(c.n_sign_draws >= 1, "n_sign_draws", "must be at least 1");
  require(c.n_random_sequences >= 2, "n_random_sequences", "must be at least 2");
  auto positive_list = [](const std::vector<std::size_t>& xs, std::size_t cap) {
    return !xs.empty() && std::all_of(xs.begin(), xs.end(), [cap](std::size_t n) { return n >= 1 && n <= cap; });
  };
  require(positive_list(c.N_list, 100000), "N_list", "entries must lie in [1, 100000]");
  // verify_extreme's quadrature has 2^{n+5} cells
  require(positive_list(c.sandwich_N_list, 16), "sandwich_N_list", "entries must lie in [1, 16]");
  require(positive_list(c.pde_N_list, 4096), "pde_N_list", "entries must lie in [1, 4096]");
  require(c.extreme_n_max >= 1 && c.extreme_n_max <= 16, "extreme_n_max", "must lie in [1, 16]");
  require(c.grid_resolution >= 1 && c.grid_resolution <= (1 << 16), "grid_resolution",
          "must lie in [1, 65536]");
  require(c.path_nodes >= 2 && c.path_nodes <= (1 << 20), "path_nodes", "must lie in [2, 2^20]");
  require(c.tau_min > 0.0 && c.tau_min <= 1e-6, "tau_min", "must lie in (0, 1e-6]");
  require(c.n_paths >= 2, "n_paths", "must be at least 2");
  require(c.iso_t > 0.0 && c.iso_t < 1.0, "iso_t", "must lie in (0, 1)");
  require(c.format == "csv" || c.format == "json", "format", "must be csv or json");
  const std::pair<const char*, double> tolerances[] = {
      {"tol_gram", c.tol_gram},
      {"tol_d12", c.tol_d12},
      {"tol_se", c.tol_se},
      {"tol_j", c.tol_j},
      {"tol_delta_z", c.tol_delta_z},
      {"tol_delta_variation", c.tol_delta_variation},
      {"tol_seq_band", c.tol_seq_band},
      {"tol_sandwich_band", c.tol_sandwich_band},
      {"tol_growth", c.tol_growth},
      {"tol_plateau", c.tol_plateau},
      {"tol_iso", c.tol_iso},
      {"tol_divergence_se", c.tol_divergence_se},
  };
  for (const auto& [key, v] : tolerances) require(v > 0.0 && std::isfinite(v), key, "must be positive and finite");
}

// --------------------------------------------------------------- experiments

const std::vector<std::string> kCheckColumns = {"check", "index", "value", "se", "reference",
                                                "tolerance", "n_samples", "seed", "pass"};

struct Recorder {
  RunResult& out;

  bool check(const std::string& name, double value, double limit, bool passed) {
    out.checks.push_back({name, value, limit, passed});
    return passed;
  }

  void row(const std::string& name, std::int64_t index, double value, double se, double reference,
           double tolerance, std::uint64_t n_samples, std::uint64_t seed, bool passed) {
    out.table.rows.push_back({name, index, value, se, reference, tolerance, n_samples, seed, passed});
  }
};

std::string tag(const char* prefix, double v) { return std::string(prefix) + fmt(v); }

double spread(const std::vector<double>& xs) {
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  return *hi / *lo;
}

void hermite_verify(const RunConfig& c, Recorder& r) {
  const int m = 64;
  const QuadratureRule rule = gauss_hermite_nodes(m);
  const int K = c.k_max;
  std::vector<double> gram(static_cast<std::size_t>((K + 1) * (K + 1)), 0.0);
  std::vector<double> h(static_cast<std::size_t>(K + 1));
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    hermite_values(K, rule.nodes[i], h);
    for (int j = 0; j <= K; ++j) {
      for (int k = 0; k <= K; ++k) gram[j * (K + 1) + k] += rule.weights[i] * h[j] * h[k];
    }
  }
  double dev = 0.0;
  for (int j = 0; j <= K; ++j) {
    for (int k = 0; k <= K; ++k) dev = std::max(dev, std::fabs(gram[j * (K + 1) + k] - (j == k ? 1.0 : 0.0)));
  }
  const bool gram_ok = r.check("gram_max_deviation", dev, c.tol_gram, dev < c.tol_gram);
  r.row("gram_max_deviation", K, dev, 0.0, 0.0, c.tol_gram, m, c.seed, gram_ok);

  for (int k = 0; k <= K; ++k) {
    const double v = d12_norm(hermite_function(k), Quadrature{m}).mean;
    const double ref = std::sqrt(1.0 + k);
    const double err = std::fabs(v - ref);
    const bool ok = r.check("d12_norm_k" + std::to_string(k), err, c.tol_d12, err <= c.tol_d12);
    r.row("d12_norm", k, v, 0.0, ref, c.tol_d12, m, c.seed, ok);
  }
}

void coupling_verify(const RunConfig& c, Recorder& r) {
  std::uint64_t stream = 1000;
  for (int k : {1, 2, 4}) {
    for (double t : {0.75, 0.9375}) {
      const std::uint64_t seed = derive_seed(c.seed, stream++);
      const McEstimate est = coupling_distance(hermite_function(k), t, MonteCarlo{c.coupling_samples, seed});
      const double ref = std::sqrt(2.0 * (1.0 - std::pow(t, k)));
      const double z = std::fabs(est.mean - ref) / est.se;
      const bool ok = r.check("coupling_k" + std::to_string(k) + tag("_t", t), z, c.tol_se, z <= c.tol_se);
      r.row(tag("coupling_t", t), k, est.mean, est.se, ref, c.tol_se, est.n_samples, est.seed, ok);
    }
  }
}

// MC Besov norms of Hermite polynomials against the exact Mehler profile.
void besov_verify(const RunConfig& c, Recorder& r) {
  for (int k = 1; k <= 4; ++k) {
    const GaussianFunction f = hermite_function(k);
    const std::uint64_t seed = derive_seed(c.seed, 2000 + static_cast<std::uint64_t>(k));
    const KProfile noisy = gaussian_k_profile(f, c.k_max, MonteCarlo{c.mc_samples, seed}, Quadrature{64});
    const KProfile exact = mehler_k_profile(*f.hermite, c.k_max);
    for (double q : {c.q_low, c.q_high}) {
      const McEstimate est = besov_from_profile(noisy, c.theta, q, derive_seed(seed, 1));
      const double ref = k_method_norm(exact, c.theta, q);
      const double z = std::fabs(est.mean - ref) / est.se;
      const bool ok = r.check("besov_k" + std::to_string(k) + tag("_q", q), z, c.tol_se, z <= c.tol_se);
      r.row(tag("besov_q", q), k, est.mean, est.se, ref, c.tol_se, c.mc_samples, seed, ok);
    }
  }
}

KProfile ell1_pair_profile(const WeightedSequence& x, int k_max) {
  KProfile p;
  p.k_max = k_max;
  for (int k = 0; k <= k_max; ++k) p.values.push_back(exact_k_ell1_pair(std::exp2(-k), x, 0.0, 1.0));
  p.e0_norm = weighted_norm(x, 0.0, 1.0);
  return p;
}

// Random shapes: geometric decay at a random rate, random signs and gaps.
WeightedSequence random_sequence(std::uint64_t seed, std::uint64_t i) {
  CounterRng rng(seed, i);
  const int len = 1 + static_cast<int>(rng() % 24);
  const double rate = 2.0 * rng.uniform() - 0.5;
  std::normal_distribution<double> g;
  std::vector<double> x(static_cast<std::size_t>(len));
  for (int n = 1; n <= len; ++n) {
    const bool gap = n < len && rng.uniform() < 0.3;
    x[n - 1] = gap ? 0.0 : g(rng) * std::exp2(-rate * n);
  }
  if (x.back() == 0.0) x.back() = 1.0;
  return WeightedSequence(std::move(x));
}

void seq_interp_verify(const RunConfig& c, Recorder& r) {
  std::vector<WeightedSequence> xs;
  std::vector<KProfile> profiles;
  for (std::uint64_t i = 0; i < c.n_random_sequences; ++i) {
    xs.push_back(random_sequence(c.seed, i));
    profiles.push_back(ell1_pair_profile(xs.back(), static_cast<int>(xs.back().size()) + 48));
  }
  std::vector<double> pooled;
  for (double theta : {0.3, 0.5, 0.7}) {
    for (double q : {1.0, 2.0, kInf}) {
      std::vector<double> ratios;
      for (std::size_t i = 0; i < xs.size(); ++i) {
        ratios.push_back(k_method_norm(profiles[i], theta, q) / weighted_norm(xs[i], theta, q));
      }
      const double band = spread(ratios);
      const std::string name = tag("band_theta", theta) + tag("_q", q);
      const bool ok = r.check(name, band, c.tol_seq_band, band <= c.tol_seq_band);
      r.row(name, 0, band, 0.0, *std::min_element(ratios.begin(), ratios.end()), c.tol_seq_band,
            c.n_random_sequences, c.seed, ok);
      pooled.insert(pooled.end(), ratios.begin(), ratios.end());
    }
  }
  // one band shared by every (theta, q) pair
  const double band = spread(pooled);
  const bool ok = r.check("band_pooled", band, c.tol_seq_band, band <= c.tol_seq_band);
  r.row("band_pooled", 0, band, 0.0, *std::min_element(pooled.begin(), pooled.end()), c.tol_seq_band,
        c.n_random_sequences, c.seed, ok);
}

ExtremalSystem verified_system(const RunConfig& c) {
  ExtremalSystem s = make_extremal_system(c.dim, c.kappa);
  verify_system(s, c.grid_resolution);
  return s;
}

void system_verify(const RunConfig& c, Recorder& r) {
  ExtremalSystem s = make_extremal_system(c.dim, c.kappa);
  const std::uint64_t grid_points = static_cast<std::uint64_t>(2 * c.grid_resolution + 1);
  try {
    const AssumptionReport& a = verify_system(s, c.grid_resolution);
    r.check("sup_hat", a.sup_hat, c.kappa, a.sup_hat <= c.kappa);
    r.check("lip_hat", a.lip_hat, c.kappa, a.lip_hat <= c.kappa);
    r.check("osc_lower", a.osc_lower, 0.0, a.osc_lower > 0.0);
    r.row("sup_hat", 0, a.sup_hat, 0.0, c.kappa, 0.0, grid_points, c.seed, a.sup_hat <= c.kappa);
    r.row("lip_hat", 0, a.lip_hat, 0.0, c.kappa, 0.0, grid_points, c.seed, a.lip_hat <= c.kappa);
    r.row("osc_lower", 0, a.osc_lower, 0.0, 0.0, 0.0, grid_points, c.seed, a.osc_lower > 0.0);
  } catch (const VerificationError& e) {
    r.check(std::string("assumption: ") + e.what(), 0.0, 1.0, false);
  }

  std::vector<double> deltas;
  for (int n = 1; n <= c.extreme_n_max; ++n) {
    const MonteCarlo mc{c.mc_samples, derive_seed(c.seed, 3000 + static_cast<std::uint64_t>(n))};
    try {
      verify_extreme(s, n, mc, kInf);
    } catch (const VerificationError&) {
      // delta positivity is re-checked below against tol_delta_z
    }
    const ExtremeReport& e = s.measured.extreme.at(n);
    const double j_limit = c.kappa * (1.0 + c.tol_j);
    const bool j_ok = r.check("j_upper_n" + std::to_string(n), e.j_upper, j_limit, e.j_upper <= j_limit);
    r.row("j_upper", n, e.j_upper, 0.0, c.kappa, c.tol_j, e.l2.n_samples, e.l2.seed, j_ok);
    const double z = e.delta_hat.mean / e.delta_hat.se;
    const bool d_ok = r.check("delta_hat_n" + std::to_string(n), z, c.tol_delta_z, z > c.tol_delta_z);
    r.row("delta_hat", n, e.delta_hat.mean, e.delta_hat.se, 0.0, c.tol_delta_z, e.delta_hat.n_samples,
          e.delta_hat.seed, d_ok);
    if (n >= 3) deltas.push_back(e.delta_hat.mean);
  }
  if (deltas.size() >= 2) {
    const double variation = spread(deltas) - 1.0;
    const bool ok = r.check("delta_variation", variation, c.tol_delta_variation, variation < c.tol_delta_variation);
    r.row("delta_variation", c.extreme_n_max, variation, 0.0, 0.0, c.tol_delta_variation, c.mc_samples, c.seed, ok);
  }
}

void sandwich(const RunConfig& c, Recorder& r) {
  if (!std::isfinite(c.q_low)) throw UsageError("config key 'q_low': sandwich needs a finite q_low");
  ExtremalSystem s = verified_system(c);
  const std::size_t n_max = *std::max_element(c.sandwich_N_list.begin(), c.sandwich_N_list.end());
  std::vector<double> j_bounds;
  for (int n = 1; n <= static_cast<int>(n_max); ++n) {
    verify_extreme(s, n, MonteCarlo{c.mc_samples, derive_seed(c.seed, 3000 + static_cast<std::uint64_t>(n))},
                   c.tol_j);
    j_bounds.push_back(s.measured.extreme.at(n).j_upper);
  }
  const double slack = jk_slack(c.theta, c.q_low, 3.0);

  r.out.table.columns = {"N", "seq_norm", "avg_norm", "avg_se", "sup_norm", "ratio_lo", "ratio_hi",
                         "khintchine_ratio", "j_upper", "jk_slack", "n_sign_draws", "n_samples", "seed",
                         "pass"};
  std::vector<double> ratios;
  for (std::size_t N : c.sandwich_N_list) {
    const WeightedSequence a = standard_test_sequence(c.theta, c.q_low, N);
    const int k_max = static_cast<int>(N) + c.k_extra;
    const NormOracle oracle = [&](const SignVector& eps, const WeightedSequence& aN) {
      return besov_norm(build_fN(s, aN, eps), c.theta, c.q_low, k_max,
                        MonteCarlo{c.mc_samples, derive_seed(eps.seed, 1)});
    };
    const std::uint64_t seed = derive_seed(c.seed, 4000 + N);
    const SandwichReport rep = sandwich_experiment(oracle, a, c.theta, c.q_low, c.n_sign_draws, seed);
    std::vector<JTerm> terms;
    for (std::size_t n = 1; n <= N; ++n) terms.push_back({static_cast<int>(n), std::fabs(a.at(n)) * j_bounds[n - 1]});
    const double j_upper = j_method_upper(terms, c.theta, c.q_low);
    const bool ok = r.check("sup_below_j_bound_N" + std::to_string(N), rep.sup_norm, j_upper * slack,
                            rep.sup_norm <= j_upper * slack);
    r.out.table.rows.push_back({static_cast<std::uint64_t>(N), rep.seq_norm, rep.avg_norm, rep.avg_se,
                                rep.sup_norm, rep.ratio_lo, rep.ratio_hi, rep.khintchine_ratio, j_upper,
                                slack, c.n_sign_draws, c.mc_samples, seed, ok});
    ratios.push_back(rep.ratio_lo);
  }
  const double band = spread(ratios);
  r.check("sandwich_band", band, c.tol_sandwich_band, band <= c.tol_sandwich_band);
}

bool plateau(Recorder& r, const std::string& name, double prev, double last, double tol) {
  const double change = std::fabs(last / prev - 1.0);
  return r.check(name, change, tol, change < tol);
}

void sharpness(const RunConfig& c, Recorder& r) {
  ExtremalSystem s = verified_system(c);
  const std::size_t n_max = *std::max_element(c.N_list.begin(), c.N_list.end());
  const SignVector eps = rademacher_sample(n_max, derive_seed(c.seed, 1));
  r.out.table.columns = {"N", "seq_norm_qlow", "seq_norm_qhigh", "besov_qlow_mean", "besov_qlow_se",
                         "holder_upper", "besov_qhigh_mean", "besov_qhigh_se", "k_max", "n_samples",
                         "seed"};
  std::vector<McEstimate> low, high;
  std::vector<double> holder;
  for (std::size_t N : c.N_list) {
    const WeightedSequence a = standard_test_sequence(c.theta, c.q_low, N);
    const GaussianFunction f = build_fN(s, a, eps);
    const int k_max = static_cast<int>(N) + c.k_extra;
    const std::uint64_t seed = derive_seed(c.seed, 5000 + N);
    const KProfile profile = gaussian_k_profile(f, k_max, MonteCarlo{c.mc_samples, seed});
    low.push_back(besov_from_profile(profile, c.theta, c.q_low, derive_seed(seed, 1)));
    high.push_back(besov_from_profile(profile, c.theta, c.q_high, derive_seed(seed, 2)));
    holder.push_back(holder_j_upper(s, a, eps, c.theta, c.q_high));
    r.out.table.rows.push_back({static_cast<std::uint64_t>(N), weighted_norm(a, c.theta, c.q_low),
                                weighted_norm(a, c.theta, c.q_high), low.back().mean, low.back().se,
                                holder.back(), high.back().mean, high.back().se,
                                static_cast<std::int64_t>(k_max), c.mc_samples, seed});
  }
  for (std::size_t i = 1; i < low.size(); ++i) {
    const double drop = low[i - 1].mean - low[i].mean;
    const double limit = c.tol_se * std::hypot(low[i - 1].se, low[i].se);
    r.check("besov_qlow_monotone_N" + std::to_string(c.N_list[i]), drop, limit, drop <= limit);
  }
  if (low.size() >= 2) {
    const double growth = low.back().mean / low.front().mean;
    r.check("besov_qlow_growth", growth, c.tol_growth, growth >= c.tol_growth);
    plateau(r, "holder_plateau", holder[holder.size() - 2], holder.back(), c.tol_plateau);
    plateau(r, "besov_qhigh_plateau", high[high.size() - 2].mean, high.back().mean, c.tol_plateau);
  }
}

void pde_isometry(const RunConfig& c, Recorder& r) {
  if (c.dim != 1) throw UsageError("config key 'dim': pde-isometry needs dim = 1");
  const GaussianFunction f = hermite_function(2);
  const PathConfig paths = PathConfig::geometric(c.path_nodes, c.tau_min, c.n_paths, derive_seed(c.seed, 2));
  const IsometryReport iso = ito_isometry_check(f, c.theta, c.iso_t, paths);
  const double ratio = iso.lhs.mean / iso.rhs.mean;
  const double gap = std::fabs(iso.lhs.mean - iso.rhs.mean);
  const double gap_se = std::hypot(iso.lhs.se, iso.rhs.se);
  const bool iso_ok = std::fabs(ratio - 1.0) <= c.tol_iso || gap <= c.tol_se * gap_se;
  r.check("isometry", ratio, c.tol_iso, iso_ok);
  r.row("isometry_lhs", 0, iso.lhs.mean, iso.lhs.se, iso.rhs.mean, c.tol_iso, iso.lhs.n_samples, iso.lhs.seed, iso_ok);
  r.row("isometry_rhs", 0, iso.rhs.mean, iso.rhs.se, iso.lhs.mean, c.tol_iso, iso.rhs.n_samples, iso.rhs.seed, iso_ok);
  r.row("isometry_ratio", 0, ratio, gap_se / iso.rhs.mean, 1.0, c.tol_iso, iso.lhs.n_samples, iso.lhs.seed, iso_ok);

  // f'' = sqrt(2), so the weighted integral is deterministic; the floor
  // covers rounding of the exact cell weights.
  const McEstimate w = weighted_ito_integral(f, c.theta, paths);
  const double ref = 2.0 / (2.0 - c.theta);
  const double err = std::fabs(w.mean - ref);
  const double limit = c.tol_se * w.se + 1e-9 * ref;
  const bool w_ok = r.check("weighted_h2", err, limit, err <= limit);
  r.row("weighted_h2", 0, w.mean, w.se, ref, c.tol_se, w.n_samples, w.seed, w_ok);
}

void pde_divergence(const RunConfig& c, Recorder& r) {
  if (c.dim != 1) throw UsageError("config key 'dim': pde-divergence needs dim = 1");
  ExtremalSystem s = verified_system(c);
  const std::size_t n_max = *std::max_element(c.pde_N_list.begin(), c.pde_N_list.end());
  const WeightedSequence a = standard_test_sequence(c.theta, c.q_low, n_max);
  const std::uint64_t path_seed = derive_seed(c.seed, 3);
  const PathConfig paths = PathConfig::geometric(c.path_nodes, c.tau_min, c.n_paths, path_seed);
  const auto rows = divergence_experiment(s, a, c.theta, c.pde_N_list, derive_seed(c.seed, 1), paths, c.q_high);
  r.out.table.columns = {"N", "weighted_mean", "weighted_se", "holder_upper", "grid_nodes", "n_paths", "seed"};
  for (const auto& row : rows) {
    r.out.table.rows.push_back({static_cast<std::uint64_t>(row.N), row.weighted.mean, row.weighted.se,
                                row.holder_upper, static_cast<std::uint64_t>(row.grid_nodes),
                                row.weighted.n_samples, row.weighted.seed});
  }
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double step = rows[i].weighted.mean - rows[i - 1].weighted.mean;
    const double limit = c.tol_divergence_se * std::hypot(rows[i].weighted.se, rows[i - 1].weighted.se);
    r.check("weighted_increase_N" + std::to_string(rows[i].N), step, limit, step > limit);
  }
  if (rows.size() >= 2) {
    plateau(r, "holder_plateau", rows[rows.size() - 2].holder_upper, rows.back().holder_upper, c.tol_plateau);
  }
}

struct Subcommand {
  const char* name;
  const char* summary;
  void (*fn)(const RunConfig&, Recorder&);
};

const std::vector<Subcommand>& registry() {
  static const std::vector<Subcommand> table = {
      {"hermite-verify", "Gram matrix of h_0..h_{k_max} under 64-node quadrature; d12_norm(h_k) vs sqrt(1+k)",
       hermite_verify},
      {"coupling-verify", "coupling distance of h_k vs sqrt(2(1-t^k)), k in {1,2,4}, t in {0.75,0.9375}",
       coupling_verify},
      {"besov", "Monte Carlo Besov norm of h_1..h_4 at q_low and q_high vs the exact Mehler profile",
       besov_verify},
      {"seq-interp-verify", "K-method norm over the exact l1-pair profile / weighted l_q norm, random sequences",
       seq_interp_verify},
      {"system-verify", "assumption grid scans and per-n extreme conditions of the default system",
       system_verify},
      {"sandwich", "sign-averaged Besov norm of f_N vs ||a^N|| and the J-method upper bound", sandwich},
      {"sharpness", "Besov(theta, q_low) growth of f_N vs the Holder J-method plateau", sharpness},
      {"pde-isometry", "fractional-integral isometry and weighted Ito integral for h_2", pde_isometry},
      {"pde-divergence", "weighted Ito integral of f_N over pde_N_list vs the Holder J-method bound",
       pde_divergence},
  };
  return table;
}

}  // namespace

// ------------------------------------------------------------------ public API

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) {
    if (std::string_view(f.key) == "out_path") continue;
    out.emplace_back(f.key, f.get(*this));
  }
  return out;
}

RunConfig parse_config(std::string_view text, const std::vector<std::pair<std::string, std::string>>& overrides) {
  RunConfig c;
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    set_key(c, std::string(trim(line.substr(0, eq))), trim(line.substr(eq + 1)));
  }
  for (const auto& [key, value] : overrides) set_key(c, key, trim(value));
  validate(c);
  return c;
}

std::vector<std::string> RunResult::failures() const {
  std::vector<std::string> out;
  for (const auto& ch : checks) {
    if (!ch.passed) out.push_back(ch.name);
  }
  return out;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& s : registry()) v.emplace_back(s.name);
    return v;
  }();
  return names;
}

std::string schema_help() {
  std::ostringstream os;
  const std::string check_cols = "check,index,value,se,reference,tolerance,n_samples,seed,pass";
  os << "Subcommands and CSV columns:\n";
  for (const auto& s : registry()) {
    os << "  " << s.name << "\n      " << s.summary << "\n      columns: ";
    const std::string name = s.name;
    if (name == "sandwich") {
      os << "N,seq_norm,avg_norm,avg_se,sup_norm,ratio_lo,ratio_hi,khintchine_ratio,j_upper,jk_slack,"
            "n_sign_draws,n_samples,seed,pass";
    } else if (name == "sharpness") {
      os << "N,seq_norm_qlow,seq_norm_qhigh,besov_qlow_mean,besov_qlow_se,holder_upper,besov_qhigh_mean,"
            "besov_qhigh_se,k_max,n_samples,seed";
    } else if (name == "pde-divergence") {
      os << "N,weighted_mean,weighted_se,holder_upper,grid_nodes,n_paths,seed";
    } else {
      os << check_cols;
    }
    os << "\n";
  }
  os << "\nConfig keys (file lines 'key = value' or trailing key=value overrides) and defaults:\n";
  for (const auto& [k, v] : RunConfig{}.echo()) os << "  " << k << " = " << v << "\n";
  os << "  out_path = (stdout)\n";
  os << "\nExit status: 0 all checks pass, 1 a check failed, 2 usage error, 3 runtime error.\n"
        "INTERPLAB_THREADS caps the worker count; results do not depend on it.\n";
  return os.str();
}

RunResult run_experiment(const std::string& subcommand, const RunConfig& config) {
  validate(config);
  for (const auto& s : registry()) {
    if (subcommand == s.name) {
      RunResult result;
      result.subcommand = subcommand;
      result.table.columns = kCheckColumns;
      Recorder rec{result};
      s.fn(config, rec);
      return result;
    }
  }
  throw UsageError("unknown subcommand '" + subcommand + "'");
}

std::string format_csv(const RunResult& result, const RunConfig& config, std::string_view version) {
  std::ostringstream os;
  os << "# interplab " << version << "\n";
  os << "# subcommand = " << result.subcommand << "\n";
  os << "# seed = " << config.seed << "\n";
  for (const auto& [k, v] : config.echo()) os << "# " << k << " = " << v << "\n";
  for (std::size_t i = 0; i < result.table.columns.size(); ++i) {
    os << (i ? "," : "") << result.table.columns[i];
  }
  os << "\n";
  for (const auto& row : result.table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << "\n";
  }
  return os.str();
}

std::string format_json(const RunResult& result, const RunConfig& config, std::string_view version) {
  using nlohmann::ordered_json;
  ordered_json prov;
  prov["version"] = std::string(version);
  prov["subcommand"] = result.subcommand;
  prov["seed"] = config.seed;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : config.echo()) cfg[k] = v;
  prov["config"] = cfg;

  ordered_json rows = ordered_json::array();
  for (const auto& row : result.table.rows) {
    ordered_json rec = ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string& col = result.table.columns[i];
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
              // JSON has no infinities
              if (std::isfinite(v)) {
                rec[col] = v;
              } else {
                rec[col] = fmt(v);
              }
            } else {
              rec[col] = v;
            }
          },
          row[i]);
    }
    rows.push_back(std::move(rec));
  }
  ordered_json doc;
  doc["provenance"] = prov;
  doc["columns"] = result.table.columns;
  doc["rows"] = rows;
  return doc.dump(2) + "\n";
}

int run(const std::string& subcommand, const RunConfig& config, std::string_view version, std::ostream& out,
        std::ostream& log) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  try {
    result = run_experiment(subcommand, config);
  } catch (const UsageError& e) {
    log << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const VerificationError& e) {
    log << "check failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 3;
  }
  const std::string text =
      config.format == "json" ? format_json(result, config, version) : format_csv(result, config, version);
  if (config.out_path.empty()) {
    out << text;
  } else {
    std::ofstream file(config.out_path, std::ios::binary);
    file << text;
    if (!file) {
      log << "error: cannot write '" << config.out_path << "'\n";
      return 3;
    }
  }
  for (const auto& ch : result.checks) {
    log << "check " << ch.name << ": " << fmt(ch.value) << " vs " << fmt(ch.limit) << " "
        << (ch.passed ? "PASS" : "FAIL") << "\n";
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  log << "wall_time_s = " << wall << "\n";
  const auto failed = result.failures();
  if (!failed.empty()) {
    log << "failed checks:";
    for (const auto& f : failed) log << " " << f;
    log << "\n";
    return 1;
  }
  return 0;
}

}  // namespace interplab
