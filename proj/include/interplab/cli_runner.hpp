#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "interplab/errors.hpp"

namespace interplab {

/// Every tunable of a run, including the tolerances of the in-run checks.
struct RunConfig {
  double theta = 0.5;
  double q_low = 2.0;
  double q_high = std::numeric_limits<double>::infinity();
  double kappa = 1.0;
  int dim = 1;
  std::uint64_t mc_samples = 20000;
  /// coupling-verify / hermite-verify sample count
  std::uint64_t coupling_samples = 100000;
  /// profile length for fixed functions; f_N profiles use N + k_extra
  int k_max = 12;
  int k_extra = 16;
  std::uint64_t n_sign_draws = 64;
  std::uint64_t n_random_sequences = 50;
  std::vector<std::size_t> N_list{4, 16, 64, 256};
  std::vector<std::size_t> sandwich_N_list{2, 4, 6, 8, 10};
  std::vector<std::size_t> pde_N_list{4, 16, 64};
  int extreme_n_max = 10;
  int grid_resolution = 512;
  int path_nodes = 256;
  double tau_min = 1e-8;
  std::uint64_t n_paths = 4000;
  double iso_t = 0.9;
  std::uint64_t seed = 42;
  std::string out_path;
  std::string format = "csv";

  double tol_gram = 1e-10;
  double tol_d12 = 1e-8;
  double tol_se = 3.0;
  double tol_j = 0.05;
  double tol_delta_z = 5.0;
  double tol_delta_variation = 0.2;
  double tol_seq_band = 8.0;
  double tol_sandwich_band = 10.0;
  double tol_growth = 1.3;
  double tol_plateau = 0.1;
  double tol_iso = 0.05;
  double tol_divergence_se = 2.0;

  /// Canonical `key = value` pairs in declaration order (out_path excluded).
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Parses flat `key = value` lines (`#` starts a comment) and applies the
/// overrides afterwards. Unknown keys, malformed values and out-of-range
/// values raise UsageError naming the key.
RunConfig parse_config(std::string_view file_text,
                       const std::vector<std::pair<std::string, std::string>>& overrides = {});

using Cell = std::variant<double, std::int64_t, std::uint64_t, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// One in-run assertion: `value` compared against `limit`.
struct Check {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool passed = false;
};

struct RunResult {
  std::string subcommand;
  Table table;
  std::vector<Check> checks;

  /// Names of the failed checks; empty means success.
  std::vector<std::string> failures() const;
};

/// The subcommands in documentation order.
const std::vector<std::string>& subcommands();

/// Column schema and one-line description per subcommand, for --help.
std::string schema_help();

/// Runs one experiment. Unknown subcommands raise UsageError.
RunResult run_experiment(const std::string& subcommand, const RunConfig& config);

/// CSV with a `#` provenance header (version, subcommand, seed, config echo).
std::string format_csv(const RunResult& result, const RunConfig& config, std::string_view version);

/// {"provenance": {...}, "columns": [...], "rows": [{column: value}, ...]}.
std::string format_json(const RunResult& result, const RunConfig& config, std::string_view version);

/// run_experiment plus output to config.out_path (stdout when empty). Returns
/// 0 when every check passes, 1 when a check fails, 2 on usage errors and 3
/// on other errors; diagnostics and wall time go to `log`.
int run(const std::string& subcommand, const RunConfig& config, std::string_view version,
        std::ostream& out, std::ostream& log);

}  // namespace interplab
