#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "interplab/cli_runner.hpp"

#ifndef INTERPLAB_VERSION
#define INTERPLAB_VERSION "unknown"
#endif

int main(int argc, char** argv) {
  using namespace interplab;
  CLI::App app{"interplab: reproducible interpolation-scale experiments"};
  app.footer(schema_help());

  std::string subcommand;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed, out, format;
  app.add_option("subcommand", subcommand, "one of the subcommands listed below")->required();
  app.add_option("overrides", overrides, "key=value config overrides");
  auto* config_opt = app.add_option("--config", config_path, "config file of 'key = value' lines");
  auto* seed_opt = app.add_option("--seed", seed, "64-bit unsigned master seed");
  auto* out_opt = app.add_option("--out", out, "output file (default: stdout)");
  auto* format_opt = app.add_option("--format", format, "csv or json");
  app.set_version_flag("--version", INTERPLAB_VERSION);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string text;
  if (*config_opt) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
      std::cerr << "usage error: cannot read config file '" << config_path << "'\n";
      return 2;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }

  // positional overrides first, explicit flags last
  std::vector<std::pair<std::string, std::string>> kv;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      std::cerr << "usage error: override '" << o << "' is not key=value\n";
      return 2;
    }
    kv.emplace_back(o.substr(0, eq), o.substr(eq + 1));
  }
  if (*seed_opt) kv.emplace_back("seed", seed);
  if (*out_opt) kv.emplace_back("out_path", out);
  if (*format_opt) kv.emplace_back("format", format);

  RunConfig config;
  try {
    config = parse_config(text, kv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
  return run(subcommand, config, INTERPLAB_VERSION, std::cout, std::cerr);
}
