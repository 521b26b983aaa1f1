#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "relspec/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::string> out;
  std::string format = "json";
  std::optional<std::string> cache;
  std::optional<double> t_min, t_max;
  std::optional<std::size_t> t_points;
  std::optional<std::uint64_t> seed;
};

int execute(const std::string& invariant, const Options& o) {
  auto config = relspec::RunConfig::parse(relspec::read_file(o.config));
  if (o.t_min) config.t_grid.min = *o.t_min;
  if (o.t_max) config.t_grid.max = *o.t_max;
  if (o.t_points) config.t_grid.points = *o.t_points;
  if (o.seed) config.seed = *o.seed;
  if (!(config.t_grid.min > 0.0) || !(config.t_grid.max > config.t_grid.min) || config.t_grid.points < 2)
    throw relspec::ConfigError("t grid needs 0 < t-min < t-max and at least two points");

  relspec::RunContext ctx;
  if (o.cache) ctx.cache_dir = fs::path(*o.cache);
  const auto result = relspec::run(config, invariant, ctx);

  if (o.format == "json") {
    const std::string text = result.envelope.dump(2) + "\n";
    if (o.out)
      relspec::atomic_write(fs::path(*o.out) / (invariant + ".json"), text);
    else
      std::cout << text;
    return 0;
  }
  if (result.tables.empty()) throw relspec::ConfigError("invariant '" + invariant + "' has no CSV table; use --format json");
  for (const auto& [name, csv] : result.tables) {
    if (o.out)
      relspec::atomic_write(fs::path(*o.out) / name, csv);
    else
      std::cout << csv;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Relative spectral invariants of operator pairs"};
  app.require_subcommand(1);
  app.set_version_flag("--version", relspec::kToolVersion);

  Options opts;
  const std::map<std::string, std::string> help{
      {"heat-trace", "relative heat trace (and supertrace for graded pairs)"},
      {"fit", "small-t asymptotic expansion of the relative heat trace"},
      {"zeta", "relative zeta function, its value and derivative at 0"},
      {"det", "relative zeta-regularized determinant"},
      {"index", "relative index by heat supertrace and scattering"},
      {"ssf", "spectral shift function with trace-formula checks"},
      {"eta", "relative eta invariant"},
      {"torsion", "relative analytic torsion of two circle metrics"},
      {"sobolev-dist", "discrete Sobolev distance between two circle metrics"},
      {"certify", "scattering or truncation certificate"}};

  std::string chosen;
  for (const auto& name : relspec::invariant_names()) {
    auto* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", opts.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opts.out, "output directory");
    sub->add_option("--format", opts.format, "output format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--cache", opts.cache, "spectrum cache directory");
    sub->add_option("--t-min", opts.t_min, "smallest t of the heat grid");
    sub->add_option("--t-max", opts.t_max, "largest t of the heat grid");
    sub->add_option("--t-points", opts.t_points, "number of logarithmic t points");
    sub->add_option("--seed", opts.seed, "seed for randomized fixtures");
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return execute(chosen, opts);
  } catch (const relspec::ConfigError& e) {
    std::cerr << "relspec: config error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const relspec::Error& e) {
    std::cerr << "relspec: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "relspec: " << e.what() << "\n";
    return 1;
  }
}
