// hhlab: runs the experiment suites and writes JSON/CSV reports.
//
//   hhlab identities --suite derivations --seed 7 --out results
//   hhlab kernel-decay --l 0,1,2 --r-sweep 2^-6:2^-1
//   hhlab report --input results/kernel-decay.json --out plots
//
// Options may also come from a flat key = value file given by --config;
// command-line flags take precedence. Exit status: 0 all checks pass,
// 1 a check failed, 2 usage error.

#include "hh/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kUsage = 2;

void print_report(const hh::SuiteReport& r, const std::vector<std::string>& files) {
  std::printf("[%s]\n", r.suite.c_str());
  for (const auto& c : r.checks)
    std::printf("  %s  %-70s value=%.6g tol=%.3g\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.value, c.tolerance);
  for (const auto& f : files) std::printf("  wrote %s\n", f.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heisenberg-group harmonic analysis experiments"};
  app.set_config("--config", "", "flat key = value file; flags override it");
  app.require_subcommand(1);
  app.fallthrough();

  hh::ExperimentConfig cfg;
  std::uint64_t seed = 0;
  std::string input;

  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (required for randomized suites)");
  app.add_option("--suite", cfg.suite, "identity suite: hermite, weyl, coefficients, derivations, heat, all");
  app.add_option("--n", cfg.n, "dimension n (1 or 2)");
  app.add_option("--K", cfg.K, "Hermite truncation (default 16 for n = 1, 8 for n = 2)");
  app.add_option("--lambda-grid", cfg.lambda_grid, "lambda grid min,max,ratio");
  app.add_option("--grid", cfg.grid, "region z_nodes,z_half_width,t_points,t_half_length,j_min,j_max");
  app.add_option("--r-sweep", cfg.r_sweep, "radii 2^a:2^b or a comma list");
  app.add_option("--l", cfg.l_values, "moment orders, comma list");
  app.add_option("--field", cfg.field, "derivative in the moment: none, T, Xi, Yi");
  app.add_option("--N", cfg.N_values, "truncation levels, comma list");
  app.add_option("--weight-eps", cfg.weight_eps, "weight family exponents, comma list");
  app.add_option("--p", cfg.p, "Lebesgue exponent (> 2)");
  app.add_option("--symbol", cfg.symbol, "multiplier symbol");
  app.add_option("--spaces", cfg.spaces, "graph spaces: path, grid2d, tree");
  app.add_option("--s", cfg.sobolev_s, "Sobolev order for graph symbols");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--input", input, "report JSON (report subcommand)");
  for (auto* opt : app.get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  for (const char* name : {"identities", "kernel-decay", "sparse-exp", "weighted-exp", "graph-exp"})
    app.add_subcommand(name, std::string(name) + " suite");
  app.add_subcommand("report", "write plot data (x, y, series CSV and axis JSON) from a report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "report") {
      if (input.empty()) throw hh::UsageError("report: --input is required");
      for (const auto& f : hh::emit_plot_data(input, cfg.out_dir)) std::printf("wrote %s\n", f.c_str());
      return 0;
    }
    cfg.command = command;
    if (seed_opt->count() > 0) cfg.seed = seed;
    bool pass = true;
    for (const auto& r : hh::run_suite(cfg)) {
      print_report(r, hh::write_report(r, cfg.out_dir));
      pass = pass && r.pass();
    }
    return pass ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "hhlab: " << e.what() << "\n";
    return kUsage;
  }
}
