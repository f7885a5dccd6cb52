#pragma once
// Experiment suites behind hhlab: configuration, pass/fail checks, data
// tables and the JSON/CSV report format.

#include "hh/dyadic_sparse.hpp"
#include "hh/graph_spectral.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace hh {

// Invalid configuration; hhlab maps it to exit status 2.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Relation { AtMost, AtLeast, Equal };

struct Check {
  std::string name;
  std::string paper_ref;  // neutral description of the statement checked
  double value = 0.0;
  double tolerance = 0.0;
  Relation relation = Relation::AtMost;
  bool pass = false;
};
Check check_at_most(std::string name, std::string ref, double value, double tolerance);
Check check_at_least(std::string name, std::string ref, double value, double bound);
Check check_equal(std::string name, std::string ref, double value, double expected);

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

// Plot data: (x, y, series) points with axis metadata. Never rendered.
struct PlotData {
  std::string name;
  std::string x_label, y_label;
  std::vector<std::tuple<double, double, std::string>> points;
};

struct SuiteReport {
  std::string suite;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::vector<Check> checks;
  std::vector<Table> tables;
  std::vector<PlotData> plots;

  bool pass() const;
  nlohmann::ordered_json to_json() const;
};

struct ExperimentConfig {
  std::string command;  // identities, kernel-decay, sparse-exp, weighted-exp, graph-exp
  std::string suite;    // identities: hermite, weyl, coefficients, derivations, heat, all
  int n = 1;
  int K = 0;  // basis truncation; 0 selects 16 for n = 1 and 8 for n = 2
  std::string lambda_grid;   // "min,max,ratio"; empty for the suite default
  std::string grid;          // "z_nodes,z_half_width,t_points,t_half_length,j_min,j_max"; empty for the default
  std::string r_sweep = "2^-6:2^-2";
  std::string l_values = "0,1,2";
  std::string field = "none";
  std::string N_values = "2,4,6";
  std::string weight_eps = "0,0.1,0.2,0.3";
  double p = 4.0;
  std::string symbol = "identity";
  std::string spaces = "path,grid2d";
  double sobolev_s = 1.5;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";

  // Throws UsageError naming the offending field.
  void validate() const;
  int truncation() const { return K > 0 ? K : (n == 1 ? 16 : 8); }
};

// Runs the configured suite (or, for "identities --suite all", every identity suite).
std::vector<SuiteReport> run_suite(const ExperimentConfig& cfg);

// <dir>/<suite>.json, <dir>/<suite>_checks.csv and <dir>/<suite>_<table>.csv.
// Returns the paths written.
std::vector<std::string> write_report(const SuiteReport& report, const std::string& dir);

// Reads a report JSON and writes <dir>/<suite>_<plot>.csv (x, y, series) and
// <dir>/<suite>_<plot>.axes.json. Throws std::runtime_error naming a missing file.
std::vector<std::string> emit_plot_data(const std::string& report_path, const std::string& dir);

// "2^-6:2^-1" gives 2^-6, 2^-5, ..., 2^-1; a comma list of numbers is taken as is.
std::vector<double> parse_r_sweep(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);
std::vector<double> parse_double_list(const std::string& s);

// Region shared by the sparse checks: z nodes 17 on [-1,1]^2, t grid 256 on
// [-1,1), cube levels 2..4, eta = 1/2.
CubeSystem experiment_cube_system();
// [-1,1]^3 with three levels (0..2).
CubeSystem unit_cube_system();
// Level-j cube containing the origin.
CubeRef origin_cube(const CubeSystem& sys, int level);

// Hermite symbols by name: identity, imaginary-power (((2k+n)|lambda|)^{i}).
HermiteSymbol named_symbol(const std::string& name);

// Graph symbols by name: heat (e^{-x}), one (exactly 1), resolvent (1/(1+x)).
SymbolFunction named_graph_symbol(const std::string& name);
// Default size per space kind: path 128, grid 16 x 16, tree depth 6.
int default_space_size(SpaceKind k);
// Edge list "u,v" and measure "node,mu" CSVs.
std::vector<std::string> write_space(const DiscreteSpace& X, const std::string& dir);

}  // namespace hh
