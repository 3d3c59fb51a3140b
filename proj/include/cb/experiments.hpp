#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cb/contract.hpp"
#include "cb/dynamics.hpp"
#include "cb/oracles.hpp"
#include "cb/pricer.hpp"

namespace cb {

// One experiment definition, loadable from a flat INI-style text file with
// [contract], [model], [grid], [network] and [experiment] sections. Keys
// mirror the corresponding struct fields; the schema ships with the example
// files under configs/.
struct ExperimentConfig {
  ContractTerms contract;
  ModelSpec model;
  double s0 = 6.4;
  GridSpec grid;           // training-path grid; seed is the training seed
  int n_test_paths = 4000; // test paths use grid.seed + 1
  NetworkConfig network;
  FeaturesEnabled features{true, true};
  std::string tag = "experiment";

  struct Sweep {
    std::string parameter;  // one of: s0, sigma, v0, a, b, maturity
    std::vector<double> values;
  };
  std::vector<Sweep> sweeps;

  static ExperimentConfig from_file(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);

  // Compact parameter echo (model, contract, grid, seed) carried on every
  // emitted row so any number in any table can be reproduced exactly.
  std::string parameter_echo() const;

  void validate() const;
};

// Returns a copy of the config with one named parameter replaced. Valid
// names: s0, sigma, v0, a, b, maturity. Throws on anything else.
ExperimentConfig with_parameter(const ExperimentConfig& cfg,
                                const std::string& name, double value);

// Simulate (train seed = grid.seed, test seed = grid.seed + 1), run the
// forward pass with the configured provision flags, and solve backward.
struct PriceRun {
  PriceReport report;
  BackwardSolution solution;
  PathSet train;
  PathSet test;
};
PriceRun run_price(const ExperimentConfig& cfg);

// Value decomposition at shared simulation seeds: the same paths priced
// plain, call-only, and call-plus-reset. Effects are defined as
// call_effect = V_call - V_plain, reset_effect = V_call_and_reset - V_call.
struct DecompositionResult {
  std::string model;
  PriceReport plain;
  PriceReport call_only;
  PriceReport call_and_reset;
  double call_effect = 0.0;
  double reset_effect = 0.0;
};
DecompositionResult run_decomposition(const ExperimentConfig& cfg);

// One row per (sweep parameter, sweep value): price with everything else at
// baseline, all cells at common random numbers. Each sweep must hold exactly
// five values; the middle row is the baseline and delta_pct is measured
// against it.
struct SensitivityRow {
  std::string parameter;
  int perturbation_pct = 0;  // -20, -10, 0, +10, +20 by position
  double value = 0.0;
  double price = 0.0;
  double standard_error = 0.0;
  double delta_pct = 0.0;
};
std::vector<SensitivityRow> run_sensitivity(const ExperimentConfig& cfg);

// Full-factorial price grid over two named parameters. Guarded to at most
// 2500 cells.
struct SurfaceCell {
  double p1 = 0.0;
  double p2 = 0.0;
  double price = 0.0;
  double standard_error = 0.0;
};
std::vector<SurfaceCell> run_surface(const ExperimentConfig& cfg,
                                     const std::string& param1,
                                     const std::vector<double>& grid1,
                                     const std::string& param2,
                                     const std::vector<double>& grid2);

// Cross-sections of the trained model: for each snapshot time and test path,
// the call counter, cumulative resets, the stock level, and whether the
// holder would convert there (call trigger set and conversion value at least
// the capped continuation under the fitted value functions).
struct StatespaceRow {
  double snapshot_years = 0.0;
  int path = 0;
  int call_counter = 0;
  int cumulative_resets = 0;
  double stock = 0.0;
  bool convert = false;
};
std::vector<StatespaceRow> run_statespace(const ExperimentConfig& cfg,
                                          const std::vector<double>& snapshot_times);

// CSV emitters. Pure functions of their inputs: fixed formats, no clocks,
// no locale dependence, so byte-identical reruns stay byte-identical.
void write_decomposition_csv(const DecompositionResult& result,
                             const ExperimentConfig& cfg, std::ostream& out);
void write_sensitivity_csv(const std::vector<SensitivityRow>& rows,
                           const ExperimentConfig& cfg, std::ostream& out);
void write_surface_csv(const std::vector<SurfaceCell>& cells,
                       const std::string& param1, const std::string& param2,
                       const ExperimentConfig& cfg, std::ostream& out);
void write_statespace_csv(const std::vector<StatespaceRow>& rows,
                          const ExperimentConfig& cfg, std::ostream& out);

}  // namespace cb
