#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace cb {

// Risk-neutral dynamics of the underlying. One tagged struct rather than a
// variant hierarchy: the parameter sets are tiny and the dispatch is trivial.
struct ModelSpec {
  enum class Kind { gbm, cev, heston };
  Kind kind = Kind::gbm;

  // gbm / cev
  double sigma = 0.30;
  // cev elasticity
  double gamma = 1.0;
  // heston
  double v0 = 0.09;
  double kappa = 2.0;
  double theta = 0.09;
  double eta = 0.45;
  double rho = -0.50;

  static ModelSpec gbm(double sigma);
  static ModelSpec cev(double sigma, double gamma);
  static ModelSpec heston(double v0, double kappa, double theta, double eta,
                          double rho);

  bool has_variance() const { return kind == Kind::heston; }
  const char* tag() const;
  void validate() const;
};

// Uniform time grid t_i = i*h, i = 0..N with h = T/N, N = round(spy*T).
struct GridSpec {
  int steps_per_year = 52;
  double maturity_years = 6.0;
  std::uint64_t seed = 1;
  int n_paths = 12000;
  bool antithetic = false;

  int n_steps() const;
  double step_size() const { return maturity_years / n_steps(); }
  void validate() const;
};

// Simulated trajectories plus the contract-side state written later by the
// pricer's forward pass. Row-major [path][step], step index 0..n_steps.
struct PathSet {
  int n_paths = 0;
  int n_steps = 0;
  double s0 = 0.0;
  double v0 = 0.0;  // heston only
  double h0 = 0.0;  // initial conversion price, set by the forward pass
  double step_years = 0.0;
  bool augmented = false;  // true once the forward pass has filled H/counters

  std::vector<double> stock;
  std::vector<double> variance;  // empty unless heston
  std::vector<double> conversion_price;
  std::vector<std::int32_t> call_count;
  std::vector<std::int32_t> reset_count;
  std::vector<std::int32_t> cumulative_resets;
  std::vector<std::uint8_t> call_indicator;
  std::vector<std::uint8_t> reset_indicator;

  std::size_t idx(int path, int step) const {
    return static_cast<std::size_t>(path) *
               static_cast<std::size_t>(n_steps + 1) +
           static_cast<std::size_t>(step);
  }
  double S(int path, int step) const { return stock[idx(path, step)]; }
  double v(int path, int step) const { return variance[idx(path, step)]; }
  double H(int path, int step) const { return conversion_price[idx(path, step)]; }
  bool has_variance() const { return !variance.empty(); }
};

PathSet simulate_gbm(double s0, const ModelSpec& model, const GridSpec& grid,
                     double rate);
PathSet simulate_cev(double s0, const ModelSpec& model, const GridSpec& grid,
                     double rate);
PathSet simulate_heston(double s0, const ModelSpec& model, const GridSpec& grid,
                        double rate);

// Dispatch on model.kind.
PathSet simulate(double s0, const ModelSpec& model, const GridSpec& grid,
                 double rate);

// Largest |z|-score of the discounted-mean drift across all grid times:
// under the risk-neutral measure e^{-r t_i} S_i has mean s0 at every step.
struct DriftCheck {
  double max_abs_z = 0.0;
  int worst_step = 0;
};
DriftCheck discounted_drift_check(const PathSet& paths, double rate);

// Debug dump, one row per (path, step).
void dump_paths_csv(const PathSet& paths, std::ostream& out);

}  // namespace cb
