#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "cb/approximator.hpp"
#include "cb/contract.hpp"
#include "cb/dynamics.hpp"

namespace cb {

// Which contract provisions are active. The plain bond, the call-only and
// the call-and-reset variants all run through the same code path; switching
// a provision off just prevents its events from firing (counters are still
// recorded, so diagnostics stay comparable across variants).
struct FeaturesEnabled {
  bool reset = true;
  bool call = true;

  const char* tag() const;  // plain / call_only / reset_only / call_and_reset
};

// Network input width for a model: (S/S0, [v/v0], H/H0, t/T, 1_call, 1_reset).
int feature_dim(const ModelSpec& model);

// Feature vector of one (path, step); out must have feature_dim rows.
// Normalizations use the PathSet's own s0/v0/h0; t/T = step/n_steps.
void features_at(const PathSet& paths, int path, int step,
                 Eigen::Ref<Eigen::VectorXd> out);

// One column per path at a fixed step: feature_dim x n_paths.
Eigen::MatrixXd feature_matrix(const PathSet& paths, int step);

// Walks every path forward through the trigger logic: pushes each close into
// the rolling window, counts reset/call observations against the prevailing
// conversion price, applies events (call takes precedence over reset), and
// writes H, both counters, cumulative resets and the indicator flags into
// the PathSet. Indicators record "counter at or above threshold" for enabled
// provisions, event or not. Idempotent; marks the set augmented.
void forward_pass(PathSet& paths, const ContractTerms& terms,
                  const FeaturesEnabled& enabled);

// One-step value update: cont = e^{-r h} * next + h*B*C per path, clamped
// through the call region max(conv, min(cont, K)) on paths whose call
// indicator is set at `step`. Rejects non-finite next values.
Eigen::VectorXd build_targets(int step, const Eigen::VectorXd& next_values,
                              const PathSet& paths, const ContractTerms& terms);

struct PriceReport {
  double price = 0.0;            // network value at the initial state
  double standard_error = 0.0;   // from test-path dispersion, see below
  double out_of_sample_value = 0.0;  // mean discounted test-path value under
                                     // the fitted stopping decisions
  int n_train_paths = 0;
  int n_test_paths = 0;
  int steps = 0;
  std::string model_tag;
  std::string feature_tag;
  std::vector<double> step_losses;  // final training loss per step, 0..N-1
  double wall_seconds = 0.0;        // excluded from CSV output (determinism)
};

struct BackwardSolution {
  std::vector<Network> networks;  // networks[i] approximates the step-i value
  PriceReport report;
};

// Backward fitted-value recursion over an augmented training set, with an
// augmented test set supplying the out-of-sample value and standard error.
// Terminal values are exact payoffs; each earlier step fits a network to the
// one-step targets built from the *fitted* next-step values, then replaces
// the working values with its predictions. The reported price is the step-0
// network evaluated at the (deterministic) initial feature vector; the
// standard error is the dispersion across test paths of the discounted
// per-path value realized under the fitted call-region decisions.
// Throws std::invalid_argument on unaugmented/mismatched inputs and
// std::runtime_error if training diverges (non-finite loss).
BackwardSolution backward_solve(const PathSet& train, const PathSet& test,
                                const ContractTerms& terms,
                                const ModelSpec& model,
                                const FeaturesEnabled& enabled,
                                const NetworkConfig& net_config);

// Single CSV row (header + values); excludes wall-clock for byte-stable
// reruns. Step losses go to their own two-column CSV.
void write_price_report_csv(const PriceReport& report, std::ostream& out);
void write_step_losses_csv(const PriceReport& report, std::ostream& out);
// Human-readable block, includes wall-clock.
void write_price_report_text(const PriceReport& report, std::ostream& out);

}  // namespace cb
