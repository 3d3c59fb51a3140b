#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace cb {

struct NetworkConfig {
  int input_dim = 5;  // 5 for one-factor models, 6 with a variance feature
  int hidden_layers = 3;
  int hidden_width = 64;
  double learning_rate = 1e-3;
  int batch_size = 512;
  int epochs = 8;
  std::uint64_t init_seed = 0;

  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  // Extra epochs prepended when fitting a never-trained network. A freshly
  // initialized net starts near zero output while value targets sit near the
  // bond face; the configured per-step epoch budget is tuned for tracking a
  // slowly moving target from a warm start, not for covering that distance.
  // Applies only to the first fit; warm-started refits use `epochs` alone.
  int cold_start_epochs = 64;

  // Fit in target-standardized coordinates and fold the affine map back into
  // the output layer afterwards. Leaves the network mapping form unchanged
  // and makes the optimizer scale-free w.r.t. the currency unit.
  bool standardize_targets = true;

  void validate() const;
};

// Fully connected ReLU network with scalar output. weights[l] has shape
// out_l x in_l; the layer chain is input_dim -> width -> ... -> width -> 1.
struct Network {
  NetworkConfig config;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  bool fitted = false;

  int n_layers() const { return static_cast<int>(weights.size()); }
};

struct Gradients {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
};

// Adam with bias correction; moments live here, not in the network, so a
// stored value-function snapshot is just parameters.
class AdamState {
 public:
  explicit AdamState(const Network& net);
  void update(Network& net, const Gradients& g, double learning_rate);
  long step_count() const { return t_; }

 private:
  std::vector<Eigen::MatrixXd> m_w_, v_w_;
  std::vector<Eigen::VectorXd> m_b_, v_b_;
  long t_ = 0;
};

// He-style fan-in uniform weights (U[-sqrt(6/fan_in), +sqrt(6/fan_in)]),
// zero biases; deterministic in config.init_seed.
Network init_network(const NetworkConfig& config);

// Test hook: all parameters zero except the output bias.
Network zero_network(const NetworkConfig& config, double output_bias);

double forward(const Network& net, const Eigen::VectorXd& x);

// X is input_dim x M (one sample per column); returns M fitted values.
Eigen::VectorXd forward_batch(const Network& net, const Eigen::MatrixXd& X);

// Mean squared error over the full sample and its exact parameter gradients.
double mse_loss(const Network& net, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y);
Gradients mse_gradients(const Network& net, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y);

// Largest relative disagreement between analytic gradients and central
// finite differences with step fd_eps, across every parameter.
double max_gradient_rel_error(const Network& net, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, double fd_eps);

struct FitReport {
  double final_loss = 0.0;             // raw target units
  std::vector<double> epoch_losses;    // raw target units, one per epoch
};

// Mini-batched Adam on MSE. Shuffles per epoch from shuffle_seed, keeps the
// last partial batch, resets optimizer moments at entry. Rejects non-finite
// targets. Bit-reproducible given (network state, data, shuffle_seed).
FitReport fit(Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              std::uint64_t shuffle_seed);

// Weight snapshot as flat CSV (layer-major, row-major within a layer).
void dump_network_csv(const Network& net, std::ostream& out);

}  // namespace cb
