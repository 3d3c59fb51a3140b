#include "cb/approximator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "cb/math.hpp"

namespace cb {

void NetworkConfig::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (input_dim <= 0) fail("network: input_dim must be positive");
  if (hidden_layers <= 0) fail("network: hidden_layers must be positive");
  if (hidden_width <= 0) fail("network: hidden_width must be positive");
  if (!(learning_rate > 0.0)) fail("network: learning_rate must be > 0");
  if (batch_size <= 0) fail("network: batch_size must be positive");
  if (epochs <= 0) fail("network: epochs must be positive");
  if (cold_start_epochs < 0) fail("network: cold_start_epochs must be >= 0");
}

namespace {

std::vector<std::pair<int, int>> layer_shapes(const NetworkConfig& c) {
  std::vector<std::pair<int, int>> shapes;
  int in = c.input_dim;
  for (int l = 0; l < c.hidden_layers; ++l) {
    shapes.emplace_back(c.hidden_width, in);
    in = c.hidden_width;
  }
  shapes.emplace_back(1, in);
  return shapes;
}

void check_input_dim(const Network& net, Eigen::Index rows) {
  if (rows != net.config.input_dim)
    throw std::invalid_argument("forward: feature dimension mismatch");
}

// Forward pass keeping post-activation values per layer (needed by backprop).
// activations[0] is the input block; activations[l] for l>=1 is layer l's
// ReLU output, and the last entry is the linear output row.
void forward_cached(const Network& net, const Eigen::MatrixXd& X,
                    std::vector<Eigen::MatrixXd>& activations) {
  const int L = net.n_layers();
  activations.resize(static_cast<std::size_t>(L) + 1);
  activations[0] = X;
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z =
        (net.weights[static_cast<std::size_t>(l)] * activations[static_cast<std::size_t>(l)])
            .colwise() +
        net.biases[static_cast<std::size_t>(l)];
    if (l + 1 < L) z = z.cwiseMax(0.0);
    activations[static_cast<std::size_t>(l) + 1] = std::move(z);
  }
}

// Exact backprop of the mean-squared-error loss. activations as produced by
// forward_cached at the current parameters.
Gradients backprop(const Network& net,
                   const std::vector<Eigen::MatrixXd>& activations,
                   const Eigen::VectorXd& y) {
  const int L = net.n_layers();
  const auto M = static_cast<double>(y.size());
  Gradients g;
  g.w.resize(static_cast<std::size_t>(L));
  g.b.resize(static_cast<std::size_t>(L));

  // dL/d(output row), output = activations[L] (1 x M)
  Eigen::MatrixXd delta =
      (2.0 / M) * (activations[static_cast<std::size_t>(L)].row(0).transpose() - y)
          .transpose();

  for (int l = L - 1; l >= 0; --l) {
    const Eigen::MatrixXd& a_in = activations[static_cast<std::size_t>(l)];
    g.w[static_cast<std::size_t>(l)].noalias() = delta * a_in.transpose();
    g.b[static_cast<std::size_t>(l)] = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back =
          net.weights[static_cast<std::size_t>(l)].transpose() * delta;
      // ReLU mask: the stored activation is already max(z,0), so "> 0" marks
      // the active units (ties at exactly zero carry zero gradient).
      delta = back.cwiseProduct(
          (a_in.array() > 0.0).cast<double>().matrix());
    }
  }
  return g;
}

}  // namespace

Network init_network(const NetworkConfig& config) {
  config.validate();
  Network net;
  net.config = config;
  Rng rng(config.init_seed, 0xa11c0de);
  for (auto [out, in] : layer_shapes(config)) {
    Eigen::MatrixXd w(out, in);
    const double limit = std::sqrt(6.0 / in);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        w(r, c) = limit * (2.0 * rng.next_uniform() - 1.0);
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  return net;
}

Network zero_network(const NetworkConfig& config, double output_bias) {
  config.validate();
  Network net;
  net.config = config;
  for (auto [out, in] : layer_shapes(config)) {
    net.weights.push_back(Eigen::MatrixXd::Zero(out, in));
    net.biases.push_back(Eigen::VectorXd::Zero(out));
  }
  net.biases.back()(0) = output_bias;
  return net;
}

double forward(const Network& net, const Eigen::VectorXd& x) {
  check_input_dim(net, x.size());
  Eigen::VectorXd a = x;
  const int L = net.n_layers();
  for (int l = 0; l < L; ++l) {
    Eigen::VectorXd z = net.weights[static_cast<std::size_t>(l)] * a +
                        net.biases[static_cast<std::size_t>(l)];
    if (l + 1 < L) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a(0);
}

Eigen::VectorXd forward_batch(const Network& net, const Eigen::MatrixXd& X) {
  check_input_dim(net, X.rows());
  Eigen::MatrixXd a = X;
  const int L = net.n_layers();
  for (int l = 0; l < L; ++l) {
    Eigen::MatrixXd z =
        (net.weights[static_cast<std::size_t>(l)] * a).colwise() +
        net.biases[static_cast<std::size_t>(l)];
    if (l + 1 < L) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a.row(0).transpose();
}

double mse_loss(const Network& net, const Eigen::MatrixXd& X,
                const Eigen::VectorXd& y) {
  Eigen::VectorXd pred = forward_batch(net, X);
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

Gradients mse_gradients(const Network& net, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& y) {
  check_input_dim(net, X.rows());
  std::vector<Eigen::MatrixXd> acts;
  forward_cached(net, X, acts);
  return backprop(net, acts, y);
}

double max_gradient_rel_error(const Network& net, const Eigen::MatrixXd& X,
                              const Eigen::VectorXd& y, double fd_eps) {
  Gradients g = mse_gradients(net, X, y);
  Network probe = net;
  double worst = 0.0;

  auto probe_param = [&](double& theta, double analytic) {
    const double saved = theta;
    theta = saved + fd_eps;
    double up = mse_loss(probe, X, y);
    theta = saved - fd_eps;
    double dn = mse_loss(probe, X, y);
    theta = saved;
    double numeric = (up - dn) / (2.0 * fd_eps);
    double denom = std::max({1.0, std::fabs(analytic), std::fabs(numeric)});
    worst = std::max(worst, std::fabs(analytic - numeric) / denom);
  };

  for (int l = 0; l < net.n_layers(); ++l) {
    auto& W = probe.weights[static_cast<std::size_t>(l)];
    auto& gW = g.w[static_cast<std::size_t>(l)];
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c)
        probe_param(W(r, c), gW(r, c));
    auto& b = probe.biases[static_cast<std::size_t>(l)];
    auto& gb = g.b[static_cast<std::size_t>(l)];
    for (Eigen::Index r = 0; r < b.size(); ++r) probe_param(b(r), gb(r));
  }
  return worst;
}

AdamState::AdamState(const Network& net) {
  for (const auto& w : net.weights) {
    m_w_.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    v_w_.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : net.biases) {
    m_b_.push_back(Eigen::VectorXd::Zero(b.size()));
    v_b_.push_back(Eigen::VectorXd::Zero(b.size()));
  }
}

void AdamState::update(Network& net, const Gradients& g, double learning_rate) {
  const double b1 = net.config.adam_beta1;
  const double b2 = net.config.adam_beta2;
  const double eps = net.config.adam_eps;
  ++t_;
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(t_));

  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    m_w_[l] = b1 * m_w_[l] + (1.0 - b1) * g.w[l];
    v_w_[l] = b2 * v_w_[l] + (1.0 - b2) * g.w[l].cwiseProduct(g.w[l]);
    net.weights[l].array() -=
        learning_rate * (m_w_[l].array() / corr1) /
        ((v_w_[l].array() / corr2).sqrt() + eps);

    m_b_[l] = b1 * m_b_[l] + (1.0 - b1) * g.b[l];
    v_b_[l] = b2 * v_b_[l] + (1.0 - b2) * g.b[l].cwiseProduct(g.b[l]);
    net.biases[l].array() -=
        learning_rate * (m_b_[l].array() / corr1) /
        ((v_b_[l].array() / corr2).sqrt() + eps);
  }
}

FitReport fit(Network& net, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
              std::uint64_t shuffle_seed) {
  net.config.validate();
  check_input_dim(net, X.rows());
  if (X.cols() != y.size())
    throw std::invalid_argument("fit: inputs/targets row mismatch");
  if (!y.allFinite()) throw std::invalid_argument("fit: non-finite targets");
  const int M = static_cast<int>(y.size());
  if (M == 0) throw std::invalid_argument("fit: empty training set");

  // Target standardization, folded back into the output layer afterwards:
  // training operates on z = (y - mu)/s, so the optimizer sees unit-scale
  // residuals regardless of the currency unit.
  double mu = 0.0, s = 1.0;
  if (net.config.standardize_targets) {
    mu = y.mean();
    double var = (y.array() - mu).square().sum() / M;
    s = std::sqrt(var);
    if (!(s > 1e-12)) s = 1.0;
  }
  Eigen::VectorXd z = (y.array() - mu) / s;
  if (net.fitted) {
    // Map the warm-started output layer into standardized coordinates so it
    // keeps predicting the same raw values.
    net.weights.back() /= s;
    net.biases.back().array() = (net.biases.back().array() - mu) / s;
  }

  const int batch = std::min(net.config.batch_size, M);
  const int epochs =
      net.config.epochs + (net.fitted ? 0 : net.config.cold_start_epochs);

  AdamState adam(net);
  Rng shuffle_rng(shuffle_seed, 0x5eedull);
  std::vector<int> order(static_cast<std::size_t>(M));
  std::iota(order.begin(), order.end(), 0);

  Eigen::MatrixXd Xb(X.rows(), batch);
  Eigen::VectorXd zb(batch);
  std::vector<Eigen::MatrixXd> acts;

  FitReport report;
  report.epoch_losses.reserve(static_cast<std::size_t>(epochs));

  for (int e = 0; e < epochs; ++e) {
    // Fisher-Yates from the dedicated stream
    for (int i = M - 1; i > 0; --i) {
      int j = static_cast<int>(shuffle_rng.next_u64() %
                               static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
    }

    double loss_sum = 0.0;
    for (int start = 0; start < M; start += batch) {
      const int count = std::min(batch, M - start);
      for (int k = 0; k < count; ++k) {
        int src = order[static_cast<std::size_t>(start + k)];
        Xb.col(k) = X.col(src);
        zb(k) = z(src);
      }
      auto Xv = Xb.leftCols(count);
      auto zv = zb.head(count);

      forward_cached(net, Xv, acts);
      double batch_mse =
          (acts.back().row(0).transpose() - zv).squaredNorm() / count;
      loss_sum += batch_mse * count;

      Gradients g = backprop(net, acts, zv);
      adam.update(net, g, net.config.learning_rate);
    }
    report.epoch_losses.push_back(loss_sum / M * s * s);
  }
  report.final_loss = report.epoch_losses.back();

  // Enforce the intercept-direction optimality condition of the least-squares
  // problem exactly: a finite Adam budget leaves a small nonzero mean
  // residual, and because each step's predictions become the next step's
  // regression targets in the backward induction, those common-mode offsets
  // would otherwise compound across hundreds of steps. Shifting the output
  // bias by the mean residual is what full convergence would have done to
  // this direction anyway.
  {
    const Eigen::VectorXd zhat = forward_batch(net, X);
    net.biases.back().array() += (z - zhat).mean();
  }

  if (net.config.standardize_targets) {
    net.weights.back() *= s;
    net.biases.back().array() = net.biases.back().array() * s + mu;
  }
  net.fitted = true;
  return report;
}

void dump_network_csv(const Network& net, std::ostream& out) {
  out << "layer,kind,row,col,value\n";
  char buf[96];
  for (int l = 0; l < net.n_layers(); ++l) {
    const auto& W = net.weights[static_cast<std::size_t>(l)];
    for (Eigen::Index r = 0; r < W.rows(); ++r)
      for (Eigen::Index c = 0; c < W.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%d,w,%ld,%ld,%.17g\n", l, long(r),
                      long(c), W(r, c));
        out << buf;
      }
    const auto& b = net.biases[static_cast<std::size_t>(l)];
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      std::snprintf(buf, sizeof buf, "%d,b,%ld,0,%.17g\n", l, long(r), b(r));
      out << buf;
    }
  }
}

}  // namespace cb
