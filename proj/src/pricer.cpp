#include "cb/pricer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "cb/math.hpp"

namespace cb {

const char* FeaturesEnabled::tag() const {
  if (call && reset) return "call_and_reset";
  if (call) return "call_only";
  if (reset) return "reset_only";
  return "plain";
}

int feature_dim(const ModelSpec& model) { return model.has_variance() ? 6 : 5; }

void features_at(const PathSet& paths, int path, int step,
                 Eigen::Ref<Eigen::VectorXd> out) {
  const std::size_t k = paths.idx(path, step);
  Eigen::Index j = 0;
  out(j++) = paths.stock[k] / paths.s0;
  if (paths.has_variance()) out(j++) = paths.variance[k] / paths.v0;
  out(j++) = paths.conversion_price[k] / paths.h0;
  out(j++) = static_cast<double>(step) / paths.n_steps;
  out(j++) = paths.call_indicator[k] ? 1.0 : 0.0;
  out(j++) = paths.reset_indicator[k] ? 1.0 : 0.0;
}

Eigen::MatrixXd feature_matrix(const PathSet& paths, int step) {
  const int dim = paths.has_variance() ? 6 : 5;
  Eigen::MatrixXd X(dim, paths.n_paths);
  for (int p = 0; p < paths.n_paths; ++p) features_at(paths, p, step, X.col(p));
  return X;
}

void forward_pass(PathSet& paths, const ContractTerms& terms,
                  const FeaturesEnabled& enabled) {
  terms.validate();
  if (paths.n_paths <= 0 || paths.n_steps <= 0)
    throw std::invalid_argument("forward_pass: empty path set");

  const std::size_t n = static_cast<std::size_t>(paths.n_paths) *
                        static_cast<std::size_t>(paths.n_steps + 1);
  paths.conversion_price.assign(n, 0.0);
  paths.call_count.assign(n, 0);
  paths.reset_count.assign(n, 0);
  paths.cumulative_resets.assign(n, 0);
  paths.call_indicator.assign(n, 0);
  paths.reset_indicator.assign(n, 0);
  paths.h0 = terms.initial_conversion_price;

  for (int p = 0; p < paths.n_paths; ++p) {
    TriggerState window(terms.window_length);
    double H = terms.initial_conversion_price;
    int cumulative = 0;
    for (int i = 0; i <= paths.n_steps; ++i) {
      const std::size_t k = paths.idx(p, i);
      const double S = paths.stock[k];
      window.push(S);
      // Counters are taken against the conversion price the step arrived
      // with; the stored H is the post-event value so the next step (and the
      // terminal payoff) see the revised conversion terms.
      const TriggerCounts c = count_triggers(window, H, terms);
      const bool armed = i >= terms.no_trigger_before;
      const bool call_hit =
          enabled.call && armed && c.n_call >= terms.call_required_days;
      const bool reset_hit =
          enabled.reset && armed && c.n_reset >= terms.reset_required_days;
      if (reset_hit && !call_hit) {
        H = reset_mapping(S, H, terms.reset_floor);
        ++cumulative;
      }
      paths.conversion_price[k] = H;
      paths.call_count[k] = c.n_call;
      paths.reset_count[k] = c.n_reset;
      paths.cumulative_resets[k] = cumulative;
      paths.call_indicator[k] = call_hit ? 1 : 0;
      paths.reset_indicator[k] = reset_hit ? 1 : 0;
    }
  }
  paths.augmented = true;
}

Eigen::VectorXd build_targets(int step, const Eigen::VectorXd& next_values,
                              const PathSet& paths,
                              const ContractTerms& terms) {
  if (!paths.augmented)
    throw std::invalid_argument("build_targets: path set not augmented");
  if (step < 0 || step >= paths.n_steps)
    throw std::invalid_argument("build_targets: step out of range");
  if (next_values.size() != paths.n_paths)
    throw std::invalid_argument("build_targets: value/path count mismatch");
  if (!next_values.allFinite())
    throw std::invalid_argument("build_targets: non-finite next values");

  const double h = paths.step_years;
  const double disc = std::exp(-terms.risk_free_rate * h);
  const double coupon = h * terms.face_value * terms.coupon_rate;

  Eigen::VectorXd targets(paths.n_paths);
  for (int p = 0; p < paths.n_paths; ++p) {
    const std::size_t k = paths.idx(p, step);
    const double cont = disc * next_values(p) + coupon;
    if (paths.call_indicator[k]) {
      const double conv =
          terms.face_value / paths.conversion_price[k] * paths.stock[k];
      targets(p) =
          call_region_value(conv, cont, terms.call_redemption_price);
    } else {
      targets(p) = cont;
    }
  }
  return targets;
}

namespace {

Eigen::VectorXd terminal_values(const PathSet& paths,
                                const ContractTerms& terms) {
  Eigen::VectorXd v(paths.n_paths);
  const int N = paths.n_steps;
  for (int p = 0; p < paths.n_paths; ++p)
    v(p) = terminal_payoff(paths.S(p, N), paths.H(p, N), terms);
  return v;
}

// Discounted value of one test path when the holder/issuer act on the fitted
// continuation values inside the call region and the bond otherwise runs to
// maturity. fitted_values(i, j) holds the step-i value estimate of path j
// (row N is the exact terminal payoff).
double rollout_value(const PathSet& paths, int j,
                     const Eigen::MatrixXd& fitted_values,
                     const ContractTerms& terms) {
  const int N = paths.n_steps;
  const double h = paths.step_years;
  const double r = terms.risk_free_rate;
  const double disc_step = std::exp(-r * h);
  const double coupon = h * terms.face_value * terms.coupon_rate;

  double acc = 0.0;
  for (int i = 0; i < N; ++i) {
    const std::size_t k = paths.idx(j, i);
    const double disc_i = std::exp(-r * h * i);
    if (paths.call_indicator[k]) {
      const double cont =
          disc_step * fitted_values(i + 1, j) + coupon;
      const double conv =
          terms.face_value / paths.conversion_price[k] * paths.stock[k];
      const double capped = std::min(cont, terms.call_redemption_price);
      if (conv >= capped) return acc + disc_i * conv;
      if (cont > terms.call_redemption_price)
        return acc + disc_i * terms.call_redemption_price;
    }
    acc += disc_i * coupon;
  }
  return acc + std::exp(-r * h * N) *
                   terminal_payoff(paths.S(j, N), paths.H(j, N), terms);
}

}  // namespace

BackwardSolution backward_solve(const PathSet& train, const PathSet& test,
                                const ContractTerms& terms,
                                const ModelSpec& model,
                                const FeaturesEnabled& enabled,
                                const NetworkConfig& net_config) {
  const auto t_start = std::chrono::steady_clock::now();
  terms.validate();
  model.validate();
  if (!train.augmented || !test.augmented)
    throw std::invalid_argument("backward_solve: run forward_pass first");
  if (train.n_steps != test.n_steps ||
      train.step_years != test.step_years || train.s0 != test.s0)
    throw std::invalid_argument("backward_solve: train/test grid mismatch");
  if (train.has_variance() != model.has_variance() ||
      test.has_variance() != model.has_variance())
    throw std::invalid_argument("backward_solve: model/path variance mismatch");

  NetworkConfig config = net_config;
  config.input_dim = feature_dim(model);
  config.validate();

  const int N = train.n_steps;
  const int n_test = test.n_paths;

  BackwardSolution sol;
  sol.networks.resize(static_cast<std::size_t>(N));
  sol.report.n_train_paths = train.n_paths;
  sol.report.n_test_paths = n_test;
  sol.report.steps = N;
  sol.report.model_tag = model.tag();
  sol.report.feature_tag = enabled.tag();
  sol.report.step_losses.assign(static_cast<std::size_t>(N), 0.0);

  // fitted_test(i, j): step-i value estimate of test path j; row N holds the
  // exact terminal payoff so the rollout can read one matrix uniformly.
  Eigen::MatrixXd fitted_test(N + 1, n_test);
  fitted_test.row(N) = terminal_values(test, terms).transpose();

  Eigen::VectorXd values = terminal_values(train, terms);
  Network net;
  bool have_net = false;

  for (int i = N - 1; i >= 0; --i) {
    const Eigen::MatrixXd X = feature_matrix(train, i);
    const Eigen::VectorXd y = build_targets(i, values, train, terms);
    if (!have_net) {
      net = init_network(config);
      have_net = true;
    }
    const std::uint64_t shuffle_seed =
        mix64(config.init_seed) + static_cast<std::uint64_t>(i);
    const FitReport rep = fit(net, X, y, shuffle_seed);
    if (!std::isfinite(rep.final_loss)) {
      char msg[128];
      std::snprintf(msg, sizeof msg,
                    "backward_solve: training diverged at step %d (loss=%g)",
                    i, rep.final_loss);
      throw std::runtime_error(msg);
    }
    sol.report.step_losses[static_cast<std::size_t>(i)] = rep.final_loss;
    values = forward_batch(net, X);
    fitted_test.row(i) =
        forward_batch(net, feature_matrix(test, i)).transpose();
    sol.networks[static_cast<std::size_t>(i)] = net;
  }

  Eigen::VectorXd x0(config.input_dim);
  features_at(train, 0, 0, x0);
  sol.report.price = forward(sol.networks[0], x0);

  Eigen::VectorXd z(n_test);
  for (int j = 0; j < n_test; ++j)
    z(j) = rollout_value(test, j, fitted_test, terms);
  sol.report.out_of_sample_value = z.mean();
  if (n_test > 1) {
    const double var =
        (z.array() - z.mean()).square().sum() / (n_test - 1);
    sol.report.standard_error = std::sqrt(var / n_test);
  }

  sol.report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return sol;
}

void write_price_report_csv(const PriceReport& report, std::ostream& out) {
  out << "price,standard_error,out_of_sample_value,n_train_paths,"
         "n_test_paths,steps,model,features\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.10f,%.10f,%.10f,%d,%d,%d,%s,%s\n",
                report.price, report.standard_error,
                report.out_of_sample_value, report.n_train_paths,
                report.n_test_paths, report.steps, report.model_tag.c_str(),
                report.feature_tag.c_str());
  out << buf;
}

void write_step_losses_csv(const PriceReport& report, std::ostream& out) {
  out << "step,final_training_loss\n";
  char buf[64];
  for (std::size_t i = 0; i < report.step_losses.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.10g\n", i, report.step_losses[i]);
    out << buf;
  }
}

void write_price_report_text(const PriceReport& report, std::ostream& out) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "model            %s\n"
                "features         %s\n"
                "price            %.6f\n"
                "standard error   %.6f\n"
                "out-of-sample    %.6f\n"
                "train/test paths %d/%d\n"
                "time steps       %d\n"
                "wall seconds     %.1f\n",
                report.model_tag.c_str(), report.feature_tag.c_str(),
                report.price, report.standard_error,
                report.out_of_sample_value, report.n_train_paths,
                report.n_test_paths, report.steps, report.wall_seconds);
  out << buf;
}

}  // namespace cb
