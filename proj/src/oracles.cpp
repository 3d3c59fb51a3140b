#include "cb/oracles.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "cb/math.hpp"

namespace cb {

double plain_gbm_closed_form(double s0, const ContractTerms& terms,
                             double sigma, int n_steps) {
  if (!(s0 > 0.0))
    throw std::invalid_argument("plain_gbm_closed_form: s0 must be > 0");
  if (!(sigma > 0.0))
    throw std::invalid_argument("plain_gbm_closed_form: sigma must be > 0");
  if (n_steps < 1)
    throw std::invalid_argument("plain_gbm_closed_form: n_steps must be >= 1");
  terms.validate();

  const double T = terms.maturity_years;
  const double r = terms.risk_free_rate;
  const double B = terms.face_value;
  const double H0 = terms.initial_conversion_price;
  const double h = T / n_steps;

  // max(B, (B/H0) S_T) = B + (B/H0) max(S_T - H0, 0): discounted face plus
  // B/H0 European calls struck at the conversion price.
  const double bond = std::exp(-r * T) * B;
  const double option = B / H0 * black_scholes_call(s0, H0, r, sigma, T);
  double coupons = 0.0;
  for (int i = 0; i < n_steps; ++i)
    coupons += std::exp(-r * h * i) * h * B * terms.coupon_rate;
  return bond + option + coupons;
}

double plain_gbm_closed_form_continuous(double s0, const ContractTerms& terms,
                                        double sigma) {
  if (!(s0 > 0.0))
    throw std::invalid_argument("plain_gbm_closed_form: s0 must be > 0");
  if (!(sigma > 0.0))
    throw std::invalid_argument("plain_gbm_closed_form: sigma must be > 0");
  terms.validate();

  const double T = terms.maturity_years;
  const double r = terms.risk_free_rate;
  const double B = terms.face_value;
  const double H0 = terms.initial_conversion_price;

  const double bond = std::exp(-r * T) * B;
  const double option = B / H0 * black_scholes_call(s0, H0, r, sigma, T);
  const double coupons = r == 0.0
                             ? B * terms.coupon_rate * T
                             : B * terms.coupon_rate * (1.0 - std::exp(-r * T)) / r;
  return bond + option + coupons;
}

namespace {

// Monomial-times-indicator basis over the augmented state. Continuous
// features are normalized levels (S/s0, v/v0 when present, H/h0, t/T);
// indicator features are the enabled trigger flags. One column per
// (multi-index of total degree <= degree) x (subset of indicators).
struct PolyBasis {
  int degree = 0;
  int n_continuous = 0;
  int n_indicators = 0;
  std::vector<std::vector<int>> exponents;  // per continuous monomial

  int size() const {
    return static_cast<int>(exponents.size()) * (1 << n_indicators);
  }
};

PolyBasis make_basis(const PathSet& paths, const FeaturesEnabled& enabled,
                     int degree) {
  PolyBasis basis;
  basis.degree = degree;
  basis.n_continuous = paths.has_variance() ? 4 : 3;
  basis.n_indicators = (enabled.call ? 1 : 0) + (enabled.reset ? 1 : 0);

  std::vector<int> cur(static_cast<std::size_t>(basis.n_continuous), 0);
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == basis.n_continuous) {
      basis.exponents.push_back(cur);
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      cur[static_cast<std::size_t>(pos)] = e;
      rec(pos + 1, remaining - e);
    }
  };
  rec(0, degree);
  return basis;
}

void basis_row(const PolyBasis& basis, const PathSet& paths,
               const FeaturesEnabled& enabled, int path, int step,
               Eigen::RowVectorXd& out) {
  const std::size_t k = paths.idx(path, step);
  double cont_feats[4];
  int nc = 0;
  cont_feats[nc++] = paths.stock[k] / paths.s0;
  if (paths.has_variance()) cont_feats[nc++] = paths.variance[k] / paths.v0;
  cont_feats[nc++] = paths.conversion_price[k] / paths.h0;
  cont_feats[nc++] = static_cast<double>(step) / paths.n_steps;

  double ind_feats[2];
  int ni = 0;
  if (enabled.call) ind_feats[ni++] = paths.call_indicator[k] ? 1.0 : 0.0;
  if (enabled.reset) ind_feats[ni++] = paths.reset_indicator[k] ? 1.0 : 0.0;

  int col = 0;
  for (const std::vector<int>& expo : basis.exponents) {
    double mono = 1.0;
    for (int f = 0; f < basis.n_continuous; ++f)
      for (int e = 0; e < expo[static_cast<std::size_t>(f)]; ++e)
        mono *= cont_feats[f];
    for (int subset = 0; subset < (1 << basis.n_indicators); ++subset) {
      double val = mono;
      for (int i = 0; i < basis.n_indicators; ++i)
        if (subset & (1 << i)) val *= ind_feats[i];
      out(col++) = val;
    }
  }
}

Eigen::MatrixXd design_matrix(const PolyBasis& basis, const PathSet& paths,
                              const FeaturesEnabled& enabled, int step) {
  Eigen::MatrixXd X(paths.n_paths, basis.size());
  Eigen::RowVectorXd row(basis.size());
  for (int p = 0; p < paths.n_paths; ++p) {
    basis_row(basis, paths, enabled, p, step, row);
    X.row(p) = row;
  }
  return X;
}

// Ridge-stabilized normal equations. The tiny penalty only matters when the
// design is rank-deficient (step 0, or constant columns such as H/h0 before
// any reset); there it pins the otherwise-arbitrary coefficient split
// without visibly biasing predictions.
Eigen::VectorXd ridge_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const int p = static_cast<int>(X.cols());
  Eigen::MatrixXd gram = X.transpose() * X;
  const double scale = std::max(1.0, gram.trace() / p);
  gram.diagonal().array() += 1e-8 * scale;
  return gram.ldlt().solve(X.transpose() * y);
}

}  // namespace

LsmcReport lsmc_poly_price(const PathSet& train, const PathSet& test,
                           const ContractTerms& terms,
                           const FeaturesEnabled& enabled, int degree) {
  terms.validate();
  if (degree < 0 || degree > 8)
    throw std::invalid_argument("lsmc_poly_price: degree must lie in [0, 8]");
  if (!train.augmented || !test.augmented)
    throw std::invalid_argument("lsmc_poly_price: run forward_pass first");
  if (train.n_steps != test.n_steps || train.step_years != test.step_years ||
      train.s0 != test.s0)
    throw std::invalid_argument("lsmc_poly_price: train/test grid mismatch");
  if (train.has_variance() != test.has_variance())
    throw std::invalid_argument("lsmc_poly_price: variance layout mismatch");

  const int N = train.n_steps;
  const double h = train.step_years;
  const double r = terms.risk_free_rate;
  const double disc = std::exp(-r * h);
  const double coupon = h * terms.face_value * terms.coupon_rate;
  const PolyBasis basis = make_basis(train, enabled, degree);

  // fitted_test(i, j): step-i value estimate of test path j; row N holds the
  // exact terminal payoff. Mirrors the layout the rollout below consumes.
  Eigen::MatrixXd fitted_test(N + 1, test.n_paths);
  Eigen::VectorXd values(train.n_paths);
  for (int p = 0; p < train.n_paths; ++p)
    values(p) = terminal_payoff(train.S(p, N), train.H(p, N), terms);
  for (int j = 0; j < test.n_paths; ++j)
    fitted_test(N, j) = terminal_payoff(test.S(j, N), test.H(j, N), terms);

  Eigen::VectorXd coef;
  for (int i = N - 1; i >= 0; --i) {
    Eigen::VectorXd targets(train.n_paths);
    for (int p = 0; p < train.n_paths; ++p) {
      const std::size_t k = train.idx(p, i);
      const double cont = disc * values(p) + coupon;
      if (train.call_indicator[k]) {
        const double conv =
            terms.face_value / train.conversion_price[k] * train.stock[k];
        targets(p) = call_region_value(conv, cont, terms.call_redemption_price);
      } else {
        targets(p) = cont;
      }
    }

    const Eigen::MatrixXd X = design_matrix(basis, train, enabled, i);
    coef = ridge_fit(X, targets);
    values = X * coef;
    fitted_test.row(i) =
        (design_matrix(basis, test, enabled, i) * coef).transpose();
  }

  LsmcReport report;
  report.degree = degree;
  report.basis_size = basis.size();

  // All step-0 states coincide, so the step-0 fit evaluated there is the
  // price estimate.
  Eigen::RowVectorXd row0(basis.size());
  basis_row(basis, test, enabled, 0, 0, row0);
  report.price = row0 * coef;

  // Out-of-sample value of acting on the fitted continuation values: walk
  // each test path, stop at the first call-trigger step where conversion or
  // redemption beats the estimated continuation, collect coupons otherwise.
  std::vector<double> z_values(static_cast<std::size_t>(test.n_paths));
  for (int j = 0; j < test.n_paths; ++j) {
    double acc = 0.0;
    double z = 0.0;
    bool stopped = false;
    for (int i = 0; i < N && !stopped; ++i) {
      const std::size_t k = test.idx(j, i);
      const double disc_i = std::exp(-r * h * i);
      if (test.call_indicator[k]) {
        const double cont = disc * fitted_test(i + 1, j) + coupon;
        const double conv =
            terms.face_value / test.conversion_price[k] * test.stock[k];
        const double capped = std::min(cont, terms.call_redemption_price);
        if (conv >= capped) {
          z = acc + disc_i * conv;
          stopped = true;
        } else if (cont > terms.call_redemption_price) {
          z = acc + disc_i * terms.call_redemption_price;
          stopped = true;
        }
      }
      if (!stopped) acc += disc_i * coupon;
    }
    if (!stopped) z = acc + std::exp(-r * h * N) * fitted_test(N, j);
    z_values[static_cast<std::size_t>(j)] = z;
  }
  const int n = test.n_paths;
  double mean = 0.0;
  for (double z : z_values) mean += z;
  mean /= n;
  double ss = 0.0;
  for (double z : z_values) ss += (z - mean) * (z - mean);
  report.out_of_sample_value = mean;
  report.standard_error = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  return report;
}

}  // namespace cb
