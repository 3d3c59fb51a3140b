#pragma once

#include "cb/contract.hpp"
#include "cb/dynamics.hpp"
#include "cb/pricer.hpp"

namespace cb {

// Closed-form value of the contract with both provisions switched off under
// geometric Brownian motion: discounted face, plus B/H0 European calls
// struck at H0, plus the coupon leg summed over the same time grid the
// simulation engine uses (n_steps payments at t_0 .. t_{N-1}), so simulated
// and analytic values are comparable without a discretization gap.
double plain_gbm_closed_form(double s0, const ContractTerms& terms,
                             double sigma, int n_steps);

// Same value with the coupon leg integrated continuously.
double plain_gbm_closed_form_continuous(double s0, const ContractTerms& terms,
                                        double sigma);

struct LsmcReport {
  double price = 0.0;
  double standard_error = 0.0;
  double out_of_sample_value = 0.0;
  int degree = 0;
  int basis_size = 0;
};

// Least-squares Monte Carlo benchmark: the same backward induction as the
// network solver, but each step's value surface is a ridge-stabilized
// polynomial regression instead of a trained network. The basis is every
// monomial of total degree <= degree in the continuous features, multiplied
// by every subset of the enabled indicator flags. Deliberately a separate
// code path from the network solver — it exists to cross-check it. Both
// path sets must already be augmented by forward_pass with the same flags.
LsmcReport lsmc_poly_price(const PathSet& train, const PathSet& test,
                           const ContractTerms& terms,
                           const FeaturesEnabled& enabled, int degree);

}  // namespace cb
