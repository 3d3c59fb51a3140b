#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cb/lattice.hpp"
#include "cb/math.hpp"
#include "cb/oracles.hpp"
#include "cb/pricer.hpp"

using namespace cb;

namespace {

PathSet sim_augmented(const ModelSpec& model, const GridSpec& grid,
                      const ContractTerms& terms,
                      const FeaturesEnabled& enabled, double s0 = 6.4) {
  PathSet ps = simulate(s0, model, grid, terms.risk_free_rate);
  forward_pass(ps, terms, enabled);
  return ps;
}

}  // namespace

TEST_CASE("closed form reproduces its decomposition constants") {
  const ContractTerms terms;  // defaults: B 100, H0 7.45, r 1.6%, T 6, C 0.3%

  // Independently computed references (high-precision arithmetic).
  CHECK(plain_gbm_closed_form_continuous(6.4, terms, 0.30) ==
        doctest::Approx(115.49975551529051).epsilon(1e-10));
  CHECK(plain_gbm_closed_form(6.4, terms, 0.30, 312) ==
        doctest::Approx(115.50001957493883).epsilon(1e-10));

  // Vanishing volatility: the conversion leg dies (forward stock sits below
  // the conversion price), leaving discounted face plus coupons.
  CHECK(plain_gbm_closed_form(6.4, terms, 1e-12, 312) ==
        doctest::Approx(92.56296536523069).epsilon(1e-10));

  // The step-summed coupon leg converges to the continuous one from above
  // (payments at interval starts).
  const double cont = plain_gbm_closed_form_continuous(6.4, terms, 0.30);
  const double coarse = plain_gbm_closed_form(6.4, terms, 0.30, 6);
  const double mid = plain_gbm_closed_form(6.4, terms, 0.30, 312);
  const double fine = plain_gbm_closed_form(6.4, terms, 0.30, 200000);
  CHECK(coarse > mid);
  CHECK(mid > fine);
  CHECK(fine == doctest::Approx(cont).epsilon(1e-7));

  CHECK_THROWS_AS(plain_gbm_closed_form(6.4, terms, 0.30, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(plain_gbm_closed_form(-1.0, terms, 0.30, 10),
                  std::invalid_argument);
  CHECK_THROWS_AS(plain_gbm_closed_form(6.4, terms, 0.0, 10),
                  std::invalid_argument);
}

TEST_CASE("closed form is monotone in volatility and spot") {
  const ContractTerms terms;
  double prev = 0.0;
  for (double sigma : {0.10, 0.20, 0.30, 0.40}) {
    const double p = plain_gbm_closed_form_continuous(6.4, terms, sigma);
    CHECK(p > prev);
    prev = p;
  }
  prev = 0.0;
  for (double s0 : {4.0, 5.5, 7.0, 8.5}) {
    const double p = plain_gbm_closed_form_continuous(s0, terms, 0.30);
    CHECK(p > prev);
    prev = p;
  }
  // Never below the bond floor, never below conversion parity value.
  const double floor_only =
      std::exp(-terms.risk_free_rate * terms.maturity_years) *
      terms.face_value;
  CHECK(plain_gbm_closed_form_continuous(0.5, terms, 0.05) > floor_only);
}

TEST_CASE("degree-0 regression collapses to exact averages at zero volatility") {
  // With sigma ~ 0 every path is the same deterministic forward, targets are
  // constant at every step, and a mean-only regression carries them back
  // exactly (up to the ridge term); the rollout does not depend on the fit
  // at all and must match the closed form to rounding.
  const double reference = 92.5637577066655621;  // 78-step deterministic value

  ContractTerms terms;
  ModelSpec model = ModelSpec::gbm(1e-12);
  GridSpec grid;
  grid.steps_per_year = 13;
  grid.n_paths = 64;
  grid.seed = 2024;
  const FeaturesEnabled plain{false, false};
  PathSet train = sim_augmented(model, grid, terms, plain);
  GridSpec tg = grid;
  tg.seed = 2025;
  tg.n_paths = 32;
  PathSet test = sim_augmented(model, tg, terms, plain);

  const LsmcReport rep = lsmc_poly_price(train, test, terms, plain, 0);
  CHECK(rep.basis_size == 1);
  CHECK(rep.price == doctest::Approx(reference).epsilon(1e-6));
  CHECK(rep.out_of_sample_value == doctest::Approx(reference).epsilon(1e-9));
  CHECK(rep.standard_error == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("basis size matches the monomial-times-indicator count") {
  ContractTerms terms;
  ModelSpec gbm = ModelSpec::gbm(0.30);
  GridSpec grid;
  grid.steps_per_year = 4;
  grid.n_paths = 32;
  grid.seed = 7;
  const FeaturesEnabled plain{false, false};
  FeaturesEnabled both;
  both.reset = true;
  both.call = true;

  PathSet a = sim_augmented(gbm, grid, terms, plain);
  CHECK(lsmc_poly_price(a, a, terms, plain, 3).basis_size == 20);

  PathSet b = sim_augmented(gbm, grid, terms, both);
  CHECK(lsmc_poly_price(b, b, terms, both, 3).basis_size == 80);

  ModelSpec heston = ModelSpec::heston(0.09, 2.0, 0.09, 0.45, -0.50);
  PathSet c = sim_augmented(heston, grid, terms, both);
  CHECK(lsmc_poly_price(c, c, terms, both, 3).basis_size == 140);

  PathSet raw = simulate(6.4, gbm, grid, terms.risk_free_rate);
  CHECK_THROWS_AS(lsmc_poly_price(raw, raw, terms, plain, 3),
                  std::invalid_argument);
  CHECK_THROWS_AS(lsmc_poly_price(a, a, terms, plain, -1),
                  std::invalid_argument);
}

TEST_CASE("cubic regression tracks the plain closed form at desk scale") {
  ContractTerms terms;
  ModelSpec model = ModelSpec::gbm(0.30);
  GridSpec grid;
  grid.steps_per_year = 52;
  grid.n_paths = 12000;
  grid.seed = 20240915;
  const FeaturesEnabled plain{false, false};
  PathSet train = sim_augmented(model, grid, terms, plain);
  GridSpec tg = grid;
  tg.n_paths = 4000;
  tg.seed = 20240916;
  PathSet test = sim_augmented(model, tg, terms, plain);

  const double closed = plain_gbm_closed_form(6.4, terms, 0.30, grid.n_steps());
  const LsmcReport rep = lsmc_poly_price(train, test, terms, plain, 3);

  CAPTURE(rep.price);
  CAPTURE(rep.out_of_sample_value);
  CAPTURE(rep.standard_error);
  CHECK(rep.standard_error > 0.1);
  CHECK(rep.standard_error < 3.0);
  CHECK(std::fabs(rep.price - closed) < 3.0 * rep.standard_error);
  CHECK(std::fabs(rep.out_of_sample_value - closed) <
        3.0 * rep.standard_error);

  // A quartic surface should not move the answer materially.
  const LsmcReport rep4 = lsmc_poly_price(train, test, terms, plain, 4);
  CAPTURE(rep4.price);
  CHECK(std::fabs(rep4.price - rep.price) < 1.0);
}

TEST_CASE("regression benchmark runs on every model with provisions on") {
  ContractTerms terms;
  GridSpec grid;
  grid.steps_per_year = 26;
  grid.n_paths = 2000;
  grid.seed = 99;
  GridSpec tg = grid;
  tg.n_paths = 1000;
  tg.seed = 100;
  FeaturesEnabled both;
  both.reset = true;
  both.call = true;

  for (const ModelSpec& model :
       {ModelSpec::gbm(0.30), ModelSpec::cev(0.35, 0.90),
        ModelSpec::heston(0.09, 2.0, 0.09, 0.45, -0.50)}) {
    CAPTURE(model.tag());
    PathSet train = sim_augmented(model, grid, terms, both);
    PathSet test = sim_augmented(model, tg, terms, both);
    const LsmcReport rep = lsmc_poly_price(train, test, terms, both, 3);
    CHECK(std::isfinite(rep.price));
    CHECK(rep.price > 85.0);
    CHECK(rep.price < 140.0);
    CHECK(rep.out_of_sample_value > 85.0);
    CHECK(rep.out_of_sample_value < 140.0);
    CHECK(rep.standard_error > 0.0);
    CHECK(rep.standard_error < 3.0);
  }
}
