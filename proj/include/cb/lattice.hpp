#pragma once

#include "cb/contract.hpp"
#include "cb/dynamics.hpp"

namespace cb {

// Two-point recombining lattice with the risk-neutral up probability pinned
// at exactly 1/2: over a step of length h the stock moves to S*e^{rh}*(1+x)
// or S*e^{rh}*(1-x). Both branches carry the forward factor, so the
// discounted stock is a martingale by construction and no probability needs
// to be solved for. Deliberately small: every move sequence is enumerable.
struct SmallLattice {
  double s0 = 6.4;
  double x = 0.25;  // move half-width, in (0, 1)
  int n_steps = 8;  // at most 12
  double step_years = 0.25;

  double maturity_years() const { return n_steps * step_years; }
  double up_factor(double rate) const;
  double down_factor(double rate) const;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

// Canonical node price s0 * u^n_up * d^n_down, evaluated by repeated
// multiplication in a fixed order. The exact solver, the enumeration
// reference and the path builder all price nodes through this one routine,
// so a node reached along different move orders carries identical bits.
double lattice_stock_price(const SmallLattice& lat, double rate, int n_up,
                           int n_down);

// All 2^n_steps move sequences as an equal-weight PathSet (bit k of the path
// index is the move taken over step k -> k+1; bit set = up). Closes are
// recomputed from move counts at every node, not compounded sequentially, so
// they match lattice_stock_price bitwise. The result feeds forward_pass and
// backward_solve like any simulated set.
PathSet lattice_paths(const SmallLattice& lat, double rate);

// Exact dynamic programme on the augmented state (step, up-move count, last
// window-minus-one moves, prevailing conversion price). On a lattice the
// conditional expectation of the next-step value is the exact half-half
// average of the two successor values, so the regression step of the
// backward induction is solved in closed form instead of fitted. Memoized
// per state; throws std::runtime_error past 1e6 distinct states. The
// path_set argument is a geometry witness: it must have been produced by
// lattice_paths on this lattice (checked). Requires n_steps <= 12 and
// terms.window_length <= 4.
double exact_regression_solve(const PathSet& paths, const ContractTerms& terms,
                              const SmallLattice& lat);

}  // namespace cb
