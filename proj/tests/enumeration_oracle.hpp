#pragma once

// Brute-force reference valuation of the windowed convertible contract on a
// two-point lattice. Walks every move sequence of the full tree, carrying
// the raw list of closes along the current branch — no memoization and no
// state identification of any kind, so it cannot share a state-keying bug
// with the production solver. Node prices come from the same canonical
// exponent pricing the solver uses; every other formula is written out
// locally, mirroring the contract arithmetic term by term.

#include <algorithm>
#include <vector>

#include "cb/contract.hpp"
#include "cb/lattice.hpp"

namespace enumeration_oracle {

class TreeWalker {
 public:
  TreeWalker(const cb::SmallLattice& lat, const cb::ContractTerms& terms)
      : lat_(lat),
        terms_(terms),
        disc_(std::exp(-terms.risk_free_rate * lat.step_years)),
        coupon_(lat.step_years * terms.face_value * terms.coupon_rate) {
    closes_.reserve(static_cast<std::size_t>(lat.n_steps) + 1);
  }

  double price() { return value(0, 0, terms_.initial_conversion_price); }

 private:
  double value(int step, int n_up, double h_prev) {
    const double s = cb::lattice_stock_price(lat_, terms_.risk_free_rate, n_up,
                                             step - n_up);
    closes_.push_back(s);

    // Count the last window_length closes (including today's) against the
    // conversion price this step arrived with.
    const double reset_level = terms_.reset_ratio * h_prev;
    const double call_level = terms_.call_ratio * h_prev;
    const int fill = std::min<int>(static_cast<int>(closes_.size()),
                                   terms_.window_length);
    int n_reset = 0, n_call = 0;
    for (int k = static_cast<int>(closes_.size()) - fill;
         k < static_cast<int>(closes_.size()); ++k) {
      if (closes_[static_cast<std::size_t>(k)] < reset_level) ++n_reset;
      if (closes_[static_cast<std::size_t>(k)] >= call_level) ++n_call;
    }

    const bool armed = step >= terms_.no_trigger_before;
    const bool call_hit = armed && n_call >= terms_.call_required_days;
    const bool reset_hit = armed && n_reset >= terms_.reset_required_days;

    double h = h_prev;
    if (reset_hit && !call_hit) {
      double revised = s;
      if (terms_.reset_floor) revised = std::max(revised, *terms_.reset_floor);
      h = std::min(revised, h_prev);
    }

    double out;
    if (step == lat_.n_steps) {
      const double conv = terms_.face_value / h * s;
      out = std::max(terms_.face_value, conv);
    } else {
      const double vu = value(step + 1, n_up + 1, h);
      const double vd = value(step + 1, n_up, h);
      const double cont = disc_ * (0.5 * vu + 0.5 * vd) + coupon_;
      if (call_hit) {
        const double conv = terms_.face_value / h * s;
        out = std::max(conv, std::min(cont, terms_.call_redemption_price));
      } else {
        out = cont;
      }
    }

    closes_.pop_back();
    return out;
  }

  const cb::SmallLattice& lat_;
  const cb::ContractTerms& terms_;
  const double disc_;
  const double coupon_;
  std::vector<double> closes_;
};

inline double enumerate_price(const cb::SmallLattice& lat,
                              const cb::ContractTerms& terms) {
  return TreeWalker(lat, terms).price();
}

}  // namespace enumeration_oracle
