#include "cb/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>

#include "cb/math.hpp"

namespace cb {

double SmallLattice::up_factor(double rate) const {
  return std::exp(rate * step_years) * (1.0 + x);
}

double SmallLattice::down_factor(double rate) const {
  return std::exp(rate * step_years) * (1.0 - x);
}

void SmallLattice::validate() const {
  if (!(s0 > 0.0)) throw std::invalid_argument("lattice: s0 must be > 0");
  if (!(x > 0.0) || !(x < 1.0))
    throw std::invalid_argument("lattice: x must lie in (0, 1)");
  if (n_steps < 1 || n_steps > 12)
    throw std::invalid_argument("lattice: n_steps must lie in [1, 12]");
  if (!(step_years > 0.0))
    throw std::invalid_argument("lattice: step_years must be > 0");
}

double lattice_stock_price(const SmallLattice& lat, double rate, int n_up,
                           int n_down) {
  const double u = lat.up_factor(rate);
  const double d = lat.down_factor(rate);
  double s = lat.s0;
  for (int k = 0; k < n_up; ++k) s *= u;
  for (int k = 0; k < n_down; ++k) s *= d;
  return s;
}

PathSet lattice_paths(const SmallLattice& lat, double rate) {
  lat.validate();
  PathSet ps;
  ps.n_paths = 1 << lat.n_steps;
  ps.n_steps = lat.n_steps;
  ps.s0 = lat.s0;
  ps.step_years = lat.step_years;
  ps.stock.assign(static_cast<std::size_t>(ps.n_paths) *
                      static_cast<std::size_t>(ps.n_steps + 1),
                  0.0);
  for (int p = 0; p < ps.n_paths; ++p) {
    int n_up = 0;
    ps.stock[ps.idx(p, 0)] = lattice_stock_price(lat, rate, 0, 0);
    for (int i = 1; i <= ps.n_steps; ++i) {
      n_up += (p >> (i - 1)) & 1;
      ps.stock[ps.idx(p, i)] = lattice_stock_price(lat, rate, n_up, i - n_up);
    }
  }
  return ps;
}

namespace {

using StateKey = std::pair<std::uint64_t, std::uint64_t>;

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const {
    return static_cast<std::size_t>(mix64(k.first ^ mix64(k.second)));
  }
};

// Backward induction with exact conditional expectations. The augmented
// state is (step, number of up moves, the last window-1 moves, prevailing
// conversion price); bit 0 of the move mask is the most recent move. The
// conversion price enters the key by its bit pattern, which can only split
// states finer than economic equality — never merge distinct ones.
struct ExactSolver {
  const SmallLattice& lat;
  const ContractTerms& terms;
  const double disc;
  const double coupon;
  const unsigned mask_cap;
  std::unordered_map<StateKey, double, StateKeyHash> memo;

  ExactSolver(const SmallLattice& l, const ContractTerms& t)
      : lat(l),
        terms(t),
        disc(std::exp(-t.risk_free_rate * l.step_years)),
        coupon(l.step_years * t.face_value * t.coupon_rate),
        mask_cap(t.window_length <= 1
                     ? 0u
                     : (1u << (t.window_length - 1)) - 1u) {}

  double visit(int step, int n_up, unsigned mask, double h_prev) {
    const StateKey key{(static_cast<std::uint64_t>(step) << 32) |
                           (static_cast<std::uint64_t>(n_up) << 16) | mask,
                       std::bit_cast<std::uint64_t>(h_prev)};
    if (auto it = memo.find(key); it != memo.end()) return it->second;

    const double rate = terms.risk_free_rate;
    const double s = lattice_stock_price(lat, rate, n_up, step - n_up);

    const double reset_level = terms.reset_ratio * h_prev;
    const double call_level = terms.call_ratio * h_prev;
    int n_reset = (s < reset_level) ? 1 : 0;
    int n_call = (s >= call_level) ? 1 : 0;
    // Recover the previous min(step, window-1) closes by peeling moves off
    // the mask and stepping the exponents back.
    int ju = n_up;
    int jd = step - n_up;
    unsigned mm = mask;
    const int back = std::min(step, terms.window_length - 1);
    for (int k = 0; k < back; ++k) {
      if (mm & 1u) {
        --ju;
      } else {
        --jd;
      }
      mm >>= 1;
      const double close = lattice_stock_price(lat, rate, ju, jd);
      if (close < reset_level) ++n_reset;
      if (close >= call_level) ++n_call;
    }

    const bool armed = step >= terms.no_trigger_before;
    const bool call_hit = armed && n_call >= terms.call_required_days;
    const bool reset_hit = armed && n_reset >= terms.reset_required_days;

    double h = h_prev;
    if (reset_hit && !call_hit) h = reset_mapping(s, h_prev, terms.reset_floor);

    double out;
    if (step == lat.n_steps) {
      out = terminal_payoff(s, h, terms);
    } else {
      const unsigned mask_up = ((mask << 1) | 1u) & mask_cap;
      const unsigned mask_down = (mask << 1) & mask_cap;
      const double vu = visit(step + 1, n_up + 1, mask_up, h);
      const double vd = visit(step + 1, n_up, mask_down, h);
      const double cont = disc * (0.5 * vu + 0.5 * vd) + coupon;
      if (call_hit) {
        const double conv = terms.face_value / h * s;
        out = call_region_value(conv, cont, terms.call_redemption_price);
      } else {
        out = cont;
      }
    }

    memo.emplace(key, out);
    if (memo.size() > 1000000)
      throw std::runtime_error(
          "exact_regression_solve: state space exceeds 1e6 nodes");
    return out;
  }
};

}  // namespace

double exact_regression_solve(const PathSet& paths, const ContractTerms& terms,
                              const SmallLattice& lat) {
  terms.validate();
  lat.validate();
  if (terms.window_length > 4)
    throw std::invalid_argument(
        "exact_regression_solve: window_length must be <= 4");

  // The path set must be the full enumeration of this lattice under the
  // contract's rate; otherwise the half-half averages below price a
  // different tree than the one the caller simulated.
  const double rate = terms.risk_free_rate;
  if (paths.n_steps != lat.n_steps || paths.n_paths != (1 << lat.n_steps) ||
      paths.s0 != lat.s0 || paths.step_years != lat.step_years)
    throw std::invalid_argument(
        "exact_regression_solve: path set does not match the lattice");
  const int last = paths.n_paths - 1;
  if (paths.stock[paths.idx(0, lat.n_steps)] !=
          lattice_stock_price(lat, rate, 0, lat.n_steps) ||
      paths.stock[paths.idx(last, lat.n_steps)] !=
          lattice_stock_price(lat, rate, lat.n_steps, 0))
    throw std::invalid_argument(
        "exact_regression_solve: path closes disagree with the lattice");

  ExactSolver solver(lat, terms);
  return solver.visit(0, 0, 0u, terms.initial_conversion_price);
}

}  // namespace cb
