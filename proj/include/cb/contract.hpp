#pragma once

#include <optional>
#include <vector>

namespace cb {

// Contractual terms of the convertible bond. Defaults are the China CITIC
// bank convertible (code 113021) used throughout the experiment runners.
struct ContractTerms {
  double face_value = 100.0;                // B
  double coupon_rate = 0.003;               // C, annual fraction of face
  double initial_conversion_price = 7.45;   // H0
  double reset_ratio = 0.8;                 // a, reset trigger level a*H
  double call_ratio = 1.3;                  // b, call trigger level b*H
  int reset_required_days = 15;             // observations needed in window
  int call_required_days = 15;
  int window_length = 30;                   // rolling window, in steps
  double maturity_years = 6.0;              // T
  double call_redemption_price = 100.0;     // K
  double risk_free_rate = 0.016;            // r, constant
  int no_trigger_before = 0;                // optional trigger blackout (steps)
  std::optional<double> reset_floor;        // optional lower bound on reset H

  // Throws std::invalid_argument on any violated constraint.
  void validate() const;
};

// Rolling window of the last `window_length` observed prices, oldest-first.
// Confined to a single simulated path; cheap to copy.
class TriggerState {
 public:
  explicit TriggerState(int window_length);

  void push(double price);
  int fill_count() const { return fill_; }
  int capacity() const { return static_cast<int>(buf_.size()); }

  // Visits valid entries (order irrelevant for counting).
  template <typename F>
  void for_each(F&& f) const {
    for (int k = 0; k < fill_; ++k) f(buf_[k]);
  }

 private:
  std::vector<double> buf_;
  int next_ = 0;  // slot to overwrite
  int fill_ = 0;
};

struct TriggerCounts {
  int n_reset = 0;
  int n_call = 0;
};

// Counts window entries below a*H (reset) and at-or-above b*H (call) against
// the *current* conversion price. An empty window yields (0,0).
TriggerCounts count_triggers(const TriggerState& window, double conversion_price,
                             const ContractTerms& terms);

// Downward revision of the conversion price when the reset trigger has
// fired: the new price is the prevailing stock price, clamped below by the
// optional floor and above by the old conversion price (resets never raise H).
double reset_mapping(double current_stock, double current_conversion_price,
                     std::optional<double> floor = std::nullopt);

// max(B, (B/H) * S): redemption at face or conversion into B/H shares.
double terminal_payoff(double stock, double conversion_price,
                       const ContractTerms& terms);

// Value at a call-triggered state: the issuer truncates continuation at the
// redemption price, the holder keeps the right to convert first.
double call_region_value(double conversion_value, double continuation_value,
                         double call_price);

}  // namespace cb
