#include "cb/contract.hpp"

#include <algorithm>
#include <stdexcept>

namespace cb {

void ContractTerms::validate() const {
  auto fail = [](const char* msg) { throw std::invalid_argument(msg); };
  if (!(face_value > 0.0)) fail("face_value must be > 0");
  if (!(initial_conversion_price > 0.0)) fail("initial_conversion_price must be > 0");
  if (!(maturity_years > 0.0)) fail("maturity_years must be > 0");
  if (!(reset_ratio > 0.0 && reset_ratio < 1.0)) fail("reset_ratio must lie in (0,1)");
  if (!(call_ratio > 1.0)) fail("call_ratio must be > 1");
  if (window_length <= 0) fail("window_length must be positive");
  if (reset_required_days <= 0 || reset_required_days > window_length)
    fail("reset_required_days must lie in (0, window_length]");
  if (call_required_days <= 0 || call_required_days > window_length)
    fail("call_required_days must lie in (0, window_length]");
  if (!(call_redemption_price > 0.0)) fail("call_redemption_price must be > 0");
  if (coupon_rate < 0.0) fail("coupon_rate must be >= 0");
  if (no_trigger_before < 0) fail("no_trigger_before must be >= 0");
  if (reset_floor && !(*reset_floor > 0.0)) fail("reset_floor must be > 0");
}

TriggerState::TriggerState(int window_length) {
  if (window_length <= 0)
    throw std::invalid_argument("TriggerState: window_length must be positive");
  buf_.resize(static_cast<std::size_t>(window_length));
}

void TriggerState::push(double price) {
  buf_[static_cast<std::size_t>(next_)] = price;
  next_ = (next_ + 1) % static_cast<int>(buf_.size());
  if (fill_ < static_cast<int>(buf_.size())) ++fill_;
}

TriggerCounts count_triggers(const TriggerState& window, double conversion_price,
                             const ContractTerms& terms) {
  if (!(conversion_price > 0.0))
    throw std::invalid_argument("count_triggers: conversion_price must be > 0");
  const double reset_level = terms.reset_ratio * conversion_price;
  const double call_level = terms.call_ratio * conversion_price;
  TriggerCounts out;
  window.for_each([&](double p) {
    if (p < reset_level) ++out.n_reset;
    if (p >= call_level) ++out.n_call;
  });
  return out;
}

double reset_mapping(double current_stock, double current_conversion_price,
                     std::optional<double> floor) {
  if (!(current_stock > 0.0) || !(current_conversion_price > 0.0))
    throw std::invalid_argument("reset_mapping: prices must be > 0");
  double revised = current_stock;
  if (floor) revised = std::max(revised, *floor);
  return std::min(revised, current_conversion_price);
}

double terminal_payoff(double stock, double conversion_price,
                       const ContractTerms& terms) {
  double conv = terms.face_value / conversion_price * stock;
  return std::max(terms.face_value, conv);
}

double call_region_value(double conversion_value, double continuation_value,
                         double call_price) {
  return std::max(conversion_value, std::min(continuation_value, call_price));
}

}  // namespace cb
