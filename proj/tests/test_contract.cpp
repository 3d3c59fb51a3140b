#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "cb/contract.hpp"
#include "cb/math.hpp"

using namespace cb;

namespace {
ContractTerms base_terms() { return ContractTerms{}; }
}  // namespace

TEST_CASE("terms validation rejects bad parameters") {
  ContractTerms t = base_terms();
  CHECK_NOTHROW(t.validate());

  ContractTerms bad = t;
  bad.reset_ratio = 1.2;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = t;
  bad.call_ratio = 0.9;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = t;
  bad.reset_required_days = 31;  // exceeds window
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = t;
  bad.face_value = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = t;
  bad.window_length = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("trigger window fill and wrap") {
  TriggerState w(3);
  CHECK(w.fill_count() == 0);
  w.push(1.0);
  w.push(2.0);
  CHECK(w.fill_count() == 2);
  w.push(3.0);
  w.push(4.0);  // evicts 1.0
  CHECK(w.fill_count() == 3);
  double sum = 0.0;
  w.for_each([&](double p) { sum += p; });
  CHECK(sum == doctest::Approx(9.0));
}

TEST_CASE("count_triggers neutral window") {
  ContractTerms t = base_terms();
  const double H = t.initial_conversion_price;
  TriggerState w(t.window_length);
  for (int i = 0; i < 30; ++i) w.push(H);
  auto c = count_triggers(w, H, t);
  CHECK(c.n_reset == 0);
  CHECK(c.n_call == 0);
}

TEST_CASE("count_triggers reset side fires") {
  ContractTerms t = base_terms();
  const double H = t.initial_conversion_price;
  TriggerState w(t.window_length);
  for (int i = 0; i < 16; ++i) w.push(0.5 * H);
  for (int i = 0; i < 14; ++i) w.push(H);
  auto c = count_triggers(w, H, t);
  CHECK(c.n_reset == 16);
  CHECK(c.n_reset >= t.reset_required_days);
  CHECK(c.n_call == 0);
}

TEST_CASE("count_triggers call side fires") {
  ContractTerms t = base_terms();
  const double H = t.initial_conversion_price;
  TriggerState w(t.window_length);
  for (int i = 0; i < 15; ++i) w.push(1.4 * H);
  for (int i = 0; i < 15; ++i) w.push(H);
  auto c = count_triggers(w, H, t);
  CHECK(c.n_call == 15);
  CHECK(c.n_call >= t.call_required_days);
  CHECK(c.n_reset == 0);
}

TEST_CASE("count_triggers boundary is at-or-above for calls, strictly-below for resets") {
  ContractTerms t = base_terms();
  const double H = 10.0;
  TriggerState w(t.window_length);
  w.push(t.call_ratio * H);   // exactly at the call level: counts
  w.push(t.reset_ratio * H);  // exactly at the reset level: does not count
  auto c = count_triggers(w, H, t);
  CHECK(c.n_call == 1);
  CHECK(c.n_reset == 0);
}

TEST_CASE("count_triggers empty window returns zero") {
  ContractTerms t = base_terms();
  TriggerState w(t.window_length);
  auto c = count_triggers(w, 7.45, t);
  CHECK(c.n_reset == 0);
  CHECK(c.n_call == 0);
}

TEST_CASE("count_triggers scale invariance") {
  ContractTerms t = base_terms();
  Rng rng(99, 0);
  TriggerState w1(t.window_length), w2(t.window_length);
  const double H = 7.45, scale = 3.7;
  for (int i = 0; i < 30; ++i) {
    double p = H * (0.5 + rng.next_uniform());
    w1.push(p);
    w2.push(scale * p);
  }
  auto c1 = count_triggers(w1, H, t);
  auto c2 = count_triggers(w2, scale * H, t);
  CHECK(c1.n_reset == c2.n_reset);
  CHECK(c1.n_call == c2.n_call);
}

TEST_CASE("count_triggers: events are disjoint per observation") {
  ContractTerms t = base_terms();
  Rng rng(7, 1);
  for (int trial = 0; trial < 200; ++trial) {
    TriggerState w(t.window_length);
    int n = 1 + static_cast<int>(rng.next_u64() % 30);
    for (int i = 0; i < n; ++i) w.push(7.45 * (0.2 + 2.0 * rng.next_uniform()));
    auto c = count_triggers(w, 7.45, t);
    CHECK(c.n_reset + c.n_call <= t.window_length);
    CHECK(c.n_reset + c.n_call <= n);
  }
}

TEST_CASE("reset_mapping") {
  CHECK(reset_mapping(5.0, 7.45) == doctest::Approx(5.0));
  CHECK(reset_mapping(7.45, 7.45) == doctest::Approx(7.45));
  // never raises the conversion price
  CHECK(reset_mapping(8.0, 7.45) == doctest::Approx(7.45));
  // optional floor binds from below
  CHECK(reset_mapping(4.0, 7.45, 4.5) == doctest::Approx(4.5));
  CHECK_THROWS_AS((void)reset_mapping(-1.0, 7.45), std::invalid_argument);
}

TEST_CASE("repeated resets are non-increasing") {
  double H = 7.45;
  Rng rng(11, 2);
  for (int i = 0; i < 500; ++i) {
    double s = 10.0 * rng.next_uniform() + 0.01;
    double Hn = reset_mapping(s, H);
    CHECK(Hn <= H);
    H = Hn;
  }
}

TEST_CASE("terminal_payoff") {
  ContractTerms t = base_terms();
  CHECK(terminal_payoff(0.0, 7.45, t) == doctest::Approx(100.0));
  CHECK(terminal_payoff(7.45, 7.45, t) == doctest::Approx(100.0));
  CHECK(terminal_payoff(14.90, 7.45, t) == doctest::Approx(200.0));
}

TEST_CASE("call_region_value") {
  CHECK(call_region_value(120.0, 110.0, 100.0) == doctest::Approx(120.0));
  CHECK(call_region_value(90.0, 110.0, 100.0) == doctest::Approx(100.0));
  CHECK(call_region_value(90.0, 95.0, 100.0) == doctest::Approx(95.0));
}

TEST_CASE("call_region_value stays inside its envelope") {
  Rng rng(5, 5);
  for (int i = 0; i < 2000; ++i) {
    double x = 200.0 * rng.next_uniform();
    double y = 200.0 * rng.next_uniform();
    double k = 200.0 * rng.next_uniform();
    double v = call_region_value(x, y, k);
    CHECK(v >= std::min({x, y, k}));
    CHECK(v <= std::max(x, k));
  }
}
