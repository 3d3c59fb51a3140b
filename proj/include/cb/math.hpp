#pragma once

#include <cstdint>

namespace cb {

// Stateless 64-bit finalizer (splitmix64 mixing function). Used to hash
// (seed, stream) pairs into well-separated generator states.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic per-stream generator. Stream k of a given seed produces the
// same draws no matter how many other streams exist or in which order they
// are consumed, so every simulated path is reproducible in isolation.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t stream)
      : state_(mix64(seed + 0x9e3779b97f4a7c15ull * (stream + 1)) ^
               mix64(stream + 0x632be59bd9b4e019ull)) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    return mix64(z);
  }

  // Uniform on the open interval (0,1); never returns an endpoint, so the
  // normal quantile transform below stays finite.
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the inverse-CDF transform (deterministic, no
  // rejection loop, one uniform per normal).
  double next_normal();

 private:
  std::uint64_t state_;
};

// Standard normal CDF via the erfc identity; absolute error < 1e-15.
double normal_cdf(double x);

// Standard normal quantile. Rational initial guess refined by one Halley
// step against normal_cdf; absolute error < 1e-13 on (1e-300, 1-1e-16).
// Throws std::domain_error outside (0,1).
double inverse_normal_cdf(double p);

// Undiscounted-strike European call. Degenerate sigma*sqrt(T) collapses to
// the deterministic-forward payoff.
double black_scholes_call(double spot, double strike, double rate,
                          double sigma, double maturity);

}  // namespace cb
