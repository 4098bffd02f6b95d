#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>

#include "tokfuse/prob_vector.hpp"

namespace tokfuse {

struct Greedy {};
/// Samples from q^(1/tau), renormalized. tau > 0.
struct Temperature {
  double tau = 1.0;
};
/// Samples from the smallest descending-probability prefix holding at least `p` mass. p in (0, 1].
struct TopP {
  double p = 1.0;
};

using SamplingPolicy = std::variant<Greedy, Temperature, TopP>;

/// Throws ConfigError for tau <= 0 or p outside (0, 1].
void validate(const SamplingPolicy& policy);
std::string describe(const SamplingPolicy& policy);

/// Seeded generator; the same seed yields the same draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform double in [0, 1) built from the top 53 bits of one engine output.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Picks a union index from q. Greedy is argmax with ties to the lowest index and never
/// draws from `rng`; the sampled policies draw exactly once.
std::size_t select_token(const ProbVector& q, const SamplingPolicy& policy, Rng& rng);

}  // namespace tokfuse
