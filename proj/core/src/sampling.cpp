#include "tokfuse/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "tokfuse/errors.hpp"

namespace tokfuse {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// Inverse-CDF draw over (index, weight) pairs; weights need not be normalized.
std::size_t draw(std::span<const std::size_t> indices, std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last = indices.front();
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = indices[i];
    if (target < acc) return indices[i];
  }
  return last;
}

std::size_t sample_temperature(const ProbVector& q, double tau, Rng& rng) {
  const double top = q.max();
  std::vector<std::size_t> idx;
  std::vector<double> w;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] <= 0.0) continue;
    idx.push_back(i);
    // Log domain keeps small tau from underflowing every entry.
    w.push_back(std::exp((std::log(q[i]) - std::log(top)) / tau));
  }
  return draw(idx, w, rng);
}

std::size_t sample_top_p(const ProbVector& q, double p, Rng& rng) {
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return q[a] > q[b]; });

  std::size_t keep = 0;
  double mass = 0.0;
  while (keep < order.size() && q[order[keep]] > 0.0) {
    mass += q[order[keep]];
    ++keep;
    if (mass >= p) break;
  }
  keep = std::max<std::size_t>(keep, 1);
  std::vector<double> w(keep);
  for (std::size_t i = 0; i < keep; ++i) w[i] = q[order[i]];
  return draw(std::span(order).first(keep), w, rng);
}

}  // namespace

void validate(const SamplingPolicy& policy) {
  std::visit(Overloaded{
                 [](const Greedy&) {},
                 [](const Temperature& t) {
                   if (!(t.tau > 0.0) || !std::isfinite(t.tau)) throw ConfigError("temperature must be positive");
                 },
                 [](const TopP& t) {
                   if (!(t.p > 0.0 && t.p <= 1.0)) throw ConfigError("top-p must lie in (0, 1]");
                 },
             },
             policy);
}

std::string describe(const SamplingPolicy& policy) {
  return std::visit(Overloaded{
                        [](const Greedy&) { return std::string("greedy"); },
                        [](const Temperature& t) { return "temperature(tau=" + std::to_string(t.tau) + ")"; },
                        [](const TopP& t) { return "top_p(p=" + std::to_string(t.p) + ")"; },
                    },
                    policy);
}

std::size_t select_token(const ProbVector& q, const SamplingPolicy& policy, Rng& rng) {
  if (q.empty()) throw ContractViolation("cannot select from an empty distribution");
  return std::visit(Overloaded{
                        [&](const Greedy&) { return q.argmax(); },
                        [&](const Temperature& t) { return sample_temperature(q, t.tau, rng); },
                        [&](const TopP& t) { return sample_top_p(q, t.p, rng); },
                    },
                    policy);
}

}  // namespace tokfuse
