#include "tokfuse/prob_vector.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "tokfuse/errors.hpp"

namespace tokfuse {

void check_simplex(std::span<const double> values, double tolerance) {
  if (values.empty()) throw ContractViolation("probability vector is empty");
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!std::isfinite(v) || v < 0.0) {
      throw ContractViolation("probability entry " + std::to_string(i) + " is not a finite non-negative value");
    }
    total += v;
  }
  if (std::abs(total - 1.0) > tolerance) {
    throw ContractViolation("probability vector sums to " + std::to_string(total));
  }
}

ProbVector::ProbVector(std::vector<double> values, double tolerance) : values_(std::move(values)) {
  check_simplex(values_, tolerance);
}

ProbVector ProbVector::trusted(std::vector<double> values) {
  ProbVector p;
  p.values_ = std::move(values);
  return p;
}

double ProbVector::sum() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }

std::size_t ProbVector::argmax() const noexcept {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values_.size(); ++i) {
    if (values_[i] > values_[best]) best = i;
  }
  return best;
}

double ProbVector::max() const noexcept { return values_.empty() ? 0.0 : values_[argmax()]; }

}  // namespace tokfuse
