#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tokfuse {

/// Maximum |sum - 1| accepted for a probability vector.
inline constexpr double kSimplexTolerance = 1e-6;

/// Dense next-token distribution over some vocabulary (a member's own, or the union).
///
/// Every constructed value has finite, non-negative entries summing to 1 within
/// the tolerance given at construction.
class ProbVector {
 public:
  ProbVector() = default;

  /// Validates the simplex invariants; throws ContractViolation on failure.
  explicit ProbVector(std::vector<double> values, double tolerance = kSimplexTolerance);

  /// Skips validation. For vectors produced by arithmetic that already preserves the simplex.
  static ProbVector trusted(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const noexcept { return values_; }

  double sum() const noexcept;
  /// Index of the largest entry; ties resolve to the lowest index.
  std::size_t argmax() const noexcept;
  double max() const noexcept;

  bool operator==(const ProbVector&) const = default;

 private:
  std::vector<double> values_;
};

/// Throws ContractViolation unless `values` is non-empty, finite, non-negative and
/// sums to 1 within `tolerance`.
void check_simplex(std::span<const double> values, double tolerance = kSimplexTolerance);

}  // namespace tokfuse
