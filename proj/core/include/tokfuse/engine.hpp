#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokfuse/backend.hpp"
#include "tokfuse/errors.hpp"
#include "tokfuse/sampling.hpp"
#include "tokfuse/trace.hpp"
#include "tokfuse/vocab.hpp"

namespace tokfuse {

struct EnsembleConfig {
  SamplingPolicy sampling = Greedy{};
  std::size_t max_tokens = 256;
  /// Extra surfaces that end generation; member control surfaces are added unless
  /// `stop_on_member_control` is false.
  std::vector<std::string> stop_surfaces;
  bool stop_on_member_control = true;
  std::uint64_t seed = 0;
  /// Step the members of one generation step concurrently.
  bool parallel = true;
  /// Fused entries kept per trace record.
  std::size_t trace_top_k = 5;
};

enum class BelowPolicy { kEnsemble, kDelegate };

/// Confidence-gated generation: the gate's max probability decides, per step, whether the
/// step is ensembled (or delegated) or the gate's distribution is used alone.
struct CascadeConfig {
  std::size_t gate = 0;
  double threshold = 0.5;  // branch fires when max(p_gate) <= threshold
  BelowPolicy below = BelowPolicy::kEnsemble;
  std::size_t delegate_target = 0;  // used with BelowPolicy::kDelegate
};

/// A backend failed mid-generation. Carries everything generated up to the failure.
class GenerationAborted : public Error {
 public:
  GenerationAborted(const std::string& what, GenerationResult partial, bool transport);
  const GenerationResult& partial() const noexcept { return partial_; }
  /// True when the cause was a TransportError.
  bool transport() const noexcept { return transport_; }

 private:
  GenerationResult partial_;
  bool transport_;
};

/// q = sum_i (w_i / sum w) * mapped_i. Throws ContractViolation on length mismatch,
/// negative weights, or weights summing to zero.
ProbVector fuse(std::span<const ProbVector> mapped, std::span<const double> weights);

struct StopDecision {
  bool stop = false;
  StopReason reason = StopReason::kNone;
};

/// Stops with kEos when the chosen surface is a stop surface, else with kLength once
/// `generated_count` reaches `max_tokens`.
StopDecision check_stop(std::size_t chosen, std::size_t generated_count, const UnionVocab& vocab,
                        const std::set<std::string>& stop_surfaces, std::size_t max_tokens);

/// N members bound to their union vocabulary and mapping matrices. Immutable; one
/// instance can run many generations, each with fresh sessions.
class Ensemble {
 public:
  /// Throws ConfigError for no members, negative or all-zero weights, more than one gate
  /// flag, or a member without backend/tokenizer.
  explicit Ensemble(std::vector<BackendDescriptor> members);

  const std::vector<BackendDescriptor>& members() const noexcept { return members_; }
  const UnionVocab& union_vocab() const noexcept { return union_.vocab; }
  const std::vector<MappingMatrix>& matrices() const noexcept { return union_.matrices; }
  /// Index of the member flagged is_gate, if any.
  std::optional<std::size_t> gate() const noexcept { return gate_; }

  /// Effective stop set for `config`.
  std::set<std::string> stop_surfaces(const EnsembleConfig& config) const;

  /// Every step fuses all members. Steps are flagged ensembled when there is more than one member.
  GenerationResult generate(std::string_view prompt, const EnsembleConfig& config) const;

  GenerationResult generate_cascade(std::string_view prompt, const EnsembleConfig& config,
                                    const CascadeConfig& cascade) const;

 private:
  GenerationResult run(std::string_view prompt, const EnsembleConfig& config,
                       const std::optional<CascadeConfig>& cascade) const;

  std::vector<BackendDescriptor> members_;
  UnionBuild union_;
  std::optional<std::size_t> gate_;
};

/// Throws ConfigError unless gate/delegate indices are valid and distinct and the
/// threshold lies in [0, 1].
void validate(const CascadeConfig& cascade, std::size_t member_count);

}  // namespace tokfuse
