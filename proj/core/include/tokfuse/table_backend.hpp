#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <vector>

#include "tokfuse/backend.hpp"

namespace tokfuse {

/// Deterministic lookup model. A rule maps a context (a non-empty ID sequence) to a
/// distribution; step() uses the longest rule whose context is a suffix of the prefix,
/// or the declared fallback when none matches.
class TableBackend final : public PrefixModel {
 public:
  TableBackend(std::shared_ptr<const Vocabulary> vocab, ProbVector fallback);

  /// Replaces any existing rule for the same context.
  void add_rule(std::vector<TokenId> context, ProbVector probs);

  ProbVector distribution(std::span<const TokenId> prefix) const override;

  const ProbVector& fallback() const noexcept { return fallback_; }
  std::size_t rule_count() const noexcept { return rules_.size(); }

 private:
  ProbVector fallback_;
  std::map<std::vector<TokenId>, ProbVector> rules_;
  std::size_t longest_context_ = 0;
};

/// Loads a table model from JSON:
///   {"vocab": "<path, relative to this file>", "fallback": [p...],
///    "rules": [{"context": [id...], "probs": [p...]}, ...]}
/// Throws ParseError on malformed input.
std::shared_ptr<TableBackend> load_table_file(const std::filesystem::path& path);

}  // namespace tokfuse
