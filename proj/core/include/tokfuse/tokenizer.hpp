#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokfuse/errors.hpp"
#include "tokfuse/vocab.hpp"

namespace tokfuse {

/// Text cannot be covered by the tokenizer's vocabulary.
class TokenizationError : public ContractViolation {
 public:
  using ContractViolation::ContractViolation;
};

/// Text <-> token IDs for one member model.
///
/// Implementations guarantee decode(encode(t)) == t for control-free text, and that
/// encode_continuation(s) is the single lowest ID of s whenever s is a non-control
/// surface of vocabulary().
class TokenizerAdapter {
 public:
  virtual ~TokenizerAdapter() = default;

  virtual std::vector<TokenId> encode(std::string_view text) const = 0;
  virtual std::string decode(std::span<const TokenId> ids) const = 0;
  /// Encodes a generated surface for appending to an existing prefix: no control
  /// tokens are inserted and leading bytes are kept verbatim.
  virtual std::vector<TokenId> encode_continuation(const TokenSurface& surface) const = 0;
  virtual const Vocabulary& vocabulary() const = 0;
};

/// Longest-match tokenizer over the non-control surfaces of a vocabulary.
/// Duplicate surfaces resolve to their lowest ID.
class GreedyTokenizer final : public TokenizerAdapter {
 public:
  explicit GreedyTokenizer(std::shared_ptr<const Vocabulary> vocab);

  std::vector<TokenId> encode(std::string_view text) const override;
  std::string decode(std::span<const TokenId> ids) const override;
  std::vector<TokenId> encode_continuation(const TokenSurface& surface) const override;
  const Vocabulary& vocabulary() const override { return *vocab_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  std::unordered_map<std::string, TokenId> ids_;  // non-control surfaces, lowest ID
  std::size_t max_len_ = 0;
};

/// Fraction of words (each prefixed with a single space) that both adapters split into
/// the same surface sequence. A word one adapter cannot tokenize counts as a disagreement.
/// Throws ConfigError on an empty word list.
double agreement_rate(const TokenizerAdapter& a, const TokenizerAdapter& b, std::span<const std::string> words);

/// Surfaces of `ids` under `vocab`, in order.
std::vector<std::string> surfaces_of(const Vocabulary& vocab, std::span<const TokenId> ids);

}  // namespace tokfuse
