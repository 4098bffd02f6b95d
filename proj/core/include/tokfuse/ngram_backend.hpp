#pragma once

#include <map>
#include <memory>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokfuse/backend.hpp"

namespace tokfuse {

/// Add-alpha smoothed n-gram model over a fixed vocabulary:
///
///   P(t | c) = (count(c, t) + alpha) / (count(c) + alpha * |V|)
///
/// where c is the last `order` tokens of the prefix. Prefixes shorter than `order`
/// and unseen contexts get the uniform distribution.
class NgramBackend final : public PrefixModel {
 public:
  NgramBackend(std::shared_ptr<const Vocabulary> vocab, std::size_t order, double alpha,
               std::span<const TokenId> corpus_ids);

  ProbVector distribution(std::span<const TokenId> prefix) const override;

  std::size_t order() const noexcept { return order_; }
  double alpha() const noexcept { return alpha_; }
  /// Number of times `context` was followed by `next` in the corpus.
  std::size_t count(std::span<const TokenId> context, TokenId next) const;
  /// Number of times `context` was followed by anything.
  std::size_t context_count(std::span<const TokenId> context) const;

 private:
  struct Row {
    std::size_t total = 0;
    std::unordered_map<TokenId, std::size_t> next;
  };

  std::size_t order_;
  double alpha_;
  std::map<std::vector<TokenId>, Row> rows_;
};

/// Tokenizes `corpus` with a GreedyTokenizer over `vocab` and counts (order+1)-grams.
/// Throws ConfigError on an empty corpus, order 0 or alpha <= 0.
std::shared_ptr<NgramBackend> fit_ngram(std::string_view corpus, std::size_t order, double alpha,
                                        std::shared_ptr<const Vocabulary> vocab);

}  // namespace tokfuse
