#include "tokfuse/ngram_backend.hpp"

#include <cmath>

#include "tokfuse/errors.hpp"
#include "tokfuse/tokenizer.hpp"

namespace tokfuse {

NgramBackend::NgramBackend(std::shared_ptr<const Vocabulary> vocab, std::size_t order, double alpha,
                           std::span<const TokenId> corpus_ids)
    : PrefixModel(std::move(vocab)), order_(order), alpha_(alpha) {
  if (order_ == 0) throw ConfigError("n-gram order must be at least 1");
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw ConfigError("n-gram alpha must be positive and finite");
  vocabulary()->check_ids(corpus_ids);
  for (std::size_t i = order_; i < corpus_ids.size(); ++i) {
    std::vector<TokenId> ctx(corpus_ids.begin() + static_cast<std::ptrdiff_t>(i - order_),
                             corpus_ids.begin() + static_cast<std::ptrdiff_t>(i));
    Row& row = rows_[std::move(ctx)];
    ++row.total;
    ++row.next[corpus_ids[i]];
  }
}

ProbVector NgramBackend::distribution(std::span<const TokenId> prefix) const {
  const std::size_t n = vocabulary()->size();
  const Row* row = nullptr;
  if (prefix.size() >= order_) {
    std::vector<TokenId> ctx(prefix.end() - static_cast<std::ptrdiff_t>(order_), prefix.end());
    if (auto it = rows_.find(ctx); it != rows_.end()) row = &it->second;
  }
  if (row == nullptr) return ProbVector::trusted(std::vector<double>(n, 1.0 / static_cast<double>(n)));

  const double denom = static_cast<double>(row->total) + alpha_ * static_cast<double>(n);
  std::vector<double> probs(n, alpha_ / denom);
  for (const auto& [id, c] : row->next) probs[id] = (static_cast<double>(c) + alpha_) / denom;
  return ProbVector::trusted(std::move(probs));
}

std::size_t NgramBackend::count(std::span<const TokenId> context, TokenId next) const {
  auto it = rows_.find(std::vector<TokenId>(context.begin(), context.end()));
  if (it == rows_.end()) return 0;
  auto jt = it->second.next.find(next);
  return jt == it->second.next.end() ? 0 : jt->second;
}

std::size_t NgramBackend::context_count(std::span<const TokenId> context) const {
  auto it = rows_.find(std::vector<TokenId>(context.begin(), context.end()));
  return it == rows_.end() ? 0 : it->second.total;
}

std::shared_ptr<NgramBackend> fit_ngram(std::string_view corpus, std::size_t order, double alpha,
                                        std::shared_ptr<const Vocabulary> vocab) {
  if (corpus.empty()) throw ConfigError("n-gram corpus is empty");
  GreedyTokenizer tokenizer(vocab);
  const auto ids = tokenizer.encode(corpus);
  return std::make_shared<NgramBackend>(std::move(vocab), order, alpha, ids);
}

}  // namespace tokfuse
