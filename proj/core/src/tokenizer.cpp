#include "tokfuse/tokenizer.hpp"

#include <algorithm>
#include <optional>

namespace tokfuse {

GreedyTokenizer::GreedyTokenizer(std::shared_ptr<const Vocabulary> vocab) : vocab_(std::move(vocab)) {
  if (!vocab_) throw ContractViolation("tokenizer needs a vocabulary");
  for (std::size_t id = 0; id < vocab_->size(); ++id) {
    if (vocab_->is_special(static_cast<TokenId>(id))) continue;
    const auto& bytes = vocab_->surfaces()[id].bytes();
    ids_.try_emplace(bytes, static_cast<TokenId>(id));
    max_len_ = std::max(max_len_, bytes.size());
  }
}

std::vector<TokenId> GreedyTokenizer::encode(std::string_view text) const {
  std::vector<TokenId> out;
  std::string probe;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t longest = std::min(max_len_, text.size() - pos);
    std::optional<std::pair<TokenId, std::size_t>> hit;
    for (std::size_t len = longest; len > 0; --len) {
      probe.assign(text.substr(pos, len));
      if (auto it = ids_.find(probe); it != ids_.end()) {
        hit.emplace(it->second, len);
        break;
      }
    }
    if (!hit) {
      throw TokenizationError("no token covers byte offset " + std::to_string(pos) + " of the input");
    }
    out.push_back(hit->first);
    pos += hit->second;
  }
  return out;
}

std::string GreedyTokenizer::decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) out += vocab_->surface(id).bytes();
  return out;
}

std::vector<TokenId> GreedyTokenizer::encode_continuation(const TokenSurface& surface) const {
  if (auto it = ids_.find(surface.bytes()); it != ids_.end()) return {it->second};
  return encode(surface.bytes());
}

std::vector<std::string> surfaces_of(const Vocabulary& vocab, std::span<const TokenId> ids) {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(vocab.surface(id).bytes());
  return out;
}

double agreement_rate(const TokenizerAdapter& a, const TokenizerAdapter& b, std::span<const std::string> words) {
  if (words.empty()) throw ConfigError("agreement rate needs at least one word");

  auto split = [](const TokenizerAdapter& t, const std::string& text) -> std::optional<std::vector<std::string>> {
    try {
      return surfaces_of(t.vocabulary(), t.encode(text));
    } catch (const TokenizationError&) {
      return std::nullopt;
    }
  };

  std::size_t same = 0;
  for (const auto& w : words) {
    const std::string text = " " + w;
    auto sa = split(a, text);
    auto sb = split(b, text);
    if (sa && sb && *sa == *sb) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(words.size());
}

}  // namespace tokfuse
