#include "tokfuse/backend.hpp"

#include "tokfuse/errors.hpp"

namespace tokfuse {
namespace {

class PrefixSession final : public Session {
 public:
  PrefixSession(const PrefixModel& model, std::vector<TokenId> prefix) : model_(model), prefix_(std::move(prefix)) {}

  ProbVector step() override { return model_.distribution(prefix_); }

  void append(std::span<const TokenId> ids) override {
    model_.vocabulary()->check_ids(ids);
    prefix_.insert(prefix_.end(), ids.begin(), ids.end());
  }

  const std::vector<TokenId>& prefix() const override { return prefix_; }

 private:
  const PrefixModel& model_;
  std::vector<TokenId> prefix_;
};

}  // namespace

PrefixModel::PrefixModel(std::shared_ptr<const Vocabulary> vocab) : vocab_(std::move(vocab)) {
  if (!vocab_ || vocab_->size() == 0) throw ConfigError("backend needs a non-empty vocabulary");
}

std::unique_ptr<Session> PrefixModel::start_session(std::span<const TokenId> prompt_ids) const {
  vocab_->check_ids(prompt_ids);
  return std::make_unique<PrefixSession>(*this, std::vector<TokenId>(prompt_ids.begin(), prompt_ids.end()));
}

BackendDescriptor describe(std::string name, std::shared_ptr<const Backend> backend, double weight) {
  if (!backend) throw ConfigError("member '" + name + "' has no backend");
  auto tokenizer = std::make_shared<GreedyTokenizer>(backend->vocabulary());
  return BackendDescriptor{std::move(name), std::move(backend), std::move(tokenizer), weight, false};
}

std::vector<TokenId> native_greedy_decode(const Backend& backend, std::span<const TokenId> prompt_ids,
                                          std::size_t max_tokens) {
  const auto vocab = backend.vocabulary();
  auto session = backend.start_session(prompt_ids);
  std::vector<TokenId> out;
  while (out.size() < max_tokens) {
    const auto id = static_cast<TokenId>(session->step().argmax());
    out.push_back(id);
    if (vocab->is_special(id)) break;
    const TokenId one[] = {id};
    session->append(one);
  }
  return out;
}

}  // namespace tokfuse
