#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tokfuse/prob_vector.hpp"
#include "tokfuse/tokenizer.hpp"
#include "tokfuse/vocab.hpp"

namespace tokfuse {

/// One backend's growing token prefix. A session is driven by one caller at a time.
///
/// step() must depend only on the full prefix: appending several times without stepping
/// and then stepping gives the same distribution as a fresh session over the full prefix.
class Session {
 public:
  virtual ~Session() = default;

  virtual ProbVector step() = 0;
  /// Throws ContractViolation for IDs outside the backend's vocabulary.
  virtual void append(std::span<const TokenId> ids) = 0;
  virtual const std::vector<TokenId>& prefix() const = 0;
};

/// A next-token probability source. Backends are shared between threads; each
/// concurrent caller uses its own session. A backend must outlive its sessions.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual std::shared_ptr<const Vocabulary> vocabulary() const = 0;
  /// Throws ContractViolation for IDs outside the vocabulary.
  virtual std::unique_ptr<Session> start_session(std::span<const TokenId> prompt_ids) const = 0;
};

/// Backend whose distribution is a pure function of the prefix. Subclasses implement
/// distribution(); sessions just keep the prefix.
class PrefixModel : public Backend {
 public:
  explicit PrefixModel(std::shared_ptr<const Vocabulary> vocab);

  std::shared_ptr<const Vocabulary> vocabulary() const override { return vocab_; }
  std::unique_ptr<Session> start_session(std::span<const TokenId> prompt_ids) const override;

  virtual ProbVector distribution(std::span<const TokenId> prefix) const = 0;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
};

/// An ensemble member: a backend plus the tokenizer used to feed it, its weight and
/// whether it is the cascade gate.
struct BackendDescriptor {
  std::string name;
  std::shared_ptr<const Backend> backend;
  std::shared_ptr<const TokenizerAdapter> tokenizer;
  double weight = 1.0;
  bool is_gate = false;
};

/// Descriptor with a GreedyTokenizer over the backend's vocabulary.
BackendDescriptor describe(std::string name, std::shared_ptr<const Backend> backend, double weight = 1.0);

/// Greedy decode of a single backend without any union mapping: step, take the lowest
/// argmax ID, stop on a control token or after max_tokens. Returns the generated IDs,
/// including the stopping control token if one was produced.
std::vector<TokenId> native_greedy_decode(const Backend& backend, std::span<const TokenId> prompt_ids,
                                          std::size_t max_tokens);

}  // namespace tokfuse
