#pragma once

#include <atomic>
#include <chrono>
#include <memory>

#include "tokfuse/backend.hpp"

namespace tokfuse {

/// Wraps a backend and sleeps before every step, standing in for a model whose forward
/// pass takes `delay`. Optionally the first `cold_steps` steps across all sessions pay an
/// extra `cold_penalty`, which models one-off startup cost that warm-up removes.
class DelayBackend final : public Backend {
 public:
  DelayBackend(std::shared_ptr<const Backend> inner, std::chrono::microseconds delay,
               std::chrono::microseconds cold_penalty = {}, std::size_t cold_steps = 0);

  std::shared_ptr<const Vocabulary> vocabulary() const override { return inner_->vocabulary(); }
  std::unique_ptr<Session> start_session(std::span<const TokenId> prompt_ids) const override;

  std::chrono::microseconds delay() const noexcept { return delay_; }
  std::size_t steps_taken() const noexcept { return steps_.load(); }

 private:
  friend class DelaySession;
  void pause() const;

  std::shared_ptr<const Backend> inner_;
  std::chrono::microseconds delay_;
  std::chrono::microseconds cold_penalty_;
  std::size_t cold_steps_;
  mutable std::atomic<std::size_t> steps_{0};
};

/// Throws ConfigError for a negative delay.
std::shared_ptr<DelayBackend> with_delay(std::shared_ptr<const Backend> backend, std::chrono::milliseconds millis);

}  // namespace tokfuse
