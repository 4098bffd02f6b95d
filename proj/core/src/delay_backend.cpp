#include "tokfuse/delay_backend.hpp"

#include <thread>

#include "tokfuse/errors.hpp"

namespace tokfuse {

class DelaySession final : public Session {
 public:
  DelaySession(const DelayBackend& owner, std::unique_ptr<Session> inner) : owner_(owner), inner_(std::move(inner)) {}

  ProbVector step() override {
    owner_.pause();
    return inner_->step();
  }
  void append(std::span<const TokenId> ids) override { inner_->append(ids); }
  const std::vector<TokenId>& prefix() const override { return inner_->prefix(); }

 private:
  const DelayBackend& owner_;
  std::unique_ptr<Session> inner_;
};

DelayBackend::DelayBackend(std::shared_ptr<const Backend> inner, std::chrono::microseconds delay,
                           std::chrono::microseconds cold_penalty, std::size_t cold_steps)
    : inner_(std::move(inner)), delay_(delay), cold_penalty_(cold_penalty), cold_steps_(cold_steps) {
  if (!inner_) throw ConfigError("delay wrapper needs a backend");
  if (delay_.count() < 0 || cold_penalty_.count() < 0) throw ConfigError("delay must be non-negative");
}

std::unique_ptr<Session> DelayBackend::start_session(std::span<const TokenId> prompt_ids) const {
  return std::make_unique<DelaySession>(*this, inner_->start_session(prompt_ids));
}

void DelayBackend::pause() const {
  auto wait = delay_;
  if (steps_.fetch_add(1) < cold_steps_) wait += cold_penalty_;
  if (wait.count() > 0) std::this_thread::sleep_for(wait);
}

std::shared_ptr<DelayBackend> with_delay(std::shared_ptr<const Backend> backend, std::chrono::milliseconds millis) {
  if (millis.count() < 0) throw ConfigError("delay must be non-negative");
  return std::make_shared<DelayBackend>(std::move(backend), millis);
}

}  // namespace tokfuse
