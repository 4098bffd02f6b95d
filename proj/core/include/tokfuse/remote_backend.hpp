#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "tokfuse/backend.hpp"

namespace tokfuse {

struct RemoteOptions {
  std::chrono::milliseconds connect_timeout{2000};
  std::chrono::milliseconds read_timeout{30000};
};

/// Client for a step server. Connection failures raise TransportError; error objects
/// and invalid distributions from the peer raise ProtocolError.
class RemoteBackend final : public Backend {
 public:
  /// Fetches the peer's vocabulary. `address` is "host:port" (an "http://" prefix is accepted).
  static std::shared_ptr<RemoteBackend> connect(const std::string& address, RemoteOptions options = {});

  std::shared_ptr<const Vocabulary> vocabulary() const override { return vocab_; }
  std::unique_ptr<Session> start_session(std::span<const TokenId> prompt_ids) const override;

  const std::string& host() const noexcept { return host_; }
  int port() const noexcept { return port_; }
  const RemoteOptions& options() const noexcept { return options_; }

 private:
  RemoteBackend(std::string host, int port, RemoteOptions options);

  std::string host_;
  int port_;
  RemoteOptions options_;
  std::shared_ptr<const Vocabulary> vocab_;
};

/// Splits "host:port" / "http://host:port". Throws ConfigError when malformed.
std::pair<std::string, int> parse_address(std::string_view address);

}  // namespace tokfuse
