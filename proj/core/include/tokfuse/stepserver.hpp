#pragma once

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include "tokfuse/backend.hpp"

namespace httplib {
class Server;
}

namespace tokfuse {

struct StepServerOptions {
  /// Send sparse step bodies when the vocabulary is larger than this. Dense by default.
  std::optional<std::size_t> sparse_above;
  std::size_t sparse_top_k = 256;
};

/// Exposes an in-process backend over wire protocol v1 (see wire.hpp). Sessions are
/// isolated from each other; operations on one session are serialized.
class StepServer {
 public:
  struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
  };

  explicit StepServer(std::shared_ptr<const Backend> backend, StepServerOptions options = {});
  ~StepServer();
  StepServer(const StepServer&) = delete;
  StepServer& operator=(const StepServer&) = delete;

  /// Dispatches one request body to `op` without any transport. Never throws.
  Response handle(std::string_view op, std::string_view body);

  /// Binds `host:port` (port 0 picks a free port) and returns the bound port.
  /// Throws TransportError when the address cannot be bound.
  int bind(const std::string& host, int port);
  /// Serves on a background thread until stop(). Requires bind().
  void start();
  /// Serves on the calling thread until stop() is called from elsewhere.
  void run();
  void stop();

  std::size_t session_count() const;

 private:
  struct Entry {
    std::mutex mutex;
    std::unique_ptr<Session> session;
  };

  Response create_session(std::string_view body);
  Response step(std::string_view body);
  Response append(std::string_view body);
  Response vocab() const;
  std::shared_ptr<Entry> find(const std::string& id) const;

  std::shared_ptr<const Backend> backend_;
  StepServerOptions options_;
  std::string vocab_body_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::atomic<std::uint64_t> next_id_{1};

  std::unique_ptr<httplib::Server> http_;
  std::thread thread_;
  bool bound_ = false;
};

/// Binds `address` ("host:port") and serves `backend` until the process exits.
void serve(std::shared_ptr<const Backend> backend, const std::string& address, StepServerOptions options = {});

}  // namespace tokfuse
