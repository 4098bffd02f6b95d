#include "tokfuse/remote_backend.hpp"

#include <charconv>

#include <httplib.h>
#include <json.hpp>

#include "tokfuse/errors.hpp"
#include "tokfuse/vocab_file.hpp"
#include "tokfuse/wire.hpp"

namespace tokfuse {
namespace {

using nlohmann::json;

httplib::Client make_client(const RemoteBackend& backend) {
  httplib::Client client(backend.host(), backend.port());
  const auto& o = backend.options();
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(o.connect_timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(o.read_timeout));
  client.set_keep_alive(true);
  client.set_tcp_nodelay(true);
  return client;
}

// Returns the raw body; error objects become ProtocolError.
std::string post(httplib::Client& client, std::string_view op, const std::string& body) {
  const std::string path = std::string(wire::kPathPrefix) + std::string(op);
  auto res = client.Post(path, body, "application/json");
  if (!res) {
    throw TransportError("step server unreachable (" + std::string(op) + "): " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    json doc = json::parse(res->body, nullptr, false);
    if (!doc.is_discarded() && doc.is_object() && doc.contains("error")) {
      const auto& e = doc["error"];
      throw ProtocolError(e.value("code", std::string(wire::code::kInternal)), e.value("message", std::string()));
    }
    throw ProtocolError(std::string(wire::code::kInternal), "HTTP status " + std::to_string(res->status));
  }
  return res->body;
}

json post_json(httplib::Client& client, std::string_view op, const json& body) {
  json doc = json::parse(post(client, op, body.dump()), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw ProtocolError(std::string(wire::code::kInternal), std::string(op) + " response is not a JSON object");
  }
  if (doc.contains("error")) {
    const auto& e = doc["error"];
    throw ProtocolError(e.value("code", std::string(wire::code::kInternal)), e.value("message", std::string()));
  }
  return doc;
}

class RemoteSession final : public Session {
 public:
  RemoteSession(const RemoteBackend& backend, std::vector<TokenId> prompt)
      : backend_(backend), client_(make_client(backend)), prefix_(std::move(prompt)) {
    const json reply = post_json(client_, "create_session", json{{"prompt_ids", prefix_}});
    try {
      id_ = reply.at("session_id").get<std::string>();
    } catch (const json::exception&) {
      throw ProtocolError(std::string(wire::code::kInternal), "create_session response lacks session_id");
    }
  }

  ProbVector step() override {
    const std::string body = post(client_, "step", json{{"session_id", id_}}.dump());
    return wire::decode_step_response(body, backend_.vocabulary()->size());
  }

  void append(std::span<const TokenId> ids) override {
    backend_.vocabulary()->check_ids(ids);
    const json reply = post_json(client_, "append", json{{"session_id", id_}, {"ids", std::vector<TokenId>(ids.begin(), ids.end())}});
    prefix_.insert(prefix_.end(), ids.begin(), ids.end());
    const auto remote_len = reply.value("prefix_len", std::size_t{0});
    if (remote_len != prefix_.size()) {
      throw ProtocolError(std::string(wire::code::kInternal), "peer prefix length " + std::to_string(remote_len) +
                                                                  " disagrees with local " + std::to_string(prefix_.size()));
    }
  }

  const std::vector<TokenId>& prefix() const override { return prefix_; }
  const std::string& id() const noexcept { return id_; }

 private:
  const RemoteBackend& backend_;
  httplib::Client client_;
  std::vector<TokenId> prefix_;
  std::string id_;
};

}  // namespace

std::pair<std::string, int> parse_address(std::string_view address) {
  if (address.starts_with("http://")) address.remove_prefix(7);
  while (address.ends_with('/')) address.remove_suffix(1);
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0) throw ConfigError("address must be host:port, got '" + std::string(address) + "'");
  int port = 0;
  const auto digits = address.substr(colon + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), port);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || port < 0 || port > 65535) {
    throw ConfigError("bad port in address '" + std::string(address) + "'");
  }
  return {std::string(address.substr(0, colon)), port};
}

RemoteBackend::RemoteBackend(std::string host, int port, RemoteOptions options)
    : host_(std::move(host)), port_(port), options_(options) {}

std::shared_ptr<RemoteBackend> RemoteBackend::connect(const std::string& address, RemoteOptions options) {
  auto [host, port] = parse_address(address);
  std::shared_ptr<RemoteBackend> backend(new RemoteBackend(std::move(host), port, options));
  auto client = make_client(*backend);
  const std::string body = post(client, "vocab", "{}");
  try {
    backend->vocab_ = std::make_shared<const Vocabulary>(parse_vocab(body));
  } catch (const ParseError& e) {
    throw ProtocolError(std::string(wire::code::kInternal), std::string("peer vocabulary: ") + e.what());
  }
  return backend;
}

std::unique_ptr<Session> RemoteBackend::start_session(std::span<const TokenId> prompt_ids) const {
  vocab_->check_ids(prompt_ids);
  return std::make_unique<RemoteSession>(*this, std::vector<TokenId>(prompt_ids.begin(), prompt_ids.end()));
}

}  // namespace tokfuse
