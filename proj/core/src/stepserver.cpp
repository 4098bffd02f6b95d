#include "tokfuse/stepserver.hpp"

#include <httplib.h>
#include <json.hpp>

#include "tokfuse/errors.hpp"
#include "tokfuse/remote_backend.hpp"
#include "tokfuse/vocab_file.hpp"
#include "tokfuse/wire.hpp"

namespace tokfuse {
namespace {

using nlohmann::json;

StepServer::Response error_response(int status, std::string_view code, std::string_view message) {
  return {status, "application/json", wire::encode_error(code, message)};
}

json parse_body(std::string_view body) {
  if (body.empty()) return json::object();
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw std::invalid_argument("request body is not a JSON object");
  return doc;
}

}  // namespace

StepServer::StepServer(std::shared_ptr<const Backend> backend, StepServerOptions options)
    : backend_(std::move(backend)), options_(options) {
  if (!backend_) throw ConfigError("step server needs a backend");
  vocab_body_ = format_vocab(*backend_->vocabulary());
}

StepServer::~StepServer() { stop(); }

StepServer::Response StepServer::handle(std::string_view op, std::string_view body) {
  try {
    if (op == "create_session") return create_session(body);
    if (op == "step") return step(body);
    if (op == "append") return append(body);
    if (op == "vocab") return vocab();
    return error_response(404, wire::code::kInternal, "unknown operation '" + std::string(op) + "'");
  } catch (const ContractViolation& e) {
    return error_response(400, wire::code::kBadIds, e.what());
  } catch (const std::exception& e) {
    return error_response(500, wire::code::kInternal, e.what());
  }
}

std::shared_ptr<StepServer::Entry> StepServer::find(const std::string& id) const {
  std::lock_guard lock(sessions_mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

StepServer::Response StepServer::create_session(std::string_view body) {
  const json req = parse_body(body);
  std::vector<TokenId> prompt;
  if (req.contains("prompt_ids")) {
    const auto& ids = req.at("prompt_ids");
    if (!ids.is_array()) return error_response(400, wire::code::kBadIds, "prompt_ids must be an array");
    for (const auto& v : ids) {
      if (!v.is_number_unsigned()) return error_response(400, wire::code::kBadIds, "prompt_ids must be non-negative integers");
      prompt.push_back(v.get<TokenId>());
    }
  }
  auto entry = std::make_shared<Entry>();
  entry->session = backend_->start_session(prompt);
  const std::string id = "s" + std::to_string(next_id_.fetch_add(1));
  {
    std::lock_guard lock(sessions_mutex_);
    sessions_.emplace(id, std::move(entry));
  }
  return {200, "application/json", json{{"session_id", id}}.dump()};
}

StepServer::Response StepServer::step(std::string_view body) {
  const json req = parse_body(body);
  const std::string id = req.value("session_id", std::string());
  auto entry = find(id);
  if (!entry) return error_response(404, wire::code::kSessionNotFound, "no session '" + id + "'");
  ProbVector probs;
  {
    std::lock_guard lock(entry->mutex);
    probs = entry->session->step();
  }
  std::optional<std::size_t> top_k;
  if (options_.sparse_above && probs.size() > *options_.sparse_above) top_k = options_.sparse_top_k;
  return {200, "application/json", wire::encode_step_response(probs, top_k)};
}

StepServer::Response StepServer::append(std::string_view body) {
  const json req = parse_body(body);
  const std::string id = req.value("session_id", std::string());
  auto entry = find(id);
  if (!entry) return error_response(404, wire::code::kSessionNotFound, "no session '" + id + "'");
  std::vector<TokenId> ids;
  const auto it = req.find("ids");
  if (it == req.end() || !it->is_array()) return error_response(400, wire::code::kBadIds, "ids must be an array");
  for (const auto& v : *it) {
    if (!v.is_number_unsigned()) return error_response(400, wire::code::kBadIds, "ids must be non-negative integers");
    ids.push_back(v.get<TokenId>());
  }
  std::size_t len = 0;
  {
    std::lock_guard lock(entry->mutex);
    entry->session->append(ids);
    len = entry->session->prefix().size();
  }
  return {200, "application/json", json{{"prefix_len", len}}.dump()};
}

StepServer::Response StepServer::vocab() const { return {200, "text/plain; charset=utf-8", vocab_body_}; }

std::size_t StepServer::session_count() const {
  std::lock_guard lock(sessions_mutex_);
  return sessions_.size();
}

int StepServer::bind(const std::string& host, int port) {
  if (bound_) throw Error("step server already bound");
  http_ = std::make_unique<httplib::Server>();
  http_->set_tcp_nodelay(true);
  http_->Post(R"(/v1/([a-z_]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const Response r = handle(req.matches[1].str(), req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  });
  int bound = port;
  if (port == 0) {
    bound = http_->bind_to_any_port(host);
  } else if (!http_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    http_.reset();
    throw TransportError("cannot bind step server to " + host + ":" + std::to_string(port));
  }
  bound_ = true;
  return bound;
}

void StepServer::start() {
  if (!bound_) throw Error("step server must be bound before start()");
  thread_ = std::thread([this] { http_->listen_after_bind(); });
  http_->wait_until_ready();
}

void StepServer::run() {
  if (!bound_) throw Error("step server must be bound before run()");
  http_->listen_after_bind();
}

void StepServer::stop() {
  if (http_) http_->stop();
  if (thread_.joinable()) thread_.join();
}

void serve(std::shared_ptr<const Backend> backend, const std::string& address, StepServerOptions options) {
  auto [host, port] = parse_address(address);
  StepServer server(std::move(backend), options);
  server.bind(host, port);
  server.run();
}

}  // namespace tokfuse
