#include <doctest.h>

#include <json.hpp>
#include <random>

#include "support/fixtures.hpp"
#include "support/scenarios.hpp"

using namespace tokfuse;
using namespace tokfuse::testing;
using nlohmann::json;

namespace {

std::string error_code(const StepServer::Response& r) { return json::parse(r.body).at("error").at("code"); }

// Server on an ephemeral local port, stopped on destruction.
struct LiveServer {
  StepServer server;
  int port;
  explicit LiveServer(std::shared_ptr<const Backend> b, StepServerOptions o = {})
      : server(std::move(b), o), port(server.bind("127.0.0.1", 0)) {
    server.start();
  }
  std::string address() const { return "127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST_SUITE("stepserver") {

TEST_CASE("wire encoding round trip") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const ProbVector p(random_simplex(std::uniform_int_distribution<std::size_t>(1, 80)(rng), rng));
    CHECK(wire::decode_step_response(wire::encode_step_response(p), p.size()) == p);
  }
}

TEST_CASE("sparse step bodies spread the rest mass") {
  const ProbVector p({0.5, 0.1, 0.3, 0.05, 0.05});
  const std::string body = wire::encode_step_response(p, 2);
  const auto j = json::parse(body);
  CHECK(j.at("topk").size() == 2);
  CHECK(j.at("topk")[0][0] == 0);
  CHECK(j.at("topk")[1][0] == 2);
  const auto q = wire::decode_step_response(body, 5);
  CHECK(q[0] == 0.5);
  CHECK(q[2] == 0.3);
  for (std::size_t i : {1, 3, 4}) CHECK(q[i] == doctest::Approx(0.2 / 3.0).epsilon(1e-12));
}

TEST_CASE("malformed or off-simplex peers are rejected") {
  CHECK_THROWS_AS(wire::decode_step_response("{\"probs\": [0.5, 0.4]}", 2), ProtocolError);
  CHECK_THROWS_AS(wire::decode_step_response("{\"probs\": [0.5, 0.5]}", 3), ProtocolError);
  CHECK_THROWS_AS(wire::decode_step_response("[]", 2), ProtocolError);
  CHECK_NOTHROW(wire::decode_step_response("{\"probs\": [0.50004, 0.5]}", 2));
  try {
    wire::decode_step_response(wire::encode_error(wire::code::kSessionNotFound, "gone"), 2);
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(e.code() == "session_not_found");
  }
}

TEST_CASE("handle: protocol operations and error codes") {
  std::mt19937_64 rng(4);
  auto table = random_table(rng, 6, true);
  StepServer server(table);

  const auto created = server.handle("create_session", "{\"prompt_ids\": [1, 2]}");
  CHECK(created.status == 200);
  const std::string sid = json::parse(created.body).at("session_id");
  CHECK(server.session_count() == 1);

  const auto stepped = server.handle("step", json{{"session_id", sid}}.dump());
  CHECK(stepped.status == 200);
  const TokenId prompt[] = {1, 2};
  CHECK(wire::decode_step_response(stepped.body, 6) == table->start_session(prompt)->step());

  const auto appended = server.handle("append", json{{"session_id", sid}, {"ids", {3}}}.dump());
  CHECK(json::parse(appended.body).at("prefix_len") == 3);

  const auto missing = server.handle("step", "{\"session_id\": \"nope\"}");
  CHECK(missing.status == 404);
  CHECK(error_code(missing) == "session_not_found");

  const auto bad = server.handle("append", json{{"session_id", sid}, {"ids", {99}}}.dump());
  CHECK(bad.status == 400);
  CHECK(error_code(bad) == "bad_ids");
  CHECK(error_code(server.handle("create_session", "{\"prompt_ids\": [-1]}")) == "bad_ids");
  CHECK(error_code(server.handle("step", "not json")) == "internal");

  const auto vocab = server.handle("vocab", "{}");
  CHECK(vocab.body == format_vocab(*table->vocabulary()));
}

TEST_CASE("remote sessions match the in-process backend exactly") {
  std::mt19937_64 rng(21);
  auto table = random_table(rng, 30, true);
  LiveServer live(table);
  auto remote = RemoteBackend::connect(live.address());
  CHECK(format_vocab(*remote->vocabulary()) == format_vocab(*table->vocabulary()));

  const TokenId prompt[] = {3, 7};
  auto local = table->start_session(prompt);
  auto far = remote->start_session(prompt);
  for (int i = 0; i < 20; ++i) {
    const auto a = local->step();
    const auto b = far->step();
    CHECK(a == b);
    const TokenId next[] = {static_cast<TokenId>(a.argmax())};
    local->append(next);
    far->append(next);
  }
  CHECK(far->prefix() == local->prefix());

  EnsembleConfig cfg;
  cfg.max_tokens = 30;
  Ensemble in_process({describe("m", table)});
  Ensemble over_wire({describe("m", remote)});
  CHECK(format_trace(over_wire.generate("", cfg).trace) == format_trace(in_process.generate("", cfg).trace));
}

TEST_CASE("interleaved sessions stay isolated") {
  auto cyc = cascade_cycle({});
  LiveServer live(cyc.gate);
  auto remote = RemoteBackend::connect("http://" + live.address());
  const TokenId p1[] = {1};
  const TokenId p2[] = {6};
  auto s1 = remote->start_session(p1);
  auto s2 = remote->start_session(p2);
  for (TokenId i = 0; i < 5; ++i) {
    CHECK(s1->step().argmax() == (2 + i) % 10);
    CHECK(s2->step().argmax() == (7 + i) % 10);
    const TokenId n1[] = {static_cast<TokenId>((2 + i) % 10)};
    const TokenId n2[] = {static_cast<TokenId>((7 + i) % 10)};
    s1->append(n1);
    s2->append(n2);
  }
  CHECK(live.server.session_count() == 2);
}

TEST_CASE("sparse server form stays within the peer tolerance") {
  std::mt19937_64 rng(8);
  auto table = random_table(rng, 40, false);
  LiveServer live(table, StepServerOptions{10, 8});
  auto remote = RemoteBackend::connect(live.address());
  auto s = remote->start_session({});
  const auto p = s->step();
  CHECK(std::abs(p.sum() - 1.0) <= 1e-9);
  CHECK(p.argmax() == table->start_session({})->step().argmax());
}

TEST_CASE("bind and transport failures") {
  std::mt19937_64 rng(9);
  auto table = random_table(rng, 4, false);
  LiveServer live(table);
  StepServer second(table);
  // Documentation-range address that no local interface owns.
  CHECK_THROWS_AS(second.bind("203.0.113.7", 0), TransportError);
  StepServer unbound(table);
  CHECK_THROWS_AS(unbound.start(), Error);

  RemoteOptions quick;
  quick.connect_timeout = std::chrono::milliseconds(200);
  CHECK_THROWS_AS(RemoteBackend::connect("127.0.0.1:1", quick), TransportError);
  CHECK_THROWS_AS(parse_address("localhost"), ConfigError);
  CHECK_THROWS_AS(parse_address("localhost:notaport"), ConfigError);
  CHECK(parse_address("http://example.test:8080") == std::pair<std::string, int>{"example.test", 8080});
}

}  // TEST_SUITE
