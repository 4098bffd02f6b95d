#include <doctest.h>

#include <random>

#include "support/fixtures.hpp"
#include "support/scenarios.hpp"

using namespace tokfuse;
using namespace tokfuse::testing;
using namespace std::chrono_literals;

namespace {

std::vector<double> values(const ProbVector& p) { return {p.values().begin(), p.values().end()}; }

// Throws TransportError on the `fail_at`-th step of any session.
class FlakyBackend final : public Backend {
 public:
  FlakyBackend(std::shared_ptr<const Backend> inner, std::size_t fail_at) : inner_(std::move(inner)), fail_at_(fail_at) {}
  std::shared_ptr<const Vocabulary> vocabulary() const override { return inner_->vocabulary(); }
  std::unique_ptr<Session> start_session(std::span<const TokenId> ids) const override {
    struct S final : Session {
      std::unique_ptr<Session> inner;
      std::size_t fail_at;
      std::size_t steps = 0;
      ProbVector step() override {
        if (++steps == fail_at) throw TransportError("peer went away");
        return inner->step();
      }
      void append(std::span<const TokenId> ids) override { inner->append(ids); }
      const std::vector<TokenId>& prefix() const override { return inner->prefix(); }
    };
    auto s = std::make_unique<S>();
    s->inner = inner_->start_session(ids);
    s->fail_at = fail_at_;
    return s;
  }

 private:
  std::shared_ptr<const Backend> inner_;
  std::size_t fail_at_;
};

std::string text_of(const Vocabulary& v, const std::vector<TokenId>& ids) {
  std::string out;
  for (TokenId id : ids)
    if (!v.is_special(id)) out += v.surface(id).bytes();
  return out;
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("fuse: hand arithmetic") {
  const std::vector<ProbVector> mapped = {ProbVector({0.5, 0.3, 0.2, 0.0}), ProbVector({0.0, 0.6, 0.3, 0.1})};
  const std::vector<double> equal = {1.0, 1.0};
  const auto q = values(fuse(mapped, equal));
  const std::vector<double> expect = {0.25, 0.45, 0.25, 0.05};
  for (std::size_t i = 0; i < 4; ++i) CHECK(q[i] == doctest::Approx(expect[i]).epsilon(1e-15));

  const std::vector<double> only_a = {1.0, 0.0};
  CHECK(fuse(mapped, only_a) == mapped[0]);

  const std::vector<double> two_one = {2.0, 1.0};
  const auto w = values(fuse(mapped, two_one));
  const std::vector<double> expect_w = {1.0 / 3.0, 0.4, 7.0 / 30.0, 1.0 / 30.0};
  for (std::size_t i = 0; i < 4; ++i) CHECK(w[i] == doctest::Approx(expect_w[i]).epsilon(1e-15));

  const std::vector<double> zeros = {0.0, 0.0};
  CHECK_THROWS_AS(fuse(mapped, zeros), ContractViolation);
  const std::vector<double> one = {1.0};
  CHECK_THROWS_AS(fuse(mapped, one), ContractViolation);
  const std::vector<ProbVector> ragged = {ProbVector({1.0}), ProbVector({0.5, 0.5})};
  CHECK_THROWS_AS(fuse(ragged, equal), ContractViolation);
}

TEST_CASE("property: fuse closes over the simplex and is weight-scale invariant") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> wdist(0.01, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    const std::size_t len = std::uniform_int_distribution<std::size_t>(2, 60)(rng);
    std::vector<ProbVector> mapped;
    std::vector<double> w;
    for (std::size_t i = 0; i < n; ++i) {
      mapped.emplace_back(random_simplex(len, rng));
      w.push_back(wdist(rng));
    }
    const auto q = fuse(mapped, w);
    CHECK(std::abs(q.sum() - 1.0) <= 1e-9);
    CHECK_NOTHROW(check_simplex(q.values(), 1e-9));

    std::vector<double> w4 = w, wc = w;
    const double c = wdist(rng);
    for (auto& x : w4) x *= 4.0;
    for (auto& x : wc) x *= c;
    CHECK(fuse(mapped, w4) == q);
    const auto qc = fuse(mapped, wc);
    for (std::size_t i = 0; i < len; ++i) CHECK(std::abs(qc[i] - q[i]) <= 1e-12);
    CHECK(qc.argmax() == q.argmax());
  }
}

TEST_CASE("check_stop") {
  auto v = make_vocab({"a", "</s>"}, {1});
  const Vocabulary* vs[] = {v.get()};
  auto u = build_union(std::span<const Vocabulary* const>(vs));
  const std::set<std::string> stops = {"</s>"};
  CHECK(check_stop(1, 1, u.vocab, stops, 10).reason == StopReason::kEos);
  CHECK(check_stop(0, 10, u.vocab, stops, 10).reason == StopReason::kLength);
  CHECK_FALSE(check_stop(0, 3, u.vocab, stops, 10).stop);
}

TEST_CASE("ensemble construction errors") {
  std::mt19937_64 rng(1);
  auto t = random_table(rng, 5, true);
  CHECK_THROWS_AS(Ensemble(std::vector<BackendDescriptor>{}), ConfigError);
  auto a = describe("a", t);
  auto b = describe("b", t);
  a.weight = 0.0;
  b.weight = 0.0;
  CHECK_THROWS_AS(Ensemble({a, b}), ConfigError);
  a.weight = -1.0;
  b.weight = 1.0;
  CHECK_THROWS_AS(Ensemble({a, b}), ConfigError);
  a.weight = 1.0;
  a.is_gate = b.is_gate = true;
  CHECK_THROWS_AS(Ensemble({a, b}), ConfigError);
  b.is_gate = false;
  Ensemble ok({a, b});
  CHECK(ok.gate() == 0u);
  CHECK_THROWS_AS(ok.generate_cascade("", {}, CascadeConfig{5, 0.5}), ConfigError);
  CHECK_THROWS_AS(ok.generate_cascade("", {}, CascadeConfig{0, 1.5}), ConfigError);
  CHECK_THROWS_AS(ok.generate_cascade("", {}, CascadeConfig{0, 0.5, BelowPolicy::kDelegate, 0}), ConfigError);
  EnsembleConfig zero;
  zero.max_tokens = 0;
  CHECK_THROWS_AS(ok.generate("", zero), ConfigError);
}

TEST_CASE("n=1 ensemble equals native greedy decode; self-ensemble is idempotent") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    auto table = random_table(rng, 16, true);
    const auto& v = *table->vocabulary();
    EnsembleConfig cfg;
    cfg.max_tokens = 30;
    const auto native = native_greedy_decode(*table, {}, cfg.max_tokens);

    Ensemble solo({describe("m", table)});
    const auto r1 = solo.generate("", cfg);
    CHECK(r1.text == text_of(v, native));
    CHECK(r1.tokens_generated == native.size());
    CHECK(r1.ensembled_fraction == 0.0);

    Ensemble twice({describe("m", table), describe("m2", table)});
    const auto r2 = twice.generate("", cfg);
    CHECK(r2.text == r1.text);
    REQUIRE(r2.trace.size() == r1.trace.size());
    for (std::size_t i = 0; i < r1.trace.size(); ++i) {
      CHECK(r2.trace[i].chosen == r1.trace[i].chosen);
      CHECK(r2.trace[i].fused_top == r1.trace[i].fused_top);
    }
    CHECK(r2.ensembled_fraction == 1.0);
  }
}

TEST_CASE("confident member outvotes an unsure wrong one") {
  auto sc = odd_word_out_scenario();
  Ensemble ens({describe("A", sc.a), describe("B", sc.b)});
  const auto r = ens.generate("", {});
  CHECK(r.text == sc.expected_text);
  CHECK(r.stop == StopReason::kEos);
  REQUIRE(!r.trace.empty());
  CHECK(r.trace[0].members[0].surface == "ste");
  CHECK(r.trace[0].members[0].confidence == doctest::Approx(0.419));
  CHECK(r.trace[0].members[1].surface == "The");
  CHECK(r.trace[0].chosen == "The");
  CHECK(render_step(r.trace[0]) == sc.expected_first_step);
  CHECK(r.trace.back().chosen == "<|end|>");
  // Stop token is generated but not emitted.
  std::string concat;
  for (std::size_t i = 0; i + 1 < r.trace.size(); ++i) concat += r.trace[i].chosen;
  CHECK(concat == r.text);
  CHECK(r.warnings.empty());
}

TEST_CASE("cascade extremes and alternating gate") {
  auto cyc = cascade_cycle({0, 2});
  auto gate = describe("gate", cyc.gate);
  auto helper = describe("helper", cyc.helper);
  Ensemble full({gate, helper});
  Ensemble gate_only({gate});
  EnsembleConfig cfg;
  cfg.max_tokens = 4;

  const auto alt = full.generate_cascade("", cfg, CascadeConfig{0, 0.5});
  REQUIRE(alt.trace.size() == 4);
  CHECK(alt.ensembled_fraction == 0.5);
  CHECK_FALSE(alt.trace[0].ensembled);
  CHECK(alt.trace[1].ensembled);
  CHECK_FALSE(alt.trace[2].ensembled);
  CHECK(alt.trace[3].ensembled);
  CHECK(alt.trace[1].members.size() == 2);
  CHECK(alt.trace[2].members.size() == 1);
  CHECK(alt.text == "<t0><t1><t2><t3>");

  cfg.max_tokens = 40;
  const auto t0 = full.generate_cascade("", cfg, CascadeConfig{0, 0.0});
  CHECK(t0.ensembled_fraction == 0.0);
  CHECK(format_trace(t0.trace) == format_trace(gate_only.generate("", cfg).trace));

  const auto t1 = full.generate_cascade("", cfg, CascadeConfig{0, 1.0});
  CHECK(t1.ensembled_fraction == 1.0);
  CHECK(format_trace(t1.trace) == format_trace(full.generate("", cfg).trace));
}

TEST_CASE("threshold comparison fires at equality") {
  auto cyc = cascade_cycle({0});
  Ensemble ens({describe("gate", cyc.gate), describe("helper", cyc.helper)});
  EnsembleConfig cfg;
  cfg.max_tokens = 2;
  // Step 2 gate confidence is exactly 0.3.
  CHECK(ens.generate_cascade("", cfg, CascadeConfig{0, 0.3}).trace[1].ensembled);
  CHECK_FALSE(ens.generate_cascade("", cfg, CascadeConfig{0, 0.29}).trace[1].ensembled);
}

TEST_CASE("delegate policy below threshold uses the target alone") {
  std::mt19937_64 rng(77);
  auto small = random_table(rng, 12, true, "w");
  auto large = random_table(rng, 12, true, "w");
  Ensemble ens({describe("small", small), describe("large", large)});
  Ensemble large_only({describe("large", large)});
  EnsembleConfig cfg;
  cfg.max_tokens = 25;
  const auto delegated = ens.generate_cascade("", cfg, CascadeConfig{0, 1.0, BelowPolicy::kDelegate, 1});
  const auto reference = large_only.generate("", cfg);
  CHECK(delegated.text == reference.text);
  CHECK(delegated.ensembled_fraction == 1.0);
  for (const auto& r : delegated.trace) {
    REQUIRE(r.members.size() == 1);
    CHECK(r.members[0].name == "large");
  }
}

TEST_CASE("concurrent and sequential stepping give identical traces") {
  std::mt19937_64 rng(31);
  auto a = random_table(rng, 20, true, "x");
  auto b = random_table(rng, 20, true, "x");
  auto c = random_table(rng, 20, true, "x");
  Ensemble ens({describe("a", a), describe("b", b), describe("c", c)});
  EnsembleConfig cfg;
  cfg.max_tokens = 40;
  cfg.sampling = Temperature{0.9};
  cfg.seed = 5;
  cfg.parallel = true;
  const auto par = format_trace(ens.generate("", cfg).trace);
  cfg.parallel = false;
  const auto seq = format_trace(ens.generate("", cfg).trace);
  CHECK(par == seq);
  cfg.seed = 6;
  CHECK(format_trace(ens.generate("", cfg).trace) != seq);
}

TEST_CASE("prompt is tokenized per member and skipped members still receive appends") {
  // Helper is first consulted after <t6>; without the appends it would answer from its fallback.
  auto cyc = cascade_cycle({6});
  Ensemble ens({describe("gate", cyc.gate), describe("helper", cyc.helper)});
  EnsembleConfig cfg;
  cfg.max_tokens = 4;
  const auto r = ens.generate_cascade("<t4>", cfg, CascadeConfig{0, 0.5});
  CHECK(r.text == "<t5><t6><t7><t8>");
  REQUIRE(r.trace.size() == 4);
  CHECK(r.trace[2].ensembled);
  CHECK(r.trace[2].members[1].surface == "<t7>");
}

TEST_CASE("transport failure aborts with a partial trace") {
  std::mt19937_64 rng(8);
  auto t = random_table(rng, 10, false);
  auto flaky = std::make_shared<FlakyBackend>(t, 4);
  Ensemble ens({describe("ok", t), describe("flaky", flaky)});
  EnsembleConfig cfg;
  cfg.max_tokens = 10;
  try {
    ens.generate("", cfg);
    FAIL("expected GenerationAborted");
  } catch (const GenerationAborted& e) {
    CHECK(e.transport());
    CHECK(e.partial().trace.size() == 3);
    CHECK(e.partial().stop == StopReason::kError);
  }
}

TEST_CASE("a chosen surface another member cannot spell aborts the generation") {
  auto va = make_vocab({"x", "y"});
  auto vb = make_vocab({"x"});
  auto a = describe("A", std::make_shared<TableBackend>(va, ProbVector({0.0, 1.0})), 2.0);
  auto b = describe("B", std::make_shared<TableBackend>(vb, ProbVector({1.0})));
  Ensemble ens({a, b});
  try {
    ens.generate("", {});
    FAIL("expected GenerationAborted");
  } catch (const GenerationAborted& e) {
    CHECK_FALSE(e.transport());
    REQUIRE(e.partial().trace.size() == 1);
    CHECK(e.partial().trace[0].chosen == "y");
  }
}

TEST_CASE("incremental re-tokenization drift is reported") {
  auto va = make_vocab({"a", "b"});
  auto vb = make_vocab({"a", "b", "ab"});
  auto ta = std::make_shared<TableBackend>(va, ProbVector({1.0, 0.0}));
  ta->add_rule({0}, ProbVector({0.0, 1.0}));
  auto tb = std::make_shared<TableBackend>(vb, ProbVector({1.0, 0.0, 0.0}));
  tb->add_rule({0}, ProbVector({0.0, 1.0, 0.0}));
  Ensemble ens({describe("A", ta), describe("B", tb)});
  EnsembleConfig cfg;
  cfg.max_tokens = 2;
  const auto r = ens.generate("", cfg);
  CHECK(r.text == "ab");
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("'B'") != std::string::npos);
}

TEST_CASE("extra stop surfaces and disabling member control stops") {
  auto cyc = cascade_cycle({});
  Ensemble ens({describe("gate", cyc.gate)});
  EnsembleConfig cfg;
  cfg.max_tokens = 20;
  cfg.stop_surfaces = {"<t3>"};
  const auto r = ens.generate("", cfg);
  CHECK(r.text == "<t0><t1><t2>");
  CHECK(r.stop == StopReason::kEos);
  CHECK(r.tokens_generated == 4);

  auto sc = odd_word_out_scenario();
  Ensemble two({describe("A", sc.a), describe("B", sc.b)});
  EnsembleConfig no_stop;
  no_stop.max_tokens = 12;
  no_stop.stop_on_member_control = false;
  CHECK(two.stop_surfaces(no_stop).empty());
  EnsembleConfig def;
  CHECK(two.stop_surfaces(def) == std::set<std::string>{"</s>", "<|end|>"});
}

TEST_CASE("step wall time follows the slowest invoked member") {
  auto cyc = cascade_cycle({0});
  auto gate = std::make_shared<DelayBackend>(cyc.gate, 5ms);
  auto helper = std::make_shared<DelayBackend>(cyc.helper, 20ms);
  Ensemble ens({describe("gate", gate), describe("helper", helper)});
  EnsembleConfig cfg;
  cfg.max_tokens = 3;
  const auto r = ens.generate_cascade("", cfg, CascadeConfig{0, 0.5});
  REQUIRE(r.trace.size() == 3);
  CHECK_FALSE(r.trace[0].ensembled);
  CHECK(r.trace[0].wall >= 5ms);
  CHECK(r.trace[0].wall < 20ms);
  CHECK(r.trace[1].ensembled);
  CHECK(r.trace[1].wall >= 20ms);

  const auto all = ens.generate("", cfg);
  for (const auto& s : all.trace) {
    CHECK(s.wall >= 20ms);
    CHECK(s.wall < 30ms);
  }
}

}  // TEST_SUITE
