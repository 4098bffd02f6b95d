#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <string>
#include <vector>

#include "tokfuse/tokfuse.hpp"

namespace {

using namespace tokfuse;

std::shared_ptr<const Vocabulary> word_vocab(std::size_t n, std::size_t offset) {
  std::vector<TokenSurface> s;
  s.emplace_back("</s>");
  for (std::size_t i = 1; i < n; ++i) s.emplace_back("<w" + std::to_string(i + offset) + ">");
  return std::make_shared<const Vocabulary>(std::move(s), std::set<TokenId>{0});
}

ProbVector random_probs(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> p(n);
  double total = 0.0;
  for (auto& x : p) total += (x = e(rng));
  for (auto& x : p) x /= total;
  return ProbVector(std::move(p));
}

// Two vocabularies of size n overlapping on half their surfaces.
struct Pair {
  std::shared_ptr<const Vocabulary> a;
  std::shared_ptr<const Vocabulary> b;
  UnionBuild u;
};

Pair make_pair(std::size_t n) {
  Pair p{word_vocab(n, 0), word_vocab(n, n / 2), {}};
  const Vocabulary* vs[] = {p.a.get(), p.b.get()};
  p.u = build_union(std::span<const Vocabulary* const>(vs));
  return p;
}

void BM_BuildUnion(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  auto a = word_vocab(n, 0);
  auto b = word_vocab(n, n / 2);
  const Vocabulary* vs[] = {a.get(), b.get()};
  for (auto _ : state) benchmark::DoNotOptimize(build_union(std::span<const Vocabulary* const>(vs)));
}
BENCHMARK(BM_BuildUnion)->Arg(1 << 10)->Arg(1 << 15);

void BM_MapToUnion(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto pair = make_pair(n);
  std::mt19937_64 rng(1);
  const auto p = random_probs(n, rng);
  for (auto _ : state) benchmark::DoNotOptimize(map_to_union(p, pair.u.matrices[1]));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_MapToUnion)->Arg(1 << 10)->Arg(1 << 15)->Arg(1 << 17);

void BM_Fuse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  const std::vector<ProbVector> mapped = {random_probs(n, rng), random_probs(n, rng), random_probs(n, rng)};
  const std::vector<double> w = {1.0, 2.0, 0.5};
  for (auto _ : state) benchmark::DoNotOptimize(fuse(mapped, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_Fuse)->Arg(1 << 10)->Arg(1 << 15)->Arg(1 << 17);

void BM_SelectToken(benchmark::State& state) {
  std::mt19937_64 gen(3);
  const auto q = random_probs(1 << 15, gen);
  const SamplingPolicy policies[] = {Greedy{}, Temperature{0.7}, TopP{0.9}};
  const auto& policy = policies[state.range(0)];
  state.SetLabel(describe(policy));
  Rng rng(4);
  for (auto _ : state) benchmark::DoNotOptimize(select_token(q, policy, rng));
}
BENCHMARK(BM_SelectToken)->DenseRange(0, 2);

void BM_TokenizerEncode(benchmark::State& state) {
  const auto vocab = word_vocab(1 << 12, 0);
  const GreedyTokenizer tok(vocab);
  std::string text;
  for (int i = 1; i < 400; ++i) text += "<w" + std::to_string((i * 37) % 4000 + 1) + ">";
  for (auto _ : state) benchmark::DoNotOptimize(tok.encode(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_TokenizerEncode);

void BM_GenerationStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(5);
  auto ta = std::make_shared<TableBackend>(word_vocab(n, 0), random_probs(n, rng));
  auto tb = std::make_shared<TableBackend>(word_vocab(n, 0), random_probs(n, rng));
  const Ensemble ens({describe("a", ta), describe("b", tb)});
  EnsembleConfig cfg;
  cfg.max_tokens = 32;
  cfg.parallel = false;
  std::size_t tokens = 0;
  for (auto _ : state) tokens += ens.generate("", cfg).tokens_generated;
  state.SetItemsProcessed(static_cast<std::int64_t>(tokens));
}
BENCHMARK(BM_GenerationStep)->Arg(1 << 10)->Arg(1 << 14);

}  // namespace

BENCHMARK_MAIN();
