#pragma once

// Shared builders and independent oracles for the test suites. Oracles here never call
// the code they check: unions are keyed by surface bytes, ECE bins by explicit interval
// comparisons.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tokfuse/tokfuse.hpp"

namespace tokfuse::testing {

inline std::shared_ptr<const Vocabulary> make_vocab(const std::vector<std::string>& surfaces,
                                                    std::set<TokenId> special = {}) {
  std::vector<TokenSurface> s;
  for (const auto& x : surfaces) s.emplace_back(x);
  return std::make_shared<const Vocabulary>(std::move(s), std::move(special));
}

/// Random point on the simplex (normalized exponential draws).
inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double total = 0.0;
  for (auto& x : v) total += (x = e(rng) + 1e-12);
  for (auto& x : v) x /= total;
  return v;
}

/// Two vocabularies with sizes in [2, 50] sharing roughly `overlap` of the second's surfaces.
/// When `duplicates` is set, some surfaces repeat at distinct IDs within a vocabulary.
struct VocabPair {
  std::shared_ptr<const Vocabulary> a;
  std::shared_ptr<const Vocabulary> b;
};

inline VocabPair random_vocab_pair(std::mt19937_64& rng, bool duplicates = true) {
  std::uniform_int_distribution<std::size_t> size(2, 50);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t na = size(rng);
  const std::size_t nb = size(rng);
  const double overlap = unit(rng);
  int fresh = 0;
  std::vector<std::string> a;
  for (std::size_t i = 0; i < na; ++i) {
    if (duplicates && !a.empty() && unit(rng) < 0.1) {
      a.push_back(a[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)]);
    } else {
      a.push_back("t" + std::to_string(fresh++));
    }
  }
  std::vector<std::string> b;
  for (std::size_t i = 0; i < nb; ++i) {
    if (unit(rng) < overlap) {
      b.push_back(a[std::uniform_int_distribution<std::size_t>(0, a.size() - 1)(rng)]);
    } else {
      b.push_back("u" + std::to_string(fresh++));
    }
  }
  if (!duplicates) {
    // Keep surfaces unique inside b as well.
    std::set<std::string> seen;
    for (auto& s : b) {
      if (!seen.insert(s).second) s = "u" + std::to_string(fresh++), seen.insert(s);
    }
  }
  std::shuffle(b.begin(), b.end(), rng);
  return {make_vocab(a), make_vocab(b)};
}

/// Per-surface accumulation: sum of weight * p[id] over every member ID with that surface.
inline std::map<std::string, double> accumulate_by_surface(const std::vector<const Vocabulary*>& vocabs,
                                                           const std::vector<std::vector<double>>& probs,
                                                           const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  std::map<std::string, double> acc;
  for (std::size_t m = 0; m < vocabs.size(); ++m) {
    for (std::size_t id = 0; id < vocabs[m]->size(); ++id) {
      acc[vocabs[m]->surfaces()[id].bytes()] += weights[m] / total * probs[m][id];
    }
  }
  return acc;
}

/// ECE by explicit interval membership: bin b holds (b/B, (b+1)/B], bin 0 also holds 0.
inline double ece_oracle(const std::vector<PredictionRecord>& records, std::size_t bins) {
  double ece = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double lo = static_cast<double>(b) / static_cast<double>(bins);
    const double hi = static_cast<double>(b + 1) / static_cast<double>(bins);
    double conf = 0.0;
    double hits = 0.0;
    double count = 0.0;
    for (const auto& r : records) {
      const bool in = (r.confidence > lo && r.confidence <= hi) || (b == 0 && r.confidence == 0.0);
      if (!in) continue;
      count += 1.0;
      conf += r.confidence;
      hits += r.correct ? 1.0 : 0.0;
    }
    if (count > 0) ece += count / static_cast<double>(records.size()) * std::abs(hits / count - conf / count);
  }
  return ece;
}

/// Deterministic table model with unique surfaces, random rules keyed on the last token, and
/// (optionally) a control token at ID 0. Surfaces are multi-letter words so no surface is
/// a concatenation issue for the greedy tokenizer.
inline std::shared_ptr<TableBackend> random_table(std::mt19937_64& rng, std::size_t vocab_size, bool with_eos,
                                                  const std::string& prefix = "w") {
  std::vector<std::string> surfaces;
  std::set<TokenId> special;
  for (std::size_t i = 0; i < vocab_size; ++i) surfaces.push_back("<" + prefix + std::to_string(i) + ">");
  if (with_eos) {
    surfaces[0] = "</s>";
    special.insert(0);
  }
  auto vocab = make_vocab(surfaces, special);
  auto table = std::make_shared<TableBackend>(vocab, ProbVector(random_simplex(vocab_size, rng)));
  for (TokenId id = 0; id < vocab_size; ++id) {
    auto p = random_simplex(vocab_size, rng);
    if (with_eos) p[0] *= 0.05;  // keep generations from ending immediately
    double total = 0.0;
    for (double x : p) total += x;
    for (auto& x : p) x /= total;
    table->add_rule({id}, ProbVector(std::move(p)));
  }
  return table;
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("tokfuse-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace tokfuse::testing
