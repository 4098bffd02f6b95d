#include "tokfuse/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <numeric>

namespace tokfuse {
namespace {

using Clock = std::chrono::steady_clock;

std::vector<FusedEntry> top_entries(const ProbVector& q, const UnionVocab& u, std::size_t k) {
  std::vector<std::size_t> order(q.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) { return q[a] > q[b] || (q[a] == q[b] && a < b); });
  std::vector<FusedEntry> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back({u.surface(order[i]).bytes(), q[order[i]]});
  return out;
}

MemberTop member_top(const BackendDescriptor& m, const ProbVector& p) {
  const auto id = static_cast<TokenId>(p.argmax());
  return {m.name, m.backend->vocabulary()->surface(id).bytes(), p[id]};
}

// Per-generation state: one session per member plus a cache of continuation encodings.
struct Run {
  std::vector<std::unique_ptr<Session>> sessions;
  std::vector<std::map<std::size_t, std::vector<TokenId>>> continuations;
};

}  // namespace

GenerationAborted::GenerationAborted(const std::string& what, GenerationResult partial, bool transport)
    : Error(what), partial_(std::move(partial)), transport_(transport) {}

ProbVector fuse(std::span<const ProbVector> mapped, std::span<const double> weights) {
  if (mapped.empty()) throw ContractViolation("nothing to fuse");
  if (mapped.size() != weights.size()) throw ContractViolation("one weight per distribution required");
  const std::size_t n = mapped.front().size();
  double total = 0.0;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    if (mapped[i].size() != n) throw ContractViolation("fused distributions differ in length");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw ContractViolation("weights must be finite and non-negative");
    total += weights[i];
  }
  if (!(total > 0.0)) throw ContractViolation("weights sum to zero");

  std::vector<double> q(n, 0.0);
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    const double w = weights[i] / total;
    const auto p = mapped[i].values();
    for (std::size_t c = 0; c < n; ++c) q[c] += w * p[c];
  }
  return ProbVector::trusted(std::move(q));
}

StopDecision check_stop(std::size_t chosen, std::size_t generated_count, const UnionVocab& vocab,
                        const std::set<std::string>& stop_surfaces, std::size_t max_tokens) {
  if (stop_surfaces.contains(vocab.surface(chosen).bytes())) return {true, StopReason::kEos};
  if (generated_count >= max_tokens) return {true, StopReason::kLength};
  return {};
}

void validate(const CascadeConfig& cascade, std::size_t member_count) {
  if (cascade.gate >= member_count) throw ConfigError("cascade gate index out of range");
  if (!(cascade.threshold >= 0.0 && cascade.threshold <= 1.0)) throw ConfigError("cascade threshold must lie in [0, 1]");
  if (cascade.below == BelowPolicy::kDelegate) {
    if (cascade.delegate_target >= member_count) throw ConfigError("delegate target index out of range");
    if (cascade.delegate_target == cascade.gate) throw ConfigError("delegate target must differ from the gate");
  }
}

Ensemble::Ensemble(std::vector<BackendDescriptor> members) : members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("an ensemble needs at least one member");
  double total = 0.0;
  std::vector<const Vocabulary*> vocabs;
  for (std::size_t i = 0; i < members_.size(); ++i) {
    const auto& m = members_[i];
    if (!m.backend || !m.tokenizer) throw ConfigError("member '" + m.name + "' lacks a backend or tokenizer");
    if (!(m.weight >= 0.0) || !std::isfinite(m.weight)) throw ConfigError("member '" + m.name + "' has a negative weight");
    if (m.tokenizer->vocabulary().size() != m.backend->vocabulary()->size()) {
      throw ConfigError("member '" + m.name + "': tokenizer and backend vocabularies differ in size");
    }
    if (m.is_gate) {
      if (gate_) throw ConfigError("at most one member may be the gate");
      gate_ = i;
    }
    total += m.weight;
    vocabs.push_back(m.backend->vocabulary().get());
  }
  if (!(total > 0.0)) throw ConfigError("member weights sum to zero");
  union_ = build_union(std::span<const Vocabulary* const>(vocabs));
}

std::set<std::string> Ensemble::stop_surfaces(const EnsembleConfig& config) const {
  std::set<std::string> out(config.stop_surfaces.begin(), config.stop_surfaces.end());
  if (config.stop_on_member_control) {
    for (const auto& m : members_) {
      const auto vocab = m.backend->vocabulary();
      for (TokenId id : vocab->special_ids()) out.insert(vocab->surface(id).bytes());
    }
  }
  return out;
}

GenerationResult Ensemble::generate(std::string_view prompt, const EnsembleConfig& config) const {
  return run(prompt, config, std::nullopt);
}

GenerationResult Ensemble::generate_cascade(std::string_view prompt, const EnsembleConfig& config,
                                            const CascadeConfig& cascade) const {
  validate(cascade, members_.size());
  return run(prompt, config, cascade);
}

GenerationResult Ensemble::run(std::string_view prompt, const EnsembleConfig& config,
                               const std::optional<CascadeConfig>& cascade) const {
  validate(config.sampling);
  if (config.max_tokens == 0) throw ConfigError("max_tokens must be positive");

  const std::size_t n = members_.size();
  const auto stops = stop_surfaces(config);
  const UnionVocab& uv = union_.vocab;

  Run state;
  state.continuations.resize(n);
  std::vector<std::vector<TokenId>> prompt_ids(n);
  for (std::size_t i = 0; i < n; ++i) {
    prompt_ids[i] = members_[i].tokenizer->encode(prompt);
    state.sessions.push_back(members_[i].backend->start_session(prompt_ids[i]));
  }

  GenerationResult result;
  Rng rng(config.seed);

  // Steps the listed members, concurrently when configured. Results follow `which` order.
  auto step_members = [&](std::span<const std::size_t> which) {
    std::vector<ProbVector> out(which.size());
    if (!config.parallel || which.size() < 2) {
      for (std::size_t k = 0; k < which.size(); ++k) out[k] = state.sessions[which[k]]->step();
      return out;
    }
    std::vector<std::future<ProbVector>> pending;
    pending.reserve(which.size());
    for (std::size_t idx : which) {
      pending.push_back(std::async(std::launch::async, [&state, idx] { return state.sessions[idx]->step(); }));
    }
    std::exception_ptr failure;
    for (std::size_t k = 0; k < which.size(); ++k) {
      try {
        out[k] = pending[k].get();
      } catch (...) {
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
  };

  std::vector<std::size_t> everyone(n);
  std::iota(everyone.begin(), everyone.end(), std::size_t{0});
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = members_[i].weight;

  auto finish = [&](const Clock::time_point& loop_start) {
    result.loop_time = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - loop_start);
    result.tokens_generated = result.trace.size();
    result.ensembled_steps = static_cast<std::size_t>(
        std::count_if(result.trace.begin(), result.trace.end(), [](const StepRecord& r) { return r.ensembled; }));
    result.ensembled_fraction = result.tokens_generated == 0
                                    ? 0.0
                                    : static_cast<double>(result.ensembled_steps) / static_cast<double>(result.tokens_generated);
    result.ms_per_token = result.tokens_generated == 0
                              ? 0.0
                              : std::chrono::duration<double, std::milli>(result.loop_time).count() /
                                    static_cast<double>(result.tokens_generated);
  };

  const auto loop_start = Clock::now();
  std::size_t step = 0;
  try {
    for (step = 1;; ++step) {
      const auto step_start = Clock::now();
      StepRecord record;
      record.step = step;
      ProbVector q;

      if (!cascade) {
        const auto dists = step_members(everyone);
        std::vector<ProbVector> mapped;
        mapped.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
          record.members.push_back(member_top(members_[i], dists[i]));
          mapped.push_back(map_to_union(dists[i], union_.matrices[i]));
        }
        q = n == 1 ? std::move(mapped.front()) : fuse(mapped, weights);
        record.ensembled = n > 1;
      } else {
        const std::size_t g = cascade->gate;
        ProbVector gate_probs = state.sessions[g]->step();
        if (gate_probs.max() <= cascade->threshold) {
          record.ensembled = true;
          if (cascade->below == BelowPolicy::kDelegate) {
            const std::size_t t = cascade->delegate_target;
            const std::size_t which[] = {t};
            auto dists = step_members(which);
            record.members.push_back(member_top(members_[t], dists[0]));
            q = map_to_union(dists[0], union_.matrices[t]);
          } else {
            std::vector<std::size_t> others;
            for (std::size_t i = 0; i < n; ++i) {
              if (i != g) others.push_back(i);
            }
            auto other_dists = step_members(others);
            std::vector<ProbVector> dists(n);
            dists[g] = std::move(gate_probs);
            for (std::size_t k = 0; k < others.size(); ++k) dists[others[k]] = std::move(other_dists[k]);
            std::vector<ProbVector> mapped;
            mapped.reserve(n);
            for (std::size_t i = 0; i < n; ++i) {
              record.members.push_back(member_top(members_[i], dists[i]));
              mapped.push_back(map_to_union(dists[i], union_.matrices[i]));
            }
            q = n == 1 ? std::move(mapped.front()) : fuse(mapped, weights);
          }
        } else {
          record.members.push_back(member_top(members_[g], gate_probs));
          q = map_to_union(gate_probs, union_.matrices[g]);
        }
      }

      const std::size_t x = select_token(q, config.sampling, rng);
      const TokenSurface& chosen = uv.surface(x);
      record.chosen = chosen.bytes();
      record.fused_top = top_entries(q, uv, config.trace_top_k);

      const StopDecision decision = check_stop(x, step, uv, stops, config.max_tokens);
      auto close_record = [&] {
        record.wall = std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - step_start);
        result.trace.push_back(std::move(record));
      };
      if (decision.reason != StopReason::kEos) {
        result.text += chosen.bytes();
        try {
          for (std::size_t i = 0; i < n; ++i) {
            auto& cache = state.continuations[i];
            auto it = cache.find(x);
            if (it == cache.end()) it = cache.emplace(x, members_[i].tokenizer->encode_continuation(chosen)).first;
            state.sessions[i]->append(it->second);
          }
        } catch (...) {
          // The token was chosen; keep its record in the partial result.
          close_record();
          throw;
        }
      }
      close_record();
      if (decision.stop) {
        result.stop = decision.reason;
        break;
      }
    }
  } catch (const std::exception& e) {
    finish(loop_start);
    result.stop = StopReason::kError;
    const bool transport = dynamic_cast<const TransportError*>(&e) != nullptr;
    throw GenerationAborted(std::string("generation aborted at step ") + std::to_string(step) +
                                ": " + e.what(),
                            std::move(result), transport);
  }
  finish(loop_start);

  // Incremental re-tokenization can drift from tokenizing the whole text at once.
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<TokenId> whole;
    try {
      whole = members_[i].tokenizer->encode(std::string(prompt) + result.text);
    } catch (const std::exception&) {
      continue;
    }
    const auto& prefix = state.sessions[i]->prefix();
    if (whole != prefix) {
      result.warnings.push_back("member '" + members_[i].name +
                                "': incremental prefix differs from whole-text tokenization (" +
                                std::to_string(prefix.size()) + " vs " + std::to_string(whole.size()) + " tokens)");
    }
  }
  return result;
}

}  // namespace tokfuse
