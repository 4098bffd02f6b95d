#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tokfuse/engine.hpp"

namespace tokfuse {

enum class Scoring { kExact, kContains };

struct Task {
  std::string id;
  std::string prompt;
  std::vector<std::string> answers;  // non-empty
  Scoring scoring = Scoring::kExact;

  bool operator==(const Task&) const = default;
};

/// Line-delimited task records:
///   {"id": "...", "prompt": "...", "answers": ["..."], "scoring": "exact"|"contains"}
/// Blank lines are skipped. ParseError carries the 1-based line number.
std::vector<Task> parse_tasks(std::string_view text);
std::vector<Task> load_tasks(const std::filesystem::path& path);
/// Canonical single-line form (keys in the order above).
std::string format_task(const Task& task);
std::string format_tasks(std::span<const Task> tasks);

/// Trim ASCII whitespace and lowercase ASCII letters. Other bytes are left alone.
std::string normalize_answer(std::string_view text);

/// exact: normalized output equals a normalized answer.
/// contains: some normalized answer is a substring of the normalized output.
bool score(std::string_view output, const Task& task);

inline constexpr std::size_t kDefaultWarmupTokens = 1024;

/// Runs `n_tokens` greedy steps per member on a throwaway session (members in parallel).
/// Failures are rethrown naming the member.
void warmup(std::span<const BackendDescriptor> members, std::size_t n_tokens = kDefaultWarmupTokens);

struct TaskRecord {
  std::string id;
  std::string output;
  bool correct = false;
  std::size_t tokens = 0;
  std::size_t ensembled_steps = 0;
  double loop_ms = 0.0;
  std::string error;  // empty on success
};

struct RunReport {
  double accuracy = 0.0;
  double ms_per_token = 0.0;        // total step-loop wall time / total tokens
  double ensembled_fraction = 0.0;  // total ensembled steps / total tokens
  std::size_t total_tokens = 0;
  std::size_t ensembled_steps = 0;
  std::vector<TaskRecord> tasks;
};

/// Runs every task in order. A task whose generation fails is recorded with its error and
/// scored incorrect; the run continues. Throws ConfigError for an empty task list.
RunReport run_benchmark(std::span<const Task> tasks, const Ensemble& ensemble, const EnsembleConfig& config,
                        const std::optional<CascadeConfig>& cascade = std::nullopt);

/// JSON object with the report fields and per-task records.
std::string format_run_report(const RunReport& report);
void write_run_report(const RunReport& report, const std::filesystem::path& path);

}  // namespace tokfuse
