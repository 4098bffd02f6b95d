#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tokfuse/backend.hpp"
#include "tokfuse/calibration.hpp"
#include "tokfuse/engine.hpp"
#include "tokfuse/harness.hpp"
#include "tokfuse/remote_backend.hpp"

namespace tokfuse::cli {

enum class MemberKind { kTable, kNgram, kRemote };

struct MemberSpec {
  std::string name;
  MemberKind kind = MemberKind::kTable;
  std::string source;  // table file, corpus file, or host:port
  double weight = 1.0;
  bool gate = false;
  std::string vocab;  // ngram only
  std::size_t order = 2;
  double alpha = 1.0;
  double delay_ms = 0.0;
};

struct CascadeSpec {
  bool enabled = false;
  double threshold = 0.5;
  BelowPolicy below = BelowPolicy::kEnsemble;
  std::string delegate;  // member name or index
};

/// One JSON file describing members and engine settings. Relative paths resolve against
/// `base_dir` (the config file's directory).
struct RunConfig {
  std::filesystem::path base_dir;
  std::vector<MemberSpec> members;
  SamplingPolicy sampling = Greedy{};
  std::size_t max_tokens = 256;
  std::vector<std::string> stop;
  bool stop_on_member_control = true;
  CascadeSpec cascade;
  std::uint64_t seed = 0;
  bool parallel = true;
  std::size_t warmup_tokens = kDefaultWarmupTokens;
  std::size_t trace_top_k = 5;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

/// Loads or connects every member. Remote members raise TransportError when unreachable.
std::vector<BackendDescriptor> build_members(const RunConfig& config, const RemoteOptions& remote = {});

EnsembleConfig engine_config(const RunConfig& config);
/// Cascade settings resolved against `members`, or nullopt when disabled.
std::optional<CascadeConfig> cascade_config(const RunConfig& config);

/// Multi-line listing of every effective setting, defaults included.
std::string describe(const RunConfig& config);

std::string_view to_string(MemberKind kind);

}  // namespace tokfuse::cli
