#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace tokfuse {

/// Most probable token of one member on one step, from its own (unmapped) distribution.
struct MemberTop {
  std::string name;
  std::string surface;
  double confidence = 0.0;  // max probability

  bool operator==(const MemberTop&) const = default;
};

struct FusedEntry {
  std::string surface;
  double probability = 0.0;

  bool operator==(const FusedEntry&) const = default;
};

struct StepRecord {
  std::size_t step = 0;              // 1-based
  std::vector<MemberTop> members;    // only the members invoked on this step, in member order
  std::vector<FusedEntry> fused_top; // descending probability, ties by lower union index
  std::string chosen;
  bool ensembled = false;
  std::chrono::nanoseconds wall{0};
};

enum class StopReason { kNone, kEos, kLength, kError };

std::string to_string(StopReason reason);

struct GenerationResult {
  std::string text;  // chosen surfaces, excluding a terminating stop surface
  std::vector<StepRecord> trace;
  std::size_t tokens_generated = 0;  // == trace.size(); a terminating stop token counts
  std::size_t ensembled_steps = 0;
  double ensembled_fraction = 0.0;
  std::chrono::nanoseconds loop_time{0};
  double ms_per_token = 0.0;
  StopReason stop = StopReason::kNone;
  std::vector<std::string> warnings;
};

/// One line-delimited JSON record (no trailing newline). Wall time is only written when
/// `with_timing` is set, so traces of identical runs compare byte for byte.
std::string format_trace_record(const StepRecord& record, bool with_timing = false);
/// All records, one per line.
std::string format_trace(const std::vector<StepRecord>& trace, bool with_timing = false);
void write_trace_file(const std::vector<StepRecord>& trace, const std::filesystem::path& path, bool with_timing = false);

/// Human-readable per-step table:
///   <step> | <top> (<confidence>) / <top> (<confidence>) / <chosen>
/// Confidences use three decimals; surfaces are shown verbatim except newlines, tabs and
/// other control bytes, which are escaped.
std::string render_step_table(const std::vector<StepRecord>& trace);
std::string render_step(const StepRecord& record);

}  // namespace tokfuse
