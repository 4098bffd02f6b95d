#include "tokfuse/trace.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "tokfuse/errors.hpp"

namespace tokfuse {
namespace {

using nlohmann::ordered_json;

std::string printable(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    switch (c) {
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default:
        if (c < 0x20 || c == 0x7f) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\x%02x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  return out;
}

std::string three_decimals(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::kNone: return "none";
    case StopReason::kEos: return "eos";
    case StopReason::kLength: return "length";
    case StopReason::kError: return "error";
  }
  return "unknown";
}

std::string format_trace_record(const StepRecord& record, bool with_timing) {
  ordered_json j;
  j["step"] = record.step;
  ordered_json members = ordered_json::array();
  for (const auto& m : record.members) {
    members.push_back(ordered_json{{"name", m.name}, {"top", m.surface}, {"confidence", m.confidence}});
  }
  j["members"] = std::move(members);
  ordered_json fused = ordered_json::array();
  for (const auto& f : record.fused_top) fused.push_back(ordered_json{{"surface", f.surface}, {"p", f.probability}});
  j["fused_top"] = std::move(fused);
  j["chosen"] = record.chosen;
  j["ensembled"] = record.ensembled;
  if (with_timing) j["wall_ms"] = std::chrono::duration<double, std::milli>(record.wall).count();
  // Surfaces are raw bytes; byte sequences that are not UTF-8 are written with U+FFFD.
  return j.dump(-1, ' ', false, ordered_json::error_handler_t::replace);
}

std::string format_trace(const std::vector<StepRecord>& trace, bool with_timing) {
  std::string out;
  for (const auto& r : trace) {
    out += format_trace_record(r, with_timing);
    out += '\n';
  }
  return out;
}

void write_trace_file(const std::vector<StepRecord>& trace, const std::filesystem::path& path, bool with_timing) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot write trace file");
  out << format_trace(trace, with_timing);
}

std::string render_step(const StepRecord& record) {
  std::string line = std::to_string(record.step) + " |";
  for (const auto& m : record.members) {
    line += " " + printable(m.surface) + " (" + three_decimals(m.confidence) + ") /";
  }
  line += " " + printable(record.chosen);
  return line;
}

std::string render_step_table(const std::vector<StepRecord>& trace) {
  std::string out;
  for (const auto& r : trace) {
    out += render_step(r);
    out += '\n';
  }
  return out;
}

}  // namespace tokfuse
