#include "tokfuse/harness.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include <json.hpp>

namespace tokfuse {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view scoring_name(Scoring s) { return s == Scoring::kExact ? "exact" : "contains"; }

}  // namespace

std::vector<Task> parse_tasks(std::string_view text) {
  std::vector<Task> tasks;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ParseError(lineno, "task record is not a JSON object");
    auto field = [&](const char* key, auto check, const char* what) -> const json& {
      const auto it = j.find(key);
      if (it == j.end() || !check(*it)) throw ParseError(lineno, std::string("field '") + key + "' must be " + what);
      return *it;
    };
    auto is_string = [](const json& v) { return v.is_string(); };
    auto is_string_list = [](const json& v) {
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& a) { return a.is_string(); });
    };
    Task t;
    t.id = field("id", is_string, "a string").get<std::string>();
    t.prompt = field("prompt", is_string, "a string").get<std::string>();
    t.answers = field("answers", is_string_list, "an array of strings").get<std::vector<std::string>>();
    const auto scoring = field("scoring", is_string, "\"exact\" or \"contains\"").get<std::string>();
    if (scoring == "exact") {
      t.scoring = Scoring::kExact;
    } else if (scoring == "contains") {
      t.scoring = Scoring::kContains;
    } else {
      throw ParseError(lineno, "field 'scoring' must be \"exact\" or \"contains\"");
    }
    if (t.answers.empty()) throw ParseError(lineno, "task '" + t.id + "' has no answers");
    tasks.push_back(std::move(t));
  }
  return tasks;
}

std::vector<Task> load_tasks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open task file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_tasks(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path.string());
  }
}

std::string format_task(const Task& task) {
  ordered_json j;
  j["id"] = task.id;
  j["prompt"] = task.prompt;
  j["answers"] = task.answers;
  j["scoring"] = scoring_name(task.scoring);
  return j.dump();
}

std::string format_tasks(std::span<const Task> tasks) {
  std::string out;
  for (const auto& t : tasks) {
    out += format_task(t);
    out += '\n';
  }
  return out;
}

std::string normalize_answer(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n\v\f");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n\v\f");
  std::string out(text.substr(first, last - first + 1));
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool score(std::string_view output, const Task& task) {
  const std::string out = normalize_answer(output);
  for (const auto& answer : task.answers) {
    const std::string a = normalize_answer(answer);
    if (task.scoring == Scoring::kExact ? out == a : out.find(a) != std::string::npos) return true;
  }
  return false;
}

void warmup(std::span<const BackendDescriptor> members, std::size_t n_tokens) {
  if (n_tokens == 0) return;
  auto run_one = [n_tokens](const BackendDescriptor& m) {
    const auto vocab = m.backend->vocabulary();
    auto session = m.backend->start_session({});
    for (std::size_t i = 0; i < n_tokens; ++i) {
      const ProbVector p = session->step();
      // Most probable non-control token, so the throwaway prefix keeps growing.
      std::size_t best = p.size();
      for (std::size_t id = 0; id < p.size(); ++id) {
        if (vocab->is_special(static_cast<TokenId>(id))) continue;
        if (best == p.size() || p[id] > p[best]) best = id;
      }
      const TokenId next[] = {static_cast<TokenId>(best == p.size() ? p.argmax() : best)};
      session->append(next);
    }
  };

  std::vector<std::future<void>> pending;
  for (const auto& m : members) pending.push_back(std::async(std::launch::async, run_one, std::cref(m)));
  for (std::size_t i = 0; i < pending.size(); ++i) {
    try {
      pending[i].get();
    } catch (const TransportError& e) {
      throw TransportError("warm-up of member '" + members[i].name + "' failed: " + e.what());
    } catch (const ProtocolError& e) {
      throw ProtocolError(e.code(), "warm-up of member '" + members[i].name + "' failed: " + e.what());
    }
  }
}

RunReport run_benchmark(std::span<const Task> tasks, const Ensemble& ensemble, const EnsembleConfig& config,
                        const std::optional<CascadeConfig>& cascade) {
  if (tasks.empty()) throw ConfigError("benchmark needs at least one task");

  RunReport report;
  double total_ms = 0.0;
  std::size_t correct = 0;
  for (const auto& task : tasks) {
    TaskRecord rec;
    rec.id = task.id;
    GenerationResult result;
    try {
      result = cascade ? ensemble.generate_cascade(task.prompt, config, *cascade) : ensemble.generate(task.prompt, config);
    } catch (const GenerationAborted& e) {
      result = e.partial();
      rec.error = e.what();
    } catch (const ContractViolation& e) {
      rec.error = e.what();
    }
    rec.output = result.text;
    rec.tokens = result.tokens_generated;
    rec.ensembled_steps = result.ensembled_steps;
    rec.loop_ms = std::chrono::duration<double, std::milli>(result.loop_time).count();
    rec.correct = rec.error.empty() && score(result.text, task);

    correct += rec.correct ? 1 : 0;
    total_ms += rec.loop_ms;
    report.total_tokens += rec.tokens;
    report.ensembled_steps += rec.ensembled_steps;
    report.tasks.push_back(std::move(rec));
  }
  report.accuracy = static_cast<double>(correct) / static_cast<double>(tasks.size());
  if (report.total_tokens > 0) {
    const double tokens = static_cast<double>(report.total_tokens);
    report.ms_per_token = total_ms / tokens;
    report.ensembled_fraction = static_cast<double>(report.ensembled_steps) / tokens;
  }
  return report;
}

std::string format_run_report(const RunReport& report) {
  ordered_json j;
  j["accuracy"] = report.accuracy;
  j["ms_per_token"] = report.ms_per_token;
  j["ensembled_fraction"] = report.ensembled_fraction;
  j["total_tokens"] = report.total_tokens;
  j["ensembled_steps"] = report.ensembled_steps;
  ordered_json tasks = ordered_json::array();
  for (const auto& t : report.tasks) {
    ordered_json r;
    r["id"] = t.id;
    r["output"] = t.output;
    r["correct"] = t.correct;
    r["tokens"] = t.tokens;
    r["ensembled_steps"] = t.ensembled_steps;
    r["loop_ms"] = t.loop_ms;
    if (!t.error.empty()) r["error"] = t.error;
    tasks.push_back(std::move(r));
  }
  j["tasks"] = std::move(tasks);
  return j.dump(2, ' ', false, ordered_json::error_handler_t::replace) + "\n";
}

void write_run_report(const RunReport& report, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot write report");
  out << format_run_report(report);
}

}  // namespace tokfuse
