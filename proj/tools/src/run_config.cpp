#include "tokfuse/cli/run_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tokfuse/delay_backend.hpp"
#include "tokfuse/ngram_backend.hpp"
#include "tokfuse/table_backend.hpp"
#include "tokfuse/vocab_file.hpp"

namespace tokfuse::cli {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get(const json& obj, const char* key, T fallback, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
      if (!it->is_number_unsigned()) throw ConfigError(where + ": '" + key + "' must be a non-negative integer");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError(where + ": '" + key + "' must be true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError(where + ": '" + key + "' must be a string");
    }
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  }
}

MemberSpec parse_member(const json& m, std::size_t index) {
  const std::string where = "members[" + std::to_string(index) + "]";
  if (!m.is_object()) throw ConfigError(where + " must be an object");
  reject_unknown(m, {"name", "kind", "source", "weight", "gate", "vocab", "order", "alpha", "delay_ms"}, where);
  MemberSpec spec;
  const std::string kind = get<std::string>(m, "kind", "table", where);
  if (kind == "table") {
    spec.kind = MemberKind::kTable;
  } else if (kind == "ngram") {
    spec.kind = MemberKind::kNgram;
  } else if (kind == "remote") {
    spec.kind = MemberKind::kRemote;
  } else {
    throw ConfigError(where + ": kind must be table, ngram or remote");
  }
  spec.source = get<std::string>(m, "source", "", where);
  if (spec.source.empty()) throw ConfigError(where + ": 'source' is required");
  spec.name = get<std::string>(m, "name", "m" + std::to_string(index), where);
  spec.weight = get<double>(m, "weight", 1.0, where);
  if (!(spec.weight >= 0.0)) throw ConfigError(where + ": weight must be non-negative");
  spec.gate = get<bool>(m, "gate", false, where);
  spec.delay_ms = get<double>(m, "delay_ms", 0.0, where);
  if (!(spec.delay_ms >= 0.0)) throw ConfigError(where + ": delay_ms must be non-negative");
  if (spec.kind == MemberKind::kNgram) {
    spec.vocab = get<std::string>(m, "vocab", "", where);
    if (spec.vocab.empty()) throw ConfigError(where + ": ngram members need 'vocab'");
    spec.order = get<std::size_t>(m, "order", 2, where);
    spec.alpha = get<double>(m, "alpha", 1.0, where);
  } else if (m.contains("vocab") || m.contains("order") || m.contains("alpha")) {
    throw ConfigError(where + ": vocab/order/alpha only apply to ngram members");
  }
  return spec;
}

SamplingPolicy parse_sampling(const json& s) {
  const std::string where = "sampling";
  if (s.is_string()) {
    if (s == "greedy") return Greedy{};
    throw ConfigError("sampling: a bare string must be \"greedy\"");
  }
  if (!s.is_object()) throw ConfigError("sampling must be an object or \"greedy\"");
  reject_unknown(s, {"policy", "temperature", "p"}, where);
  const std::string policy = get<std::string>(s, "policy", "greedy", where);
  SamplingPolicy out;
  if (policy == "greedy") {
    out = Greedy{};
  } else if (policy == "temperature") {
    out = Temperature{get<double>(s, "temperature", 1.0, where)};
  } else if (policy == "top_p") {
    out = TopP{get<double>(s, "p", 1.0, where)};
  } else {
    throw ConfigError("sampling: policy must be greedy, temperature or top_p");
  }
  validate(out);
  return out;
}

std::filesystem::path resolve(const RunConfig& config, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : config.base_dir / path;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string() + ": cannot read file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string_view to_string(MemberKind kind) {
  switch (kind) {
    case MemberKind::kTable: return "table";
    case MemberKind::kNgram: return "ngram";
    case MemberKind::kRemote: return "remote";
  }
  return "?";
}

RunConfig parse_run_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  const json doc = json::parse(json_text, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ConfigError("config is not a JSON object");
  reject_unknown(doc, {"members", "sampling", "max_tokens", "stop", "stop_on_member_control", "cascade", "seed",
                       "parallel", "warmup_tokens", "trace_top_k"},
                 "config");
  RunConfig config;
  config.base_dir = base_dir;

  const auto members = doc.find("members");
  if (members == doc.end() || !members->is_array() || members->empty()) {
    throw ConfigError("config: 'members' must be a non-empty array");
  }
  for (std::size_t i = 0; i < members->size(); ++i) config.members.push_back(parse_member((*members)[i], i));

  if (const auto s = doc.find("sampling"); s != doc.end()) config.sampling = parse_sampling(*s);
  config.max_tokens = get<std::size_t>(doc, "max_tokens", config.max_tokens, "config");
  if (config.max_tokens == 0) throw ConfigError("config: max_tokens must be positive");
  if (const auto s = doc.find("stop"); s != doc.end()) {
    if (!s->is_array() || !std::all_of(s->begin(), s->end(), [](const json& v) { return v.is_string() && !v.get<std::string>().empty(); })) {
      throw ConfigError("config: 'stop' must be an array of non-empty strings");
    }
    config.stop = s->get<std::vector<std::string>>();
  }
  config.stop_on_member_control = get<bool>(doc, "stop_on_member_control", true, "config");
  config.seed = get<std::uint64_t>(doc, "seed", 0, "config");
  config.parallel = get<bool>(doc, "parallel", true, "config");
  config.warmup_tokens = get<std::size_t>(doc, "warmup_tokens", config.warmup_tokens, "config");
  config.trace_top_k = get<std::size_t>(doc, "trace_top_k", config.trace_top_k, "config");

  if (const auto c = doc.find("cascade"); c != doc.end()) {
    if (!c->is_object()) throw ConfigError("config: 'cascade' must be an object");
    reject_unknown(*c, {"enabled", "threshold", "below_policy", "delegate"}, "cascade");
    config.cascade.enabled = get<bool>(*c, "enabled", false, "cascade");
    config.cascade.threshold = get<double>(*c, "threshold", 0.5, "cascade");
    const std::string below = get<std::string>(*c, "below_policy", "ensemble", "cascade");
    if (below == "ensemble") {
      config.cascade.below = BelowPolicy::kEnsemble;
    } else if (below == "delegate") {
      config.cascade.below = BelowPolicy::kDelegate;
    } else {
      throw ConfigError("cascade: below_policy must be ensemble or delegate");
    }
    if (const auto d = c->find("delegate"); d != c->end()) {
      if (d->is_string()) {
        config.cascade.delegate = d->get<std::string>();
      } else if (d->is_number_unsigned()) {
        config.cascade.delegate = std::to_string(d->get<std::size_t>());
      } else {
        throw ConfigError("cascade: delegate must be a member name or index");
      }
    }
  }

  std::size_t gates = 0;
  double total = 0.0;
  for (const auto& m : config.members) {
    gates += m.gate ? 1 : 0;
    total += m.weight;
  }
  if (!(total > 0.0)) throw ConfigError("config: member weights sum to zero");
  if (gates > 1) throw ConfigError("config: at most one member may be the gate");
  if (config.cascade.enabled) {
    if (gates != 1) throw ConfigError("config: cascade needs exactly one gate member");
    if (config.cascade.below == BelowPolicy::kDelegate && config.cascade.delegate.empty()) {
      throw ConfigError("cascade: delegate policy needs a 'delegate' member");
    }
    validate(*cascade_config(config), config.members.size());
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  try {
    return parse_run_config(text, path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::vector<BackendDescriptor> build_members(const RunConfig& config, const RemoteOptions& remote) {
  std::vector<BackendDescriptor> out;
  for (const auto& m : config.members) {
    std::shared_ptr<const Backend> backend;
    switch (m.kind) {
      case MemberKind::kTable:
        backend = load_table_file(resolve(config, m.source));
        break;
      case MemberKind::kNgram: {
        auto vocab = std::make_shared<const Vocabulary>(load_vocab_file(resolve(config, m.vocab)));
        const auto corpus = resolve(config, m.source);
        try {
          backend = fit_ngram(read_file(corpus), m.order, m.alpha, std::move(vocab));
        } catch (const ContractViolation& e) {
          throw ConfigError(corpus.string() + ": " + e.what());
        }
        break;
      }
      case MemberKind::kRemote:
        backend = RemoteBackend::connect(m.source, remote);
        break;
    }
    if (m.delay_ms > 0.0) {
      backend = std::make_shared<DelayBackend>(
          std::move(backend), std::chrono::microseconds(static_cast<std::int64_t>(m.delay_ms * 1000.0)));
    }
    auto d = tokfuse::describe(m.name, std::move(backend), m.weight);
    d.is_gate = m.gate;
    out.push_back(std::move(d));
  }
  return out;
}

EnsembleConfig engine_config(const RunConfig& config) {
  EnsembleConfig e;
  e.sampling = config.sampling;
  e.max_tokens = config.max_tokens;
  e.stop_surfaces = config.stop;
  e.stop_on_member_control = config.stop_on_member_control;
  e.seed = config.seed;
  e.parallel = config.parallel;
  e.trace_top_k = config.trace_top_k;
  return e;
}

std::optional<CascadeConfig> cascade_config(const RunConfig& config) {
  if (!config.cascade.enabled) return std::nullopt;
  CascadeConfig c;
  c.threshold = config.cascade.threshold;
  c.below = config.cascade.below;
  for (std::size_t i = 0; i < config.members.size(); ++i) {
    if (config.members[i].gate) c.gate = i;
  }
  if (c.below == BelowPolicy::kDelegate) {
    const auto& want = config.cascade.delegate;
    bool found = false;
    for (std::size_t i = 0; i < config.members.size() && !found; ++i) {
      if (config.members[i].name == want) c.delegate_target = i, found = true;
    }
    if (!found && !want.empty() && std::all_of(want.begin(), want.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) {
      c.delegate_target = std::stoul(want);
      found = true;
    }
    if (!found) throw ConfigError("cascade: no member named '" + want + "'");
  }
  return c;
}

std::string describe(const RunConfig& config) {
  std::ostringstream s;
  s << "members:\n";
  for (const auto& m : config.members) {
    s << "  " << m.name << ": kind=" << to_string(m.kind) << " source=" << m.source << " weight=" << m.weight
      << (m.gate ? " gate" : "");
    if (m.kind == MemberKind::kNgram) s << " vocab=" << m.vocab << " order=" << m.order << " alpha=" << m.alpha;
    if (m.delay_ms > 0.0) s << " delay_ms=" << m.delay_ms;
    s << '\n';
  }
  s << "sampling: " << tokfuse::describe(config.sampling) << '\n';
  s << "max_tokens: " << config.max_tokens << '\n';
  s << "stop: [";
  for (std::size_t i = 0; i < config.stop.size(); ++i) s << (i ? ", " : "") << json(config.stop[i]).dump();
  s << "]" << (config.stop_on_member_control ? " + member control tokens" : "") << '\n';
  s << "cascade: ";
  if (config.cascade.enabled) {
    s << "threshold=" << config.cascade.threshold << " below_policy="
      << (config.cascade.below == BelowPolicy::kEnsemble ? "ensemble" : "delegate");
    if (config.cascade.below == BelowPolicy::kDelegate) s << " delegate=" << config.cascade.delegate;
    s << '\n';
  } else {
    s << "off\n";
  }
  s << "seed: " << config.seed << '\n';
  s << "parallel: " << (config.parallel ? "true" : "false") << '\n';
  s << "warmup_tokens: " << config.warmup_tokens << '\n';
  s << "trace_top_k: " << config.trace_top_k << '\n';
  s << "ece_bins: " << kDefaultEceBins << '\n';
  return s.str();
}

}  // namespace tokfuse::cli
