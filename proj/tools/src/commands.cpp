#include "tokfuse/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>

#include "tokfuse/cli/run_config.hpp"
#include "tokfuse/stepserver.hpp"
#include "tokfuse/tokfuse.hpp"

namespace tokfuse::cli {
namespace {

struct Options {
  std::vector<std::string> vocab_files;
  std::string dump;
  std::string config;
  std::string prompt;
  std::string trace;
  bool timing = false;
  bool show_steps = false;
  std::string tasks;
  std::string report;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> warmup;
  std::string vocab_a;
  std::string vocab_b;
  std::string words;
  std::string records;
  std::size_t bins = kDefaultEceBins;
  std::string address;
  std::string member;
  std::optional<std::size_t> sparse_above;
};

RunConfig load_config(const Options& o, std::ostream& err) {
  RunConfig config = load_run_config(o.config);
  if (o.seed) config.seed = *o.seed;
  if (o.warmup) config.warmup_tokens = *o.warmup;
  err << "settings (" << o.config << "):\n" << describe(config);
  return config;
}

int cmd_union(const Options& o, std::ostream& out) {
  std::vector<Vocabulary> vocabs;
  for (const auto& path : o.vocab_files) vocabs.push_back(load_vocab_file(path));
  const auto u = build_union(std::span<const Vocabulary>(vocabs));
  for (std::size_t i = 0; i < vocabs.size(); ++i) {
    out << "member " << i + 1 << ": " << o.vocab_files[i] << " size=" << vocabs[i].size()
        << " special=" << vocabs[i].special_ids().size() << '\n';
  }
  out << "union size=" << u.vocab.size() << '\n';
  if (!o.dump.empty()) {
    std::set<TokenId> control;
    for (std::size_t c = 0; c < u.vocab.size(); ++c) {
      if (u.vocab.is_control(c)) control.insert(static_cast<TokenId>(c));
    }
    save_vocab_file(Vocabulary(u.vocab.surfaces(), control), o.dump);
    out << "union written to " << o.dump << '\n';
  }
  return kExitOk;
}

void print_summary(const GenerationResult& r, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line, "tokens=%zu ensembled_steps=%zu ensembled_fraction=%.6g ms_per_token=%.3f stop=%s\n",
                r.tokens_generated, r.ensembled_steps, r.ensembled_fraction, r.ms_per_token, to_string(r.stop).c_str());
  out << line;
}

int cmd_generate(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig config = load_config(o, err);
  const Ensemble ensemble(build_members(config));
  const auto engine = engine_config(config);
  const auto cascade = cascade_config(config);

  GenerationResult result;
  int status = kExitOk;
  try {
    result = cascade ? ensemble.generate_cascade(o.prompt, engine, *cascade) : ensemble.generate(o.prompt, engine);
  } catch (const GenerationAborted& e) {
    err << "error: " << e.what() << '\n';
    result = e.partial();
    status = e.transport() ? kExitTransport : kExitFailure;
  }
  out << result.text << '\n';
  if (o.show_steps) out << render_step_table(result.trace);
  print_summary(result, out);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  if (!o.trace.empty()) write_trace_file(result.trace, o.trace, o.timing);
  return status;
}

int cmd_bench(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig config = load_config(o, err);
  const auto tasks = load_tasks(o.tasks);
  const auto members = build_members(config);
  warmup(members, config.warmup_tokens);
  const Ensemble ensemble(members);
  const auto report = run_benchmark(tasks, ensemble, engine_config(config), cascade_config(config));

  char line[256];
  std::snprintf(line, sizeof line, "tasks=%zu accuracy=%.4f ms_per_token=%.3f ensembled_fraction=%.6g tokens=%zu\n",
                report.tasks.size(), report.accuracy, report.ms_per_token, report.ensembled_fraction,
                report.total_tokens);
  out << line;
  for (const auto& t : report.tasks) {
    if (!t.error.empty()) err << "task " << t.id << " failed: " << t.error << '\n';
  }
  if (!o.report.empty()) {
    write_run_report(report, o.report);
    out << "report written to " << o.report << '\n';
  }
  return kExitOk;
}

int cmd_agreement(const Options& o, std::ostream& out) {
  const auto a = std::make_shared<const Vocabulary>(load_vocab_file(o.vocab_a));
  const auto b = std::make_shared<const Vocabulary>(load_vocab_file(o.vocab_b));
  std::ifstream in(o.words);
  if (!in) throw ConfigError(o.words + ": cannot read word list");
  std::vector<std::string> words;
  for (std::string w; std::getline(in, w);) {
    if (!w.empty() && w.back() == '\r') w.pop_back();
    if (!w.empty()) words.push_back(w);
  }
  const double rate = agreement_rate(GreedyTokenizer(a), GreedyTokenizer(b), words);
  char line[128];
  std::snprintf(line, sizeof line, "words=%zu agreement=%.4f\n", words.size(), rate);
  out << line;
  return kExitOk;
}

int cmd_ece(const Options& o, std::ostream& out, std::ostream& err) {
  err << "bins: " << o.bins << '\n';
  const auto records = load_prediction_records(o.records);
  out << format_report(compute_ece(records, o.bins));
  return kExitOk;
}

int cmd_serve(const Options& o, std::ostream& out, std::ostream& err) {
  const RunConfig config = load_config(o, err);
  const auto members = build_members(config);
  std::size_t pick = 0;
  if (!o.member.empty()) {
    const auto it = std::find_if(members.begin(), members.end(), [&](const auto& m) { return m.name == o.member; });
    if (it == members.end()) throw ConfigError("no member named '" + o.member + "'");
    pick = static_cast<std::size_t>(it - members.begin());
  } else if (members.size() != 1) {
    throw ConfigError("config has several members; choose one with --member");
  }
  StepServerOptions opts;
  opts.sparse_above = o.sparse_above;
  out << "serving '" << members[pick].name << "' on " << o.address << '\n' << std::flush;
  serve(members[pick].backend, o.address, opts);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Token-level ensemble inference over models with different vocabularies", "tokfuse"};
  app.require_subcommand(1);
  Options o;

  auto* u = app.add_subcommand("union", "Build the union vocabulary of portable vocab files");
  u->add_option("vocab", o.vocab_files, "Vocab files in member order")->required()->check(CLI::ExistingFile);
  u->add_option("--dump", o.dump, "Write the union as a vocab file");

  auto* g = app.add_subcommand("generate", "Generate text with an ensemble");
  g->add_option("--config", o.config, "Run config (JSON)")->required();
  g->add_option("--prompt", o.prompt, "Prompt text");
  g->add_option("--trace", o.trace, "Write one JSON record per step");
  g->add_flag("--timing", o.timing, "Include per-step wall time in the trace");
  g->add_flag("--show-steps", o.show_steps, "Print the per-step confidence table");
  g->add_option("--seed", o.seed, "Override the config seed");

  auto* b = app.add_subcommand("bench", "Run a task file and report accuracy and latency");
  b->add_option("--config", o.config, "Run config (JSON)")->required();
  b->add_option("--tasks", o.tasks, "Line-delimited task file")->required();
  b->add_option("--report", o.report, "Write the run report (JSON)");
  b->add_option("--seed", o.seed, "Override the config seed");
  b->add_option("--warmup", o.warmup, "Override warm-up tokens per member");

  auto* a = app.add_subcommand("agreement", "Rate of identical tokenization of a word list");
  a->add_option("vocab_a", o.vocab_a)->required()->check(CLI::ExistingFile);
  a->add_option("vocab_b", o.vocab_b)->required()->check(CLI::ExistingFile);
  a->add_option("words", o.words, "One word per line")->required();

  auto* e = app.add_subcommand("ece", "Expected calibration error of prediction records");
  e->add_option("records", o.records, "Line-delimited {confidence, correct} records")->required();
  e->add_option("--bins", o.bins, "Number of equal-width bins")->check(CLI::PositiveNumber);

  auto* s = app.add_subcommand("serve", "Serve one configured member over the step protocol");
  s->add_option("--config", o.config, "Run config (JSON)")->required();
  s->add_option("--serve", o.address, "Bind address host:port")->required();
  s->add_option("--member", o.member, "Member name when the config has several");
  s->add_option("--sparse-above", o.sparse_above, "Send sparse step bodies above this vocab size");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& pe) {
    const int code = app.exit(pe, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (u->parsed()) return cmd_union(o, out);
    if (g->parsed()) return cmd_generate(o, out, err);
    if (b->parsed()) return cmd_bench(o, out, err);
    if (a->parsed()) return cmd_agreement(o, out);
    if (e->parsed()) return cmd_ece(o, out, err);
    if (s->parsed()) return cmd_serve(o, out, err);
  } catch (const ConfigError& ex) {
    err << "config error: " << ex.what() << '\n';
    return kExitConfig;
  } catch (const ParseError& ex) {
    err << "config error: " << ex.what() << '\n';
    return kExitConfig;
  } catch (const TransportError& ex) {
    err << "transport error: " << ex.what() << '\n';
    return kExitTransport;
  } catch (const ProtocolError& ex) {
    err << "transport error: " << ex.what() << '\n';
    return kExitTransport;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace tokfuse::cli
