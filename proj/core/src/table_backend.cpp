#include "tokfuse/table_backend.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "tokfuse/errors.hpp"
#include "tokfuse/vocab_file.hpp"

namespace tokfuse {

TableBackend::TableBackend(std::shared_ptr<const Vocabulary> vocab, ProbVector fallback)
    : PrefixModel(std::move(vocab)), fallback_(std::move(fallback)) {
  if (fallback_.size() != vocabulary()->size()) {
    throw ContractViolation("fallback distribution length does not match the vocabulary");
  }
}

void TableBackend::add_rule(std::vector<TokenId> context, ProbVector probs) {
  if (context.empty()) throw ContractViolation("rule context must be non-empty; use the fallback instead");
  vocabulary()->check_ids(context);
  if (probs.size() != vocabulary()->size()) {
    throw ContractViolation("rule distribution length does not match the vocabulary");
  }
  longest_context_ = std::max(longest_context_, context.size());
  rules_.insert_or_assign(std::move(context), std::move(probs));
}

ProbVector TableBackend::distribution(std::span<const TokenId> prefix) const {
  std::vector<TokenId> key;
  for (std::size_t len = std::min(longest_context_, prefix.size()); len > 0; --len) {
    key.assign(prefix.end() - static_cast<std::ptrdiff_t>(len), prefix.end());
    if (auto it = rules_.find(key); it != rules_.end()) return it->second;
  }
  return fallback_;
}

std::shared_ptr<TableBackend> load_table_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open table file", path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, e.what(), path.string());
  }
  try {
    auto vocab_path = std::filesystem::path(doc.at("vocab").get<std::string>());
    if (vocab_path.is_relative()) vocab_path = path.parent_path() / vocab_path;
    auto vocab = std::make_shared<const Vocabulary>(load_vocab_file(vocab_path));
    auto table = std::make_shared<TableBackend>(vocab, ProbVector(doc.at("fallback").get<std::vector<double>>()));
    if (doc.contains("rules")) {
      for (const auto& rule : doc.at("rules")) {
        table->add_rule(rule.at("context").get<std::vector<TokenId>>(),
                        ProbVector(rule.at("probs").get<std::vector<double>>()));
      }
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(0, e.what(), path.string());
  } catch (const ContractViolation& e) {
    throw ParseError(0, e.what(), path.string());
  }
}

}  // namespace tokfuse
