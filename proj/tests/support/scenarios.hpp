#pragma once

// Constructed generation scenarios shared by the unit and acceptance suites.

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "support/fixtures.hpp"

namespace tokfuse::testing {

/// Distribution putting the listed mass on named surfaces and spreading the remainder
/// evenly over the other non-control tokens.
inline ProbVector peaked(const Vocabulary& v, const std::map<std::string, double>& mass) {
  std::vector<double> p(v.size(), 0.0);
  double listed = 0.0;
  for (const auto& [surface, m] : mass) {
    p[*v.find(surface)] = m;
    listed += m;
  }
  std::size_t rest = 0;
  for (TokenId id = 0; id < v.size(); ++id) {
    if (!v.is_special(id) && !mass.contains(v.surface(id).bytes())) ++rest;
  }
  const double share = rest == 0 ? 0.0 : (1.0 - listed) / static_cast<double>(rest);
  for (TokenId id = 0; id < v.size(); ++id) {
    if (!v.is_special(id) && !mass.contains(v.surface(id).bytes())) p[id] = share;
  }
  return ProbVector(std::move(p));
}

struct TwoModelScenario {
  std::shared_ptr<TableBackend> a;
  std::shared_ptr<TableBackend> b;
  std::string expected_text;
  std::string expected_first_step;
};

/// Two table models with different vocabularies (different ID layouts and end tokens).
/// On the first step A is unsure and wrong ("ste", 0.419) while B is confident and right
/// ("The", 0.950); afterwards both mostly agree until B's confidence corrects A again.
inline TwoModelScenario odd_word_out_scenario() {
  auto va = make_vocab({"</s>", "ste", "The", " word", " that", " \"", "ty", "car", "\"", " does", " not", " belong",
                        "ering", " wheel"},
                       {0});
  auto vb = make_vocab({" belong", " not", " does", "\"", "car", " \"", " word", "The", "To", " tyre", "<|end|>"},
                       {10});

  auto a = std::make_shared<TableBackend>(va, peaked(*va, {{"ste", 0.419}, {"The", 0.3}}));
  auto rule_a = [&](const std::string& after, std::map<std::string, double> mass) {
    a->add_rule({*va->find(after)}, peaked(*va, mass));
  };
  rule_a("ste", {{"ering", 0.9}});
  rule_a("The", {{" word", 0.994}});
  rule_a(" word", {{" that", 0.594}, {" \"", 0.3}});
  rule_a(" \"", {{"ty", 0.714}, {"car", 0.2}});
  rule_a("car", {{"\"", 0.999}});
  rule_a("\"", {{" does", 0.992}});
  rule_a(" does", {{" not", 1.0}});
  rule_a(" not", {{" belong", 0.999}});
  rule_a(" belong", {{"</s>", 0.9}});

  auto b = std::make_shared<TableBackend>(vb, peaked(*vb, {{"The", 0.95}}));
  auto rule_b = [&](const std::string& after, std::map<std::string, double> mass) {
    b->add_rule({*vb->find(after)}, peaked(*vb, mass));
  };
  rule_b("The", {{" word", 1.0}});
  rule_b(" word", {{" \"", 0.999}});
  rule_b(" \"", {{"car", 1.0}});
  rule_b("car", {{"\"", 1.0}});
  rule_b("\"", {{" does", 0.998}});
  rule_b(" does", {{" not", 1.0}});
  rule_b(" not", {{" belong", 0.95}});
  rule_b(" belong", {{"<|end|>", 0.99}});

  return {a, b, "The word \"car\" does not belong", "1 | ste (0.419) / The (0.950) / The"};
}

/// Gate and helper over a 10-token cycle t0 -> t1 -> ... -> t9 -> t0. The gate is
/// confident (0.9) except after the tokens listed in `unsure_after`, where its top
/// probability is 0.3. The helper always agrees on the next token.
struct CascadeCycle {
  std::shared_ptr<TableBackend> gate;
  std::shared_ptr<TableBackend> helper;
};

inline CascadeCycle cascade_cycle(const std::set<int>& unsure_after) {
  std::vector<std::string> s;
  for (int i = 0; i < 10; ++i) s.push_back("<t" + std::to_string(i) + ">");
  auto vg = make_vocab(s);
  std::vector<std::string> sh(s.rbegin(), s.rend());  // different ID layout
  auto vh = make_vocab(sh);

  auto gate = std::make_shared<TableBackend>(vg, peaked(*vg, {{"<t0>", 0.9}}));
  auto helper = std::make_shared<TableBackend>(vh, peaked(*vh, {{"<t0>", 0.8}}));
  for (int i = 0; i < 10; ++i) {
    const std::string cur = s[static_cast<std::size_t>(i)];
    const std::string next = s[static_cast<std::size_t>((i + 1) % 10)];
    const double conf = unsure_after.contains(i) ? 0.3 : 0.9;
    gate->add_rule({*vg->find(cur)}, peaked(*vg, {{next, conf}}));
    helper->add_rule({*vh->find(cur)}, peaked(*vh, {{next, 0.8}}));
  }
  return {gate, helper};
}

}  // namespace tokfuse::testing
