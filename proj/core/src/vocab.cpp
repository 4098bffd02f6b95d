#include "tokfuse/vocab.hpp"

#include <utility>

#include "tokfuse/errors.hpp"

namespace tokfuse {

TokenSurface::TokenSurface(std::string bytes) : bytes_(std::move(bytes)) {
  if (bytes_.empty()) throw ContractViolation("token surface must be non-empty");
}

Vocabulary::Vocabulary(std::vector<TokenSurface> surfaces, std::set<TokenId> special_ids)
    : surfaces_(std::move(surfaces)), special_ids_(std::move(special_ids)) {
  for (TokenId id : special_ids_) {
    if (id >= surfaces_.size()) {
      throw ContractViolation("special id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(surfaces_.size()));
    }
  }
  lowest_id_.reserve(surfaces_.size());
  for (std::size_t id = 0; id < surfaces_.size(); ++id) {
    lowest_id_.try_emplace(surfaces_[id].bytes(), static_cast<TokenId>(id));
  }
}

const TokenSurface& Vocabulary::surface(TokenId id) const {
  if (id >= surfaces_.size()) {
    throw ContractViolation("token id " + std::to_string(id) + " outside vocabulary of size " +
                            std::to_string(surfaces_.size()));
  }
  return surfaces_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view bytes) const {
  auto it = lowest_id_.find(std::string(bytes));
  if (it == lowest_id_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::check_ids(std::span<const TokenId> ids) const {
  for (TokenId id : ids) {
    if (id >= surfaces_.size()) {
      throw ContractViolation("token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(surfaces_.size()));
    }
  }
}

MappingMatrix::MappingMatrix(std::vector<std::uint32_t> row_columns, std::size_t cols)
    : columns_(std::move(row_columns)), cols_(cols) {
  for (auto c : columns_) {
    if (c >= cols_) throw ContractViolation("mapping column outside union");
  }
}

std::optional<std::size_t> UnionVocab::find(std::string_view bytes) const {
  auto it = index_.find(std::string(bytes));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

UnionBuild build_union(std::span<const Vocabulary* const> vocabs) {
  if (vocabs.empty()) throw ConfigError("cannot build a union of zero vocabularies");

  UnionVocab u;
  u.member_count_ = vocabs.size();
  std::vector<std::vector<std::uint32_t>> rows(vocabs.size());

  for (std::size_t m = 0; m < vocabs.size(); ++m) {
    const Vocabulary& v = *vocabs[m];
    if (v.size() == 0) throw ConfigError("member vocabulary " + std::to_string(m) + " is empty");
    rows[m].reserve(v.size());
    for (std::size_t id = 0; id < v.size(); ++id) {
      const TokenSurface& s = v.surfaces()[id];
      auto [it, inserted] = u.index_.try_emplace(s.bytes(), u.surfaces_.size());
      if (inserted) {
        u.surfaces_.push_back(s);
        u.control_.push_back(false);
      }
      if (v.is_special(static_cast<TokenId>(id))) u.control_[it->second] = true;
      rows[m].push_back(static_cast<std::uint32_t>(it->second));
    }
  }

  UnionBuild out{std::move(u), {}};
  out.matrices.reserve(rows.size());
  for (auto& r : rows) out.matrices.emplace_back(std::move(r), out.vocab.size());
  return out;
}

UnionBuild build_union(std::span<const Vocabulary> vocabs) {
  std::vector<const Vocabulary*> ptrs;
  ptrs.reserve(vocabs.size());
  for (const auto& v : vocabs) ptrs.push_back(&v);
  return build_union(std::span<const Vocabulary* const>(ptrs));
}

ProbVector map_to_union(const ProbVector& p, const MappingMatrix& m) {
  if (p.size() != m.rows()) {
    throw ContractViolation("distribution has " + std::to_string(p.size()) + " entries, mapping expects " +
                            std::to_string(m.rows()));
  }
  std::vector<double> out(m.cols(), 0.0);
  const auto& cols = m.row_columns();
  for (std::size_t r = 0; r < cols.size(); ++r) out[cols[r]] += p[r];
  return ProbVector::trusted(std::move(out));
}

}  // namespace tokfuse
