#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tokfuse/prob_vector.hpp"

namespace tokfuse {

using TokenId = std::uint32_t;

/// The decoded byte sequence a token stands for. Identity is exact byte equality.
class TokenSurface {
 public:
  /// Throws ContractViolation on an empty byte sequence.
  explicit TokenSurface(std::string bytes);

  const std::string& bytes() const noexcept { return bytes_; }
  std::size_t size() const noexcept { return bytes_.size(); }

  auto operator<=>(const TokenSurface&) const = default;

 private:
  std::string bytes_;
};

/// A member model's vocabulary: dense IDs 0..size-1, each with a surface.
/// Distinct IDs may share a surface.
class Vocabulary {
 public:
  Vocabulary(std::vector<TokenSurface> surfaces, std::set<TokenId> special_ids = {});

  std::size_t size() const noexcept { return surfaces_.size(); }
  const TokenSurface& surface(TokenId id) const;
  const std::vector<TokenSurface>& surfaces() const noexcept { return surfaces_; }
  const std::set<TokenId>& special_ids() const noexcept { return special_ids_; }
  bool is_special(TokenId id) const { return special_ids_.contains(id); }
  bool contains(TokenId id) const noexcept { return id < surfaces_.size(); }

  /// Lowest ID carrying `bytes`, if any.
  std::optional<TokenId> find(std::string_view bytes) const;

  /// Throws ContractViolation naming the first ID outside the vocabulary.
  void check_ids(std::span<const TokenId> ids) const;

 private:
  std::vector<TokenSurface> surfaces_;
  std::set<TokenId> special_ids_;
  std::unordered_map<std::string, TokenId> lowest_id_;
};

/// Sparse 0/1 projection from one member vocabulary onto the union: every row has
/// exactly one nonzero entry, and that entry is 1.
class MappingMatrix {
 public:
  MappingMatrix(std::vector<std::uint32_t> row_columns, std::size_t cols);

  std::size_t rows() const noexcept { return columns_.size(); }
  std::size_t cols() const noexcept { return cols_; }
  /// Union column of member row `r`.
  std::uint32_t column(std::size_t r) const { return columns_.at(r); }
  /// Coefficient at (r, c): 1 on the row's column, 0 elsewhere.
  double coefficient(std::size_t r, std::size_t c) const { return columns_.at(r) == c ? 1.0 : 0.0; }
  const std::vector<std::uint32_t>& row_columns() const noexcept { return columns_; }

 private:
  std::vector<std::uint32_t> columns_;
  std::size_t cols_;
};

struct UnionBuild;

/// Deduplicated surfaces of all member vocabularies, in member-1-first insertion order.
class UnionVocab {
 public:
  std::size_t size() const noexcept { return surfaces_.size(); }
  std::size_t member_count() const noexcept { return member_count_; }
  const TokenSurface& surface(std::size_t column) const { return surfaces_.at(column); }
  const std::vector<TokenSurface>& surfaces() const noexcept { return surfaces_; }
  std::optional<std::size_t> find(std::string_view bytes) const;
  /// True when any member flags this surface as a control token.
  bool is_control(std::size_t column) const { return control_.at(column); }

 private:
  friend UnionBuild build_union(std::span<const Vocabulary* const> vocabs);

  std::vector<TokenSurface> surfaces_;
  std::vector<bool> control_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t member_count_ = 0;
};

struct UnionBuild {
  UnionVocab vocab;
  std::vector<MappingMatrix> matrices;  // one per member, in input order
};

/// Throws ConfigError on an empty list or an empty member vocabulary.
UnionBuild build_union(std::span<const Vocabulary* const> vocabs);
UnionBuild build_union(std::span<const Vocabulary> vocabs);

/// Projects a member distribution onto the union: out[c] = sum of p[id] over ids mapping to c.
/// Throws ContractViolation when p.size() != m.rows().
ProbVector map_to_union(const ProbVector& p, const MappingMatrix& m);

}  // namespace tokfuse
