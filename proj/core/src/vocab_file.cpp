#include "tokfuse/vocab_file.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "tokfuse/errors.hpp"

namespace tokfuse {
namespace {

constexpr std::string_view kMagic = "#gac-vocab";
constexpr std::string_view kVersion = "v1";

bool is_b64_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '+' || c == '/';
}

std::optional<std::uint64_t> parse_uint(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(bytes.data()), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::string base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw ContractViolation("base64 length is not a multiple of 4");
  std::size_t pad = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == '=') {
      if (i + 2 < text.size()) throw ContractViolation("misplaced base64 padding");
      ++pad;
    } else if (pad > 0 || !is_b64_char(c)) {
      throw ContractViolation("invalid base64 character");
    }
  }
  std::string out(3 * text.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw ContractViolation("invalid base64");
  out.resize(static_cast<std::size_t>(n) - pad);
  // Reject non-canonical encodings so the file format stays byte-stable.
  if (base64_encode(out) != text) throw ContractViolation("non-canonical base64");
  return out;
}

Vocabulary parse_vocab(std::string_view text) {
  std::vector<std::string_view> lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(1, "empty vocab file");

  // Header.
  const auto fields = split(lines[0], ' ');
  if (fields.size() != 4 || fields[0] != kMagic || fields[1] != kVersion ||
      !fields[2].starts_with("size=") || !fields[3].starts_with("special=")) {
    throw ParseError(1, "expected header '#gac-vocab v1 size=<N> special=<ids>'");
  }
  const auto size = parse_uint(fields[2].substr(5));
  if (!size || *size == 0) throw ParseError(1, "size must be a positive integer");

  std::set<TokenId> special;
  const auto special_list = fields[3].substr(8);
  if (!special_list.empty()) {
    for (auto item : split(special_list, ',')) {
      const auto id = parse_uint(item);
      if (!id || *id >= *size) throw ParseError(1, "bad special id '" + std::string(item) + "'");
      special.insert(static_cast<TokenId>(*id));
    }
  }

  if (lines.size() - 1 != *size) {
    throw ParseError(lines.size() < *size + 1 ? lines.size() + 1 : *size + 2,
                     "header declares " + std::to_string(*size) + " entries, found " +
                         std::to_string(lines.size() - 1));
  }

  std::vector<TokenSurface> surfaces;
  surfaces.reserve(*size);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError(i + 1, "expected '<id>\\t<base64>'");
    const auto id = parse_uint(line.substr(0, tab));
    if (!id) throw ParseError(i + 1, "bad token id");
    if (*id != i - 1) {
      throw ParseError(i + 1, "expected id " + std::to_string(i - 1) + ", found " + std::to_string(*id) +
                                  " (ids must be dense and in order)");
    }
    std::string bytes;
    try {
      bytes = base64_decode(line.substr(tab + 1));
    } catch (const ContractViolation& e) {
      throw ParseError(i + 1, e.what());
    }
    if (bytes.empty()) throw ParseError(i + 1, "empty surface");
    surfaces.emplace_back(std::move(bytes));
  }
  return Vocabulary(std::move(surfaces), std::move(special));
}

Vocabulary load_vocab_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open vocab file", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_vocab(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), e.detail(), path.string());
  }
}

std::string format_vocab(const Vocabulary& vocab) {
  std::string out;
  out += kMagic;
  out += ' ';
  out += kVersion;
  out += " size=" + std::to_string(vocab.size()) + " special=";
  bool first = true;
  for (TokenId id : vocab.special_ids()) {
    if (!first) out += ',';
    out += std::to_string(id);
    first = false;
  }
  out += '\n';
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    out += std::to_string(id);
    out += '\t';
    out += base64_encode(vocab.surfaces()[id].bytes());
    out += '\n';
  }
  return out;
}

void save_vocab_file(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(path.string() + ": cannot write vocab file");
  out << format_vocab(vocab);
}

}  // namespace tokfuse
