#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "tokfuse/vocab.hpp"

namespace tokfuse {

// Portable vocab format, UTF-8 text:
//
//   #gac-vocab v1 size=<N> special=<comma-separated IDs>
//   <id>\t<base64 of surface bytes>        (one line per ID, 0..N-1 in order)

/// Parses a vocab file body. Errors are ParseError carrying the 1-based line number.
Vocabulary parse_vocab(std::string_view text);

/// Reads and parses `path`; parse errors are prefixed with the file name.
Vocabulary load_vocab_file(const std::filesystem::path& path);

/// Canonical serialization; parse_vocab(format_vocab(v)) reproduces v, and formatting a
/// parsed canonical file reproduces it byte for byte.
std::string format_vocab(const Vocabulary& vocab);

void save_vocab_file(const Vocabulary& vocab, const std::filesystem::path& path);

std::string base64_encode(std::string_view bytes);
/// Strict decoder (canonical padding, no whitespace); throws ContractViolation on bad input.
std::string base64_decode(std::string_view text);

}  // namespace tokfuse
