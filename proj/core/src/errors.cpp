#include "tokfuse/errors.hpp"

#include <utility>

namespace tokfuse {

namespace {

std::string parse_message(std::size_t line, const std::string& what, const std::string& source) {
  std::string out = source.empty() ? std::string() : source + ": ";
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  return out + what;
}

}  // namespace

ParseError::ParseError(std::size_t line, const std::string& what, const std::string& source)
    : Error(parse_message(line, what, source)), line_(line), detail_(what) {}

ProtocolError::ProtocolError(std::string code, const std::string& what)
    : Error(code + ": " + what), code_(std::move(code)) {}

}  // namespace tokfuse
