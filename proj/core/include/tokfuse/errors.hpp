#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tokfuse {

/// Root of every exception thrown by tokfuse.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user-supplied configuration (empty member list, bad weights, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition (dimension mismatch, ID out of range).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based; 0 when the error is not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what, const std::string& source = {});
  std::size_t line() const noexcept { return line_; }
  /// Message without the source/line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::size_t line_;
  std::string detail_;
};

/// The remote peer could not be reached. Retriable.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The remote peer answered, but with an error object or an invalid payload.
class ProtocolError : public Error {
 public:
  ProtocolError(std::string code, const std::string& what);
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace tokfuse
