#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vdsa {

enum class Errc {
  parse,
  empty_input,
  gap_too_large,
  insufficient_data,
  coverage,
  unknown_channel,
  schema_version,
  invalid_argument,
  config,
  io,
};

std::string_view to_string(Errc code);

/// Base error for everything the library reports. The code doubles as the
/// machine-parsable prefix printed by the CLI.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error(Errc::parse, "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace vdsa
