#pragma once

#include <stdexcept>
#include <string>

namespace lamdrl {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct AssociationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EpisodeStateError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Malformed input file; carries the 1-based line number of the offending row.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace lamdrl
