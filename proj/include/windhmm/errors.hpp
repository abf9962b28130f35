#pragma once

#include <stdexcept>
#include <string>

namespace windhmm {

/// Invalid configuration (priors, truncation bounds, chain settings).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value outside the support of a distribution, or an inconsistent
/// latent configuration.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Angle or direction that is not a point of the discrete circle.
class GridError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Sampler reached a state it cannot continue from.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace windhmm
