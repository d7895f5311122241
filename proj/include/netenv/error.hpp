#pragma once

#include <stdexcept>
#include <string>

namespace netenv {

/// Invalid scenario, distribution, or training configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside an operation's domain (unknown host, unrealizable trace, finished episode).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Structurally malformed generative program.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A configured resource cap was exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Q-value magnitudes blew up during training.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace netenv
