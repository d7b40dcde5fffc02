#pragma once

#include <stdexcept>
#include <string>

namespace posaudit {

/// Bad scenario, plan, or input data.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Arrangement arity outside the supported {2,3,4}.
struct UnsupportedArityError : ValidationError {
  explicit UnsupportedArityError(const std::string& msg) : ValidationError(msg) {}
};

/// Unknown option id.
struct LookupError : std::runtime_error {
  explicit LookupError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Argument outside a statistical routine's domain (k > n, zero expected count, ...).
struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Not enough valid trials to compute an estimate or test.
struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Network-level failure after all retries.
struct TransportError : std::runtime_error {
  explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

/// HTTP non-2xx from the provider.
struct ProviderError : std::runtime_error {
  int status;
  ProviderError(int status_, const std::string& msg)
      : std::runtime_error(msg), status(status_) {}
};

/// Request exceeded the configured timeout.
struct TimeoutError : TransportError {
  explicit TimeoutError(const std::string& msg) : TransportError(msg) {}
};

}  // namespace posaudit
