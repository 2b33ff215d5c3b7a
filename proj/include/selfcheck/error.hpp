#pragma once

#include <stdexcept>
#include <string>

namespace selfcheck {

// Coarse error classes. The CLI maps Validation/Precondition to exit code 1
// and Backend/Transport/RateLimit to exit code 2.
enum class ErrorKind {
  Precondition,
  Validation,
  Backend,
  Transport,
  RateLimit,
  Degenerate,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  bool is_backend_failure() const noexcept {
    return kind_ == ErrorKind::Backend || kind_ == ErrorKind::Transport ||
           kind_ == ErrorKind::RateLimit;
  }

 private:
  ErrorKind kind_;
};

class RateLimitError : public Error {
 public:
  RateLimitError(const std::string& what, double retry_after_seconds)
      : Error(ErrorKind::RateLimit, what), retry_after_(retry_after_seconds) {}

  double retry_after() const noexcept { return retry_after_; }

 private:
  double retry_after_;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(ErrorKind::Precondition, message);
}

}  // namespace selfcheck
