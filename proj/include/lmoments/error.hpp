#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lmoments {

/// Category carried by every library exception. The CLI maps these onto
/// exit statuses (usage -> 2, budget/resource -> 3, anything else -> 1).
enum class ErrorKind {
  domain,
  resource,
  budget,
  overflow,
  insufficient_data,
  diagonalization,
  conditioning,
  usage,
  io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::resource: return "resource";
    case ErrorKind::budget: return "budget";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::diagonalization: return "diagonalization";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::usage: return "usage";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string stage = {})
      : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message,
                              std::string stage = {}) {
  throw Error(kind, message, std::move(stage));
}

}  // namespace lmoments
