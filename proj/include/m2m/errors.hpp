#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace m2m {

// Contract violations carry a stable code (UnknownColumn, RankDeficient, ...)
// so callers and the CLI can act on the category; the CLI maps these to exit
// status 2.
class ContractError : public std::runtime_error {
public:
  ContractError(std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

private:
  std::string code_;
};

// Raised when the cross-validation audit finds a test row inside any training
// structure. The CLI maps this to exit status 3.
class LeakageError : public std::runtime_error {
public:
  explicit LeakageError(const std::string& detail)
      : std::runtime_error("LeakageDetected: " + detail) {}
};

[[noreturn]] inline void contract_fail(const std::string& code, const std::string& detail) {
  throw ContractError(code, detail);
}

inline void require(bool ok, const std::string& code, const std::string& detail) {
  if (!ok) contract_fail(code, detail);
}

}  // namespace m2m
