#pragma once

#include <stdexcept>
#include <string>

namespace roman {

/// Failure raised by the library. `code()` is a stable identifier such as
/// "E_NONDET_TARGET" that callers and tests can switch on.
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string &message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string &code() const noexcept { return code_; }

private:
  std::string code_;
};

} // namespace roman
