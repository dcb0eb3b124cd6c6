#pragma once

#include <stdexcept>
#include <string>

namespace nvrot {

// Every failure raised by the library carries a module-qualified code such as
// "bath.parse" or "echo.convergence" so callers can report it mechanically.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace nvrot
