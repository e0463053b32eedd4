#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace galgeo {

/// All library failures carry a short machine-readable code ("NonPrime",
/// "AmbientMismatch", ...) next to the human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& msg)
      : std::runtime_error(code + ": " + msg), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const char* code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace galgeo
