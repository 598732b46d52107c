#pragma once

#include <stdexcept>
#include <string>

namespace rewimp {

enum class ErrorKind {
  invalid_argument,
  not_found,
  shape,
  numeric,
  io,
  parse,
  validation,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace rewimp
