#pragma once

#include <stdexcept>
#include <string>

namespace vloc {

/// Base of every domain error raised by the library. The CLI maps these to
/// exit code 1; anything else is a bug.
class Error : public std::runtime_error {
  public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

  private:
    std::string kind_;
};

#define VLOC_DEFINE_ERROR(Name)                                           \
    class Name : public ::vloc::Error {                                   \
      public:                                                             \
        explicit Name(const std::string& what) : ::vloc::Error(#Name, what) {} \
    }

VLOC_DEFINE_ERROR(IoError);
VLOC_DEFINE_ERROR(ShapeMismatch);
VLOC_DEFINE_ERROR(NonFiniteValue);

} // namespace vloc
