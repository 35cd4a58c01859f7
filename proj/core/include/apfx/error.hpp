#pragma once

#include <stdexcept>
#include <string>

namespace apfx {

enum class Errc {
  invalid_range,
  zero_steps,
  invalid_argument,
  shape_mismatch,
  dimension_mismatch,
  divisibility,
  operator_evaluation,
  unknown_preset,
  io,
};

const char* to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace apfx
