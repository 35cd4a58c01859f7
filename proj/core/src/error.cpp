#include "apfx/error.hpp"

namespace apfx {

const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_range: return "invalid-range";
    case Errc::zero_steps: return "zero-steps";
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::shape_mismatch: return "shape-mismatch";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::divisibility: return "divisibility";
    case Errc::operator_evaluation: return "operator-evaluation";
    case Errc::unknown_preset: return "unknown-preset";
    case Errc::io: return "io";
  }
  return "unknown";
}

}  // namespace apfx
