#include "inrc/error.hpp"

namespace inrc {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::unsupported_combiner: return "unsupported_combiner";
    case Errc::infeasible_config: return "infeasible_config";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::index_out_of_range: return "index_out_of_range";
    case Errc::bad_magic: return "bad_magic";
    case Errc::version_mismatch: return "version_mismatch";
    case Errc::truncated_payload: return "truncated_payload";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::unsupported_bit_width: return "unsupported_bit_width";
    case Errc::file_error: return "file_error";
    case Errc::unsupported_png: return "unsupported_png";
    case Errc::non_finite: return "non_finite";
    case Errc::diverged: return "diverged";
  }
  return "unknown";
}

bool is_config_error(Errc code) noexcept {
  return code == Errc::invalid_argument || code == Errc::unsupported_combiner ||
         code == Errc::infeasible_config;
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace inrc
