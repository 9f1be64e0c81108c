#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace inrc {

/// Failure categories surfaced by the library. The CLI maps the first group
/// to exit code 1 (usage/config) and everything else to exit code 2.
enum class Errc {
  // configuration / usage
  invalid_argument,
  unsupported_combiner,
  infeasible_config,
  // shape problems
  shape_mismatch,
  index_out_of_range,
  // bundle decoding
  bad_magic,
  version_mismatch,
  truncated_payload,
  length_mismatch,
  unsupported_bit_width,
  // files
  file_error,
  unsupported_png,
  // numerics
  non_finite,
  diverged,
};

std::string_view errc_name(Errc code) noexcept;
bool is_config_error(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace inrc
