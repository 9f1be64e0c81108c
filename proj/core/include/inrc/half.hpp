#pragma once

#include <cstdint>

namespace inrc {

/// IEEE 754 binary16 bit pattern.
using half_bits = std::uint16_t;

/// Round-to-nearest-even conversion straight from double (no intermediate
/// float, so there is no double rounding). Overflow goes to +-inf, NaN stays
/// NaN (quiet), tiny values round into the subnormal range or to signed zero.
half_bits double_to_half(double value) noexcept;

/// Exact widening of a binary16 pattern.
double half_to_double(half_bits bits) noexcept;

/// double -> half -> double.
inline double quantize_half(double value) noexcept { return half_to_double(double_to_half(value)); }

}  // namespace inrc
