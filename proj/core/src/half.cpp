#include "inrc/half.hpp"

#include <bit>
#include <cmath>

namespace inrc {

half_bits double_to_half(double value) noexcept {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  const auto sign = static_cast<half_bits>((bits >> 48) & 0x8000u);
  const int exponent = static_cast<int>((bits >> 52) & 0x7ffu);
  std::uint64_t mantissa = bits & 0xfffffffffffffull;

  if (exponent == 0x7ff) {
    if (mantissa != 0) return static_cast<half_bits>(sign | 0x7e00u);
    return static_cast<half_bits>(sign | 0x7c00u);
  }

  // Unbiased exponent, then rebias for binary16 (bias 15).
  const int half_exp = exponent - 1023 + 15;
  if (half_exp >= 0x1f) return static_cast<half_bits>(sign | 0x7c00u);

  // Work with the full 53-bit significand (implicit bit included) and shift
  // it down to the 11 (normal) or fewer (subnormal) bits we keep.
  int shift;
  if (exponent == 0) {
    return sign;  // double subnormals are far below half's smallest subnormal
  }
  mantissa |= 1ull << 52;
  if (half_exp >= 1) {
    shift = 42;  // 53 -> 11 bits
  } else {
    shift = 42 + (1 - half_exp);  // subnormal: fewer kept bits
    if (shift > 63) return sign;
  }

  std::uint64_t kept = mantissa >> shift;
  const std::uint64_t rem = mantissa & ((1ull << shift) - 1);
  const std::uint64_t halfway = 1ull << (shift - 1);
  if (rem > halfway || (rem == halfway && (kept & 1u))) ++kept;

  if (half_exp >= 1) {
    // kept is in [2^10, 2^11]; carry into the exponent is handled by addition.
    const std::uint64_t packed = (static_cast<std::uint64_t>(half_exp) << 10) + (kept - (1u << 10));
    if (packed >= 0x7c00u) return static_cast<half_bits>(sign | 0x7c00u);
    return static_cast<half_bits>(sign | packed);
  }
  // Subnormal (kept may round up to 0x400, which is exactly the smallest normal).
  return static_cast<half_bits>(sign | kept);
}

double half_to_double(half_bits bits) noexcept {
  const bool negative = (bits & 0x8000u) != 0;
  const int exponent = (bits >> 10) & 0x1f;
  const int mantissa = bits & 0x3ff;
  double magnitude;
  if (exponent == 0) {
    magnitude = std::ldexp(static_cast<double>(mantissa), -24);
  } else if (exponent == 0x1f) {
    magnitude = mantissa == 0 ? HUGE_VAL : std::nan("");
  } else {
    magnitude = std::ldexp(static_cast<double>(mantissa | 0x400), exponent - 25);
  }
  return negative ? -magnitude : magnitude;
}

}  // namespace inrc
