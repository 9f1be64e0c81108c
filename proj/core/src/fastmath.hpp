#pragma once

#include <cmath>
#include <cstddef>

namespace inrc::detail {

// Branch-free sin/cos pair for moderate arguments (|x| < 2^20 * pi/2), written
// so the loop auto-vectorizes. Cody-Waite reduction by pi/2 in two parts, then
// the fdlibm kernel polynomials on [-pi/4, pi/4]. Accuracy is within a couple
// of ulps of libm; non-finite inputs propagate as NaN.
inline void sincos_array(const double* __restrict x, double* __restrict s, double* __restrict c,
                         std::size_t n) {
  constexpr double kTwoOverPi = 6.36619772367581382433e-01;
  constexpr double kPio2Hi = 1.57079632673412561417e+00;  // first 33 bits of pi/2
  constexpr double kPio2Lo = 6.07710050650619224932e-11;  // pi/2 - kPio2Hi
  constexpr double kS1 = -1.66666666666666324348e-01;
  constexpr double kS2 = 8.33333333332248946124e-03;
  constexpr double kS3 = -1.98412698298579493134e-04;
  constexpr double kS4 = 2.75573137070700676789e-06;
  constexpr double kS5 = -2.50507602534068634195e-08;
  constexpr double kS6 = 1.58969099521155010221e-10;
  constexpr double kC1 = 4.16666666666666019037e-02;
  constexpr double kC2 = -1.38888888888741095749e-03;
  constexpr double kC3 = 2.48015872894767294178e-05;
  constexpr double kC4 = -2.75573143513906633035e-07;
  constexpr double kC5 = 2.08757232129817482790e-09;
  constexpr double kC6 = -1.13596475577881948265e-11;

#pragma GCC ivdep
  for (std::size_t i = 0; i < n; ++i) {
    const double q = std::floor(x[i] * kTwoOverPi + 0.5);
    const double r = (x[i] - q * kPio2Hi) - q * kPio2Lo;
    const double z = r * r;
    const double sin_r = r + r * z * (kS1 + z * (kS2 + z * (kS3 + z * (kS4 + z * (kS5 + z * kS6)))));
    const double hz = 0.5 * z;
    const double cos_tail = z * z * (kC1 + z * (kC2 + z * (kC3 + z * (kC4 + z * (kC5 + z * kC6)))));
    const double w = 1.0 - hz;
    const double cos_r = w + (((1.0 - w) - hz) + cos_tail);

    // Quadrant q mod 4 selects (sin, cos) from (sin_r, cos_r) up to sign.
    // Selections are done with 0/1 multipliers so there is no branch.
    const double quadrant = q - 4.0 * std::floor(q * 0.25);
    const double odd = quadrant - 2.0 * std::floor(quadrant * 0.5);
    const double upper = std::floor(quadrant * 0.5);
    const double shifted = std::floor((quadrant + 1.0) * 0.5);
    const double flip_c = shifted - 2.0 * std::floor(shifted * 0.5);
    const double sign_s = 1.0 - 2.0 * upper;
    const double sign_c = 1.0 - 2.0 * flip_c;
    s[i] = sign_s * (odd * cos_r + (1.0 - odd) * sin_r);
    c[i] = sign_c * (odd * sin_r + (1.0 - odd) * cos_r);
  }
}

}  // namespace inrc::detail
