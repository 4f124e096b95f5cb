#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "mumimo/linalg.hpp"

namespace mumimo {

/// Per-dimension amplitude scale giving unit average symbol energy.
inline const double kQam16Scale = 1.0 / std::sqrt(10.0);
/// Modulo period for 16-QAM: the constellation spans [-tau/2, tau/2) per axis.
inline const double kQam16Tau = 8.0 / std::sqrt(10.0);

inline constexpr int kQam16Bits = 4;

namespace detail {

// Gray-coded 4-PAM: 00 -> -3, 01 -> -1, 11 -> +1, 10 -> +3.
inline constexpr std::array<double, 4> kPamLevel = {-3.0, -1.0, 3.0, 1.0};

inline std::uint8_t pam4_demap(double x) {
  const double t = 2.0 * kQam16Scale;
  if (x < -t) return 0b00;
  if (x < 0.0) return 0b01;
  if (x < t) return 0b11;
  return 0b10;
}

}  // namespace detail

/// Maps bits b3 b2 b1 b0 to a symbol: (b3 b2) drive the in-phase level,
/// (b1 b0) the quadrature level.
inline cplx qam16_map(std::uint8_t bits) {
  const double re = detail::kPamLevel[(bits >> 2) & 0b11];
  const double im = detail::kPamLevel[bits & 0b11];
  return {re * kQam16Scale, im * kQam16Scale};
}

/// Nearest-point decision.
inline std::uint8_t qam16_demap(cplx z) {
  return static_cast<std::uint8_t>((detail::pam4_demap(z.real()) << 2) |
                                   detail::pam4_demap(z.imag()));
}

}  // namespace mumimo
