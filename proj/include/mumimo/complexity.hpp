#pragma once

// Closed-form selection complexities (complex additions at 1 flop,
// multiplications at 3) and the measured counterparts.

#include <cstddef>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mumimo/error.hpp"
#include "mumimo/flops.hpp"
#include "mumimo/selectors.hpp"

namespace mumimo {

enum class ComplexityScheme { optimum, rc, maxr, singleqr };

inline constexpr ComplexityScheme kComplexitySchemes[] = {
    ComplexityScheme::optimum, ComplexityScheme::rc, ComplexityScheme::maxr,
    ComplexityScheme::singleqr};

inline std::string_view to_string(ComplexityScheme s) {
  switch (s) {
    case ComplexityScheme::optimum: return "optimum";
    case ComplexityScheme::rc: return "rc";
    case ComplexityScheme::maxr: return "maxr";
    case ComplexityScheme::singleqr: return "singleqr";
  }
  return "?";
}

inline ComplexityScheme parse_complexity_scheme(std::string_view name) {
  for (auto s : kComplexitySchemes)
    if (to_string(s) == name) return s;
  throw UnsupportedScheme("no complexity formula for '" + std::string(name) + "'");
}

inline long double binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0.0L;
  if (k > n - k) k = n - k;
  long double c = 1.0L;
  for (std::size_t i = 1; i <= k; ++i) c = c * static_cast<long double>(n - k + i) / i;
  return c;
}

/// Closed-form flop count for selecting m of n antennas.
inline double formula_flops(ComplexityScheme scheme, std::size_t n, std::size_t m) {
  if (m == 0 || n < m) throw ConfigError("formula_flops: need n >= m >= 1");
  const long double N = static_cast<long double>(n);
  const long double M = static_cast<long double>(m);
  // Every formula is evaluated as 12x an integer polynomial, then divided,
  // so the fractional coefficients stay exact.
  long double twelfths = 0.0L;
  switch (scheme) {
    case ComplexityScheme::optimum:
      twelfths = binomial(n, m) * (120 * M * M * M - 6 * M * M + 6 * M - 12);
      break;
    case ComplexityScheme::rc:
      twelfths = M * M *
                     (8 * N * N * N + 48 * M * N * N + 20 * M + 48 * M * N - 56 * M * M * M -
                      41 * M * M - 15 * N * N - 23 * N + 11) +
                 M * (8 * N * N * N + 3 * N * N - 5 * N + 6) - 6 * (N * N + N);
      break;
    case ComplexityScheme::maxr:
      twelfths = 96 * N * N * M * M + 3 * N * N + 18 * N * N * M + 33 * N * M -
                 48 * N * M * M * M - 45 * N * M * M - 9 * N;
      break;
    case ComplexityScheme::singleqr:
      twelfths = 96 * N * M * M + 42 * N * M - 48 * M * M * M - 45 * M * M - 3 * M - 6 * N;
      break;
    default:
      throw UnsupportedScheme("formula_flops: unknown scheme");
  }
  return static_cast<double>(twelfths / 12.0L);
}

/// Percentage text: one decimal, two below 0.1.
inline std::string format_ratio(double pct) {
  char buf[32];
  std::snprintf(buf, sizeof buf, pct < 0.1 ? "%.2f" : "%.1f", pct);
  return buf;
}

struct ComplexityRow {
  ComplexityScheme scheme;
  double flops;
  double ratio_pct;       // 100 * flops / optimum flops
  std::string ratio_text; // rounded for display
};

inline std::vector<ComplexityRow> ratio_table(std::size_t n, std::size_t m) {
  const double opt = formula_flops(ComplexityScheme::optimum, n, m);
  std::vector<ComplexityRow> rows;
  for (auto s : kComplexitySchemes) {
    const double f = formula_flops(s, n, m);
    const double pct = 100.0 * f / opt;
    rows.push_back({s, f, pct, format_ratio(pct)});
  }
  return rows;
}

/// Instrumented flop count of one selector run on h.
inline FlopCount measure_flops(SelectorKind kind, const ComplexMatrix& h, bool prune = true) {
  return select(kind, h, MaxrOptions{prune, 0}).flops;
}

}  // namespace mumimo
