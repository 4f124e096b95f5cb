#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mumimo/error.hpp"
#include "mumimo/linalg.hpp"

namespace mumimo {

/// Seeded random stream. Each Monte Carlo trial gets its own stream_id, so
/// a trial's draws depend only on (seed, stream_id).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(stream_id ^ 0xd1b54a32d192ed03ULL);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Label for whatever was drawn from this stream.
  [[nodiscard]] std::uint64_t tag() const noexcept {
    return splitmix64(seed_ ^ splitmix64(stream_id_));
  }

  std::uint64_t next_u64() { return engine_(); }

  double gaussian() { return normal_(engine_); }

  /// Circularly-symmetric complex Gaussian with E|z|^2 = variance.
  cplx complex_gaussian(double variance = 1.0) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal_(engine_);
    const double im = normal_(engine_);
    return {s * re, s * im};
  }

 private:
  static constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Downlink channel: one row per user, one column per transmit antenna.
struct Channel {
  ComplexMatrix h;
  std::uint64_t seed_tag = 0;
};

/// i.i.d. CN(0, 1) Rayleigh flat-fading draw, filled row by row.
inline Channel sample_channel(std::size_t m, std::size_t n, RngStream& rng) {
  if (m == 0 || n < m) throw ConfigError("sample_channel: need 1 <= m <= n");
  CVector entries(m * n);
  for (auto& z : entries) z = rng.complex_gaussian(1.0);
  return Channel{ComplexMatrix(m, n, std::move(entries)), rng.tag()};
}

// ---------------------------------------------------------------------------
// Fixture files
//
//   # optional comments; "# seed_tag <u64>" is read back
//   M N
//   re im re im ...   (M lines, N pairs each)
// ---------------------------------------------------------------------------

inline void write_fixture(std::ostream& os, const Channel& channel) {
  const ComplexMatrix& h = channel.h;
  os << "# seed_tag " << channel.seed_tag << '\n';
  os << h.rows() << ' ' << h.cols() << '\n';
  std::array<char, 64> buf{};
  for (std::size_t r = 0; r < h.rows(); ++r) {
    for (std::size_t c = 0; c < h.cols(); ++c) {
      if (c != 0) os << ' ';
      std::snprintf(buf.data(), buf.size(), "%.17g", h(r, c).real());
      os << buf.data() << ' ';
      std::snprintf(buf.data(), buf.size(), "%.17g", h(r, c).imag());
      os << buf.data();
    }
    os << '\n';
  }
}

namespace detail {

inline std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
T parse_token(std::string_view token, std::size_t line, std::size_t column) {
  T value{};
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(line, column, "cannot parse '" + std::string(token) + "'");
  }
  if (!std::isfinite(value)) {
    throw ParseError(line, column, "non-finite value '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace detail

inline Channel read_fixture(std::istream& is) {
  std::size_t rows = 0;
  std::size_t cols = 0;
  bool have_header = false;
  std::uint64_t seed_tag = 0;
  CVector entries;
  std::size_t body_rows = 0;

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      const auto comment = detail::split_tokens(line.substr(hash + 1));
      if (comment.size() == 2 && comment[0] == "seed_tag") {
        seed_tag = detail::parse_token<std::uint64_t>(comment[1], line_no, 2);
      }
      line = line.substr(0, hash);
    }
    const auto tokens = detail::split_tokens(line);
    if (tokens.empty()) continue;

    if (!have_header) {
      if (tokens.size() != 2) throw ParseError(line_no, 1, "header must be 'M N'");
      rows = detail::parse_token<std::size_t>(tokens[0], line_no, 1);
      cols = detail::parse_token<std::size_t>(tokens[1], line_no, 2);
      if (rows == 0 || cols == 0) throw ParseError(line_no, 1, "dimensions must be positive");
      have_header = true;
      entries.reserve(rows * cols);
      continue;
    }

    if (tokens.size() % 2 != 0) {
      throw ParseError(line_no, tokens.size(), "odd number of values (expected re/im pairs)");
    }
    if (tokens.size() != 2 * cols) {
      throw DimensionMismatch("line " + std::to_string(line_no) + ": " +
                              std::to_string(tokens.size() / 2) + " entries, header says " +
                              std::to_string(cols));
    }
    ++body_rows;
    if (body_rows > rows) {
      throw DimensionMismatch("line " + std::to_string(line_no) + ": more than " +
                              std::to_string(rows) + " rows");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      const double re = detail::parse_token<double>(tokens[2 * c], line_no, 2 * c + 1);
      const double im = detail::parse_token<double>(tokens[2 * c + 1], line_no, 2 * c + 2);
      entries.emplace_back(re, im);
    }
  }
  if (!have_header) throw ParseError(line_no + 1, 1, "missing 'M N' header");
  if (body_rows != rows) {
    throw DimensionMismatch("header declares " + std::to_string(rows) + " rows, found " +
                            std::to_string(body_rows));
  }
  return Channel{ComplexMatrix(rows, cols, std::move(entries)), seed_tag};
}

inline void write_fixture(const std::string& path, const Channel& channel) {
  std::ofstream os(path);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_fixture(os, channel);
  if (!os) throw Error("write to '" + path + "' failed");
}

inline Channel read_fixture(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_fixture(is);
}

}  // namespace mumimo
