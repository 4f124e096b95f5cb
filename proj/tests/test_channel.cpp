#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "mumimo/channel.hpp"

namespace mumimo {
namespace {

TEST(RngStream, SameSeedAndStreamReplays) {
  RngStream a(42, 7);
  RngStream b(42, 7);
  const Channel ca = sample_channel(4, 8, a);
  const Channel cb = sample_channel(4, 8, b);
  EXPECT_EQ(ca.h, cb.h);
  EXPECT_EQ(ca.seed_tag, cb.seed_tag);

  RngStream c(42, 8);
  EXPECT_NE(sample_channel(4, 8, c).h, ca.h);
}

TEST(SampleChannel, UnitAverageEntryPower) {
  // 10^6 entries, standard error of the mean of |h|^2 is 1e-3.
  RngStream rng(1, 0);
  double sum = 0.0;
  cplx mean = 0.0;
  constexpr int kDraws = 62'500;
  for (int i = 0; i < kDraws; ++i) {
    const Channel ch = sample_channel(4, 4, rng);
    for (const auto& z : ch.h.entries()) {
      sum += std::norm(z);
      mean += z;
    }
  }
  const double n = kDraws * 16.0;
  EXPECT_NEAR(sum / n, 1.0, 0.01);
  EXPECT_NEAR(std::abs(mean / n), 0.0, 0.01);
}

TEST(SampleChannel, DistinctStreamsUncorrelated) {
  double cross = 0.0;
  double pa = 0.0;
  double pb = 0.0;
  constexpr int kDraws = 100'000;
  for (int i = 0; i < kDraws; ++i) {
    RngStream a(9, 2 * i);
    RngStream b(9, 2 * i + 1);
    const cplx za = sample_channel(1, 1, a).h(0, 0);
    const cplx zb = sample_channel(1, 1, b).h(0, 0);
    cross += (za * std::conj(zb)).real();
    pa += std::norm(za);
    pb += std::norm(zb);
  }
  EXPECT_NEAR(cross / std::sqrt(pa * pb), 0.0, 0.01);
}

TEST(SampleChannel, RealPartsPassKolmogorovSmirnov) {
  RngStream rng(3, 0);
  std::vector<double> xs;
  while (xs.size() < 100'000) {
    const Channel ch = sample_channel(2, 5, rng);
    for (const auto& z : ch.h.entries()) xs.push_back(z.real());
  }
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    // Gaussian(0, 1/2) CDF.
    const double f = 0.5 * std::erfc(-xs[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  // Asymptotic critical value at the 0.001 level: 1.9495 / sqrt(n).
  EXPECT_LT(d, 1.9495 / std::sqrt(n));
}

TEST(SampleChannel, RejectsTallShapes) {
  RngStream rng(1, 1);
  EXPECT_THROW(sample_channel(4, 3, rng), ConfigError);
}

TEST(Fixture, RoundTripIsBitExact) {
  RngStream rng(5, 5);
  const Channel ch = sample_channel(2, 3, rng);
  std::stringstream ss;
  write_fixture(ss, ch);
  const Channel back = read_fixture(ss);
  EXPECT_EQ(back.h, ch.h);
  EXPECT_EQ(back.seed_tag, ch.seed_tag);
}

TEST(Fixture, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "mumimo_fixture_test.txt";
  RngStream rng(6, 1);
  const Channel ch = sample_channel(3, 5, rng);
  write_fixture(path.string(), ch);
  EXPECT_EQ(read_fixture(path.string()).h, ch.h);
  std::filesystem::remove(path);
}

TEST(Fixture, CommentsAndBlankLinesIgnored) {
  std::istringstream is("# a channel\n\n1 2   # header\n 1 0  0 -1.5 # row\n");
  const Channel ch = read_fixture(is);
  EXPECT_EQ(ch.h, (ComplexMatrix{{cplx(1, 0), cplx(0, -1.5)}}));
}

TEST(Fixture, OddValueCountNamesTheLine) {
  std::istringstream is("2 2\n1 0 0 0\n1 0 0\n");
  try {
    read_fixture(is);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 3u);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(Fixture, BadTokenNamesLineAndColumn) {
  std::istringstream is("1 2\n1 0 x 0\n");
  try {
    read_fixture(is);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2u);
    EXPECT_EQ(e.column, 3u);
  }
}

TEST(Fixture, NonFiniteValueRejected) {
  std::istringstream is("1 1\n1 0\n");
  EXPECT_NO_THROW(read_fixture(is));
  std::istringstream bad("1 1\n1 nan\n");
  try {
    read_fixture(bad);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line, 2u);
    EXPECT_EQ(e.column, 2u);
  }
}

TEST(Fixture, HeaderBodyDisagreement) {
  std::istringstream extra_rows("2 3\n" + std::string(4, ' ') +
                                "1 0 1 0 1 0\n1 0 1 0 1 0\n1 0 1 0 1 0\n1 0 1 0 1 0\n");
  EXPECT_THROW(read_fixture(extra_rows), DimensionMismatch);
  std::istringstream short_rows("2 3\n1 0 1 0 1 0\n");
  EXPECT_THROW(read_fixture(short_rows), DimensionMismatch);
  std::istringstream wide_row("1 1\n1 0 1 0\n");
  EXPECT_THROW(read_fixture(wide_row), DimensionMismatch);
  std::istringstream empty("# nothing\n");
  EXPECT_THROW(read_fixture(empty), ParseError);
}

}  // namespace
}  // namespace mumimo
