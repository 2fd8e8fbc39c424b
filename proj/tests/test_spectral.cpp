#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "fba2d/spectral.hpp"
#include "support.hpp"

using namespace fba2d;
using fba2d::testing::max_abs_diff;
using fba2d::testing::naive_dct2;
using fba2d::testing::random_image;

namespace {

using Pos = std::pair<std::size_t, std::size_t>;

// Enumerates the anti-diagonal order directly instead of reusing the mask code.
std::pair<std::set<Pos>, std::set<Pos>> brute_bands(std::size_t H, std::size_t W, double lo,
                                                    double hi) {
  std::vector<Pos> all;
  for (std::size_t i = 0; i < H; ++i)
    for (std::size_t j = 0; j < W; ++j) all.emplace_back(i, j);
  auto n_of = [&](double f) {
    return static_cast<std::size_t>(std::ceil(f * static_cast<double>(H * W) - 1e-9));
  };
  std::sort(all.begin(), all.end(), [](const Pos &a, const Pos &b) {
    const auto sa = a.first + a.second, sb = b.first + b.second;
    return sa != sb ? sa < sb : a.first < b.first;
  });
  std::set<Pos> low(all.begin(), all.begin() + static_cast<long>(n_of(lo)));
  std::set<Pos> high;
  for (auto it = all.rbegin(); it != all.rend() && high.size() < n_of(hi); ++it)
    if (!low.count(*it)) high.insert(*it);
  return {low, high};
}

} // namespace

TEST(Dct, ConstantImageHasOnlyDc) {
  const Shape s{8, 12, 3};
  ImageTensor img(s, 0.3);
  const Spectrum X = dct2(img);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 12; ++j) {
        const double expect = (i == 0 && j == 0) ? 0.3 * std::sqrt(96.0) : 0.0;
        EXPECT_NEAR(X.at(c, i, j), expect, 1e-12);
      }
}

TEST(Dct, ImpulseMatchesNaiveSum) {
  ImageTensor img(Shape{8, 8, 1});
  img.at(0, 0, 0) = 1.0;
  EXPECT_LE(max_abs_diff(dct2(img).values(), naive_dct2(img).values()), 1e-9);
}

TEST(Dct, RandomImagesMatchNaiveSum) {
  std::mt19937_64 rng(11);
  for (Shape s : {Shape{8, 8, 1}, Shape{5, 7, 3}, Shape{1, 6, 1}}) {
    const ImageTensor img = random_image(s, rng);
    EXPECT_LE(max_abs_diff(dct2(img).values(), naive_dct2(img).values()), 1e-9);
  }
}

TEST(Dct, RoundTripAndParseval) {
  std::mt19937_64 rng(3);
  for (int n = 0; n < 10; ++n) {
    const ImageTensor img = random_image(Shape{64, 64, 3}, rng);
    const Spectrum X = dct2(img);
    EXPECT_LE(max_abs_diff(idct2(X).values(), img.values()), 1e-6);
    EXPECT_NEAR(norm2(X) / norm2(img), 1.0, 1e-6);
    EXPECT_LE(max_abs_diff(dct2(idct2(X)).values(), X.values()), 1e-6);
  }
}

TEST(Dct, Linearity) {
  std::mt19937_64 rng(5);
  const Shape s{16, 16, 1};
  const ImageTensor x = random_image(s, rng), y = random_image(s, rng);
  const double a = 0.7, b = -1.3;
  const Spectrum lhs = dct2(a * x + b * y);
  const Spectrum rhs = a * dct2(x) + b * dct2(y);
  EXPECT_LE(max_abs_diff(lhs.values(), rhs.values()), 1e-9);
}

TEST(Idct, ZeroAndDcOnly) {
  const Shape s{6, 4, 1};
  EXPECT_EQ(idct2(Spectrum(s)), ImageTensor(s));
  Spectrum dc(s);
  dc.at(0, 0, 0) = 2.0;
  const ImageTensor flat = idct2(dc);
  for (double v : flat.values()) EXPECT_NEAR(v, 2.0 / std::sqrt(24.0), 1e-12);
}

TEST(Mask, FullLowBandSelectsEverything) {
  const auto m = FrequencyMask::bands(8, 8, 1.0, 0.0);
  EXPECT_EQ(m.count(), 64u);
}

TEST(Mask, SmallLowBandCount) {
  const auto m = FrequencyMask::bands(8, 8, 0.1, 0.0);
  EXPECT_EQ(m.count(), 7u);
  const auto [low, high] = brute_bands(8, 8, 0.1, 0.0);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) EXPECT_EQ(m.in_low_band(i, j), low.count({i, j}) == 1);
}

TEST(Mask, LowPlusHighOn64) {
  const auto m = FrequencyMask::bands(64, 64, 0.1, 0.1);
  EXPECT_EQ(m.count(), 820u);
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j)
      EXPECT_FALSE(m.in_low_band(i, j) && m.in_high_band(i, j));
}

TEST(Mask, MatchesBruteEnumerationOnRandomShapes) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<std::size_t> dim(1, 40);
  std::uniform_real_distribution<double> frac(0.0, 0.5);
  for (int n = 0; n < 200; ++n) {
    const std::size_t H = dim(rng), W = dim(rng);
    const double lo = frac(rng), hi = frac(rng);
    const auto m = FrequencyMask::bands(H, W, lo, hi);
    const auto [low, high] = brute_bands(H, W, lo, hi);
    EXPECT_EQ(m.count(), low.size() + high.size());
    for (std::size_t i = 0; i < H; ++i)
      for (std::size_t j = 0; j < W; ++j) {
        ASSERT_EQ(m.in_low_band(i, j), low.count({i, j}) == 1);
        ASSERT_EQ(m.in_high_band(i, j), high.count({i, j}) == 1);
        ASSERT_EQ(m.selected(i, j), m.in_low_band(i, j) || m.in_high_band(i, j));
      }
    if (H >= 32 && W >= 32) {
      const double share = static_cast<double>(m.count()) / static_cast<double>(H * W);
      EXPECT_NEAR(share, lo + hi, 0.02);
    }
  }
}

TEST(Mask, PositionsAreRowMajor) {
  const auto m = FrequencyMask::bands(10, 10, 0.2, 0.1);
  const auto &p = m.positions();
  EXPECT_TRUE(std::is_sorted(p.begin(), p.end()));
  for (std::size_t k : p) EXPECT_TRUE(m.selected(k / 10, k % 10));
}

TEST(Mask, RejectsBadFractions) {
  EXPECT_THROW(FrequencyMask::bands(8, 8, -0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(FrequencyMask::bands(8, 8, 0.0, 1.1), std::invalid_argument);
  EXPECT_THROW(FrequencyMask::bands(8, 8, 0.6, 0.5), std::invalid_argument);
  EXPECT_NO_THROW(FrequencyMask::bands(8, 8, 0.5, 0.5));
}

TEST(MaskedDirection, SinglePositionIsUnitVector) {
  const auto m = FrequencyMask::from_positions(4, 4, {{2, 1}});
  std::mt19937_64 rng(1);
  const Spectrum d = sample_masked_direction(m, 1, rng);
  EXPECT_NEAR(std::abs(d.at(0, 2, 1)), 1.0, 1e-15);
  EXPECT_NEAR(norm2(d), 1.0, 1e-15);
}

TEST(MaskedDirection, UnitNormAndZeroOffMask) {
  const auto m = FrequencyMask::bands(16, 16, 0.1, 0.1);
  std::mt19937_64 rng(2);
  for (int n = 0; n < 50; ++n) {
    const Spectrum d = sample_masked_direction(m, 3, rng);
    EXPECT_NEAR(norm2(d), 1.0, 1e-12);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 16; ++i)
        for (std::size_t j = 0; j < 16; ++j)
          if (!m.selected(i, j)) ASSERT_EQ(d.at(c, i, j), 0.0);
  }
}

TEST(MaskedDirection, SeedReproducesBits) {
  const auto m = FrequencyMask::bands(16, 16, 0.2, 0.0);
  std::mt19937_64 a(99), b(99);
  EXPECT_EQ(sample_masked_direction(m, 3, a), sample_masked_direction(m, 3, b));
}

TEST(MaskedDirection, EmptyMaskRejected) {
  const auto m = FrequencyMask::from_positions(4, 4, {});
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_masked_direction(m, 1, rng), std::invalid_argument);
}
