#include <gtest/gtest.h>

#include <random>

#include "sdmvs/error.h"
#include "sdmvs/imaging.h"
#include "support.h"

namespace sdmvs {
namespace {

using fixture::ThrowsCode;
using fixture::Uniform;

TEST(Downsample, ConstantImageKeepsItsValue) {
  const Image img(32, 24, 3, 0.5f);
  const Image half = Downsample(img);
  ASSERT_EQ(half.width(), 16);
  ASSERT_EQ(half.height(), 12);
  for (float v : half.samples()) EXPECT_EQ(v, 0.5f);
}

TEST(Downsample, RejectsTinyImages) {
  const Image img(2, 2, 1, std::vector<float>{0, 0, 1, 1});
  EXPECT_TRUE(ThrowsCode([&] { Downsample(img); }, ErrorCode::kTooSmall));
}

TEST(Downsample, MatchesBlockMean) {
  std::mt19937_64 rng(5);
  const Image img = fixture::RandomImage(rng, 32, 32, 3);
  const Image half = Downsample(img);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double mean = (static_cast<double>(img.at(2 * x, 2 * y, c)) + img.at(2 * x + 1, 2 * y, c) +
                             img.at(2 * x, 2 * y + 1, c) + img.at(2 * x + 1, 2 * y + 1, c)) / 4.0;
        EXPECT_NEAR(half.at(x, y, c), mean, 1e-7);
      }
    }
  }
}

TEST(Pyramid, LevelSizesAndArenaBound) {
  const Image img(512, 512, 1, 0.25f);
  const ScalePyramid pyr = ScalePyramid::Build(img, 3);
  ASSERT_EQ(pyr.level_count(), 4);
  const int sides[] = {512, 256, 128, 64};
  for (int l = 0; l < 4; ++l) {
    EXPECT_EQ(pyr.level(l).width, sides[l]);
    EXPECT_EQ(pyr.level(l).height, sides[l]);
  }
  const double level0 = 512.0 * 512.0;
  EXPECT_LE(static_cast<double>(pyr.arena_size()),
            4.0 / 3.0 * level0 + pyr.level_count() * ScalePyramid::kLevelAlignment);
  // Level 0 is stored verbatim.
  EXPECT_EQ(pyr.level(0).at(100, 200), 0.25f);
}

TEST(Pyramid, RequiresAtLeastOneDownsampling) {
  const Image img(64, 64, 1);
  EXPECT_TRUE(ThrowsCode([&] { ScalePyramid::Build(img, 0); }, ErrorCode::kInvalidArgument));
}

TEST(Laplacian, HarmonicImagesGiveZero) {
  const Image flat(16, 16, 3, 0.7f);
  const Image lap = LaplacianImage(flat);
  for (float v : lap.samples()) EXPECT_NEAR(v, 0.0f, 1e-6);

  Image ramp(32, 16, 1);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 32; ++x) ramp.at(x, y) = static_cast<float>(x) / 32.0f;
  }
  for (int y = 1; y < 15; ++y) {
    for (int x = 1; x < 31; ++x) EXPECT_NEAR(Laplacian(ramp, x, y)[0], 0.0, 1e-6);
  }
}

TEST(Laplacian, MatchesStencil) {
  std::mt19937_64 rng(6);
  const Image img = fixture::RandomImage(rng, 20, 14, 3);
  const Image lap = LaplacianImage(img);
  for (int y = 0; y < 14; ++y) {
    for (int x = 0; x < 20; ++x) {
      for (int c = 0; c < 3; ++c) {
        EXPECT_NEAR(lap.at(x, y, c), oracle::Stencil(img, x, y, c), 1e-6);
      }
    }
  }
}

TEST(Bilinear, IntegerAndMidpointSamples) {
  const Image img(2, 1, 1, std::vector<float>{0.0f, 1.0f});
  EXPECT_EQ(SampleBilinear(img, 0, 0)[0], 0.0f);
  EXPECT_EQ(SampleBilinear(img, 1, 0)[0], 1.0f);
  EXPECT_EQ(SampleBilinear(img, 0.5, 0)[0], 0.5f);
  EXPECT_TRUE(ThrowsCode([&] { SampleBilinear(img, 1.5, 0); }, ErrorCode::kOutOfBounds));
}

TEST(Bilinear, MatchesFourTapFormula) {
  std::mt19937_64 rng(7);
  const Image img = fixture::RandomImage(rng, 24, 18, 2);
  for (int i = 0; i < 1000; ++i) {
    const double x = Uniform(rng, 0, 23), y = Uniform(rng, 0, 17);
    const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, 23), y1 = std::min(y0 + 1, 17);
    const double fx = x - x0, fy = y - y0;
    const auto got = SampleBilinear(img, x, y);
    for (int c = 0; c < 2; ++c) {
      const double expected = (1 - fx) * (1 - fy) * img.at(x0, y0, c) + fx * (1 - fy) * img.at(x1, y0, c) +
                              (1 - fx) * fy * img.at(x0, y1, c) + fx * fy * img.at(x1, y1, c);
      EXPECT_NEAR(got[c], expected, 1e-7);
    }
  }
}

TEST(Bilinear, GraySamplerAgreesWithGeneralSampler) {
  std::mt19937_64 rng(8);
  const Image img = fixture::RandomImage(rng, 24, 18, 1);
  for (int i = 0; i < 1000; ++i) {
    const double x = Uniform(rng, 0, 23), y = Uniform(rng, 0, 17);
    EXPECT_NEAR(SampleGray(img, static_cast<float>(x), static_cast<float>(y)),
                SampleBilinear(img, static_cast<float>(x), static_cast<float>(y))[0], 1e-6);
  }
}

}  // namespace
}  // namespace sdmvs
