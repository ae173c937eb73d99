#include <gtest/gtest.h>

#include <random>

#include "sdmvs/error.h"
#include "sdmvs/synth.h"
#include "support.h"

namespace sdmvs {
namespace {

TEST(Synth, SameSeedSameScene) {
  for (std::string_view preset : SynthPresets()) {
    const SynthScene a = GenerateScene(preset, 9, SynthOptions{64, 48, 3});
    const SynthScene b = GenerateScene(preset, 9, SynthOptions{64, 48, 3});
    ASSERT_EQ(a.views.size(), 3u);
    for (int v = 0; v < 3; ++v) {
      EXPECT_EQ(a.views[v].image.samples(), b.views[v].image.samples()) << preset;
      EXPECT_EQ(a.views[v].depth, b.views[v].depth) << preset;
      EXPECT_EQ(a.views[v].labels.labels(), b.views[v].labels.labels()) << preset;
    }
    const SynthScene c = GenerateScene(preset, 10, SynthOptions{64, 48, 3});
    EXPECT_NE(a.views[0].image.samples(), c.views[0].image.samples()) << preset;
  }
}

TEST(Synth, UnknownPresetIsRejected) {
  EXPECT_TRUE(fixture::ThrowsCode([] { GenerateScene("four-planes", 0); }, ErrorCode::kUnknownPreset));
}

TEST(Synth, DepthAndLabelsAgreeWithRayCasting) {
  const SynthScene s = GenerateScene("three-planes", 0);
  const SynthView& v = s.views[1];
  for (int y = 0; y < 120; y += 7) {
    for (int x = 0; x < 160; x += 7) {
      const Vector3d dir = v.camera.R().transpose() * v.camera.PixelRay(Vector2d(x, y));
      const auto hit = CastRay(s.surfaces, v.camera.C(), dir);
      const std::size_t i = static_cast<std::size_t>(y) * 160 + x;
      if (!hit) {
        EXPECT_EQ(v.depth[i], 0.0);
        EXPECT_EQ(v.labels.at(x, y), 0u);
        continue;
      }
      EXPECT_NEAR(v.depth[i], v.camera.WorldToCamera(hit->point).z(), 1e-9);
      EXPECT_EQ(static_cast<int>(v.labels.at(x, y)), s.surfaces[hit->surface].id);
      EXPECT_NEAR(DistanceToScene(s.surfaces, hit->point), 0.0, 1e-9);
      EXPECT_LT(v.normal[i].dot(v.camera.PixelRay(Vector2d(x, y))), 0.0);
    }
  }
}

TEST(Synth, BandMarksDepthJumps) {
  std::vector<double> depth(20 * 10, 2.0);
  for (int y = 0; y < 10; ++y) {
    for (int x = 10; x < 20; ++x) depth[y * 20 + x] = 4.0;
  }
  const auto band = DiscontinuityBand(depth, 20, 10, 3);
  for (int x = 0; x < 20; ++x) {
    const bool near = x >= 6 && x <= 13;
    EXPECT_EQ(band[5 * 20 + x] != 0, near) << x;
  }
}

TEST(Scorer, PerfectEstimate) {
  const std::vector<double> gt = {1, 2, 3, 4};
  const std::vector<float> est = {1, 2, 3, 4};
  DepthScorer scorer;
  scorer.Add(est, gt);
  for (const ScoreRow& r : scorer.Rows()) {
    EXPECT_EQ(r.accuracy, 100.0);
    EXPECT_EQ(r.completeness, 100.0);
    EXPECT_EQ(r.f1, 100.0);
  }
}

TEST(Scorer, HalfMissing) {
  const std::vector<double> gt = {1, 2, 3, 4};
  const std::vector<float> est = {1, 2, 0, 0};
  DepthScorer scorer;
  scorer.Add(est, gt);
  const ScoreRow r = scorer.Rows()[1];
  EXPECT_EQ(r.completeness, 50.0);
  EXPECT_EQ(r.accuracy, 100.0);
  EXPECT_NEAR(r.f1, 200.0 / 3.0, 1e-9);
  const std::vector<float> short_est = {1, 2};
  EXPECT_TRUE(fixture::ThrowsCode([&] { scorer.Add(short_est, gt); }, ErrorCode::kDimensionMismatch));
}

TEST(Scorer, MatchesDirectCounts) {
  std::mt19937_64 rng(81);
  std::vector<double> gt(5000);
  std::vector<float> est(5000);
  std::vector<std::uint8_t> mask(5000);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    gt[i] = fixture::Uniform(rng, 0, 1) < 0.1 ? 0.0 : fixture::Uniform(rng, 2, 8);
    const double rel = fixture::Uniform(rng, -0.03, 0.03);
    est[i] = fixture::Uniform(rng, 0, 1) < 0.1 ? 0.0f : static_cast<float>(gt[i] * (1 + rel) + (gt[i] == 0 ? 3 : 0));
    mask[i] = fixture::Uniform(rng, 0, 1) < 0.8;
  }
  DepthScorer scorer({0.01});
  scorer.Add(est, gt, mask);
  std::size_t gt_n = 0, est_n = 0, within = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!mask[i] || !(gt[i] > 0)) continue;
    ++gt_n;
    if (!(est[i] > 0)) continue;
    ++est_n;
    within += std::abs(est[i] - gt[i]) / gt[i] <= 0.01;
  }
  const ScoreRow r = scorer.Rows()[0];
  EXPECT_EQ(scorer.gt_pixels(), gt_n);
  EXPECT_EQ(scorer.estimated_pixels(), est_n);
  EXPECT_NEAR(r.completeness, 100.0 * within / gt_n, 1e-9);
  EXPECT_NEAR(r.accuracy, 100.0 * within / est_n, 1e-9);
}

}  // namespace
}  // namespace sdmvs
