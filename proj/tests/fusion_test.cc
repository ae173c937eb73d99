#include <gtest/gtest.h>

#include "sdmvs/fusion.h"
#include "sdmvs/synth.h"

namespace sdmvs {
namespace {

class GroundTruthFusion : public ::testing::Test {
 protected:
  void SetUp() override {
    scene_ = GenerateScene("three-planes", 0);
    for (const SynthView& v : scene_.views) maps_.push_back(FromDepthMapFile(GroundTruthMap(v)));
  }

  std::vector<FusionView> Views() const {
    std::vector<FusionView> out;
    for (std::size_t v = 0; v < maps_.size(); ++v) {
      out.push_back({scene_.views[v].camera, &scene_.views[v].image, &maps_[v]});
    }
    return out;
  }

  SynthScene scene_;
  std::vector<HypothesisMap> maps_;
};

TEST_F(GroundTruthFusion, PerfectMapsGiveExactPoints) {
  const FusedPointCloud cloud = Fuse(Views(), FusionParams{});
  std::size_t visible = 0;
  for (const SynthView& v : scene_.views) {
    for (auto m : v.visible) visible += m;
  }
  ASSERT_FALSE(cloud.points.empty());
  std::size_t close = 0;
  for (const FusedPoint& p : cloud.points) {
    close += DistanceToScene(scene_.surfaces, p.position.cast<double>()) <= 1e-3;
  }
  EXPECT_GE(close, 0.99 * cloud.points.size());
  // Every point merges at least two visible pixels.
  EXPECT_GE(2 * cloud.points.size(), visible / 4);
}

TEST_F(GroundTruthFusion, SingleViewCannotReachConsensus) {
  const auto views = Views();
  EXPECT_TRUE(Fuse({views[0]}, FusionParams{}).points.empty());
}

TEST_F(GroundTruthFusion, CorruptedViewDegradesGracefully) {
  HypothesisMap& bad = maps_[2];
  std::mt19937_64 rng(71);
  for (int y = 0; y < bad.height(); ++y) {
    for (int x = 0; x < bad.width(); ++x) {
      bad.Set(x, y, {std::uniform_real_distribution<double>(2, 8)(rng), Vector3d(0, 0, -1)}, 1.0f);
    }
  }
  const FusedPointCloud cloud = Fuse(Views(), FusionParams{});
  ASSERT_FALSE(cloud.points.empty());
  std::size_t close = 0;
  for (const FusedPoint& p : cloud.points) {
    close += DistanceToScene(scene_.surfaces, p.position.cast<double>()) <= 0.05;
  }
  EXPECT_GE(close, 0.9 * cloud.points.size());
}

TEST_F(GroundTruthFusion, ConsistencyCheckUsesDepthAndNormal) {
  const auto views = Views();
  const SynthView& v0 = scene_.views[0];
  int checked = 0;
  for (int y = 20; y < 100; y += 10) {
    for (int x = 20; x < 140; x += 10) {
      const std::size_t i = static_cast<std::size_t>(y) * 160 + x;
      if (!v0.visible[i]) continue;
      const Vector3d X = v0.camera.CameraToWorld(v0.depth[i] * v0.camera.PixelRay(Vector2d(x, y)));
      const Vector3d n = v0.camera.R().transpose() * v0.normal[i];
      EXPECT_TRUE(ConsistentInView(views[0], X, n, FusionParams{}));
      const Vector3d far = v0.camera.CameraToWorld(1.1 * v0.depth[i] * v0.camera.PixelRay(Vector2d(x, y)));
      EXPECT_FALSE(ConsistentInView(views[0], far, n, FusionParams{}));
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

}  // namespace
}  // namespace sdmvs
