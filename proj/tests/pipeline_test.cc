#include <gtest/gtest.h>

#include "sdmvs/pipeline.h"
#include "sdmvs/synth.h"

namespace sdmvs {
namespace {

PipelineConfig SmallConfig(const SynthScene& scene) {
  PipelineConfig config = SynthPipelineConfig(scene);
  config.outer_iterations = 1;
  config.sweeps_per_iteration = 1;
  config.min_anchors = 10;
  return config;
}

SynthScene SmallScene(std::string_view preset) {
  return GenerateScene(preset, 5, SynthOptions{64, 48, 3});
}

TEST(Pipeline, ReplayIsIdentical) {
  const SynthScene scene = SmallScene("three-planes");
  Reconstruction a(SceneInputs(scene), SmallConfig(scene));
  Reconstruction b(SceneInputs(scene), SmallConfig(scene));
  a.Run();
  b.Run();
  for (int v = 0; v < a.view_count(); ++v) {
    EXPECT_TRUE(a.result(v) == b.result(v));
    EXPECT_EQ(a.weights(v), b.weights(v));
  }
}

TEST(Pipeline, WorkerCountDoesNotChangeResults) {
  const SynthScene scene = SmallScene("occlusion-step");
  PipelineConfig one = SmallConfig(scene), three = SmallConfig(scene);
  three.threads = 3;
  Reconstruction a(SceneInputs(scene), one);
  Reconstruction b(SceneInputs(scene), three);
  a.Run();
  b.Run();
  for (int v = 0; v < a.view_count(); ++v) {
    for (int l = 0; l < static_cast<int>(a.maps(v).size()); ++l) {
      EXPECT_TRUE(a.maps(v)[l] == b.maps(v)[l]) << v << "/" << l;
    }
  }
}

TEST(Pipeline, ZeroIterationsLeaveTheInitialState) {
  const SynthScene scene = SmallScene("three-planes");
  PipelineConfig config = SmallConfig(scene);
  config.outer_iterations = 0;
  Reconstruction a(SceneInputs(scene), config);
  a.Run();
  Reconstruction b(SceneInputs(scene), config);
  b.Initialize();
  for (int v = 0; v < a.view_count(); ++v) EXPECT_TRUE(a.result(v) == b.result(v));
  EXPECT_TRUE(a.stats().empty());
}

TEST(Pipeline, CollapsedDepthRangeInitializesConstantDepth) {
  const SynthScene scene = SmallScene("three-planes");
  PipelineConfig config = SmallConfig(scene);
  config.depth_min = config.depth_max = 4.0;
  Reconstruction rec(SceneInputs(scene), config);
  rec.Initialize();
  for (float d : rec.result(0).depths()) EXPECT_EQ(d, 4.0f);
}

TEST(Pipeline, CommittedCostsNeverIncrease) {
  const SynthScene scene = SmallScene("textureless-wall");
  PipelineConfig config = SmallConfig(scene);
  config.outer_iterations = 2;
  long violations = 0, steps = 0;
  bool saw_refinement = false;
  const StepMonitor monitor = [&](const StepEvent& e) {
    ++steps;
    saw_refinement = saw_refinement || e.stage == StepEvent::Stage::kRefinement;
    const auto before = e.before->costs();
    const auto after = e.after->costs();
    for (std::size_t i = 0; i < before.size(); ++i) violations += after[i] > before[i];
  };
  Reconstruction rec(SceneInputs(scene), config);
  rec.Run(&monitor);
  EXPECT_GT(steps, 0);
  EXPECT_TRUE(saw_refinement);
  EXPECT_EQ(violations, 0);
}

TEST(Pipeline, WeightsStayOnTheConstrainedSimplex) {
  const SynthScene scene = SmallScene("three-planes");
  PipelineConfig config = SmallConfig(scene);
  config.outer_iterations = 2;
  config.min_anchors = 1;
  Reconstruction rec(SceneInputs(scene), config);
  rec.Run();
  int updated = 0;
  for (const IterationStats& s : rec.stats()) {
    if (s.anchors_used < config.min_anchors) {
      // Too few anchors: the update is skipped and the weights carry over.
      if (s.iteration == 1) {
        EXPECT_EQ(s.weights, config.initial_weights);
      }
      continue;
    }
    ++updated;
    const Weights& w = s.weights;
    EXPECT_NEAR(w.ms + w.rp + w.pc, 1.0, 1e-9);
    EXPECT_GE(std::min({w.ms, w.rp, w.pc}), config.eta - 1e-9);
  }
  EXPECT_GT(updated, 0);
}

TEST(Pipeline, SmallSceneReconstructsMostPixels) {
  const SynthScene scene = SmallScene("three-planes");
  PipelineConfig config = SmallConfig(scene);
  config.outer_iterations = 2;
  config.sweeps_per_iteration = 2;
  Reconstruction rec(SceneInputs(scene), config);
  rec.Run();
  DepthScorer scorer;
  for (int v = 0; v < rec.view_count(); ++v) {
    scorer.Add(rec.result(v).depths(), scene.views[v].depth, scene.views[v].visible);
  }
  EXPECT_GT(scorer.Rows()[2].completeness, 70.0);
}

TEST(Pipeline, ActiveViewsRestrictEstimation) {
  const SynthScene scene = SmallScene("three-planes");
  PipelineConfig config = SmallConfig(scene);
  config.active_views = {1};
  Reconstruction rec(SceneInputs(scene), config);
  rec.Run();
  EXPECT_FALSE(rec.estimated(0));
  EXPECT_TRUE(rec.estimated(1));
  EXPECT_FALSE(rec.estimated(2));
}

}  // namespace
}  // namespace sdmvs
