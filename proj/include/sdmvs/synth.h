#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sdmvs/geometry.h"
#include "sdmvs/imaging.h"
#include "sdmvs/io.h"
#include "sdmvs/pipeline.h"
#include "sdmvs/segmentation.h"

namespace sdmvs {

// Textured rectangle center + s * axis_u + t * axis_v, |s| <= half_u,
// |t| <= half_v. The albedo is `color` modulated by value noise with lattice
// spacing `cell` (scene units) and, optionally, a gaussian spotlight.
struct SynthSurface {
  int id = 0;
  Vector3d center = Vector3d::Zero();
  Vector3d axis_u = Vector3d::UnitX();
  Vector3d axis_v = Vector3d::UnitY();
  double half_u = 1.0;
  double half_v = 1.0;
  Vector3d color = Vector3d::Constant(0.5);
  double contrast = 0.6;  // 0: constant albedo
  double cell = 0.12;
  std::uint64_t texture_seed = 0;
  bool spotlight = false;
  Vector3d spot_center = Vector3d::Zero();
  double spot_radius = 1.0;
  double spot_floor = 0.5;

  Vector3d normal() const { return axis_u.cross(axis_v); }
  Vector3d Albedo(const Vector3d& X) const;
};

struct RayHit {
  int surface = -1;  // index into the surface list
  double t = 0.0;
  Vector3d point = Vector3d::Zero();
};

// Nearest rectangle hit along origin + t * dir with t > 0.
std::optional<RayHit> CastRay(std::span<const SynthSurface> surfaces,
                              const Vector3d& origin, const Vector3d& dir);

// Euclidean distance to the closest rectangle.
double DistanceToScene(std::span<const SynthSurface> surfaces, const Vector3d& X);

struct SynthView {
  Camera camera;
  Image image;                 // RGB in [0, 1]
  std::vector<double> depth;   // camera z, 0 where no surface is hit
  std::vector<Vector3d> normal;  // camera frame, facing the camera
  LabelMap labels;             // surface id, 0 for empty pixels
  // Hit and seen unoccluded by at least one other view.
  std::vector<std::uint8_t> visible;
};

struct SynthScene {
  std::string preset;
  std::uint64_t seed = 0;
  double depth_min = 2.0;
  double depth_max = 8.0;
  std::vector<SynthSurface> surfaces;
  std::vector<SynthView> views;
};

struct SynthOptions {
  int width = 160;
  int height = 120;
  int view_count = 4;  // up to 4 rig positions
};

std::vector<std::string_view> SynthPresets();

// Throws Error(kUnknownPreset) for names outside SynthPresets().
SynthScene GenerateScene(std::string_view preset, std::uint64_t seed,
                         const SynthOptions& options = {});

// Pipeline inputs that use the ground-truth labels as instance masks.
std::vector<ViewInput> SceneInputs(const SynthScene& scene);

// Settings for synthetic runs: one downsampling step, two sweeps per outer
// iteration, best-source cost and the scene depth range.
PipelineConfig SynthPipelineConfig(const SynthScene& scene);

DepthMapFile GroundTruthMap(const SynthView& view);

// Writes images/, labels/, gt/ (SDMD maps and visibility masks), scene.txt and
// synth.cfg into `dir`. Returns the manifest path.
std::string WriteScene(const SynthScene& scene, const std::string& dir);

// Pixels within `radius` (Chebyshev) of a 4-neighbour pair whose GT depths
// differ by more than `rel_jump`, or of a hit/empty transition.
std::vector<std::uint8_t> DiscontinuityBand(std::span<const double> depth, int width,
                                            int height, int radius = 3,
                                            double rel_jump = 0.05);

struct ScoreRow {
  double threshold = 0.0;  // relative depth error
  double accuracy = 0.0;   // percent
  double completeness = 0.0;
  double f1 = 0.0;
};

// Accumulates relative-depth-error counts over any number of views.
// Accuracy: estimated pixels (positive finite depth on a GT pixel) within the
// threshold over all estimated pixels. Completeness: GT pixels whose estimate
// is within the threshold over all GT pixels.
class DepthScorer {
 public:
  explicit DepthScorer(std::vector<double> thresholds = {0.005, 0.01, 0.02});

  // Throws Error(kDimensionMismatch) when the spans differ in length. An empty
  // mask means every GT pixel counts.
  void Add(std::span<const float> estimate, std::span<const double> gt,
           std::span<const std::uint8_t> mask = {});

  std::vector<ScoreRow> Rows() const;
  std::size_t gt_pixels() const { return gt_pixels_; }
  std::size_t estimated_pixels() const { return estimated_pixels_; }

 private:
  std::vector<double> thresholds_;
  std::vector<std::size_t> within_;
  std::size_t gt_pixels_ = 0;
  std::size_t estimated_pixels_ = 0;
};

}  // namespace sdmvs
