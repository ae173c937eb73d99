#pragma once

#include <optional>
#include <vector>

#include "sdmvs/geometry.h"
#include "sdmvs/imaging.h"
#include "sdmvs/segmentation.h"

namespace sdmvs {

// Immutable per-level inputs of one view.
struct ViewLevel {
  Camera camera;
  ImageView gray;
  ImageView color;
  Image laplacian;
  LabelMap labels;
  // Labels renamed to the level-0 instance that covers most of each segment,
  // so pixels of different levels can be compared.
  LabelMap instances;
  BoundaryDistances distances;
  // One deformed patch per pixel, row-major.
  std::vector<DeformedPatch> patches;

  int width() const { return camera.width(); }
  int height() const { return camera.height(); }
  const DeformedPatch& patch(int x, int y) const {
    return patches[static_cast<std::size_t>(y) * camera.width() + x];
  }
};

struct ViewBuildOptions {
  int downsample_count = 3;
  int patch_side = 11;
  // 0 selects 2 * patch_side.
  int cap_distance = 0;
};

// Cameras, packed gray/colour pyramids, labels and derived patches of a view.
// Coarse label maps are taken from `coarse_labels` when given (index l - 1
// holds level l), otherwise downsampled from level 0.
class ViewData {
 public:
  ViewData(const Camera& camera, const Image& color, const LabelMap& labels,
           const ViewBuildOptions& options,
           const std::vector<LabelMap>& coarse_labels = {});

  ViewData(const ViewData&) = delete;
  ViewData& operator=(const ViewData&) = delete;

  int level_count() const { return static_cast<int>(levels_.size()); }
  const ViewLevel& level(int l) const { return levels_[l]; }
  const Image& color() const { return color_; }
  const ScalePyramid& gray_pyramid() const { return gray_pyramid_; }
  int patch_side() const { return patch_side_; }

 private:
  Image color_;
  ScalePyramid gray_pyramid_;
  ScalePyramid color_pyramid_;
  std::vector<ViewLevel> levels_;
  int patch_side_ = 11;
};

// Mutable hypothesis and cost map of one view at one level.
class HypothesisMap {
 public:
  HypothesisMap() = default;
  HypothesisMap(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  const PlaneHypothesis& hypothesis(int x, int y) const { return hyps_[index(x, y)]; }
  float cost(int x, int y) const { return costs_[index(x, y)]; }
  float depth(int x, int y) const { return depths_[index(x, y)]; }

  void Set(int x, int y, const PlaneHypothesis& h, float cost) {
    const std::size_t i = index(x, y);
    hyps_[i] = h;
    depths_[i] = static_cast<float>(h.depth);
    costs_[i] = cost;
  }
  void SetCost(int x, int y, float cost) { costs_[index(x, y)] = cost; }

  std::span<const float> depths() const { return depths_; }
  std::span<const float> costs() const { return costs_; }
  std::span<const PlaneHypothesis> hypotheses() const { return hyps_; }

  bool operator==(const HypothesisMap&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<PlaneHypothesis> hyps_;
  std::vector<float> depths_;
  std::vector<float> costs_;
};

inline bool operator==(const PlaneHypothesis& a, const PlaneHypothesis& b) {
  return a.depth == b.depth && a.normal == b.normal;
}

}  // namespace sdmvs
