#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sdmvs/geometry.h"
#include "sdmvs/imaging.h"
#include "sdmvs/view.h"

namespace sdmvs {

struct FusedPoint {
  Eigen::Vector3f position;
  Eigen::Vector3f normal;
  std::array<std::uint8_t, 3> color{};
};

struct FusedPointCloud {
  std::vector<FusedPoint> points;
};

struct FusionParams {
  // Views agreeing on a point, the reference included.
  int consistency_min = 2;
  double rel_depth_tol = 0.01;
  double normal_angle_tol_deg = 10.0;
};

struct FusionView {
  Camera camera;
  const Image* color = nullptr;
  const HypothesisMap* map = nullptr;
};

// Whether view j's estimate at the projection of (world point X, world
// normal n) agrees with it.
bool ConsistentInView(const FusionView& view, const Vector3d& X,
                      const Vector3d& n_world, const FusionParams& params);

// Consistency fusion in view order; pixels used by an emitted point are not
// reused as references.
FusedPointCloud Fuse(const std::vector<FusionView>& views,
                     const FusionParams& params);

}  // namespace sdmvs
