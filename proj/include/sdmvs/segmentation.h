#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sdmvs/imaging.h"

namespace sdmvs {

// Instance ids per pixel; 0 marks an unlabeled pixel, which is treated as a
// singleton instance of its own.
class LabelMap {
 public:
  LabelMap() = default;
  LabelMap(int width, int height, std::uint32_t fill = 0);
  LabelMap(int width, int height, std::vector<std::uint32_t> labels);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint32_t at(int x, int y) const {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint32_t& at(int x, int y) {
    return labels_[static_cast<std::size_t>(y) * width_ + x];
  }
  bool SameInstance(int x0, int y0, int x1, int y1) const {
    const std::uint32_t a = at(x0, y0);
    return a != 0 && a == at(x1, y1);
  }
  const std::vector<std::uint32_t>& labels() const { return labels_; }

  // Nearest-neighbour 2x downsample matching the image pyramid's pixel grid.
  LabelMap Downsample() const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint32_t> labels_;
};

// Number of same-instance pixels between p and the instance boundary (or the
// image border) in each direction, capped. "down" is +y, "up" is -y.
struct Distances {
  int left = 0;
  int right = 0;
  int down = 0;
  int up = 0;

  int sum() const { return left + right + down + up; }
  bool operator==(const Distances&) const = default;
};

class BoundaryDistances {
 public:
  BoundaryDistances() = default;
  BoundaryDistances(int width, int height, int cap);

  int width() const { return width_; }
  int height() const { return height_; }
  int cap() const { return cap_; }
  const Distances& at(int x, int y) const {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }
  Distances& at(int x, int y) {
    return values_[static_cast<std::size_t>(y) * width_ + x];
  }

 private:
  int width_ = 0;
  int height_ = 0;
  int cap_ = 0;
  std::vector<Distances> values_;
};

// Linear-time running scans, one per direction.
BoundaryDistances ComputeBoundaryDistances(const LabelMap& labels,
                                           int cap_distance);

// Matching window reshaped from the boundary distances.
//
// `samples_h` x `samples_v` is the sample grid; neighbouring samples are
// `kStride` pixels apart, so the pixel footprint spans 2 * samples_h - 1
// columns. For equal distances this reproduces the undeformed L x L window
// read every other row and column, and samples_h * samples_v never exceeds
// floor((L/2)^2).
struct DeformedPatch {
  static constexpr int kStride = 2;

  int samples_h = 1;
  int samples_v = 1;
  // Offset exactly as written in the shape/offset equations,
  // ((d_l - d_r) / (d_l + d_r) * L_h, (d_d - d_u) / (d_d + d_u) * L_v),
  // zero components when a denominator vanishes.
  Eigen::Vector2d equation_offset = Eigen::Vector2d::Zero();
  // Applied integer displacement of the window center from p, pointing into
  // the instance and clamped so the footprint stays inside it.
  Eigen::Vector2i shift = Eigen::Vector2i::Zero();
  int sample_budget = 1;
  bool degenerate = false;

  int sample_count() const;
  // Visits (dx, dy) offsets from p of every emitted sample, row-major,
  // decimated uniformly if the grid would exceed the budget.
  template <typename Fn>
  void ForEachSample(Fn&& fn) const;
};

// Shape and offset for one pixel from its distances. `L` must be odd and >= 5.
DeformedPatch DeformPatch(const Distances& d, int L);

// DeformPatch plus the label check: if the clamped center leaves p's
// instance (non-convex shapes), the shift falls back to x-only, y-only, zero.
DeformedPatch DeformPatchAt(const LabelMap& labels,
                            const BoundaryDistances& distances, int x, int y,
                            int L);

// Undeformed window (equal distances, no shift).
DeformedPatch SquarePatch(int L);

enum class Direction : int {
  kUp = 0,
  kRight,
  kDown,
  kLeft,
  kUpRight,
  kDownRight,
  kDownLeft,
  kUpLeft,
};
inline constexpr int kDirectionCount = 8;

// Branch geometry for propagation. Lengths are in patch units (one unit is
// DeformedPatch::kStride pixels), so l_up + l_down == samples_v and
// l_left + l_right == samples_h.
struct PropagationPattern {
  // Indexed by Direction.
  std::array<double, kDirectionCount> length{};
  // Slant of each corner branch measured from the horizontal axis, indexed
  // by Direction (axis entries are 0 or pi/2).
  std::array<double, kDirectionCount> angle{};
  // Unit pixel-space direction of each branch (y down).
  std::array<Eigen::Vector2d, kDirectionCount> direction{};

  double pixel_length(Direction d) const {
    return length[static_cast<int>(d)] * DeformedPatch::kStride;
  }
};

PropagationPattern MakePropagationPattern(const Distances& d, int samples_h,
                                          int samples_v);

// Opposite branch of every direction.
Direction Opposite(Direction d);

struct BranchSample {
  int domain;  // Direction index of the search domain the sample belongs to
  int x;
  int y;
};

// Enumerates every integer pixel along the eight branches of `pattern`
// centered at (x, y) (stride 1, center excluded, clipped to the image) and
// assigns each to a search domain. Each opposite pair is split at the
// midpoint of the summed branch lengths rather than at the center.
// With `instance` set, a branch stops at the first pixel outside the
// center's instance.
void EnumerateBranchSamples(const PropagationPattern& pattern, int x, int y,
                            int width, int height, const LabelMap* instance,
                            std::vector<BranchSample>& out);

// (min, max) of `depths` over the patch samples around (x, y), clamped to
// [global_min, global_max]. Throws Error(kEmptyPatch) if no sample is inside
// the map.
std::pair<double, double> DepthInterval(const DeformedPatch& patch, int x,
                                        int y, std::span<const float> depths,
                                        int width, int height,
                                        double global_min, double global_max);

struct FallbackSegmenterOptions {
  // Maximum chromaticity difference between 4-neighbours of one region
  // (colour input only).
  float chroma_tolerance = 0.02f;
  // Maximum intensity difference between 4-neighbours of one region.
  float intensity_tolerance = 0.1f;
  // Regions smaller than this are merged into their largest neighbour.
  int min_region = 16;
};

// Connected components of colour-consistent regions. Adequate for
// piecewise-constant synthetic scenes; real data should use external masks.
LabelMap FallbackSegment(const ImageView& img,
                         const FallbackSegmenterOptions& options = {});

template <typename Fn>
void DeformedPatch::ForEachSample(Fn&& fn) const {
  const int total = samples_h * samples_v;
  const int step = total > sample_budget
                       ? (total + sample_budget - 1) / sample_budget
                       : 1;
  // Even grids straddle the center: offsets -5,-3,-1,1,3,5 for six samples.
  const int x0 = shift.x() - (samples_h - 1);
  const int y0 = shift.y() - (samples_v - 1);
  for (int i = 0; i < total; i += step) {
    fn(x0 + kStride * (i % samples_h), y0 + kStride * (i / samples_h));
  }
}

}  // namespace sdmvs
