#include "sdmvs/segmentation.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "sdmvs/error.h"

namespace sdmvs {

LabelMap::LabelMap(int width, int height, std::uint32_t fill)
    : width_(width),
      height_(height),
      labels_(static_cast<std::size_t>(width) * height, fill) {}

LabelMap::LabelMap(int width, int height, std::vector<std::uint32_t> labels)
    : width_(width), height_(height), labels_(std::move(labels)) {
  if (labels_.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch,
                "label count does not match width*height");
  }
}

LabelMap LabelMap::Downsample() const {
  LabelMap out(width_ / 2, height_ / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) out.at(x, y) = at(2 * x, 2 * y);
  }
  return out;
}

BoundaryDistances::BoundaryDistances(int width, int height, int cap)
    : width_(width),
      height_(height),
      cap_(cap),
      values_(static_cast<std::size_t>(width) * height) {}

BoundaryDistances ComputeBoundaryDistances(const LabelMap& labels,
                                           int cap_distance) {
  if (cap_distance < 1) {
    throw Error(ErrorCode::kInvalidArgument, "cap_distance must be >= 1");
  }
  const int w = labels.width();
  const int h = labels.height();
  BoundaryDistances out(w, h, cap_distance);
  for (int y = 0; y < h; ++y) {
    int run = 0;
    for (int x = 0; x < w; ++x) {
      run = (x > 0 && labels.SameInstance(x, y, x - 1, y)) ? run + 1 : 0;
      out.at(x, y).left = std::min(run, cap_distance);
    }
    run = 0;
    for (int x = w - 1; x >= 0; --x) {
      run = (x < w - 1 && labels.SameInstance(x, y, x + 1, y)) ? run + 1 : 0;
      out.at(x, y).right = std::min(run, cap_distance);
    }
  }
  for (int x = 0; x < w; ++x) {
    int run = 0;
    for (int y = 0; y < h; ++y) {
      run = (y > 0 && labels.SameInstance(x, y, x, y - 1)) ? run + 1 : 0;
      out.at(x, y).up = std::min(run, cap_distance);
    }
    run = 0;
    for (int y = h - 1; y >= 0; --y) {
      run = (y < h - 1 && labels.SameInstance(x, y, x, y + 1)) ? run + 1 : 0;
      out.at(x, y).down = std::min(run, cap_distance);
    }
  }
  return out;
}

int DeformedPatch::sample_count() const {
  int n = 0;
  ForEachSample([&n](int, int) { ++n; });
  return n;
}

namespace {

// Shift along one axis keeping [s - half, s + half] inside [-neg, +pos]; a
// window wider than the run is centered on the run instead.
int ClampShift(int shift, int half_extent, int neg, int pos) {
  const int lo = half_extent - neg;
  const int hi = pos - half_extent;
  if (lo > hi) return (pos - neg) / 2;
  return std::clamp(shift, lo, hi);
}

void CheckPatchSide(int L) {
  if (L < 5 || L % 2 == 0) {
    throw Error(ErrorCode::kInvalidArgument, "patch side must be odd and >= 5");
  }
}

}  // namespace

DeformedPatch DeformPatch(const Distances& d, int L) {
  CheckPatchSide(L);
  DeformedPatch patch;
  patch.sample_budget = (L * L) / 4;
  const int total = d.sum();
  if (total == 0) {
    patch.degenerate = true;
    return patch;
  }
  const int horizontal = d.left + d.right;
  const int vertical = d.down + d.up;
  // round(L * horizontal / total) with ties up, in exact integer arithmetic.
  int samples_h = (2 * L * horizontal + total) / (2 * total);
  samples_h = std::clamp(samples_h, 1, L - 1);
  patch.samples_h = samples_h;
  patch.samples_v = L - samples_h;

  if (horizontal > 0) {
    patch.equation_offset.x() =
        static_cast<double>(d.left - d.right) / horizontal * patch.samples_h;
  }
  if (vertical > 0) {
    patch.equation_offset.y() =
        static_cast<double>(d.down - d.up) / vertical * patch.samples_v;
  }
  // The written x component points at the nearer boundary; the window is
  // moved the other way, into the instance. y (down = +y) already does.
  const int shift_x = static_cast<int>(std::lround(-patch.equation_offset.x()));
  const int shift_y = static_cast<int>(std::lround(patch.equation_offset.y()));
  patch.shift.x() = ClampShift(shift_x, patch.samples_h - 1, d.left, d.right);
  patch.shift.y() = ClampShift(shift_y, patch.samples_v - 1, d.up, d.down);
  return patch;
}

DeformedPatch DeformPatchAt(const LabelMap& labels,
                            const BoundaryDistances& distances, int x, int y,
                            int L) {
  DeformedPatch patch = DeformPatch(distances.at(x, y), L);
  if (patch.degenerate) return patch;
  const Eigen::Vector2i candidates[] = {
      patch.shift,
      Eigen::Vector2i(patch.shift.x(), 0),
      Eigen::Vector2i(0, patch.shift.y()),
  };
  for (const auto& s : candidates) {
    if (labels.SameInstance(x, y, x + s.x(), y + s.y())) {
      patch.shift = s;
      return patch;
    }
  }
  patch.shift = Eigen::Vector2i::Zero();
  return patch;
}

DeformedPatch SquarePatch(int L) {
  CheckPatchSide(L);
  const int half = L / 2;
  return DeformPatch(Distances{half, half, half, half}, L);
}

Direction Opposite(Direction d) {
  switch (d) {
    case Direction::kUp: return Direction::kDown;
    case Direction::kRight: return Direction::kLeft;
    case Direction::kDown: return Direction::kUp;
    case Direction::kLeft: return Direction::kRight;
    case Direction::kUpRight: return Direction::kDownLeft;
    case Direction::kDownRight: return Direction::kUpLeft;
    case Direction::kDownLeft: return Direction::kUpRight;
    case Direction::kUpLeft: return Direction::kDownRight;
  }
  return d;
}

PropagationPattern MakePropagationPattern(const Distances& d, int samples_h,
                                          int samples_v) {
  PropagationPattern pattern;
  const int vertical = d.up + d.down;
  const int horizontal = d.left + d.right;
  const double up = vertical > 0
                        ? static_cast<double>(d.up) / vertical * samples_v
                        : 0.5 * samples_v;
  const double left = horizontal > 0
                          ? static_cast<double>(d.left) / horizontal * samples_h
                          : 0.5 * samples_h;
  const double down = samples_v - up;
  const double right = samples_h - left;

  auto set = [&pattern](Direction dir, double dx, double dy) {
    const int i = static_cast<int>(dir);
    const double len = std::hypot(dx, dy);
    pattern.length[i] = len;
    pattern.angle[i] = std::atan2(std::abs(dy), std::abs(dx));
    pattern.direction[i] =
        len > 0.0 ? Eigen::Vector2d(dx / len, dy / len) : Eigen::Vector2d::Zero();
  };
  set(Direction::kUp, 0.0, -up);
  set(Direction::kRight, right, 0.0);
  set(Direction::kDown, 0.0, down);
  set(Direction::kLeft, -left, 0.0);
  set(Direction::kUpRight, right, -up);
  set(Direction::kDownRight, right, down);
  set(Direction::kDownLeft, -left, down);
  set(Direction::kUpLeft, -left, -up);
  // Axis branches keep their nominal angle even when empty.
  pattern.angle[static_cast<int>(Direction::kUp)] = std::numbers::pi / 2;
  pattern.angle[static_cast<int>(Direction::kDown)] = std::numbers::pi / 2;
  pattern.angle[static_cast<int>(Direction::kRight)] = 0.0;
  pattern.angle[static_cast<int>(Direction::kLeft)] = 0.0;
  return pattern;
}

void EnumerateBranchSamples(const PropagationPattern& pattern, int x, int y,
                            int width, int height, const LabelMap* instance,
                            std::vector<BranchSample>& out) {
  out.clear();
  constexpr Direction kPairs[4][2] = {
      {Direction::kUp, Direction::kDown},
      {Direction::kRight, Direction::kLeft},
      {Direction::kUpRight, Direction::kDownLeft},
      {Direction::kDownRight, Direction::kUpLeft},
  };
  for (const auto& pair : kPairs) {
    const double len_a = pattern.pixel_length(pair[0]);
    const double len_b = pattern.pixel_length(pair[1]);
    // Arc coordinate runs from the far end of branch a, through the center,
    // to the far end of branch b.
    const double midpoint = 0.5 * (len_a + len_b);
    for (int side = 0; side < 2; ++side) {
      const int dir = static_cast<int>(pair[side]);
      const double len = side == 0 ? len_a : len_b;
      const Eigen::Vector2d& u = pattern.direction[dir];
      const int steps = static_cast<int>(std::floor(len + 1e-9));
      int last_x = x;
      int last_y = y;
      for (int t = 1; t <= steps; ++t) {
        const int sx = x + static_cast<int>(std::lround(t * u.x()));
        const int sy = y + static_cast<int>(std::lround(t * u.y()));
        if (sx == last_x && sy == last_y) continue;
        if (sx < 0 || sy < 0 || sx >= width || sy >= height) break;
        if (instance != nullptr && !instance->SameInstance(x, y, sx, sy)) break;
        last_x = sx;
        last_y = sy;
        const double arc = side == 0 ? len_a - t : len_a + t;
        const int domain =
            arc <= midpoint ? static_cast<int>(pair[0]) : static_cast<int>(pair[1]);
        out.push_back(BranchSample{domain, sx, sy});
      }
    }
  }
}

std::pair<double, double> DepthInterval(const DeformedPatch& patch, int x,
                                        int y, std::span<const float> depths,
                                        int width, int height,
                                        double global_min, double global_max) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  patch.ForEachSample([&](int dx, int dy) {
    const int sx = x + dx;
    const int sy = y + dy;
    if (sx < 0 || sy < 0 || sx >= width || sy >= height) return;
    const double d = depths[static_cast<std::size_t>(sy) * width + sx];
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  });
  if (lo > hi) {
    throw Error(ErrorCode::kEmptyPatch, "no patch sample inside the depth map");
  }
  lo = std::clamp(lo, global_min, global_max);
  hi = std::clamp(hi, global_min, global_max);
  return {lo, hi};
}

LabelMap FallbackSegment(const ImageView& img,
                         const FallbackSegmenterOptions& options) {
  const int w = img.width;
  const int h = img.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  // Per-pixel intensity and (for colour input) chromaticity.
  std::vector<float> intensity(n);
  std::vector<std::array<float, 3>> chroma(n, {0.0f, 0.0f, 0.0f});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      float sum = 0.0f;
      for (int c = 0; c < img.channels; ++c) sum += img.at(x, y, c);
      intensity[i] = sum / static_cast<float>(img.channels);
      if (img.channels >= 3) {
        const float denom = sum > 1e-6f ? sum : 1e-6f;
        for (int c = 0; c < 3; ++c) chroma[i][c] = img.at(x, y, c) / denom;
      }
    }
  }
  auto similar = [&](std::size_t a, std::size_t b) {
    if (std::abs(intensity[a] - intensity[b]) > options.intensity_tolerance) {
      return false;
    }
    for (int c = 0; c < 3; ++c) {
      if (std::abs(chroma[a][c] - chroma[b][c]) > options.chroma_tolerance) {
        return false;
      }
    }
    return true;
  };

  std::vector<std::uint32_t> labels(n, 0);
  std::vector<std::size_t> region_size(1, 0);
  std::vector<std::size_t> stack;
  std::uint32_t next = 1;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (labels[seed] != 0) continue;
    labels[seed] = next;
    std::size_t count = 0;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      ++count;
      const int x = static_cast<int>(i % w);
      const int y = static_cast<int>(i / w);
      const std::size_t neighbours[4] = {
          x > 0 ? i - 1 : n, x + 1 < w ? i + 1 : n,
          y > 0 ? i - w : n, y + 1 < h ? i + w : n};
      for (std::size_t j : neighbours) {
        if (j == n || labels[j] != 0 || !similar(i, j)) continue;
        labels[j] = next;
        stack.push_back(j);
      }
    }
    region_size.push_back(count);
    ++next;
  }

  // Fold small regions into the neighbour they share the longest border with.
  std::vector<std::uint32_t> remap(region_size.size());
  for (std::size_t r = 0; r < remap.size(); ++r) remap[r] = static_cast<std::uint32_t>(r);
  std::vector<std::map<std::uint32_t, std::size_t>> borders(region_size.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      const std::uint32_t a = labels[i];
      if (region_size[a] >= static_cast<std::size_t>(options.min_region)) continue;
      const std::size_t neighbours[4] = {
          x > 0 ? i - 1 : n, x + 1 < w ? i + 1 : n,
          y > 0 ? i - w : n, y + 1 < h ? i + w : n};
      for (std::size_t j : neighbours) {
        if (j != n && labels[j] != a) ++borders[a][labels[j]];
      }
    }
  }
  for (std::size_t r = 1; r < region_size.size(); ++r) {
    if (region_size[r] >= static_cast<std::size_t>(options.min_region)) continue;
    std::uint32_t best = static_cast<std::uint32_t>(r);
    std::size_t best_len = 0;
    for (const auto& [label, len] : borders[r]) {
      if (region_size[label] >= static_cast<std::size_t>(options.min_region) &&
          len > best_len) {
        best = label;
        best_len = len;
      }
    }
    remap[r] = best;
  }
  // Compact ids to 1..N in first-seen order.
  std::vector<std::uint32_t> compact(region_size.size(), 0);
  std::uint32_t next_id = 1;
  for (auto& label : labels) {
    const std::uint32_t target = remap[label];
    if (compact[target] == 0) compact[target] = next_id++;
    label = compact[target];
  }
  return LabelMap(w, h, std::move(labels));
}

}  // namespace sdmvs
