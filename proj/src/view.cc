#include "sdmvs/view.h"

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <unordered_map>

#include "sdmvs/error.h"

namespace sdmvs {

namespace {

void CheckLabelDims(const LabelMap& labels, int width, int height, int level) {
  if (labels.width() != width || labels.height() != height) {
    std::ostringstream why;
    why << "label map at level " << level << " is " << labels.width() << "x"
        << labels.height() << ", expected " << width << "x" << height;
    throw Error(ErrorCode::kDimensionMismatch, why.str());
  }
}

// Majority level-0 label over the footprint of each coarse segment.
LabelMap InstancesAtLevel(const LabelMap& fine, const LabelMap& coarse, int level) {
  std::unordered_map<std::uint64_t, std::size_t> votes;
  for (int y = 0; y < fine.height(); ++y) {
    const int cy = std::min(y >> level, coarse.height() - 1);
    for (int x = 0; x < fine.width(); ++x) {
      const int cx = std::min(x >> level, coarse.width() - 1);
      ++votes[(static_cast<std::uint64_t>(coarse.at(cx, cy)) << 32) | fine.at(x, y)];
    }
  }
  std::unordered_map<std::uint32_t, std::pair<std::size_t, std::uint32_t>> best;
  for (const auto& [key, count] : votes) {
    const auto c = static_cast<std::uint32_t>(key >> 32);
    const auto f = static_cast<std::uint32_t>(key & 0xffffffffu);
    auto [it, fresh] = best.try_emplace(c, count, f);
    if (!fresh && (count > it->second.first ||
                   (count == it->second.first && f < it->second.second))) {
      it->second = {count, f};
    }
  }
  LabelMap out(coarse.width(), coarse.height());
  for (int y = 0; y < coarse.height(); ++y) {
    for (int x = 0; x < coarse.width(); ++x) {
      const auto it = best.find(coarse.at(x, y));
      out.at(x, y) = it != best.end() ? it->second.second : coarse.at(x, y);
    }
  }
  return out;
}

}  // namespace

ViewData::ViewData(const Camera& camera, const Image& color,
                   const LabelMap& labels, const ViewBuildOptions& options,
                   const std::vector<LabelMap>& coarse_labels)
    : color_(color), patch_side_(options.patch_side) {
  if (color.width() != camera.width() || color.height() != camera.height()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "image size does not match the camera");
  }
  const int cap =
      options.cap_distance > 0 ? options.cap_distance : 2 * options.patch_side;
  gray_pyramid_ = ScalePyramid::Build(ToGray(color), options.downsample_count);
  color_pyramid_ = ScalePyramid::Build(color, options.downsample_count);

  levels_.resize(options.downsample_count + 1);
  for (int l = 0; l <= options.downsample_count; ++l) {
    ViewLevel& lv = levels_[l];
    lv.camera = camera.AtLevel(l);
    lv.gray = gray_pyramid_.level(l);
    lv.color = color_pyramid_.level(l);
    lv.laplacian = LaplacianImage(lv.color);
    if (l == 0) {
      lv.labels = labels;
    } else if (static_cast<int>(coarse_labels.size()) >= l) {
      lv.labels = coarse_labels[l - 1];
    } else {
      lv.labels = levels_[l - 1].labels.Downsample();
    }
    CheckLabelDims(lv.labels, lv.width(), lv.height(), l);
    lv.instances = l == 0 ? lv.labels : InstancesAtLevel(labels, lv.labels, l);
    lv.distances = ComputeBoundaryDistances(lv.labels, cap);
    lv.patches.resize(static_cast<std::size_t>(lv.width()) * lv.height());
    for (int y = 0; y < lv.height(); ++y) {
      for (int x = 0; x < lv.width(); ++x) {
        lv.patches[static_cast<std::size_t>(y) * lv.width() + x] =
            DeformPatchAt(lv.labels, lv.distances, x, y, options.patch_side);
      }
    }
  }
}

HypothesisMap::HypothesisMap(int width, int height)
    : width_(width),
      height_(height),
      hyps_(static_cast<std::size_t>(width) * height),
      depths_(hyps_.size(), 0.0f),
      costs_(hyps_.size(), 0.0f) {}

}  // namespace sdmvs
