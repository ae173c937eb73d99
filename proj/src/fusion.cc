#include "sdmvs/fusion.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace sdmvs {

namespace {

struct Hit {
  int x;
  int y;
  Vector3d point;
  Vector3d normal;
};

std::optional<Hit> Lookup(const FusionView& view, const Vector3d& X,
                          const Vector3d& n_world, const FusionParams& params) {
  const auto proj = TryProject(view.camera, X);
  if (!proj) return std::nullopt;
  const int x = static_cast<int>(std::lround(proj->pixel.x()));
  const int y = static_cast<int>(std::lround(proj->pixel.y()));
  const HypothesisMap& map = *view.map;
  if (x < 0 || y < 0 || x >= map.width() || y >= map.height()) return std::nullopt;
  const PlaneHypothesis& other = map.hypothesis(x, y);
  if (!(other.depth > 0.0)) return std::nullopt;
  const PlaneHypothesis projected{proj->depth, view.camera.R() * n_world};
  if (!DepthEdgeConsistency(projected, other, params.rel_depth_tol,
                            params.normal_angle_tol_deg * std::numbers::pi / 180.0)) {
    return std::nullopt;
  }
  const Vector3d point = view.camera.CameraToWorld(
      other.depth * view.camera.PixelRay(Vector2d(x, y)));
  return Hit{x, y, point, view.camera.R().transpose() * other.normal};
}

}  // namespace

bool ConsistentInView(const FusionView& view, const Vector3d& X,
                      const Vector3d& n_world, const FusionParams& params) {
  return Lookup(view, X, n_world, params).has_value();
}

FusedPointCloud Fuse(const std::vector<FusionView>& views,
                     const FusionParams& params) {
  FusedPointCloud cloud;
  std::vector<std::vector<bool>> used(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    used[v].assign(views[v].map->hypotheses().size(), false);
  }
  for (std::size_t r = 0; r < views.size(); ++r) {
    const FusionView& ref = views[r];
    const HypothesisMap& map = *ref.map;
    for (int y = 0; y < map.height(); ++y) {
      for (int x = 0; x < map.width(); ++x) {
        if (used[r][map.index(x, y)]) continue;
        const PlaneHypothesis& h = map.hypothesis(x, y);
        if (!(h.depth > 0.0)) continue;
        const Vector3d X =
            ref.camera.CameraToWorld(h.depth * ref.camera.PixelRay(Vector2d(x, y)));
        const Vector3d n_world = ref.camera.R().transpose() * h.normal;
        Vector3d sum_point = X;
        Vector3d sum_normal = n_world;
        Vector3d sum_color = Vector3d::Zero();
        auto add_color = [&](const FusionView& view, int u, int q) {
          if (view.color == nullptr) return;
          const Image& img = *view.color;
          for (int c = 0; c < 3; ++c) {
            sum_color[c] += img.at(u, q, std::min(c, img.channels() - 1));
          }
        };
        add_color(ref, x, y);
        int count = 1;
        std::vector<std::pair<std::size_t, std::size_t>> consumed;
        for (std::size_t j = 0; j < views.size(); ++j) {
          if (j == r) continue;
          const auto hit = Lookup(views[j], X, n_world, params);
          if (!hit) continue;
          ++count;
          sum_point += hit->point;
          sum_normal += hit->normal;
          add_color(views[j], hit->x, hit->y);
          consumed.emplace_back(j, views[j].map->index(hit->x, hit->y));
        }
        if (count < params.consistency_min) continue;
        used[r][map.index(x, y)] = true;
        for (const auto& [j, i] : consumed) used[j][i] = true;
        FusedPoint p;
        p.position = (sum_point / count).cast<float>();
        p.normal = sum_normal.normalized().cast<float>();
        for (int c = 0; c < 3; ++c) {
          const double value = std::clamp(sum_color[c] / count, 0.0, 1.0);
          p.color[c] = static_cast<std::uint8_t>(std::lround(value * 255.0));
        }
        cloud.points.push_back(p);
      }
    }
  }
  return cloud;
}

}  // namespace sdmvs
