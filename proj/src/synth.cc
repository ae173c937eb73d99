#include "sdmvs/synth.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>

#include "sdmvs/config.h"
#include "sdmvs/error.h"

namespace sdmvs {

namespace fs = std::filesystem;

namespace {

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

double Lattice(std::uint64_t seed, std::int64_t ix, std::int64_t iy, int channel) {
  std::uint64_t h = SplitMix(seed ^ SplitMix(static_cast<std::uint64_t>(ix) * 0x632be59bd9b4e019ull +
                                             static_cast<std::uint64_t>(iy)));
  h = SplitMix(h + static_cast<std::uint64_t>(channel));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double Fade(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Smoothly interpolated lattice noise in [0, 1].
double ValueNoise(std::uint64_t seed, double s, double t, int channel) {
  const double fs = std::floor(s);
  const double ft = std::floor(t);
  const auto ix = static_cast<std::int64_t>(fs);
  const auto iy = static_cast<std::int64_t>(ft);
  const double a = Fade(s - fs);
  const double b = Fade(t - ft);
  const double v00 = Lattice(seed, ix, iy, channel);
  const double v10 = Lattice(seed, ix + 1, iy, channel);
  const double v01 = Lattice(seed, ix, iy + 1, channel);
  const double v11 = Lattice(seed, ix + 1, iy + 1, channel);
  return (1 - b) * ((1 - a) * v00 + a * v10) + b * ((1 - a) * v01 + a * v11);
}

Matrix3d Rotation(double yaw_deg, double pitch_deg) {
  const double to_rad = std::numbers::pi / 180.0;
  return (Eigen::AngleAxisd(yaw_deg * to_rad, Vector3d::UnitY()) *
          Eigen::AngleAxisd(pitch_deg * to_rad, Vector3d::UnitX()))
      .toRotationMatrix();
}

SynthSurface Rect(int id, const Vector3d& center, double yaw_deg, double pitch_deg,
                  double half_u, double half_v, const Vector3d& color,
                  double contrast, std::uint64_t seed) {
  SynthSurface s;
  s.id = id;
  s.center = center;
  const Matrix3d R = Rotation(yaw_deg, pitch_deg);
  s.axis_u = R.col(0);
  s.axis_v = R.col(1);
  s.half_u = half_u;
  s.half_v = half_v;
  s.color = color;
  s.contrast = contrast;
  s.texture_seed = SplitMix(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(id));
  return s;
}

Camera RigCamera(int index, const SynthOptions& options) {
  static const Vector3d kCenters[4] = {
      {-0.5, -0.35, 0.0}, {0.5, -0.35, 0.0}, {-0.5, 0.35, 0.0}, {0.5, 0.35, 0.0}};
  const Vector3d C = kCenters[index];
  const Vector3d f = (Vector3d(0.0, 0.0, 4.0) - C).normalized();
  const Vector3d r = f.cross(Vector3d(0.0, -1.0, 0.0)).normalized();
  const Vector3d d = f.cross(r);
  Matrix3d R;
  R.row(0) = r;
  R.row(1) = d;
  R.row(2) = f;
  const double focal = 160.0 * options.width / 160.0;
  Matrix3d K;
  K << focal, 0.0, (options.width - 1) / 2.0, 0.0, focal, (options.height - 1) / 2.0,
      0.0, 0.0, 1.0;
  return Camera(K, R, C, options.width, options.height);
}

std::vector<SynthSurface> ThreePlanes(std::uint64_t seed) {
  return {
      Rect(1, {0.0, 0.0, 6.0}, 12.0, -6.0, 5.0, 4.0, {0.75, 0.55, 0.30}, 0.6, seed),
      Rect(2, {-0.95, -0.25, 3.6}, 32.0, 10.0, 0.75, 1.0, {0.25, 0.50, 0.80}, 0.6, seed),
      Rect(3, {0.95, 0.45, 4.4}, -25.0, -20.0, 0.9, 0.75, {0.35, 0.75, 0.35}, 0.6, seed),
  };
}

std::vector<SynthSurface> TexturelessWall(std::uint64_t seed) {
  const Vector3d gray(0.55, 0.55, 0.57);
  SynthSurface wall = Rect(1, {0.0, 0.0, 5.5}, 8.0, 0.0, 5.0, 4.0, gray, 0.0, seed);
  wall.spotlight = true;
  wall.spot_center = Vector3d(0.4, -0.3, 5.5);
  wall.spot_radius = 1.3;
  wall.spot_floor = 0.55;
  return {
      wall,
      Rect(2, {-1.25, 0.0, 3.8}, 0.0, 0.0, 0.14, 4.0, gray, 0.5, seed),
      Rect(3, {0.05, 0.0, 4.2}, 0.0, 0.0, 0.14, 4.0, gray, 0.5, seed),
      Rect(4, {1.3, 0.0, 4.6}, 0.0, 0.0, 0.14, 4.0, gray, 0.5, seed),
  };
}

std::vector<SynthSurface> OcclusionStep(std::uint64_t seed) {
  return {
      Rect(1, {0.0, 0.0, 5.2}, 0.0, 0.0, 5.0, 4.0, {0.56, 0.50, 0.44}, 0.55, seed),
      Rect(2, {-1.0, 0.0, 3.4}, 0.0, 0.0, 1.1, 4.0, {0.57, 0.50, 0.43}, 0.55, seed),
  };
}

std::vector<SynthSurface> SlantedBox(std::uint64_t seed) {
  std::vector<SynthSurface> out;
  out.push_back(
      Rect(1, {0.0, 0.0, 6.5}, 0.0, 0.0, 5.5, 4.5, {0.60, 0.60, 0.65}, 0.6, seed));
  const Matrix3d R = Rotation(35.0, -20.0);
  const Vector3d center(0.1, 0.1, 4.2);
  const Vector3d half(0.7, 0.5, 0.5);
  const Vector3d colors[3] = {{0.80, 0.35, 0.30}, {0.30, 0.70, 0.40}, {0.35, 0.40, 0.85}};
  int id = 2;
  for (int axis = 0; axis < 3; ++axis) {
    const int a = (axis + 1) % 3;
    const int b = (axis + 2) % 3;
    for (int sign : {-1, 1}) {
      SynthSurface s;
      s.id = id;
      s.center = center + R.col(axis) * (sign * half[axis]);
      s.axis_u = R.col(a);
      s.axis_v = R.col(b);
      s.half_u = half[a];
      s.half_v = half[b];
      s.color = colors[axis];
      s.contrast = 0.6;
      s.texture_seed = SplitMix(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(id));
      out.push_back(s);
      ++id;
    }
  }
  return out;
}

void RenderView(const std::vector<SynthSurface>& surfaces, SynthView& view) {
  const Camera& cam = view.camera;
  const int w = cam.width();
  const int h = cam.height();
  view.image = Image(w, h, 3);
  view.depth.assign(static_cast<std::size_t>(w) * h, 0.0);
  view.normal.assign(static_cast<std::size_t>(w) * h, Vector3d::Zero());
  view.labels = LabelMap(w, h, 0u);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vector3d ray = cam.PixelRay(Vector2d(x, y));
      const Vector3d dir = cam.R().transpose() * ray;
      const auto hit = CastRay(surfaces, cam.C(), dir);
      if (!hit) continue;
      const SynthSurface& s = surfaces[hit->surface];
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      // The ray has unit camera z, so the ray parameter is the depth.
      view.depth[i] = hit->t;
      Vector3d n = cam.R() * s.normal();
      if (n.dot(ray) > 0.0) n = -n;
      view.normal[i] = n;
      view.labels.at(x, y) = static_cast<std::uint32_t>(s.id);
      const Vector3d albedo = s.Albedo(hit->point);
      for (int c = 0; c < 3; ++c) view.image.at(x, y, c) = static_cast<float>(albedo[c]);
    }
  }
}

void MarkVisibility(const std::vector<SynthSurface>& surfaces,
                    std::vector<SynthView>& views) {
  for (std::size_t v = 0; v < views.size(); ++v) {
    SynthView& view = views[v];
    const Camera& cam = view.camera;
    view.visible.assign(view.depth.size(), 0);
    for (int y = 0; y < cam.height(); ++y) {
      for (int x = 0; x < cam.width(); ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * cam.width() + x;
        if (view.depth[i] <= 0.0) continue;
        const Vector3d X =
            cam.CameraToWorld(view.depth[i] * cam.PixelRay(Vector2d(x, y)));
        for (std::size_t o = 0; o < views.size() && !view.visible[i]; ++o) {
          if (o == v) continue;
          const Camera& other = views[o].camera;
          const auto proj = TryProject(other, X);
          if (!proj || !other.InBounds(proj->pixel)) continue;
          const auto hit = CastRay(surfaces, other.C(), X - other.C());
          if (hit && std::abs(hit->t - 1.0) < 1e-6) view.visible[i] = 1;
        }
      }
    }
  }
}

void WriteMask(const std::string& path, const std::vector<std::uint8_t>& mask, int w,
               int h) {
  SaveLabelMapPng(path, LabelMap(w, h, std::vector<std::uint32_t>(mask.begin(), mask.end())));
}

}  // namespace

Vector3d SynthSurface::Albedo(const Vector3d& X) const {
  const Vector3d local = X - center;
  const double s = local.dot(axis_u);
  const double t = local.dot(axis_v);
  Vector3d out = color;
  if (contrast > 0.0) {
    // Octaves at 1, 2, 4 and 8 cells so every pyramid level keeps texture.
    static constexpr double kAmplitude[4] = {0.35, 0.3, 0.2, 0.15};
    double shared = 0.0;
    for (int o = 0; o < 4; ++o) {
      const double scale = cell * static_cast<double>(1 << o);
      shared += kAmplitude[o] * ValueNoise(texture_seed + o, s / scale, t / scale, 7);
    }
    for (int c = 0; c < 3; ++c) {
      // Mostly shared across channels so the gray image keeps the contrast.
      const double own = ValueNoise(texture_seed, s / cell, t / cell, c);
      const double n = 0.75 * shared + 0.25 * own;
      out[c] *= 1.0 + contrast * (2.0 * n - 1.0);
    }
  }
  if (spotlight) {
    const double r2 = (X - spot_center).squaredNorm();
    out *= spot_floor +
           (1.0 - spot_floor) * std::exp(-r2 / (2.0 * spot_radius * spot_radius));
  }
  return out.cwiseMax(0.0).cwiseMin(1.0);
}

std::optional<RayHit> CastRay(std::span<const SynthSurface> surfaces,
                              const Vector3d& origin, const Vector3d& dir) {
  std::optional<RayHit> best;
  for (std::size_t k = 0; k < surfaces.size(); ++k) {
    const SynthSurface& s = surfaces[k];
    const Vector3d n = s.normal();
    const double denom = n.dot(dir);
    if (std::abs(denom) < 1e-12) continue;
    const double t = n.dot(s.center - origin) / denom;
    if (!(t > 1e-9)) continue;
    if (best && t >= best->t) continue;
    const Vector3d p = origin + t * dir;
    const Vector3d local = p - s.center;
    if (std::abs(local.dot(s.axis_u)) > s.half_u ||
        std::abs(local.dot(s.axis_v)) > s.half_v) {
      continue;
    }
    best = RayHit{static_cast<int>(k), t, p};
  }
  return best;
}

double DistanceToScene(std::span<const SynthSurface> surfaces, const Vector3d& X) {
  double best = std::numeric_limits<double>::infinity();
  for (const SynthSurface& s : surfaces) {
    const Vector3d local = X - s.center;
    const double u = std::clamp(local.dot(s.axis_u), -s.half_u, s.half_u);
    const double v = std::clamp(local.dot(s.axis_v), -s.half_v, s.half_v);
    best = std::min(best, (local - u * s.axis_u - v * s.axis_v).norm());
  }
  return best;
}

std::vector<std::string_view> SynthPresets() {
  return {"three-planes", "textureless-wall", "occlusion-step", "slanted-box"};
}

SynthScene GenerateScene(std::string_view preset, std::uint64_t seed,
                         const SynthOptions& options) {
  if (options.view_count < 2 || options.view_count > 4) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic rig has 2 to 4 views");
  }
  SynthScene scene;
  scene.preset = std::string(preset);
  scene.seed = seed;
  if (preset == "three-planes") {
    scene.surfaces = ThreePlanes(seed);
  } else if (preset == "textureless-wall") {
    scene.surfaces = TexturelessWall(seed);
  } else if (preset == "occlusion-step") {
    scene.surfaces = OcclusionStep(seed);
  } else if (preset == "slanted-box") {
    scene.surfaces = SlantedBox(seed);
  } else {
    throw Error(ErrorCode::kUnknownPreset, "unknown preset '" + std::string(preset) + "'");
  }
  scene.views.resize(options.view_count);
  for (int v = 0; v < options.view_count; ++v) {
    scene.views[v].camera = RigCamera(v, options);
    RenderView(scene.surfaces, scene.views[v]);
  }
  MarkVisibility(scene.surfaces, scene.views);
  return scene;
}

std::vector<ViewInput> SceneInputs(const SynthScene& scene) {
  std::vector<ViewInput> out;
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    ViewInput in;
    in.id = static_cast<int>(v);
    in.camera = scene.views[v].camera;
    in.image = scene.views[v].image;
    in.labels = scene.views[v].labels;
    out.push_back(std::move(in));
  }
  return out;
}

PipelineConfig SynthPipelineConfig(const SynthScene& scene) {
  PipelineConfig config;
  // Small images: one halving keeps the coarse level wide enough for the
  // patch, and with three sources the single best one is the least
  // likely to be occluded.
  config.downsample_count = 1;
  config.sweeps_per_iteration = 2;
  config.cost.top_k = 1;
  config.depth_min = scene.depth_min;
  config.depth_max = scene.depth_max;
  config.seed = scene.seed;
  return config;
}

DepthMapFile GroundTruthMap(const SynthView& view) {
  DepthMapFile f;
  f.width = view.camera.width();
  f.height = view.camera.height();
  const std::size_t n = view.depth.size();
  f.depths.resize(n);
  f.normals.resize(3 * n);
  f.costs.assign(n, 0.0f);
  for (std::size_t i = 0; i < n; ++i) {
    f.depths[i] = static_cast<float>(view.depth[i]);
    for (int c = 0; c < 3; ++c) f.normals[3 * i + c] = static_cast<float>(view.normal[i][c]);
  }
  return f;
}

std::string WriteScene(const SynthScene& scene, const std::string& dir) {
  const fs::path root(dir);
  for (const char* sub : {"images", "labels", "gt"}) fs::create_directories(root / sub);
  SceneManifest manifest;
  manifest.base_dir = dir;
  manifest.depth_min = scene.depth_min;
  manifest.depth_max = scene.depth_max;
  manifest.output = "out";
  manifest.config = "synth.cfg";
  for (std::size_t v = 0; v < scene.views.size(); ++v) {
    const SynthView& view = scene.views[v];
    const std::string name = "view_" + std::to_string(v);
    const int w = view.camera.width();
    const int h = view.camera.height();
    SavePng16((root / "images" / (name + ".png")).string(), view.image);
    SaveLabelMapPng((root / "labels" / (name + ".png")).string(), view.labels);
    WriteDepthMap((root / "gt" / (name + ".sdmd")).string(), GroundTruthMap(view));
    WriteMask((root / "gt" / (name + "_visible.png")).string(), view.visible, w, h);
    ManifestView mv;
    mv.image = "images/" + name + ".png";
    mv.labels = "labels/" + name + ".png";
    mv.K = view.camera.K();
    mv.R = view.camera.R();
    mv.C = view.camera.C();
    manifest.views.push_back(mv);
  }
  Settings settings;
  settings.pipeline = SynthPipelineConfig(scene);
  std::ofstream cfg(root / "synth.cfg");
  cfg << "# synthetic scene '" << scene.preset << "', seed " << scene.seed << "\n"
      << SerializeConfig(settings);
  if (!cfg) throw Error(ErrorCode::kIoError, "cannot write " + (root / "synth.cfg").string());
  const std::string path = (root / "scene.txt").string();
  SaveManifest(path, manifest);
  return path;
}

std::vector<std::uint8_t> DiscontinuityBand(std::span<const double> depth, int width,
                                            int height, int radius, double rel_jump) {
  if (depth.size() != static_cast<std::size_t>(width) * height) {
    throw Error(ErrorCode::kDimensionMismatch, "depth map size does not match");
  }
  std::vector<std::uint8_t> edge(depth.size(), 0);
  auto jump = [&](std::size_t a, std::size_t b) {
    const double da = depth[a];
    const double db = depth[b];
    if ((da > 0.0) != (db > 0.0)) return true;
    if (da <= 0.0) return false;
    return std::abs(da - db) > rel_jump * std::min(da, db);
  };
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      if (x + 1 < width && jump(i, i + 1)) edge[i] = edge[i + 1] = 1;
      if (y + 1 < height && jump(i, i + width)) edge[i] = edge[i + width] = 1;
    }
  }
  std::vector<std::uint8_t> band(depth.size(), 0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!edge[static_cast<std::size_t>(y) * width + x]) continue;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int u = x + dx;
          const int v = y + dy;
          if (u >= 0 && v >= 0 && u < width && v < height) {
            band[static_cast<std::size_t>(v) * width + u] = 1;
          }
        }
      }
    }
  }
  return band;
}

DepthScorer::DepthScorer(std::vector<double> thresholds)
    : thresholds_(std::move(thresholds)), within_(thresholds_.size(), 0) {}

void DepthScorer::Add(std::span<const float> estimate, std::span<const double> gt,
                      std::span<const std::uint8_t> mask) {
  if (estimate.size() != gt.size() || (!mask.empty() && mask.size() != gt.size())) {
    throw Error(ErrorCode::kDimensionMismatch, "score inputs differ in size");
  }
  for (std::size_t i = 0; i < gt.size(); ++i) {
    if (!(gt[i] > 0.0) || (!mask.empty() && !mask[i])) continue;
    ++gt_pixels_;
    const double e = estimate[i];
    if (!(e > 0.0) || !std::isfinite(e)) continue;
    ++estimated_pixels_;
    const double rel = std::abs(e - gt[i]) / gt[i];
    for (std::size_t k = 0; k < thresholds_.size(); ++k) {
      if (rel <= thresholds_[k]) ++within_[k];
    }
  }
}

std::vector<ScoreRow> DepthScorer::Rows() const {
  std::vector<ScoreRow> rows;
  for (std::size_t k = 0; k < thresholds_.size(); ++k) {
    ScoreRow r;
    r.threshold = thresholds_[k];
    const double hits = static_cast<double>(within_[k]);
    r.accuracy = estimated_pixels_ ? 100.0 * hits / estimated_pixels_ : 0.0;
    r.completeness = gt_pixels_ ? 100.0 * hits / gt_pixels_ : 0.0;
    r.f1 = r.accuracy + r.completeness > 0.0
               ? 2.0 * r.accuracy * r.completeness / (r.accuracy + r.completeness)
               : 0.0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace sdmvs
