#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sdmvs/emopt.h"
#include "sdmvs/fusion.h"
#include "sdmvs/geometry.h"
#include "sdmvs/imaging.h"
#include "sdmvs/pipeline.h"
#include "sdmvs/segmentation.h"
#include "sdmvs/view.h"

namespace sdmvs {

// PNG (8/16-bit gray, gray+alpha, RGB, RGBA, palette) or binary PPM/PGM,
// scaled to [0, 1]; alpha is dropped.
Image LoadImage(const std::string& path);
// 16-bit PNG with 1 or 3 channels, values clamped to [0, 1].
void SavePng16(const std::string& path, const Image& img);

// 16-bit single-channel PNG (value = id) or the RLE text sidecar
//   SDMVS-RLE 1
//   <width> <height>
//   <label> <run> ...        (row-major runs, may cross rows)
// Throws Error(kDimensionMismatch) when the size differs from the expected
// one (pass 0 to skip the check) and Error(kDecodeError) on bad content.
LabelMap LoadLabelMap(const std::string& path, int expected_width = 0,
                      int expected_height = 0);
void SaveLabelMapPng(const std::string& path, const LabelMap& labels);
void SaveLabelMapRle(const std::string& path, const LabelMap& labels);

// Binary little-endian depth map: "SDMD", u32 width, u32 height, f32 depths,
// f32 normals (xyz per pixel), f32 costs, all row-major.
struct DepthMapFile {
  int width = 0;
  int height = 0;
  std::vector<float> depths;
  std::vector<float> normals;
  std::vector<float> costs;

  bool operator==(const DepthMapFile&) const = default;
};
DepthMapFile ToDepthMapFile(const HypothesisMap& map);
HypothesisMap FromDepthMapFile(const DepthMapFile& file);
void WriteDepthMap(const std::string& path, const DepthMapFile& map);
DepthMapFile ReadDepthMap(const std::string& path);

// Binary little-endian PLY with float x y z nx ny nz and uchar red green blue.
void WritePly(const std::string& path, const FusedPointCloud& cloud);

// Correspondence lines "src_view_id x_ref y_ref x_src y_src".
AnchorSet LoadMatches(const std::string& path);
void SaveMatches(const std::string& path, const AnchorSet& anchors);

struct ManifestView {
  std::string image;
  Matrix3d K = Matrix3d::Identity();
  Matrix3d R = Matrix3d::Identity();
  Vector3d C = Vector3d::Zero();
  std::string labels;   // empty: none
  std::string matches;  // empty: none

  bool operator==(const ManifestView&) const = default;
};

// Scene description. Relative paths are resolved against `base_dir`.
//   depth_range <min> <max>
//   output <dir>
//   config <file>            (optional)
//   image <path>             (starts a view block)
//   K <9 numbers, row-major>
//   R <9 numbers, row-major>
//   C <3 numbers>
//   labels <path>            (optional)
//   matches <path>           (optional)
struct SceneManifest {
  std::string base_dir;
  double depth_min = 0.0;
  double depth_max = 0.0;
  std::string output;
  std::string config;
  std::vector<ManifestView> views;

  std::string Resolve(const std::string& relative) const;
  bool operator==(const SceneManifest&) const = default;
};

// Throws Error(kParseError) with line diagnostics or Error(kMissingFile).
SceneManifest ParseManifest(const std::string& text, const std::string& base_dir,
                            const std::string& source = "manifest");
SceneManifest LoadManifest(const std::string& path);
std::string FormatManifest(const SceneManifest& manifest);
void SaveManifest(const std::string& path, const SceneManifest& manifest);

// COLMAP text model (cameras.txt + images.txt in `model_dir`) with images in
// `image_dir`. PINHOLE and SIMPLE_PINHOLE cameras only. The depth range comes
// from `depth_range` or, when absent, from points3D.txt.
SceneManifest ImportColmap(const std::string& model_dir,
                           const std::string& image_dir,
                           std::optional<std::pair<double, double>> depth_range);

// Decodes images, validates cameras and loads labels (or runs the fallback
// segmenter when a view has none) and match files.
std::vector<ViewInput> LoadViews(const SceneManifest& manifest);

}  // namespace sdmvs
