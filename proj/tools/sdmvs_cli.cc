#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sdmvs/config.h"
#include "sdmvs/error.h"
#include "sdmvs/fusion.h"
#include "sdmvs/io.h"
#include "sdmvs/pipeline.h"
#include "sdmvs/synth.h"

namespace fs = std::filesystem;
using namespace sdmvs;

namespace {

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct GlobalFlags {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string ablation;
};

std::string OutputDir(const SceneManifest& m) {
  return m.Resolve(m.output.empty() ? std::string("out") : m.output);
}

std::string DepthMapPath(const SceneManifest& m, std::size_t view) {
  return (fs::path(OutputDir(m)) / ("view_" + std::to_string(view) + ".sdmd")).string();
}

Settings LoadSettings(const SceneManifest& manifest, const std::string& config_path,
                      const GlobalFlags& flags) {
  Settings settings;
  if (!manifest.config.empty()) ApplyConfigFile(manifest.Resolve(manifest.config), settings);
  if (!config_path.empty()) ApplyConfigFile(config_path, settings);
  if (!flags.ablation.empty()) {
    ApplyAblation(*ParseAblation(flags.ablation), settings.pipeline);
  }
  if (flags.seed) settings.pipeline.seed = *flags.seed;
  if (flags.threads) settings.pipeline.threads = *flags.threads;
  settings.pipeline.depth_min = manifest.depth_min;
  settings.pipeline.depth_max = manifest.depth_max;
  return settings;
}

int Estimate(const std::string& scene, const std::string& config_path,
             std::optional<int> view, const GlobalFlags& flags) {
  const SceneManifest manifest = LoadManifest(scene);
  Settings settings = LoadSettings(manifest, config_path, flags);
  if (view) {
    if (*view < 0 || *view >= static_cast<int>(manifest.views.size())) {
      throw Error(ErrorCode::kInvalidArgument, "view id out of range");
    }
    settings.pipeline.active_views = {*view};
  }
  const auto start = std::chrono::steady_clock::now();
  Reconstruction rec(LoadViews(manifest), settings.pipeline);
  rec.Run();
  fs::create_directories(OutputDir(manifest));
  for (int v = 0; v < rec.view_count(); ++v) {
    if (!rec.estimated(v)) continue;
    const std::string path = DepthMapPath(manifest, v);
    WriteDepthMap(path, ToDepthMapFile(rec.result(v)));
    std::cout << "wrote " << path << "\n";
  }
  for (const IterationStats& s : rec.stats()) {
    std::cerr << "iteration " << s.iteration << " view " << s.view << ": mean cost "
              << s.mean_cost_start << " -> " << s.mean_cost_end << ", weights ("
              << s.weights.ms << ", " << s.weights.rp << ", " << s.weights.pc
              << "), anchors " << s.anchors_used << "\n";
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << "estimate finished in " << std::fixed << std::setprecision(2) << seconds
            << " s\n";
  return 0;
}

int Fuse(const std::string& scene, const std::string& config_path,
         const GlobalFlags& flags) {
  const SceneManifest manifest = LoadManifest(scene);
  const Settings settings = LoadSettings(manifest, config_path, flags);
  std::vector<Camera> cameras;
  std::vector<Image> images;
  std::vector<HypothesisMap> maps;
  for (std::size_t v = 0; v < manifest.views.size(); ++v) {
    const ManifestView& mv = manifest.views[v];
    const std::string path = DepthMapPath(manifest, v);
    if (!fs::exists(path)) {
      std::cerr << "skipping view " << v << ": no depth map at " << path << "\n";
      continue;
    }
    images.push_back(LoadImage(manifest.Resolve(mv.image)));
    cameras.emplace_back(mv.K, mv.R, mv.C, images.back().width(), images.back().height());
    const DepthMapFile file = ReadDepthMap(path);
    if (file.width != images.back().width() || file.height != images.back().height()) {
      throw Error(ErrorCode::kDimensionMismatch, path + " does not match its image");
    }
    maps.push_back(FromDepthMapFile(file));
  }
  std::vector<FusionView> views;
  for (std::size_t i = 0; i < maps.size(); ++i) {
    views.push_back(FusionView{cameras[i], &images[i], &maps[i]});
  }
  const FusedPointCloud cloud = sdmvs::Fuse(views, settings.fusion);
  fs::create_directories(OutputDir(manifest));
  const std::string path = (fs::path(OutputDir(manifest)) / "fused.ply").string();
  WritePly(path, cloud);
  std::cout << "wrote " << path << " (" << cloud.points.size() << " points)\n";
  return 0;
}

int Synth(const std::string& preset, const std::string& out, const GlobalFlags& flags) {
  const SynthScene scene = GenerateScene(preset, flags.seed.value_or(0));
  const std::string manifest = WriteScene(scene, out);
  std::cout << "wrote " << manifest << "\n";
  return 0;
}

int Eval(const std::string& scene, const std::string& gt_dir) {
  const SceneManifest manifest = LoadManifest(scene);
  DepthScorer scorer;
  for (std::size_t v = 0; v < manifest.views.size(); ++v) {
    const std::string name = "view_" + std::to_string(v);
    const fs::path gt_path = fs::path(gt_dir) / (name + ".sdmd");
    const std::string est_path = DepthMapPath(manifest, v);
    if (!fs::exists(est_path)) {
      std::cerr << "skipping view " << v << ": no estimate at " << est_path << "\n";
      continue;
    }
    const DepthMapFile gt = ReadDepthMap(gt_path.string());
    const DepthMapFile est = ReadDepthMap(est_path);
    if (gt.width != est.width || gt.height != est.height) {
      throw Error(ErrorCode::kDimensionMismatch, est_path + " does not match its GT");
    }
    const std::vector<double> gt_depth(gt.depths.begin(), gt.depths.end());
    std::vector<std::uint8_t> mask;
    const fs::path mask_path = fs::path(gt_dir) / (name + "_visible.png");
    if (fs::exists(mask_path)) {
      const LabelMap m = LoadLabelMap(mask_path.string(), gt.width, gt.height);
      mask.assign(m.labels().begin(), m.labels().end());
    }
    scorer.Add(est.depths, gt_depth, mask);
  }
  if (scorer.gt_pixels() == 0) {
    throw Error(ErrorCode::kMissingFile, "no estimated views with ground truth");
  }
  std::cout << "threshold  accuracy  completeness      F1\n";
  for (const ScoreRow& r : scorer.Rows()) {
    std::cout << std::fixed << std::setprecision(1) << std::setw(8) << 100.0 * r.threshold
              << "%" << std::setprecision(2) << std::setw(10) << r.accuracy
              << std::setw(14) << r.completeness << std::setw(8) << r.f1 << "\n";
  }
  return 0;
}

int Segment(const std::string& scene, bool update_manifest) {
  SceneManifest manifest = LoadManifest(scene);
  const fs::path dir = fs::path(OutputDir(manifest)) / "segment";
  fs::create_directories(dir);
  for (std::size_t v = 0; v < manifest.views.size(); ++v) {
    const Image img = LoadImage(manifest.Resolve(manifest.views[v].image));
    const LabelMap labels = FallbackSegment(img);
    const fs::path path = dir / ("view_" + std::to_string(v) + ".png");
    SaveLabelMapPng(path.string(), labels);
    std::cout << "wrote " << path.string() << "\n";
    if (update_manifest) {
      manifest.views[v].labels =
          fs::relative(path, manifest.base_dir.empty() ? fs::path(".") : fs::path(manifest.base_dir))
              .string();
    }
  }
  if (update_manifest) SaveManifest(scene, manifest);
  return 0;
}

int ImportColmapCommand(const std::string& model, const std::string& images,
                        const std::string& out, const std::vector<double>& range) {
  std::optional<std::pair<double, double>> depth_range;
  if (range.size() == 2) depth_range = std::pair{range[0], range[1]};
  SceneManifest m = ImportColmap(model, images, depth_range);
  const fs::path out_dir = fs::absolute(out).parent_path();
  for (ManifestView& v : m.views) {
    v.image = fs::relative(fs::absolute(fs::path(images) / v.image), out_dir).string();
  }
  m.base_dir = out_dir.string();
  SaveManifest(out, m);
  std::cout << "wrote " << out << " (" << m.views.size() << " views)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmentation-driven PatchMatch multi-view stereo"};
  app.require_subcommand(1);
  GlobalFlags flags;
  std::uint64_t seed = 0;
  int threads = 1;
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  auto* threads_opt =
      app.add_option("--threads", threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  std::vector<std::string> ablations;
  for (const char* name : {"acm-cost", "no-adp-cost", "no-mul-cost", "acm-prop", "no-adp-prop",
                           "no-mul-prop", "no-ref", "eq9-ref", "no-em"}) {
    ablations.emplace_back(name);
  }
  app.add_option("--ablation", flags.ablation, "ablation variant")
      ->check(CLI::IsMember(ablations));

  std::string scene, config_path, gt_dir, preset, out, model, images;
  int view = -1;
  bool update_manifest = false;
  std::vector<double> range;

  auto* estimate = app.add_subcommand("estimate", "estimate depth maps");
  estimate->add_option("scene", scene, "scene manifest")->required();
  estimate->add_option("--config", config_path, "config file");
  auto* view_opt = estimate->add_option("--view", view, "estimate only this view");

  auto* fuse = app.add_subcommand("fuse", "fuse depth maps into a PLY point cloud");
  fuse->add_option("scene", scene, "scene manifest")->required();
  fuse->add_option("--config", config_path, "config file");

  const auto presets = SynthPresets();
  auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
  synth->add_option("preset", preset, "scene preset")
      ->required()
      ->check(CLI::IsMember(std::vector<std::string>(presets.begin(), presets.end())));
  synth->add_option("--out", out, "output directory")->required();

  auto* eval = app.add_subcommand("eval", "score depth maps against ground truth");
  eval->add_option("scene", scene, "scene manifest")->required();
  eval->add_option("--gt", gt_dir, "ground-truth directory")->required();

  auto* segment = app.add_subcommand("segment", "produce label maps with the fallback segmenter");
  segment->add_option("scene", scene, "scene manifest")->required();
  segment->add_flag("--update-manifest", update_manifest, "point the manifest at the new labels");

  auto* colmap = app.add_subcommand("import-colmap", "convert a COLMAP text model to a manifest");
  colmap->add_option("model", model, "directory with cameras.txt and images.txt")->required();
  colmap->add_option("--images", images, "image directory")->required();
  colmap->add_option("--out", out, "manifest to write")->required();
  colmap->add_option("--depth-range", range, "min and max depth")->expected(2);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }
  if (seed_opt->count()) flags.seed = seed;
  if (threads_opt->count()) flags.threads = threads;

  try {
    if (*estimate) {
      return Estimate(scene, config_path,
                      view_opt->count() ? std::optional<int>(view) : std::nullopt, flags);
    }
    if (*fuse) return Fuse(scene, config_path, flags);
    if (*synth) return Synth(preset, out, flags);
    if (*eval) return Eval(scene, gt_dir);
    if (*segment) return Segment(scene, update_manifest);
    if (*colmap) return ImportColmapCommand(model, images, out, range);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidArgument ? kUsageError : kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}
