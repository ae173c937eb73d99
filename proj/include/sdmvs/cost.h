#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sdmvs/geometry.h"
#include "sdmvs/imaging.h"
#include "sdmvs/segmentation.h"
#include "sdmvs/view.h"

namespace sdmvs {

// Matching cost reported when a correlation cannot be formed.
inline constexpr double kInvalidMatchCost = 2.0;

enum class ColorErrorMode {
  kLiteral,  // max{|dLaplacian|, tau}
  kCapped,   // min{|dLaplacian|, tau}
};

struct CostParams {
  double sigma_color = 0.1;
  // Spatial bilateral scale in pixels; <= 0 selects patch_side / 2.
  double sigma_spatial = 0.0;
  int min_samples = 9;
  double min_variance = 1e-8;
  double max_invalid_fraction = 0.5;
  double tau_pc = 2.0;
  ColorErrorMode pc_mode = ColorErrorMode::kLiteral;
  double tau_rp = 2.0;
  // Number of best source views averaged into the final cost; sources with
  // an invalid correlation are used only when no source is valid.
  int top_k = 2;
  // Average the matching cost over levels l..k (false: level l only). With
  // deformed patches, coarse pixels of another instance are left out.
  bool multi_scale = true;
  // Use the undeformed square window instead of the per-pixel patch.
  bool square_patch = false;
};

struct CostComponents {
  double ms = 0.0;
  double rp = 0.0;
  double pc = 0.0;
};

struct Weights {
  double ms = 1.0;
  double rp = 0.2;
  double pc = 0.2;

  bool operator==(const Weights&) const = default;
};

double Aggregate(const CostComponents& c, const Weights& w);

// Bilateral-weighted correlation of two equally long sample vectors, returned
// as 1 - rho in [0, 2]. Returns kInvalidMatchCost for fewer than
// `min_samples` entries or a variance below `min_variance`.
double WeightedNccCost(std::span<const float> ref, std::span<const float> src,
                       std::span<const float> weights, int min_samples,
                       double min_variance);

// 1 - rho between the patch around `p` in the reference and its plane-induced
// warp into the source. The bilateral weight of each sample is taken relative
// to the patch center p + shift.
double NccDeformed(const ImageView& ref_gray, const ImageView& src_gray,
                   const Camera& ref, const Camera& src,
                   const Eigen::Vector2i& p, const PlaneHypothesis& h,
                   const DeformedPatch& patch, const CostParams& params,
                   int patch_side);

// Reference-side sample of a patch: position, intensity and bilateral weight.
struct ReferenceSample {
  float x = 0.0f;
  float y = 0.0f;
  float value = 0.0f;
  float weight = 0.0f;
};

// Samples of `patch` around p that fall inside the reference image, weighted
// relative to the patch center p + shift.
void GatherReferenceSamples(const ImageView& ref_gray, const Eigen::Vector2i& p,
                            const DeformedPatch& patch, const CostParams& params,
                            int patch_side, std::vector<ReferenceSample>& out);

// 1 - rho of the reference samples against the source warped through H.
// Samples landing outside the source are dropped; more than
// max_invalid_fraction of them yields kInvalidMatchCost.
double CorrelateWarped(std::span<const ReferenceSample> samples, const Matrix3d& H,
                       const ImageView& src_gray, const CostParams& params);

// Same as NccDeformed for a plane already expressed in the reference frame.
double NccDeformedPlane(const ImageView& ref_gray, const ImageView& src_gray,
                        const Camera& ref, const Camera& src,
                        const Eigen::Vector2i& p, const CameraPlane& plane,
                        const DeformedPatch& patch, const CostParams& params,
                        int patch_side);

// Mean of the valid (< kInvalidMatchCost) level costs, or kInvalidMatchCost
// when none is valid.
double MultiScaleCost(std::span<const double> level_costs);

// Colour-gradient term between p_i in the reference and p_j in the source,
// given their per-channel Laplacian images. Out-of-bounds p_j yields
// ColorErrorSentinel.
double ProjectionColorError(const ImageView& ref_laplacian,
                            const ImageView& src_laplacian,
                            const Eigen::Vector2d& p_i,
                            const Eigen::Vector2d& p_j, double tau,
                            ColorErrorMode mode);

// Largest value ProjectionColorError can take for images in [0, 1].
double ColorErrorSentinel(int channels, double tau, ColorErrorMode mode);

// Source-view depth lookup for the reprojection term; empty when the source
// has no estimate yet.
struct DepthMapView {
  int width = 0;
  int height = 0;
  std::span<const float> depths;

  bool empty() const { return depths.empty(); }
};

// min(|p - p_back|, tau_rp) where p_back is p sent to the source through
// the plane, lifted with the source depth there and projected back.
double ReprojectionError(const Camera& ref, const Camera& src,
                         const Eigen::Vector2d& p, const CameraPlane& plane,
                         const DepthMapView& src_depth, double tau_rp);

struct SourceView {
  const ViewData* view = nullptr;
  // Per-level source estimates (may be null before the first estimate).
  const std::vector<HypothesisMap>* maps = nullptr;
};

// Evaluates the full aggregated cost of a hypothesis at a reference pixel.
// Thread-safe: only reads its inputs.
class CostEvaluator {
 public:
  CostEvaluator(const ViewData& ref, std::vector<SourceView> sources,
                const CostParams& params, const Weights& weights);

  // Aggregated cost of h anchored at (x, y) of level `level`; the components
  // averaged over the same best sources are written to `components`.
  double Evaluate(int level, int x, int y, const PlaneHypothesis& h,
                  CostComponents* components = nullptr) const;

  // Per-source components (unsorted) for anchor statistics.
  std::vector<CostComponents> EvaluateSources(int level, int x, int y,
                                              const PlaneHypothesis& h) const;

  const ViewData& reference() const { return ref_; }
  const CostParams& params() const { return params_; }
  const Weights& weights() const { return weights_; }
  void set_weights(const Weights& w) { weights_ = w; }
  double color_sentinel() const;

 private:
  struct LevelSamples {
    std::vector<ReferenceSample> samples;
    std::vector<std::uint32_t> offsets;  // per pixel, plus one end marker
  };

  CostComponents EvaluateSource(int level, int x, int y,
                                const CameraPlane& plane, std::size_t s) const;
  const DeformedPatch& PatchAt(int level, int x, int y) const;
  std::span<const ReferenceSample> SamplesAt(int level, int x, int y) const;

  const ViewData& ref_;
  std::vector<SourceView> sources_;
  CostParams params_;
  Weights weights_;
  DeformedPatch square_;
  std::vector<LevelSamples> cache_;
};

}  // namespace sdmvs
