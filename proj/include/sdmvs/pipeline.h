#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "sdmvs/cost.h"
#include "sdmvs/emopt.h"
#include "sdmvs/propagation.h"
#include "sdmvs/refinement.h"
#include "sdmvs/view.h"

namespace sdmvs {

enum class Ablation {
  kNone,
  kAcmCost,     // square window, own level only
  kNoAdpCost,   // square window, multi-scale
  kNoMulCost,   // deformed window, own level only
  kAcmProp,     // symmetric branches, no instance cut, own level only
  kNoAdpProp,   // symmetric branches, no instance cut, multi-scale
  kNoMulProp,   // deformed branches, own level only
  kNoRef,       // no refinement
  kEq9Ref,      // axis-perturbation refinement
  kNoEm,        // weights stay at their initial values
};

std::optional<Ablation> ParseAblation(std::string_view name);
std::string_view AblationName(Ablation a);

struct PipelineConfig {
  int patch_side = 11;
  int downsample_count = 3;
  int cap_distance = 0;  // 0: 2 * patch_side
  int outer_iterations = 3;
  // Red/black propagation and refinement passes inside one outer iteration.
  int sweeps_per_iteration = 1;
  double depth_min = 0.1;
  double depth_max = 100.0;
  std::uint64_t seed = 0;
  int threads = 1;

  CostParams cost;
  Weights initial_weights;
  PropagationParams propagation;

  bool refinement = true;
  RefineParams refine;  // depth range is filled from depth_min/depth_max

  bool em = true;
  double eta = 0.1;
  int min_anchors = 50;
  // Detected anchors farther than this from their epipolar line are dropped.
  double anchor_epipolar_px = 2.0;
  bool exact_m_step = false;
  // One weight vector per view (true) or a single one shared by all views.
  bool per_view_weights = true;

  // Views whose maps are estimated; empty means all.
  std::vector<int> active_views;
};

void ApplyAblation(Ablation a, PipelineConfig& config);

struct ViewInput {
  int id = 0;
  Camera camera;
  Image image;
  LabelMap labels;
  std::vector<LabelMap> coarse_labels;
  // Precomputed correspondences; detected from the images when absent.
  std::optional<AnchorSet> anchors;
};

struct StepEvent {
  enum class Stage { kPropagation, kRefinement };
  int view = 0;
  int iteration = 0;
  int sweep = 0;
  Stage stage = Stage::kPropagation;
  int parity = 0;
  int round = 0;
  int level = 0;
  const HypothesisMap* before = nullptr;
  const HypothesisMap* after = nullptr;
};
using StepMonitor = std::function<void(const StepEvent&)>;

struct IterationStats {
  int iteration = 0;
  int view = 0;
  // Mean level-0 cost at the start and end of the view's E-step.
  double mean_cost_start = 0.0;
  double mean_cost_end = 0.0;
  Weights weights;
  int anchors_used = 0;
};

class Reconstruction {
 public:
  Reconstruction(std::vector<ViewInput> views, const PipelineConfig& config);
  ~Reconstruction();

  // Random start: depth uniform in the range, normals uniform on the facing
  // hemisphere, then every cost evaluated once.
  void Initialize();
  // One outer iteration over every active view: cost refresh, propagation
  // and refinement per parity, then the weight update.
  void RunIteration(int iteration, const StepMonitor* monitor = nullptr);
  // Initialize followed by all outer iterations.
  void Run(const StepMonitor* monitor = nullptr);

  int view_count() const { return static_cast<int>(views_.size()); }
  int view_id(int v) const { return inputs_[v].id; }
  const ViewData& view(int v) const { return *views_[v]; }
  const Camera& camera(int v) const { return inputs_[v].camera; }
  const Image& image(int v) const { return inputs_[v].image; }
  const std::vector<HypothesisMap>& maps(int v) const { return maps_[v]; }
  const HypothesisMap& result(int v) const { return maps_[v][0]; }
  bool estimated(int v) const { return estimated_[v]; }
  const Weights& weights(int v) const { return weights_[v]; }
  const AnchorSet& anchors(int v) const { return anchors_[v]; }
  const std::vector<IterationStats>& stats() const { return stats_; }
  const PipelineConfig& config() const { return config_; }

  // Evaluator of view v against every other view with the current weights.
  CostEvaluator MakeEvaluator(int v) const;

 private:
  // 1-based index over all sweeps of all outer iterations.
  int PassIndex(int iteration, int sweep) const;
  bool IsActive(int v) const;
  void InitializeView(int v);
  void RefreshCosts(int v, const CostEvaluator& evaluator);
  void PropagateLevel(int v, int pass, int parity, int level,
                      const CostEvaluator& evaluator, const StepMonitor* monitor);
  void RefineLevel(int v, int pass, int parity, int round, int level,
                   const CostEvaluator& evaluator,
                   std::vector<std::vector<TangentFrame>>& frames,
                   const StepMonitor* monitor);
  std::optional<AnchorCostSums> CollectAnchors(int v,
                                               const CostEvaluator& evaluator) const;
  double MeanCost(int v) const;

  PipelineConfig config_;
  std::vector<ViewInput> inputs_;
  std::vector<std::unique_ptr<ViewData>> views_;
  std::vector<std::vector<HypothesisMap>> maps_;
  std::vector<bool> estimated_;
  std::vector<Weights> weights_;
  std::vector<AnchorSet> anchors_;
  std::vector<IterationStats> stats_;
  int threads_ = 1;
};

}  // namespace sdmvs
