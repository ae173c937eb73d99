#pragma once

#include <vector>

#include "sdmvs/cost.h"
#include "sdmvs/imaging.h"
#include "sdmvs/view.h"

namespace sdmvs {

struct Anchor {
  Eigen::Vector2d ref;
  Eigen::Vector2d src;
  int src_view = 0;
};
using AnchorSet = std::vector<Anchor>;

// Exact minimiser of w . S over {sum w = 1, w_i >= eta}: 1 - 2 eta on the
// smallest component (lowest index on ties), eta elsewhere.
Weights SolveWeightsVertex(const CostComponents& sums, double eta);

struct BarrierOptions {
  // Barrier weight is annealed geometrically from mu_start to mu_end with a
  // warm start at each stage.
  double mu_start = 1e-1;
  double mu_end = 1e-3;
  int stages = 5;
  double decrement_tol = 1e-10;
  int max_newton_steps = 100;
};

// Log-barrier minimiser of w . (S / |S|_1) on the same set, by damped Newton
// steps on (w_ms, w_rp) with w_pc = 1 - w_ms - w_rp. Throws
// Error(kDegenerateSums) for non-finite or negative sums.
Weights SolveWeightsBarrier(const CostComponents& sums, double eta,
                            const BarrierOptions& options = {});

// Barrier solve that only replaces `incumbent` when it lowers w . S. An
// incumbent off the simplex competes after L1 normalization, and not at all
// if the normalized weights fall below eta; the result is always feasible.
Weights MStep(const CostComponents& sums, double eta,
              const BarrierOptions& options, const Weights& incumbent);

// Barrier weight for outer iteration `iteration` (1-based) of `total`,
// annealed from 1e-1 to 1e-3.
double AnnealedBarrierWeight(int iteration, int total);

struct AnchorCostSums {
  CostComponents sums;
  int used = 0;
};

// Sums the components of each anchor's committed level-0 hypothesis against
// its own source view. `source_ids[i]` is the view id of evaluator source i.
// Anchors with an invalid matching or colour term are skipped. Throws
// Error(kTooFewAnchors) when fewer than `min_anchors` remain.
AnchorCostSums CollectAnchorCosts(const AnchorSet& anchors,
                                  const CostEvaluator& evaluator,
                                  const HypothesisMap& level0,
                                  const std::vector<int>& source_ids,
                                  int min_anchors);

struct CornerOptions {
  double harris_k = 0.04;
  int window_radius = 2;
  int suppression_radius = 4;
  double relative_threshold = 0.01;
  double absolute_threshold = 1e-7;
  int max_corners = 400;
  int border = 6;
};

std::vector<Eigen::Vector2i> HarrisCorners(const ImageView& gray,
                                           const CornerOptions& options = {});

struct MatchOptions {
  int patch_radius = 4;
  double min_score = 0.8;
  // Best distance (1 - NCC) must be below ratio * second best.
  double ratio = 0.8;
  // Largest displacement searched, as a fraction of the image diagonal.
  double max_displacement = 0.3;
  // Keep a match only if the reference corner is also the best match of the
  // source corner.
  bool mutual = true;
  CornerOptions corners;
};

// Corners in the reference matched to corners of each source by patch NCC
// with a ratio test. `src_ids[i]` labels srcs[i] in the output.
AnchorSet DetectAnchors(const ImageView& ref_gray,
                        const std::vector<ImageView>& srcs,
                        const std::vector<int>& src_ids,
                        const MatchOptions& options = {});

// Anchors whose source point lies within `max_distance` pixels of the
// epipolar line of its reference point. `src_cameras[i]` belongs to view id
// `src_ids[i]`; anchors of other views are dropped.
AnchorSet KeepEpipolarConsistent(const AnchorSet& anchors, const Camera& ref,
                                 const std::vector<Camera>& src_cameras,
                                 const std::vector<int>& src_ids,
                                 double max_distance);

}  // namespace sdmvs
