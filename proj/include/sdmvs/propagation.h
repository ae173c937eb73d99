#pragma once

#include <array>
#include <optional>
#include <vector>

#include "sdmvs/cost.h"
#include "sdmvs/segmentation.h"
#include "sdmvs/view.h"

namespace sdmvs {

// Red/black pixel sets by (x + y) parity, row-major within each set.
std::array<std::vector<Eigen::Vector2i>, 2> CheckerboardSchedule(int width,
                                                                 int height);

struct Candidate {
  PlaneHypothesis hypothesis;
  float stored_cost = 0.0f;
  int level = 0;
  // Position of the sample in its own level's pixel grid.
  int x = 0;
  int y = 0;
};

// Best stored-cost sample per search domain, indexed by Direction.
struct CandidateSet {
  std::array<std::optional<Candidate>, kDirectionCount> domains;

  int size() const;
  bool empty() const { return size() == 0; }
};

struct PropagationParams {
  // Branch lengths from the deformed patch and branches cut at the instance
  // boundary; false uses the symmetric pattern of the square window.
  bool adaptive = true;
  // Union of search domains over levels l..k; false uses level l only.
  bool multi_scale = true;
};

// Search-domain minima for pixel (x, y) of `level`, reading the stored
// hypotheses and costs of `maps` (one map per level). Samples from level
// l' > level come from the branch pattern of the covering coarse pixel.
// A degenerate (single-pixel instance) pixel in adaptive mode yields an
// empty set.
CandidateSet PropagatePixel(const ViewData& view,
                            const std::vector<HypothesisMap>& maps, int level,
                            int x, int y, const PropagationParams& params);

// Propagation pattern used at (x, y) of `level` under `params`.
PropagationPattern PatternAt(const ViewData& view, int level, int x, int y,
                             bool adaptive);

struct CommitResult {
  PlaneHypothesis hypothesis;
  double cost = 0.0;
  // Direction index of the committed candidate, or -1 if the incumbent stayed.
  int direction = -1;
};

// Re-anchors each candidate's plane at (x, y), evaluates it, and keeps the
// lowest cost if strictly below the incumbent's. Ties between candidates go
// to the lower direction index. Candidates whose re-anchored depth leaves
// [depth_min, depth_max] or that face away are skipped.
CommitResult EvaluateAndCommit(const CostEvaluator& evaluator,
                               const ViewData& view, int level, int x, int y,
                               const CandidateSet& candidates,
                               const PlaneHypothesis& current,
                               double current_cost, double depth_min,
                               double depth_max);

// Re-expresses a hypothesis stored at pixel `from` of `from_level` as a
// hypothesis at pixel `to` of `to_level` on the same plane.
std::optional<PlaneHypothesis> ReanchorHypothesis(const ViewData& view,
                                                  int from_level,
                                                  const Eigen::Vector2i& from,
                                                  int to_level,
                                                  const Eigen::Vector2i& to,
                                                  const PlaneHypothesis& h);

}  // namespace sdmvs
