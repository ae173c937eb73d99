#include "sdmvs/propagation.h"

#include <algorithm>

namespace sdmvs {

std::array<std::vector<Eigen::Vector2i>, 2> CheckerboardSchedule(int width,
                                                                 int height) {
  std::array<std::vector<Eigen::Vector2i>, 2> out;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out[(x + y) & 1].emplace_back(x, y);
  }
  return out;
}

int CandidateSet::size() const {
  return static_cast<int>(std::count_if(
      domains.begin(), domains.end(), [](const auto& c) { return c.has_value(); }));
}

PropagationPattern PatternAt(const ViewData& view, int level, int x, int y,
                             bool adaptive) {
  const ViewLevel& lv = view.level(level);
  if (!adaptive) {
    const DeformedPatch square = SquarePatch(view.patch_side());
    return MakePropagationPattern(Distances{1, 1, 1, 1}, square.samples_h,
                                  square.samples_v);
  }
  const DeformedPatch& patch = lv.patch(x, y);
  return MakePropagationPattern(lv.distances.at(x, y), patch.samples_h,
                                patch.samples_v);
}

CandidateSet PropagatePixel(const ViewData& view,
                            const std::vector<HypothesisMap>& maps, int level,
                            int x, int y, const PropagationParams& params) {
  CandidateSet out;
  if (params.adaptive && view.level(level).patch(x, y).degenerate) return out;
  const int last = params.multi_scale ? view.level_count() - 1 : level;
  thread_local std::vector<BranchSample> samples;
  for (int l = level; l <= last; ++l) {
    const ViewLevel& lv = view.level(l);
    const int shift = l - level;
    const int qx = std::min(x >> shift, lv.width() - 1);
    const int qy = std::min(y >> shift, lv.height() - 1);
    if (params.adaptive && lv.patch(qx, qy).degenerate) continue;
    const PropagationPattern pattern = PatternAt(view, l, qx, qy, params.adaptive);
    EnumerateBranchSamples(pattern, qx, qy, lv.width(), lv.height(),
                           params.adaptive ? &lv.labels : nullptr, samples);
    const HypothesisMap& map = maps[l];
    for (const BranchSample& s : samples) {
      const float cost = map.cost(s.x, s.y);
      auto& slot = out.domains[s.domain];
      if (!slot || cost < slot->stored_cost) {
        slot = Candidate{map.hypothesis(s.x, s.y), cost, l, s.x, s.y};
      }
    }
  }
  return out;
}

std::optional<PlaneHypothesis> ReanchorHypothesis(const ViewData& view,
                                                  int from_level,
                                                  const Eigen::Vector2i& from,
                                                  int to_level,
                                                  const Eigen::Vector2i& to,
                                                  const PlaneHypothesis& h) {
  const CameraPlane plane = PlaneThroughPixel(view.level(from_level).camera,
                                              from.cast<double>(), h);
  const Camera& cam = view.level(to_level).camera;
  const Eigen::Vector2d p = to.cast<double>();
  const auto depth = DepthOnPlane(cam, p, plane);
  if (!depth || !FacesCamera(cam, p, h.normal)) return std::nullopt;
  return PlaneHypothesis{*depth, h.normal};
}

CommitResult EvaluateAndCommit(const CostEvaluator& evaluator,
                               const ViewData& view, int level, int x, int y,
                               const CandidateSet& candidates,
                               const PlaneHypothesis& current,
                               double current_cost, double depth_min,
                               double depth_max) {
  CommitResult best{current, current_cost, -1};
  for (int d = 0; d < kDirectionCount; ++d) {
    const auto& c = candidates.domains[d];
    if (!c) continue;
    const auto h = ReanchorHypothesis(view, c->level, {c->x, c->y}, level,
                                      {x, y}, c->hypothesis);
    if (!h || h->depth < depth_min || h->depth > depth_max) continue;
    const double cost = evaluator.Evaluate(level, x, y, *h);
    if (cost < best.cost) best = CommitResult{*h, cost, d};
  }
  return best;
}

}  // namespace sdmvs
