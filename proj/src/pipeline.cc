#include "sdmvs/pipeline.h"

#include <algorithm>
#include <array>
#include <cmath>

#include "sdmvs/error.h"
#include "sdmvs/parallel.h"

namespace sdmvs {

namespace {

constexpr std::array<std::pair<Ablation, std::string_view>, 10> kAblationNames{{
    {Ablation::kNone, "none"},
    {Ablation::kAcmCost, "acm-cost"},
    {Ablation::kNoAdpCost, "no-adp-cost"},
    {Ablation::kNoMulCost, "no-mul-cost"},
    {Ablation::kAcmProp, "acm-prop"},
    {Ablation::kNoAdpProp, "no-adp-prop"},
    {Ablation::kNoMulProp, "no-mul-prop"},
    {Ablation::kNoRef, "no-ref"},
    {Ablation::kEq9Ref, "eq9-ref"},
    {Ablation::kNoEm, "no-em"},
}};

// Pixel key unique across levels for the per-pixel random streams.
std::uint64_t PixelKey(int level, std::size_t index) {
  return (static_cast<std::uint64_t>(level) << 40) | index;
}

std::uint64_t StepKey(int iteration, int stage, int parity, int round, int level) {
  return ((((static_cast<std::uint64_t>(iteration) * 4 + stage) * 2 + parity) * 64 +
           round) * 64) + level + 1;
}

}  // namespace

int Reconstruction::PassIndex(int iteration, int sweep) const {
  return (iteration - 1) * std::max(config_.sweeps_per_iteration, 1) + sweep + 1;
}

std::optional<Ablation> ParseAblation(std::string_view name) {
  for (const auto& [a, n] : kAblationNames) {
    if (n == name) return a;
  }
  return std::nullopt;
}

std::string_view AblationName(Ablation a) {
  for (const auto& [v, n] : kAblationNames) {
    if (v == a) return n;
  }
  return "none";
}

void ApplyAblation(Ablation a, PipelineConfig& config) {
  switch (a) {
    case Ablation::kNone:
      break;
    case Ablation::kAcmCost:
      config.cost.square_patch = true;
      config.cost.multi_scale = false;
      break;
    case Ablation::kNoAdpCost:
      config.cost.square_patch = true;
      break;
    case Ablation::kNoMulCost:
      config.cost.multi_scale = false;
      break;
    case Ablation::kAcmProp:
      config.propagation.adaptive = false;
      config.propagation.multi_scale = false;
      break;
    case Ablation::kNoAdpProp:
      config.propagation.adaptive = false;
      break;
    case Ablation::kNoMulProp:
      config.propagation.multi_scale = false;
      break;
    case Ablation::kNoRef:
      config.refinement = false;
      break;
    case Ablation::kEq9Ref:
      config.refine.mode = RefineMode::kAxisPerturbation;
      break;
    case Ablation::kNoEm:
      config.em = false;
      break;
  }
}

Reconstruction::Reconstruction(std::vector<ViewInput> views,
                               const PipelineConfig& config)
    : config_(config), inputs_(std::move(views)) {
  if (inputs_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "at least two views are required");
  }
  if (!(config_.depth_min > 0.0) || config_.depth_min > config_.depth_max) {
    throw Error(ErrorCode::kInvalidArgument,
                "depth range must satisfy 0 < depth_min <= depth_max");
  }
  config_.refine.depth_min = config_.depth_min;
  config_.refine.depth_max = config_.depth_max;
  threads_ = ResolveThreads(config_.threads);

  ViewBuildOptions build;
  build.downsample_count = config_.downsample_count;
  build.patch_side = config_.patch_side;
  build.cap_distance = config_.cap_distance;
  const int n = static_cast<int>(inputs_.size());
  views_.resize(n);
  ParallelFor(n, threads_, [&](int begin, int end) {
    for (int v = begin; v < end; ++v) {
      views_[v] = std::make_unique<ViewData>(inputs_[v].camera, inputs_[v].image,
                                             inputs_[v].labels, build,
                                             inputs_[v].coarse_labels);
    }
  });
  maps_.resize(n);
  estimated_.assign(n, false);
  weights_.assign(n, config_.initial_weights);
  anchors_.resize(n);
  for (int v = 0; v < n; ++v) {
    if (inputs_[v].anchors) {
      anchors_[v] = *inputs_[v].anchors;
      continue;
    }
    if (!config_.em || !IsActive(v)) continue;
    std::vector<ImageView> srcs;
    std::vector<Camera> cams;
    std::vector<int> ids;
    for (int j = 0; j < n; ++j) {
      if (j == v) continue;
      srcs.push_back(views_[j]->level(0).gray);
      cams.push_back(inputs_[j].camera);
      ids.push_back(inputs_[j].id);
    }
    anchors_[v] = KeepEpipolarConsistent(
        DetectAnchors(views_[v]->level(0).gray, srcs, ids), inputs_[v].camera,
        cams, ids, config_.anchor_epipolar_px);
  }
}

Reconstruction::~Reconstruction() = default;

bool Reconstruction::IsActive(int v) const {
  if (config_.active_views.empty()) return true;
  return std::find(config_.active_views.begin(), config_.active_views.end(),
                   inputs_[v].id) != config_.active_views.end();
}

CostEvaluator Reconstruction::MakeEvaluator(int v) const {
  std::vector<SourceView> sources;
  for (int j = 0; j < view_count(); ++j) {
    if (j == v) continue;
    sources.push_back(SourceView{views_[j].get(), estimated_[j] ? &maps_[j] : nullptr});
  }
  return CostEvaluator(*views_[v], std::move(sources), config_.cost, weights_[v]);
}

void Reconstruction::InitializeView(int v) {
  const ViewData& view = *views_[v];
  const CostEvaluator evaluator = MakeEvaluator(v);
  const std::uint64_t seed = config_.seed ^ (static_cast<std::uint64_t>(inputs_[v].id) << 48);
  maps_[v].clear();
  for (int l = 0; l < view.level_count(); ++l) {
    const ViewLevel& lv = view.level(l);
    maps_[v].emplace_back(lv.width(), lv.height());
    HypothesisMap& map = maps_[v][l];
    ParallelFor(lv.height(), threads_, [&](int y0, int y1) {
      for (int y = y0; y < y1; ++y) {
        for (int x = 0; x < lv.width(); ++x) {
          Rng rng = PixelRng(seed, PixelKey(l, map.index(x, y)), 0);
          PlaneHypothesis h;
          h.depth = config_.depth_min < config_.depth_max
                        ? std::uniform_real_distribution<double>(
                              config_.depth_min, config_.depth_max)(rng)
                        : config_.depth_min;
          const Vector3d ray = lv.camera.PixelRay(Vector2d(x, y));
          std::normal_distribution<double> gauss;
          Vector3d n;
          do {
            n = Vector3d(gauss(rng), gauss(rng), gauss(rng));
          } while (n.norm() < 1e-6 || std::abs(n.normalized().dot(ray)) < 1e-6);
          n.normalize();
          if (n.dot(ray) > 0.0) n = -n;
          h.normal = n;
          map.Set(x, y, h, static_cast<float>(evaluator.Evaluate(l, x, y, h)));
        }
      }
    });
  }
}

void Reconstruction::Initialize() {
  stats_.clear();
  std::fill(estimated_.begin(), estimated_.end(), false);
  std::fill(weights_.begin(), weights_.end(), config_.initial_weights);
  for (int v = 0; v < view_count(); ++v) InitializeView(v);
}

void Reconstruction::RefreshCosts(int v, const CostEvaluator& evaluator) {
  for (int l = 0; l < views_[v]->level_count(); ++l) {
    HypothesisMap& map = maps_[v][l];
    ParallelFor(map.height(), threads_, [&](int y0, int y1) {
      for (int y = y0; y < y1; ++y) {
        for (int x = 0; x < map.width(); ++x) {
          map.SetCost(x, y, static_cast<float>(
                                evaluator.Evaluate(l, x, y, map.hypothesis(x, y))));
        }
      }
    });
  }
}

void Reconstruction::PropagateLevel(int v, int pass, int parity, int level,
                                    const CostEvaluator& evaluator,
                                    const StepMonitor* monitor) {
  const ViewData& view = *views_[v];
  const std::vector<HypothesisMap> snapshot = maps_[v];
  HypothesisMap& map = maps_[v][level];
  const auto schedule = CheckerboardSchedule(map.width(), map.height());
  const auto& pixels = schedule[parity];
  ParallelFor(static_cast<int>(pixels.size()), threads_, [&](int b, int e) {
    for (int i = b; i < e; ++i) {
      const int x = pixels[i].x();
      const int y = pixels[i].y();
      const CandidateSet candidates =
          PropagatePixel(view, snapshot, level, x, y, config_.propagation);
      if (candidates.empty()) continue;
      const HypothesisMap& old = snapshot[level];
      const CommitResult r = EvaluateAndCommit(
          evaluator, view, level, x, y, candidates, old.hypothesis(x, y),
          old.cost(x, y), config_.depth_min, config_.depth_max);
      if (r.direction >= 0) map.Set(x, y, r.hypothesis, static_cast<float>(r.cost));
    }
  });
  if (monitor && *monitor) {
    StepEvent event;
    event.view = v;
    event.iteration = (pass - 1) / std::max(config_.sweeps_per_iteration, 1) + 1;
    event.sweep = (pass - 1) % std::max(config_.sweeps_per_iteration, 1);
    event.stage = StepEvent::Stage::kPropagation;
    event.parity = parity;
    event.level = level;
    event.before = &snapshot[level];
    event.after = &map;
    (*monitor)(event);
  }
}

void Reconstruction::RefineLevel(int v, int pass, int parity, int round,
                                 int level, const CostEvaluator& evaluator,
                                 std::vector<std::vector<TangentFrame>>& frames,
                                 const StepMonitor* monitor) {
  const ViewData& view = *views_[v];
  const int k = view.level_count() - 1;
  const int rounds = config_.refine.rounds;
  const int interval_level = std::max(level, std::min(k, rounds - round));
  const std::vector<HypothesisMap> snapshot = maps_[v];
  const HypothesisMap& depth_source = snapshot[interval_level];
  const ViewLevel& interval_view = view.level(interval_level);
  const DeformedPatch square = SquarePatch(view.patch_side());
  HypothesisMap& map = maps_[v][level];
  const auto schedule = CheckerboardSchedule(map.width(), map.height());
  const auto& pixels = schedule[parity];
  const std::uint64_t seed = config_.seed ^ (static_cast<std::uint64_t>(inputs_[v].id) << 48);
  const std::uint64_t step = StepKey(pass, 1, parity, round, level);
  const int shift = interval_level - level;
  ParallelFor(static_cast<int>(pixels.size()), threads_, [&](int b, int e) {
    for (int i = b; i < e; ++i) {
      const int x = pixels[i].x();
      const int y = pixels[i].y();
      const int qx = std::min(x >> shift, interval_view.width() - 1);
      const int qy = std::min(y >> shift, interval_view.height() - 1);
      const DeformedPatch& own = interval_view.patch(qx, qy);
      const DeformedPatch& patch =
          config_.cost.square_patch || own.degenerate ? square : own;
      const auto interval = DepthInterval(
          patch, qx, qy, depth_source.depths(), depth_source.width(),
          depth_source.height(), config_.depth_min, config_.depth_max);
      Rng rng = PixelRng(seed, PixelKey(level, map.index(x, y)), step);
      const HypothesisMap& old = snapshot[level];
      const RefineResult r = RefinePixel(
          evaluator, level, x, y, old.hypothesis(x, y), old.cost(x, y), interval,
          round, config_.refine, frames[level][map.index(x, y)], rng);
      if (r.changed) map.Set(x, y, r.hypothesis, static_cast<float>(r.cost));
    }
  });
  if (monitor && *monitor) {
    StepEvent event;
    event.view = v;
    event.iteration = (pass - 1) / std::max(config_.sweeps_per_iteration, 1) + 1;
    event.sweep = (pass - 1) % std::max(config_.sweeps_per_iteration, 1);
    event.stage = StepEvent::Stage::kRefinement;
    event.parity = parity;
    event.round = round;
    event.level = level;
    event.before = &snapshot[level];
    event.after = &map;
    (*monitor)(event);
  }
}

std::optional<AnchorCostSums> Reconstruction::CollectAnchors(
    int v, const CostEvaluator& evaluator) const {
  std::vector<int> ids;
  for (int j = 0; j < view_count(); ++j) {
    if (j != v) ids.push_back(inputs_[j].id);
  }
  try {
    return CollectAnchorCosts(anchors_[v], evaluator, maps_[v][0], ids,
                              config_.min_anchors);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTooFewAnchors) return std::nullopt;
    throw;
  }
}

double Reconstruction::MeanCost(int v) const {
  const auto costs = maps_[v][0].costs();
  double sum = 0.0;
  for (float c : costs) sum += c;
  return costs.empty() ? 0.0 : sum / costs.size();
}

void Reconstruction::RunIteration(int iteration, const StepMonitor* monitor) {
  CostComponents shared_sums;
  int shared_used = 0;
  for (int v = 0; v < view_count(); ++v) {
    if (!IsActive(v)) continue;
    const ViewData& view = *views_[v];
    const int k = view.level_count() - 1;
    const CostEvaluator evaluator = MakeEvaluator(v);
    IterationStats stats;
    stats.iteration = iteration;
    stats.view = inputs_[v].id;
    RefreshCosts(v, evaluator);
    stats.mean_cost_start = MeanCost(v);

    const std::uint64_t seed = config_.seed ^ (static_cast<std::uint64_t>(inputs_[v].id) << 48);
    for (int sweep = 0; sweep < std::max(config_.sweeps_per_iteration, 1); ++sweep) {
      const int pass = PassIndex(iteration, sweep);
      for (int parity = 0; parity < 2; ++parity) {
        for (int level = k; level >= 0; --level) {
          PropagateLevel(v, pass, parity, level, evaluator, monitor);
        }
        if (!config_.refinement) continue;
        std::vector<std::vector<TangentFrame>> frames(view.level_count());
        for (int level = 0; level <= k; ++level) {
          const HypothesisMap& map = maps_[v][level];
          frames[level].resize(static_cast<std::size_t>(map.width()) * map.height());
          const std::uint64_t step = StepKey(pass, 2, parity, 0, level);
          ParallelFor(map.height(), threads_, [&](int y0, int y1) {
            for (int y = y0; y < y1; ++y) {
              for (int x = 0; x < map.width(); ++x) {
                Rng rng = PixelRng(seed, PixelKey(level, map.index(x, y)), step);
                frames[level][map.index(x, y)] =
                    InitialFrame(map.hypothesis(x, y).normal, rng);
              }
            }
          });
        }
        for (int round = 1; round <= config_.refine.rounds; ++round) {
          for (int level = k; level >= 0; --level) {
            RefineLevel(v, pass, parity, round, level, evaluator, frames, monitor);
          }
        }
      }
    }
    estimated_[v] = true;
    stats.mean_cost_end = MeanCost(v);

    if (config_.em) {
      if (const auto sums = CollectAnchors(v, evaluator)) {
        stats.anchors_used = sums->used;
        if (config_.per_view_weights) {
          if (config_.exact_m_step) {
            weights_[v] = SolveWeightsVertex(sums->sums, config_.eta);
          } else {
            BarrierOptions options;
            options.mu_end =
                AnnealedBarrierWeight(iteration, config_.outer_iterations);
            weights_[v] = MStep(sums->sums, config_.eta, options, weights_[v]);
          }
        } else {
          shared_sums.ms += sums->sums.ms;
          shared_sums.rp += sums->sums.rp;
          shared_sums.pc += sums->sums.pc;
          shared_used += sums->used;
        }
      }
    }
    stats.weights = weights_[v];
    stats_.push_back(stats);
  }
  if (config_.em && !config_.per_view_weights && shared_used > 0) {
    Weights shared;
    if (config_.exact_m_step) {
      shared = SolveWeightsVertex(shared_sums, config_.eta);
    } else {
      BarrierOptions options;
      options.mu_end = AnnealedBarrierWeight(iteration, config_.outer_iterations);
      shared = MStep(shared_sums, config_.eta, options, weights_[0]);
    }
    std::fill(weights_.begin(), weights_.end(), shared);
  }
}

void Reconstruction::Run(const StepMonitor* monitor) {
  Initialize();
  for (int it = 1; it <= config_.outer_iterations; ++it) RunIteration(it, monitor);
}

}  // namespace sdmvs
