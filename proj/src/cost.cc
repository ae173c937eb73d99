#include "sdmvs/cost.h"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sdmvs {

double Aggregate(const CostComponents& c, const Weights& w) {
  return w.ms * c.ms + w.rp * c.rp + w.pc * c.pc;
}

double WeightedNccCost(std::span<const float> ref, std::span<const float> src,
                       std::span<const float> weights, int min_samples,
                       double min_variance) {
  const std::size_t n = ref.size();
  if (n < static_cast<std::size_t>(std::max(min_samples, 1))) {
    return kInvalidMatchCost;
  }
  double sw = 0.0, sr = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sw += weights[i];
    sr += weights[i] * ref[i];
    ss += weights[i] * src[i];
  }
  if (!(sw > 0.0)) return kInvalidMatchCost;
  const double mr = sr / sw;
  const double ms = ss / sw;
  double vr = 0.0, vs = 0.0, cv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = ref[i] - mr;
    const double b = src[i] - ms;
    vr += weights[i] * a * a;
    vs += weights[i] * b * b;
    cv += weights[i] * a * b;
  }
  vr /= sw;
  vs /= sw;
  cv /= sw;
  if (vr < min_variance || vs < min_variance) return kInvalidMatchCost;
  const double rho = cv / std::sqrt(vr * vs);
  return std::clamp(1.0 - rho, 0.0, 2.0);
}

void GatherReferenceSamples(const ImageView& ref_gray, const Eigen::Vector2i& p,
                            const DeformedPatch& patch, const CostParams& params,
                            int patch_side, std::vector<ReferenceSample>& out) {
  out.clear();
  const double sigma_s =
      params.sigma_spatial > 0.0 ? params.sigma_spatial : 0.5 * patch_side;
  const double inv_sigma_c = 1.0 / params.sigma_color;
  const double inv_sigma_s = 1.0 / sigma_s;
  const int cx = std::clamp(p.x() + patch.shift.x(), 0, ref_gray.width - 1);
  const int cy = std::clamp(p.y() + patch.shift.y(), 0, ref_gray.height - 1);
  const float center = ref_gray.at(cx, cy);
  patch.ForEachSample([&](int dx, int dy) {
    const int rx = p.x() + dx;
    const int ry = p.y() + dy;
    if (rx < 0 || ry < 0 || rx >= ref_gray.width || ry >= ref_gray.height) {
      return;
    }
    const float r = ref_gray.at(rx, ry);
    const double dist = std::hypot(rx - cx, ry - cy);
    out.push_back(ReferenceSample{
        static_cast<float>(rx), static_cast<float>(ry), r,
        static_cast<float>(
            std::exp(-std::abs(r - center) * inv_sigma_c - dist * inv_sigma_s))});
  });
}

double CorrelateWarped(std::span<const ReferenceSample> samples, const Matrix3d& H,
                       const ImageView& src_gray, const CostParams& params) {
  const std::size_t total = samples.size();
  if (total == 0) return kInvalidMatchCost;
  const double max_x = src_gray.width - 1.0;
  const double max_y = src_gray.height - 1.0;
  const double max_invalid = params.max_invalid_fraction * static_cast<double>(total);
  std::size_t invalid = 0;
  std::size_t n = 0;
  double sw = 0.0, sr = 0.0, ss = 0.0, srr = 0.0, sss = 0.0, srs = 0.0;
  for (const ReferenceSample& smp : samples) {
    const double qz = H(2, 0) * smp.x + H(2, 1) * smp.y + H(2, 2);
    double qx = -1.0, qy = -1.0;
    if (qz > 0.0) {
      const double inv = 1.0 / qz;
      qx = (H(0, 0) * smp.x + H(0, 1) * smp.y + H(0, 2)) * inv;
      qy = (H(1, 0) * smp.x + H(1, 1) * smp.y + H(1, 2)) * inv;
    }
    if (!(qx >= 0.0 && qy >= 0.0 && qx <= max_x && qy <= max_y)) {
      if (++invalid > max_invalid) return kInvalidMatchCost;
      continue;
    }
    const double r = smp.value;
    const double v = SampleGray(src_gray, static_cast<float>(qx), static_cast<float>(qy));
    const double w = smp.weight;
    ++n;
    sw += w;
    sr += w * r;
    ss += w * v;
    srr += w * r * r;
    sss += w * v * v;
    srs += w * r * v;
  }
  if (n < static_cast<std::size_t>(std::max(params.min_samples, 1)) || !(sw > 0.0)) {
    return kInvalidMatchCost;
  }
  const double mr = sr / sw;
  const double ms = ss / sw;
  const double vr = srr / sw - mr * mr;
  const double vs = sss / sw - ms * ms;
  const double cv = srs / sw - mr * ms;
  if (vr < params.min_variance || vs < params.min_variance) return kInvalidMatchCost;
  const double rho = cv / std::sqrt(vr * vs);
  return std::clamp(1.0 - rho, 0.0, 2.0);
}

double NccDeformedPlane(const ImageView& ref_gray, const ImageView& src_gray,
                        const Camera& ref, const Camera& src,
                        const Eigen::Vector2i& p, const CameraPlane& plane,
                        const DeformedPatch& patch, const CostParams& params,
                        int patch_side) {
  if (plane.offset == 0.0) return kInvalidMatchCost;
  thread_local std::vector<ReferenceSample> samples;
  GatherReferenceSamples(ref_gray, p, patch, params, patch_side, samples);
  return CorrelateWarped(samples, PlaneHomography(ref, src, plane), src_gray, params);
}

double NccDeformed(const ImageView& ref_gray, const ImageView& src_gray,
                   const Camera& ref, const Camera& src,
                   const Eigen::Vector2i& p, const PlaneHypothesis& h,
                   const DeformedPatch& patch, const CostParams& params,
                   int patch_side) {
  const CameraPlane plane =
      PlaneThroughPixel(ref, p.cast<double>(), h);
  return NccDeformedPlane(ref_gray, src_gray, ref, src, p, plane, patch,
                          params, patch_side);
}

double MultiScaleCost(std::span<const double> level_costs) {
  double sum = 0.0;
  int count = 0;
  for (double c : level_costs) {
    if (c < kInvalidMatchCost) {
      sum += c;
      ++count;
    }
  }
  return count > 0 ? sum / count : kInvalidMatchCost;
}

double ColorErrorSentinel(int channels, double tau, ColorErrorMode mode) {
  if (mode == ColorErrorMode::kCapped) return tau;
  // Each channel's Laplacian lies in [-4, 4], so a difference is at most 8.
  return std::max(tau, 8.0 * std::sqrt(static_cast<double>(channels)));
}

double ProjectionColorError(const ImageView& ref_laplacian,
                            const ImageView& src_laplacian,
                            const Eigen::Vector2d& p_i,
                            const Eigen::Vector2d& p_j, double tau,
                            ColorErrorMode mode) {
  if (!ref_laplacian.Contains(p_i.x(), p_i.y()) ||
      !src_laplacian.Contains(p_j.x(), p_j.y())) {
    return ColorErrorSentinel(src_laplacian.channels, tau, mode);
  }
  float a[4];
  float b[4];
  SampleChannels(ref_laplacian, p_i.x(), p_i.y(), a);
  SampleChannels(src_laplacian, p_j.x(), p_j.y(), b);
  double sq = 0.0;
  for (int c = 0; c < ref_laplacian.channels; ++c) {
    const double d = static_cast<double>(b[c]) - a[c];
    sq += d * d;
  }
  const double norm = std::sqrt(sq);
  return mode == ColorErrorMode::kLiteral ? std::max(norm, tau)
                                          : std::min(norm, tau);
}

namespace {

// Inverse depth is affine in pixel coordinates on a plane, so interpolating
// it reproduces planar depth exactly.
std::optional<double> InterpolateDepth(const DepthMapView& map, double x,
                                       double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, map.width - 1);
  const int y1 = std::min(y0 + 1, map.height - 1);
  if (x0 < 0 || y0 < 0 || x0 >= map.width || y0 >= map.height) {
    return std::nullopt;
  }
  const double fx = x - x0;
  const double fy = y - y0;
  auto inv = [&map](int u, int v) -> double {
    const float d = map.depths[static_cast<std::size_t>(v) * map.width + u];
    return d > 0.0f ? 1.0 / d : 0.0;
  };
  const double i00 = inv(x0, y0), i10 = inv(x1, y0), i01 = inv(x0, y1),
               i11 = inv(x1, y1);
  if (i00 == 0.0 || i10 == 0.0 || i01 == 0.0 || i11 == 0.0) {
    const int nx = fx < 0.5 ? x0 : x1;
    const int ny = fy < 0.5 ? y0 : y1;
    const float d = map.depths[static_cast<std::size_t>(ny) * map.width + nx];
    if (!(d > 0.0f)) return std::nullopt;
    return d;
  }
  const double top = i00 + fx * (i10 - i00);
  const double bottom = i01 + fx * (i11 - i01);
  return 1.0 / (top + fy * (bottom - top));
}

}  // namespace

double ReprojectionError(const Camera& ref, const Camera& src,
                         const Eigen::Vector2d& p, const CameraPlane& plane,
                         const DepthMapView& src_depth, double tau_rp) {
  if (src_depth.empty()) return tau_rp;
  const auto depth = DepthOnPlane(ref, p, plane);
  if (!depth) return tau_rp;
  const Vector3d X = ref.CameraToWorld(*depth * ref.PixelRay(p));
  const auto q = TryProject(src, X);
  if (!q || !src.InBounds(q->pixel)) return tau_rp;
  const auto d_src = InterpolateDepth(src_depth, q->pixel.x(), q->pixel.y());
  if (!d_src) return tau_rp;
  const Vector3d X_back = src.CameraToWorld(*d_src * src.PixelRay(q->pixel));
  const auto back = TryProject(ref, X_back);
  if (!back) return tau_rp;
  return std::min((back->pixel - p).norm(), tau_rp);
}

CostEvaluator::CostEvaluator(const ViewData& ref, std::vector<SourceView> sources,
                             const CostParams& params, const Weights& weights)
    : ref_(ref),
      sources_(std::move(sources)),
      params_(params),
      weights_(weights),
      square_(SquarePatch(ref.patch_side())) {
  std::vector<ReferenceSample> buffer;
  cache_.resize(ref_.level_count());
  for (int l = 0; l < ref_.level_count(); ++l) {
    const ViewLevel& lv = ref_.level(l);
    LevelSamples& cache = cache_[l];
    cache.offsets.reserve(static_cast<std::size_t>(lv.width()) * lv.height() + 1);
    cache.offsets.push_back(0);
    for (int y = 0; y < lv.height(); ++y) {
      for (int x = 0; x < lv.width(); ++x) {
        const DeformedPatch& patch = PatchAt(l, x, y);
        GatherReferenceSamples(lv.gray, Eigen::Vector2i(x, y), patch, params_,
                               ref_.patch_side(), buffer);
        cache.samples.insert(cache.samples.end(), buffer.begin(), buffer.end());
        cache.offsets.push_back(static_cast<std::uint32_t>(cache.samples.size()));
      }
    }
  }
}

const DeformedPatch& CostEvaluator::PatchAt(int level, int x, int y) const {
  const DeformedPatch& patch = ref_.level(level).patch(x, y);
  return params_.square_patch || patch.degenerate ? square_ : patch;
}

std::span<const ReferenceSample> CostEvaluator::SamplesAt(int level, int x,
                                                          int y) const {
  const LevelSamples& cache = cache_[level];
  const std::size_t i = static_cast<std::size_t>(y) * ref_.level(level).width() + x;
  return std::span<const ReferenceSample>(cache.samples.data() + cache.offsets[i],
                                          cache.offsets[i + 1] - cache.offsets[i]);
}

double CostEvaluator::color_sentinel() const {
  return ColorErrorSentinel(ref_.level(0).laplacian.channels(), params_.tau_pc,
                            params_.pc_mode);
}

CostComponents CostEvaluator::EvaluateSource(int level, int x, int y,
                                             const CameraPlane& plane,
                                             std::size_t s) const {
  const ViewData& src = *sources_[s].view;
  CostComponents out;

  const int last = params_.multi_scale ? ref_.level_count() - 1 : level;
  double level_costs[8];
  int n = 0;
  for (int l = level; l <= last && n < 8; ++l) {
    const ViewLevel& rl = ref_.level(l);
    const ViewLevel& sl = src.level(l);
    const int shift = l - level;
    const Eigen::Vector2i q(std::min(x >> shift, rl.width() - 1),
                            std::min(y >> shift, rl.height() - 1));
    // A coarse pixel of another instance carries that instance's patch.
    if (l > level && !params_.square_patch &&
        rl.instances.at(q.x(), q.y()) != ref_.level(level).instances.at(x, y)) {
      continue;
    }
    if (plane.offset == 0.0) {
      level_costs[n++] = kInvalidMatchCost;
      continue;
    }
    level_costs[n++] = CorrelateWarped(SamplesAt(l, q.x(), q.y()),
                                       PlaneHomography(rl.camera, sl.camera, plane),
                                       sl.gray, params_);
  }
  out.ms = MultiScaleCost(std::span<const double>(level_costs, n));

  const ViewLevel& rl = ref_.level(level);
  const ViewLevel& sl = src.level(level);
  const Eigen::Vector2d p(x, y);
  const Vector3d qh =
      PlaneHomography(rl.camera, sl.camera, plane) * Vector3d(x, y, 1.0);
  if (qh.z() > 0.0) {
    out.pc = ProjectionColorError(rl.laplacian, sl.laplacian, p,
                                  Eigen::Vector2d(qh.x() / qh.z(), qh.y() / qh.z()),
                                  params_.tau_pc, params_.pc_mode);
  } else {
    out.pc = color_sentinel();
  }

  DepthMapView depth;
  if (sources_[s].maps != nullptr &&
      static_cast<int>(sources_[s].maps->size()) > level) {
    const HypothesisMap& m = (*sources_[s].maps)[level];
    depth = DepthMapView{m.width(), m.height(), m.depths()};
  }
  out.rp = ReprojectionError(rl.camera, sl.camera, p, plane, depth,
                             params_.tau_rp);
  return out;
}

std::vector<CostComponents> CostEvaluator::EvaluateSources(
    int level, int x, int y, const PlaneHypothesis& h) const {
  const ViewLevel& rl = ref_.level(level);
  const CameraPlane plane = PlaneThroughPixel(rl.camera, Eigen::Vector2d(x, y), h);
  std::vector<CostComponents> out(sources_.size());
  for (std::size_t s = 0; s < sources_.size(); ++s) {
    out[s] = EvaluateSource(level, x, y, plane, s);
  }
  return out;
}

double CostEvaluator::Evaluate(int level, int x, int y, const PlaneHypothesis& h,
                               CostComponents* components) const {
  const ViewLevel& rl = ref_.level(level);
  const Eigen::Vector2d p(x, y);
  CostComponents worst{kInvalidMatchCost, params_.tau_rp, color_sentinel()};
  if (!(h.depth > 0.0) || !FacesCamera(rl.camera, p, h.normal) ||
      sources_.empty()) {
    if (components) *components = worst;
    return Aggregate(worst, weights_);
  }
  const CameraPlane plane = PlaneThroughPixel(rl.camera, p, h);

  constexpr std::size_t kMaxSources = 16;
  const std::size_t n = std::min(sources_.size(), kMaxSources);
  CostComponents per_source[kMaxSources];
  double aggregated[kMaxSources];
  std::size_t order[kMaxSources];
  for (std::size_t s = 0; s < n; ++s) {
    per_source[s] = EvaluateSource(level, x, y, plane, s);
    aggregated[s] = Aggregate(per_source[s], weights_);
    order[s] = s;
  }
  // Sources without a valid correlation rank last and only enter the mean
  // when no source is valid.
  auto valid = [&](std::size_t s) { return per_source[s].ms < kInvalidMatchCost; };
  std::sort(order, order + n, [&](std::size_t a, std::size_t b) {
    if (valid(a) != valid(b)) return valid(a);
    return aggregated[a] < aggregated[b] ||
           (aggregated[a] == aggregated[b] && a < b);
  });
  const std::size_t valid_count =
      static_cast<std::size_t>(std::count_if(order, order + n, valid));
  const std::size_t k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::max(params_.top_k, 1)), 1,
      std::max<std::size_t>(valid_count, 1));
  CostComponents mean;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const CostComponents& c = per_source[order[i]];
    mean.ms += c.ms;
    mean.rp += c.rp;
    mean.pc += c.pc;
    total += aggregated[order[i]];
  }
  mean.ms /= k;
  mean.rp /= k;
  mean.pc /= k;
  if (components) *components = mean;
  return total / k;
}

}  // namespace sdmvs
