#include "sdmvs/emopt.h"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "sdmvs/error.h"

namespace sdmvs {

namespace {

double Dot(const Weights& w, const CostComponents& s) {
  return w.ms * s.ms + w.rp * s.rp + w.pc * s.pc;
}

void CheckSums(const CostComponents& s) {
  for (double v : {s.ms, s.rp, s.pc}) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error(ErrorCode::kDegenerateSums,
                  "component sums must be finite and non-negative");
    }
  }
}

void CheckEta(double eta) {
  if (!(eta > 0.0 && eta < 1.0 / 3.0)) {
    throw Error(ErrorCode::kInvalidArgument, "eta must lie in (0, 1/3)");
  }
}

// Barrier objective on the reduced variables z = (w_ms, w_rp).
struct Reduced {
  Eigen::Vector3d s;
  double eta;
  double mu;

  Eigen::Vector3d Full(const Eigen::Vector2d& z) const {
    return {z.x(), z.y(), 1.0 - z.x() - z.y()};
  }
  bool Feasible(const Eigen::Vector2d& z) const {
    const Eigen::Vector3d w = Full(z);
    return w.minCoeff() > eta;
  }
  double Value(const Eigen::Vector2d& z) const {
    const Eigen::Vector3d w = Full(z);
    double v = s.dot(w);
    for (int i = 0; i < 3; ++i) v -= mu * std::log(w[i] - eta);
    return v;
  }
  void Derivatives(const Eigen::Vector2d& z, Eigen::Vector2d& g,
                   Eigen::Matrix2d& H) const {
    const Eigen::Vector3d w = Full(z);
    const Eigen::Vector3d inv = (w.array() - eta).inverse();
    g.x() = s[0] - s[2] - mu * (inv[0] - inv[2]);
    g.y() = s[1] - s[2] - mu * (inv[1] - inv[2]);
    const Eigen::Vector3d inv2 = inv.array().square();
    H(0, 0) = mu * (inv2[0] + inv2[2]);
    H(1, 1) = mu * (inv2[1] + inv2[2]);
    H(0, 1) = H(1, 0) = mu * inv2[2];
  }
};

Weights ToWeights(const Eigen::Vector2d& z) {
  Weights w{z.x(), z.y(), 1.0 - z.x() - z.y()};
  return w;
}

}  // namespace

Weights SolveWeightsVertex(const CostComponents& sums, double eta) {
  CheckSums(sums);
  CheckEta(eta);
  const double v[3] = {sums.ms, sums.rp, sums.pc};
  int best = 0;
  for (int i = 1; i < 3; ++i) {
    if (v[i] < v[best]) best = i;
  }
  double w[3] = {eta, eta, eta};
  w[best] = 1.0 - 2.0 * eta;
  return Weights{w[0], w[1], w[2]};
}

Weights SolveWeightsBarrier(const CostComponents& sums, double eta,
                            const BarrierOptions& options) {
  CheckSums(sums);
  CheckEta(eta);
  const double norm = sums.ms + sums.rp + sums.pc;
  Eigen::Vector2d z(1.0 / 3.0, 1.0 / 3.0);
  if (!(norm > 0.0)) return ToWeights(z);
  Reduced f{Eigen::Vector3d(sums.ms, sums.rp, sums.pc) / norm, eta,
            options.mu_start};
  const int stages = std::max(options.stages, 1);
  for (int stage = 0; stage < stages; ++stage) {
    f.mu = stages == 1 ? options.mu_end
                       : options.mu_start *
                             std::pow(options.mu_end / options.mu_start,
                                      static_cast<double>(stage) / (stages - 1));
    for (int it = 0; it < options.max_newton_steps; ++it) {
      Eigen::Vector2d g;
      Eigen::Matrix2d H;
      f.Derivatives(z, g, H);
      const Eigen::Vector2d step = -H.ldlt().solve(g);
      const double decrement = -g.dot(step);
      if (0.5 * decrement < options.decrement_tol) break;
      double t = 1.0;
      const double f0 = f.Value(z);
      while (t > 1e-16) {
        const Eigen::Vector2d trial = z + t * step;
        if (f.Feasible(trial) && f.Value(trial) <= f0 - 0.25 * t * decrement) {
          break;
        }
        t *= 0.5;
      }
      if (t <= 1e-16) break;
      z += t * step;
    }
  }
  // Strictly feasible by construction; the clamp absorbs rounding only.
  Weights w = ToWeights(z);
  w.ms = std::max(w.ms, eta);
  w.rp = std::max(w.rp, eta);
  w.pc = 1.0 - w.ms - w.rp;
  if (w.pc < eta) {
    const double excess = eta - w.pc;
    w.pc = eta;
    if (w.ms >= w.rp) {
      w.ms -= excess;
    } else {
      w.rp -= excess;
    }
  }
  return w;
}

Weights MStep(const CostComponents& sums, double eta,
              const BarrierOptions& options, const Weights& incumbent) {
  const Weights proposal = SolveWeightsBarrier(sums, eta, options);
  // Only a feasible incumbent competes. Off-simplex weights (the initial
  // ones) are compared after L1 normalization, or dropped if that violates
  // the floor.
  const double total = incumbent.ms + incumbent.rp + incumbent.pc;
  if (!(total > 0.0)) return proposal;
  const Weights scaled{incumbent.ms / total, incumbent.rp / total, incumbent.pc / total};
  if (std::min({scaled.ms, scaled.rp, scaled.pc}) < eta) return proposal;
  const Weights& baseline = std::abs(total - 1.0) <= 1e-12 ? incumbent : scaled;
  return Dot(proposal, sums) <= Dot(baseline, sums) ? proposal : baseline;
}

double AnnealedBarrierWeight(int iteration, int total) {
  if (total <= 1) return 1e-3;
  const double t = static_cast<double>(std::clamp(iteration, 1, total) - 1) /
                   (total - 1);
  return 1e-1 * std::pow(1e-2, t);
}

AnchorCostSums CollectAnchorCosts(const AnchorSet& anchors,
                                  const CostEvaluator& evaluator,
                                  const HypothesisMap& level0,
                                  const std::vector<int>& source_ids,
                                  int min_anchors) {
  AnchorCostSums out;
  const double pc_sentinel = evaluator.color_sentinel();
  const bool pc_has_sentinel =
      evaluator.params().pc_mode == ColorErrorMode::kLiteral;
  for (const Anchor& a : anchors) {
    const auto it = std::find(source_ids.begin(), source_ids.end(), a.src_view);
    if (it == source_ids.end()) continue;
    const int x = static_cast<int>(std::lround(a.ref.x()));
    const int y = static_cast<int>(std::lround(a.ref.y()));
    if (x < 0 || y < 0 || x >= level0.width() || y >= level0.height()) continue;
    const auto per_source =
        evaluator.EvaluateSources(0, x, y, level0.hypothesis(x, y));
    const CostComponents& c = per_source[it - source_ids.begin()];
    if (c.ms >= kInvalidMatchCost) continue;
    if (pc_has_sentinel && c.pc >= pc_sentinel) continue;
    out.sums.ms += c.ms;
    out.sums.rp += c.rp;
    out.sums.pc += c.pc;
    ++out.used;
  }
  if (out.used < min_anchors) {
    throw Error(ErrorCode::kTooFewAnchors,
                std::to_string(out.used) + " usable anchors, need " +
                    std::to_string(min_anchors));
  }
  return out;
}

std::vector<Eigen::Vector2i> HarrisCorners(const ImageView& gray,
                                           const CornerOptions& options) {
  const int w = gray.width;
  const int h = gray.height;
  auto px = [&](int x, int y) {
    return gray.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1));
  };
  std::vector<double> ixx(static_cast<std::size_t>(w) * h);
  std::vector<double> iyy(ixx.size()), ixy(ixx.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1) -
                         px(x - 1, y - 1) - 2 * px(x - 1, y) - px(x - 1, y + 1)) /
                        8.0;
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1) -
                         px(x - 1, y - 1) - 2 * px(x, y - 1) - px(x + 1, y - 1)) /
                        8.0;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      ixx[i] = gx * gx;
      iyy[i] = gy * gy;
      ixy[i] = gx * gy;
    }
  }
  std::vector<double> response(ixx.size(), 0.0);
  const int r = options.window_radius;
  double max_response = 0.0;
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      double a = 0, b = 0, c = 0;
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const std::size_t i = static_cast<std::size_t>(y + dy) * w + x + dx;
          a += ixx[i];
          b += iyy[i];
          c += ixy[i];
        }
      }
      const double v = a * b - c * c - options.harris_k * (a + b) * (a + b);
      response[static_cast<std::size_t>(y) * w + x] = v;
      max_response = std::max(max_response, v);
    }
  }
  const double threshold =
      std::max(options.absolute_threshold, options.relative_threshold * max_response);
  struct Scored {
    double v;
    int x, y;
  };
  std::vector<Scored> found;
  const int s = options.suppression_radius;
  const int b = std::max(options.border, r);
  for (int y = b; y < h - b; ++y) {
    for (int x = b; x < w - b; ++x) {
      const double v = response[static_cast<std::size_t>(y) * w + x];
      if (v <= threshold) continue;
      bool is_max = true;
      for (int dy = -s; dy <= s && is_max; ++dy) {
        for (int dx = -s; dx <= s; ++dx) {
          const int u = x + dx, q = y + dy;
          if ((dx == 0 && dy == 0) || u < 0 || q < 0 || u >= w || q >= h) continue;
          const double o = response[static_cast<std::size_t>(q) * w + u];
          // Plateaus keep their first pixel in raster order.
          if (o > v || (o == v && (q < y || (q == y && u < x)))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) found.push_back({v, x, y});
    }
  }
  std::stable_sort(found.begin(), found.end(),
                   [](const Scored& a, const Scored& b) { return a.v > b.v; });
  if (static_cast<int>(found.size()) > options.max_corners) {
    found.resize(options.max_corners);
  }
  std::vector<Eigen::Vector2i> out;
  out.reserve(found.size());
  for (const auto& f : found) out.emplace_back(f.x, f.y);
  return out;
}

namespace {

// Plain NCC of two square patches; -1 when either is flat or off-image.
double PatchNcc(const ImageView& a, const Eigen::Vector2i& pa,
                const ImageView& b, const Eigen::Vector2i& pb, int r) {
  if (pa.x() - r < 0 || pa.y() - r < 0 || pa.x() + r >= a.width ||
      pa.y() + r >= a.height || pb.x() - r < 0 || pb.y() - r < 0 ||
      pb.x() + r >= b.width || pb.y() + r >= b.height) {
    return -1.0;
  }
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  int n = 0;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double u = a.at(pa.x() + dx, pa.y() + dy);
      const double v = b.at(pb.x() + dx, pb.y() + dy);
      sa += u;
      sb += v;
      saa += u * u;
      sbb += v * v;
      sab += u * v;
      ++n;
    }
  }
  const double va = saa - sa * sa / n;
  const double vb = sbb - sb * sb / n;
  if (va < 1e-10 || vb < 1e-10) return -1.0;
  return (sab - sa * sb / n) / std::sqrt(va * vb);
}

}  // namespace

AnchorSet DetectAnchors(const ImageView& ref_gray,
                        const std::vector<ImageView>& srcs,
                        const std::vector<int>& src_ids,
                        const MatchOptions& options) {
  AnchorSet out;
  const auto ref_corners = HarrisCorners(ref_gray, options.corners);
  if (ref_corners.empty()) return out;
  const double max_disp =
      options.max_displacement * std::hypot(ref_gray.width, ref_gray.height);
  for (std::size_t s = 0; s < srcs.size(); ++s) {
    const auto src_corners = HarrisCorners(srcs[s], options.corners);
    const std::size_t ns = src_corners.size();
    // Scores of every corner pair in reach; -2 marks pairs out of reach.
    std::vector<double> score(ref_corners.size() * ns, -2.0);
    for (std::size_t r = 0; r < ref_corners.size(); ++r) {
      for (std::size_t c = 0; c < ns; ++c) {
        if ((src_corners[c] - ref_corners[r]).cast<double>().norm() > max_disp) continue;
        score[r * ns + c] = PatchNcc(ref_gray, ref_corners[r], srcs[s],
                                     src_corners[c], options.patch_radius);
      }
    }
    for (std::size_t r = 0; r < ref_corners.size(); ++r) {
      double best = -2.0, second = -2.0;
      std::size_t best_c = ns;
      for (std::size_t c = 0; c < ns; ++c) {
        const double v = score[r * ns + c];
        if (v > best) {
          second = best;
          best = v;
          best_c = c;
        } else if (v > second) {
          second = v;
        }
      }
      if (best_c == ns || best < options.min_score) continue;
      const double d1 = 1.0 - best;
      const double d2 = 1.0 - std::max(second, -1.0);
      if (d1 >= options.ratio * d2) continue;
      if (options.mutual) {
        bool beaten = false;
        for (std::size_t q = 0; q < ref_corners.size() && !beaten; ++q) {
          beaten = q != r && score[q * ns + best_c] > best;
        }
        if (beaten) continue;
      }
      out.push_back(Anchor{ref_corners[r].cast<double>(),
                           src_corners[best_c].cast<double>(), src_ids[s]});
    }
  }
  return out;
}

AnchorSet KeepEpipolarConsistent(const AnchorSet& anchors, const Camera& ref,
                                 const std::vector<Camera>& src_cameras,
                                 const std::vector<int>& src_ids,
                                 double max_distance) {
  std::vector<Matrix3d> fundamental;
  for (const Camera& src : src_cameras) {
    const Matrix3d R = src.R() * ref.R().transpose();
    const Vector3d t = src.R() * (ref.C() - src.C());
    Matrix3d tx;
    tx << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
    fundamental.push_back(src.K_inv().transpose() * tx * R * ref.K_inv());
  }
  AnchorSet out;
  for (const Anchor& a : anchors) {
    const auto it = std::find(src_ids.begin(), src_ids.end(), a.src_view);
    if (it == src_ids.end()) continue;
    const Vector3d line = fundamental[it - src_ids.begin()] * a.ref.homogeneous();
    const double norm = line.head<2>().norm();
    if (!(norm > 0.0)) continue;
    if (std::abs(line.dot(a.src.homogeneous())) / norm <= max_distance) out.push_back(a);
  }
  return out;
}

}  // namespace sdmvs
