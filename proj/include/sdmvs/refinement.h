#pragma once

#include <cstdint>
#include <random>
#include <utility>

#include "sdmvs/cost.h"
#include "sdmvs/geometry.h"

namespace sdmvs {

using Rng = std::mt19937_64;

// Deterministic per-pixel stream: seed, pixel index and step are mixed so
// results do not depend on how pixels are distributed over workers.
Rng PixelRng(std::uint64_t seed, std::uint64_t pixel, std::uint64_t step);

struct TangentFrame {
  Vector3d e1 = Vector3d::UnitX();
  Vector3d e2 = Vector3d::UnitY();
};

bool IsTangentFrame(const TangentFrame& f, const Vector3d& n,
                    double tol = 1e-6);

// Rotates n by theta1 about e1, then by theta2 about e2 (radians), with the
// two-term update n' = cos(t) n + sin(t) (e x n). `full_rodrigues` adds the
// (1 - cos t)(e . n) e term to the second rotation, where e2 need not be
// perpendicular to n'. Throws Error(kInvalidFrame) if f is not a tangent
// frame of n.
Vector3d RotateNormal(const Vector3d& n, const TangentFrame& f, double theta1,
                      double theta2, bool full_rodrigues = false);

// Same rotation without the frame check.
Vector3d RotateNormalUnchecked(const Vector3d& n, const TangentFrame& f,
                               double theta1, double theta2,
                               bool full_rodrigues);

// Upper end, in degrees, of the rotation angle range of round i (1-based).
double MaxRotationDegrees(int round, int rounds);

// (theta1, theta2) in degrees, each uniform in [0, MaxRotationDegrees].
std::pair<double, double> SampleAngles(int round, int rounds, Rng& rng);

// Gram-Schmidt against the least aligned axis, then a random spin in the
// tangent plane.
TangentFrame InitialFrame(const Vector3d& n, Rng& rng);

// Next frame after an accepted move n -> n_next: e1 follows the step
// projected onto the tangent plane of n_next, e2 = e1 x n_next. `raw` keeps
// e1 = n_next - n unprojected and unnormalized. A vanishing step falls back
// to InitialFrame(n_next).
TangentFrame DescendFrame(const Vector3d& n, const Vector3d& n_next, Rng& rng,
                          bool raw = false);

enum class RefineMode {
  kSpherical,
  // Additive xyz normal noise, fixed depth step and a random global guess.
  kAxisPerturbation,
};

struct RefineParams {
  int rounds = 3;
  RefineMode mode = RefineMode::kSpherical;
  bool full_rodrigues = false;
  bool raw_descent = false;
  double depth_min = 0.0;
  double depth_max = 1.0;
  // Axis-perturbation mode: normal noise half-width and depth step as a
  // fraction of the depth range.
  double axis_normal_step = 0.1;
  double axis_depth_fraction = 0.02;
};

struct RefineResult {
  PlaneHypothesis hypothesis;
  double cost = 0.0;
  bool changed = false;
};

// Proposes {current, rotated} normal x {current, drawn} depth and keeps the
// best if strictly better than the incumbent. Depth draws come from
// `interval`. `frame` is advanced when a rotated normal wins.
RefineResult RefinePixel(const CostEvaluator& evaluator, int level, int x,
                         int y, const PlaneHypothesis& current,
                         double current_cost,
                         std::pair<double, double> interval, int round,
                         const RefineParams& params, TangentFrame& frame,
                         Rng& rng);

}  // namespace sdmvs
