#include "sdmvs/refinement.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

#include "sdmvs/error.h"

namespace sdmvs {

namespace {

std::uint64_t Mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

double Uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double DegToRad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

Rng PixelRng(std::uint64_t seed, std::uint64_t pixel, std::uint64_t step) {
  return Rng(Mix(Mix(seed) ^ Mix(pixel + 0x632be59bd9b4e019ull) ^
                 Mix(step + 0x8cb92ba72f3d8dd7ull)));
}

bool IsTangentFrame(const TangentFrame& f, const Vector3d& n, double tol) {
  return std::abs(f.e1.dot(n)) <= tol && std::abs(f.e2.dot(n)) <= tol &&
         std::abs(f.e1.dot(f.e2)) <= tol && std::abs(f.e1.norm() - 1.0) <= tol &&
         std::abs(f.e2.norm() - 1.0) <= tol;
}

Vector3d RotateNormalUnchecked(const Vector3d& n, const TangentFrame& f,
                               double theta1, double theta2,
                               bool full_rodrigues) {
  const Vector3d n1 = std::cos(theta1) * n + std::sin(theta1) * f.e1.cross(n);
  Vector3d n2 = std::cos(theta2) * n1 + std::sin(theta2) * f.e2.cross(n1);
  if (full_rodrigues) {
    const Vector3d axis = f.e2.normalized();
    n2 += (1.0 - std::cos(theta2)) * axis.dot(n1) * axis;
  }
  return n2.normalized();
}

Vector3d RotateNormal(const Vector3d& n, const TangentFrame& f, double theta1,
                      double theta2, bool full_rodrigues) {
  if (!IsTangentFrame(f, n)) {
    throw Error(ErrorCode::kInvalidFrame,
                "rotation axes must be unit, orthogonal and tangent to n");
  }
  return RotateNormalUnchecked(n, f, theta1, theta2, full_rodrigues);
}

double MaxRotationDegrees(int round, int rounds) {
  return 5.0 * std::ldexp(1.0, rounds - round);
}

std::pair<double, double> SampleAngles(int round, int rounds, Rng& rng) {
  const double hi = MaxRotationDegrees(round, rounds);
  const double a = Uniform(rng, 0.0, hi);
  const double b = Uniform(rng, 0.0, hi);
  return {a, b};
}

TangentFrame InitialFrame(const Vector3d& n, Rng& rng) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(n[i]) < std::abs(n[axis])) axis = i;
  }
  Vector3d a = Vector3d::Unit(axis);
  a = (a - a.dot(n) * n).normalized();
  const Vector3d b = n.cross(a).normalized();
  const double phi = Uniform(rng, 0.0, 2.0 * std::numbers::pi);
  TangentFrame f;
  f.e1 = (std::cos(phi) * a + std::sin(phi) * b).normalized();
  f.e2 = f.e1.cross(n).normalized();
  return f;
}

TangentFrame DescendFrame(const Vector3d& n, const Vector3d& n_next, Rng& rng,
                          bool raw) {
  const Vector3d step = n_next - n;
  if (step.norm() < 1e-9) return InitialFrame(n_next, rng);
  TangentFrame f;
  if (raw) {
    f.e1 = step;
    f.e2 = step.cross(n_next);
    return f;
  }
  const Vector3d tangent = step - step.dot(n_next) * n_next;
  if (tangent.norm() < 1e-12) return InitialFrame(n_next, rng);
  f.e1 = tangent.normalized();
  f.e2 = f.e1.cross(n_next).normalized();
  return f;
}

RefineResult RefinePixel(const CostEvaluator& evaluator, int level, int x,
                         int y, const PlaneHypothesis& current,
                         double current_cost,
                         std::pair<double, double> interval, int round,
                         const RefineParams& params, TangentFrame& frame,
                         Rng& rng) {
  RefineResult best{current, current_cost, false};
  const Camera& cam = evaluator.reference().level(level).camera;
  const Vector2d p(x, y);

  Vector3d normal_alt = current.normal;
  double depth_alt = current.depth;
  std::optional<PlaneHypothesis> global_guess;
  if (params.mode == RefineMode::kSpherical) {
    const auto [t1, t2] = SampleAngles(round, params.rounds, rng);
    normal_alt = RotateNormalUnchecked(current.normal, frame, DegToRad(t1),
                                       DegToRad(t2), params.full_rodrigues);
    depth_alt = interval.first < interval.second
                    ? Uniform(rng, interval.first, interval.second)
                    : interval.first;
  } else {
    Vector3d noisy = current.normal;
    for (int i = 0; i < 3; ++i) {
      noisy[i] += Uniform(rng, -params.axis_normal_step, params.axis_normal_step);
    }
    normal_alt = noisy.normalized();
    const double step =
        params.axis_depth_fraction * (params.depth_max - params.depth_min);
    depth_alt = std::clamp(current.depth + Uniform(rng, -step, step),
                           params.depth_min, params.depth_max);
    Vector3d random_normal(std::normal_distribution<double>()(rng),
                           std::normal_distribution<double>()(rng),
                           std::normal_distribution<double>()(rng));
    random_normal.normalize();
    if (random_normal.dot(cam.PixelRay(p)) > 0.0) random_normal = -random_normal;
    global_guess = PlaneHypothesis{
        Uniform(rng, params.depth_min, params.depth_max), random_normal};
  }

  const bool alt_faces = FacesCamera(cam, p, normal_alt);
  PlaneHypothesis proposals[4];
  int count = 0;
  if (alt_faces) proposals[count++] = PlaneHypothesis{current.depth, normal_alt};
  if (depth_alt != current.depth) {
    proposals[count++] = PlaneHypothesis{depth_alt, current.normal};
    if (alt_faces) proposals[count++] = PlaneHypothesis{depth_alt, normal_alt};
  }
  if (global_guess) proposals[count++] = *global_guess;

  for (int i = 0; i < count; ++i) {
    const double cost = evaluator.Evaluate(level, x, y, proposals[i]);
    if (cost < best.cost) best = RefineResult{proposals[i], cost, true};
  }
  if (params.mode == RefineMode::kSpherical && best.changed &&
      best.hypothesis.normal != current.normal) {
    frame = DescendFrame(current.normal, best.hypothesis.normal, rng,
                         params.raw_descent);
  } else if (params.mode == RefineMode::kSpherical) {
    // Angles are non-negative, so a rejected rotation re-spins the frame
    // rather than retrying the same quadrant.
    frame = InitialFrame(best.hypothesis.normal, rng);
  }
  return best;
}

}  // namespace sdmvs
