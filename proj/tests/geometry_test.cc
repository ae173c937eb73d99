#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sdmvs/error.h"
#include "sdmvs/geometry.h"
#include "support.h"

namespace sdmvs {
namespace {

using fixture::Intrinsics;
using fixture::ThrowsCode;
using fixture::Uniform;

TEST(Camera, OpticalAxisPointProjectsToPrincipalPoint) {
  const Camera cam(Matrix3d::Identity(), Matrix3d::Identity(), Vector3d::Zero(), 10, 10);
  const Projection p = Project(cam, Vector3d(0, 0, 5));
  EXPECT_EQ(p.pixel, Vector2d(0, 0));
  EXPECT_EQ(p.depth, 5.0);
}

TEST(Camera, PointBehindCameraIsRejected) {
  const Camera cam(Matrix3d::Identity(), Matrix3d::Identity(), Vector3d::Zero(), 10, 10);
  EXPECT_TRUE(ThrowsCode([&] { Project(cam, Vector3d(0, 0, -1)); }, ErrorCode::kBehindCamera));
  EXPECT_FALSE(TryProject(cam, Vector3d(0, 0, -1)).has_value());
}

TEST(Camera, UnprojectPrincipalPointAtUnitDepth) {
  const Matrix3d K = Intrinsics(100, 64, 48);
  const Vector3d C(1, 2, 3);
  const Camera cam(K, Matrix3d::Identity(), C, 64, 48);
  const Vector3d X = Unproject(cam, Vector2d(K(0, 2), K(1, 2)), 1.0);
  EXPECT_NEAR((X - C).norm(), 1.0, 1e-12);
  EXPECT_NEAR((X - (C + Vector3d::UnitZ())).norm(), 0.0, 1e-12);
}

TEST(Camera, UnprojectRejectsBadInput) {
  const Camera cam(Intrinsics(100, 64, 48), Matrix3d::Identity(), Vector3d::Zero(), 64, 48);
  EXPECT_TRUE(ThrowsCode([&] { Unproject(cam, Vector2d(3, 3), 0.0); }, ErrorCode::kNonPositiveDepth));
  EXPECT_TRUE(ThrowsCode([&] { Unproject(cam, Vector2d(-1, 3), 1.0); }, ErrorCode::kOutOfBounds));
}

TEST(Camera, RejectsInvalidModels) {
  Matrix3d reflect = Matrix3d::Identity();
  reflect(2, 2) = -1;
  const Matrix3d K = Intrinsics(100, 64, 48);
  EXPECT_TRUE(ThrowsCode([&] { Camera(K, reflect, Vector3d::Zero(), 64, 48); }, ErrorCode::kInvalidCamera));
  EXPECT_TRUE(ThrowsCode([&] { Camera(K, Matrix3d::Identity(), Vector3d::Zero(), 0, 48); }, ErrorCode::kInvalidCamera));
  Matrix3d bad_k = K;
  bad_k(0, 0) = -5;
  EXPECT_TRUE(ThrowsCode([&] { Camera(bad_k, Matrix3d::Identity(), Vector3d::Zero(), 64, 48); }, ErrorCode::kInvalidCamera));
}

TEST(Camera, ProjectUnprojectRoundTrip) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Camera cam = fixture::RandomCamera(rng);
    const Vector2d p(Uniform(rng, 0, 159), Uniform(rng, 0, 119));
    const double depth = Uniform(rng, 0.5, 50);
    const Projection back = Project(cam, Unproject(cam, p, depth));
    EXPECT_NEAR((back.pixel - p).norm(), 0.0, 1e-9);
    EXPECT_NEAR(back.depth, depth, 1e-9 * depth);
  }
}

TEST(Camera, LevelIntrinsicsFollowPixelCenters) {
  const Camera cam(Intrinsics(200, 160, 120), Matrix3d::Identity(), Vector3d::Zero(), 160, 120);
  const Camera half = cam.AtLevel(1);
  EXPECT_EQ(half.width(), 80);
  EXPECT_EQ(half.height(), 60);
  // Level-0 pixels 2x and 2x+1 average into level-1 pixel x.
  const Vector3d X = Unproject(cam, Vector2d(20.5, 30.5), 4.0);
  EXPECT_NEAR((Project(half, X).pixel - Vector2d(10, 15)).norm(), 0.0, 1e-12);
}

TEST(Homography, IdenticalCamerasMapPixelsToThemselves) {
  std::mt19937_64 rng(2);
  const Camera cam = fixture::RandomCamera(rng);
  for (int i = 0; i < 100; ++i) {
    const Vector2d p(Uniform(rng, 0, 159), Uniform(rng, 0, 119));
    PlaneHypothesis h{Uniform(rng, 1, 10), fixture::RandomUnit(rng)};
    if (!FacesCamera(cam, p, h.normal)) h.normal = -h.normal;
    EXPECT_NEAR((PlaneInducedCorrespondence(cam, cam, p, h) - p).norm(), 0.0, 1e-9);
  }
}

TEST(Homography, FrontoParallelDisparity) {
  const double f = 150, b = 0.3, d = 4.0;
  const Matrix3d K = Intrinsics(f, 160, 120);
  const Camera ref(K, Matrix3d::Identity(), Vector3d::Zero(), 160, 120);
  const Camera src(K, Matrix3d::Identity(), Vector3d(b, 0, 0), 160, 120);
  const Vector2d p(80, 60);
  const Vector2d q = PlaneInducedCorrespondence(ref, src, p, {d, Vector3d(0, 0, -1)});
  EXPECT_NEAR(p.x() - q.x(), f * b / d, 1e-9);
  EXPECT_NEAR(q.y(), p.y(), 1e-9);
}

TEST(Homography, PlaneBehindCameraIsInvalid) {
  const Matrix3d K = Intrinsics(150, 160, 120);
  const Camera ref(K, Matrix3d::Identity(), Vector3d::Zero(), 160, 120);
  const Camera src(K, Matrix3d::Identity(), Vector3d(0.3, 0, 0), 160, 120);
  EXPECT_FALSE(TryPlaneInducedCorrespondence(ref, src, {80, 60}, {-2.0, Vector3d(0, 0, -1)}));
}

// Unproject onto the plane, intersect, project into the source.
TEST(Homography, AgreesWithExplicitComposition) {
  std::mt19937_64 rng(3);
  int checked = 0;
  while (checked < 1000) {
    const Camera ref = fixture::RandomCamera(rng);
    const Camera src = fixture::RandomCamera(rng);
    const Vector2d p(Uniform(rng, 0, 159), Uniform(rng, 0, 119));
    PlaneHypothesis h{Uniform(rng, 1, 10), fixture::RandomUnit(rng)};
    if (!FacesCamera(ref, p, h.normal)) h.normal = -h.normal;
    const Vector3d X = Unproject(ref, p, h.depth);
    const auto direct = TryProject(src, X);
    const auto q = TryPlaneInducedCorrespondence(ref, src, p, h);
    if (!direct || !q) continue;
    // Same plane, same pixel: a second point on the plane maps consistently.
    EXPECT_NEAR((*q - direct->pixel).norm(), 0.0, 1e-6);
    const CameraPlane plane = PlaneThroughPixel(ref, p, h);
    const Vector2d p2(Uniform(rng, 0, 159), Uniform(rng, 0, 119));
    const auto depth2 = DepthOnPlane(ref, p2, plane);
    if (depth2) {
      const auto direct2 = TryProject(src, ref.CameraToWorld(*depth2 * ref.PixelRay(p2)));
      const Vector3d hq = PlaneHomography(ref, src, plane) * Vector3d(p2.x(), p2.y(), 1.0);
      if (direct2 && hq.z() > 0) {
        EXPECT_NEAR((hq.hnormalized() - direct2->pixel).norm(), 0.0, 1e-6);
      }
    }
    ++checked;
  }
}

TEST(DepthEdge, ThresholdArithmetic) {
  const PlaneHypothesis a{1.0, Vector3d(0, 0, -1)};
  EXPECT_TRUE(DepthEdgeConsistency(a, a, 0.01, 0.1));
  EXPECT_FALSE(DepthEdgeConsistency(a, {1.02, a.normal}, 0.01, 0.1));
  EXPECT_TRUE(DepthEdgeConsistency(a, {1.005, a.normal}, 0.01, 0.1));
}

TEST(DepthEdge, MatchesDirectFormula) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 1000; ++i) {
    const PlaneHypothesis a{Uniform(rng, 1, 5), fixture::RandomUnit(rng)};
    const PlaneHypothesis b{a.depth * Uniform(rng, 0.97, 1.03),
                            (a.normal + 0.3 * fixture::RandomUnit(rng)).normalized()};
    const double rel = 0.01, angle = 10.0 * std::numbers::pi / 180.0;
    const double cosine = std::clamp(a.normal.dot(b.normal), -1.0, 1.0);
    const bool expected = std::abs(a.depth - b.depth) / a.depth <= rel && std::acos(cosine) <= angle;
    EXPECT_EQ(DepthEdgeConsistency(a, b, rel, angle), expected);
  }
}

}  // namespace
}  // namespace sdmvs
