#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace sdmvs {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

// Pinhole camera with x_cam = R * (X - C) and pixel = K * x_cam / z.
// Pixel centers sit at integer coordinates; the image spans
// [0, width - 1] x [0, height - 1].
class Camera {
 public:
  Camera() = default;
  // Throws Error(kInvalidCamera) when R is not a proper rotation, K is not
  // upper triangular with positive focals, or the image is smaller than 8x8.
  Camera(const Matrix3d& K, const Matrix3d& R, const Vector3d& C, int width,
         int height);

  const Matrix3d& K() const { return K_; }
  const Matrix3d& K_inv() const { return K_inv_; }
  const Matrix3d& R() const { return R_; }
  const Vector3d& C() const { return C_; }
  int width() const { return width_; }
  int height() const { return height_; }

  Vector3d WorldToCamera(const Vector3d& X) const { return R_ * (X - C_); }
  Vector3d CameraToWorld(const Vector3d& x) const {
    return R_.transpose() * x + C_;
  }
  // Camera-frame ray through pixel p, scaled so that z == 1.
  Vector3d PixelRay(const Vector2d& p) const {
    return K_inv_ * Vector3d(p.x(), p.y(), 1.0);
  }
  bool InBounds(const Vector2d& p) const {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width_ - 1.0 &&
           p.y() <= height_ - 1.0;
  }

  // Camera for pyramid level `level`, matching a 2x2 box filter per level:
  // focal lengths halve, and pixel centers move as c' = (c + 0.5) / 2 - 0.5.
  Camera AtLevel(int level) const;

 private:
  Matrix3d K_ = Matrix3d::Identity();
  Matrix3d K_inv_ = Matrix3d::Identity();
  Matrix3d R_ = Matrix3d::Identity();
  Vector3d C_ = Vector3d::Zero();
  int width_ = 0;
  int height_ = 0;
};

struct Projection {
  Vector2d pixel;
  double depth = 0.0;
};

// Throws Error(kBehindCamera) when the point has non-positive depth.
Projection Project(const Camera& cam, const Vector3d& X);
std::optional<Projection> TryProject(const Camera& cam, const Vector3d& X);

// Throws Error(kNonPositiveDepth) for depth <= 0 and Error(kOutOfBounds)
// when p is outside the image.
Vector3d Unproject(const Camera& cam, const Vector2d& p, double depth);

// Per-pixel plane state. `normal` lives in the camera frame of the view that
// owns the hypothesis.
struct PlaneHypothesis {
  double depth = 1.0;
  Vector3d normal = Vector3d(0.0, 0.0, -1.0);
};

// A plane n . x = offset in a camera frame.
struct CameraPlane {
  Vector3d normal;
  double offset = 0.0;
};

// Plane through the point at `h.depth` along the ray of pixel p.
CameraPlane PlaneThroughPixel(const Camera& cam, const Vector2d& p,
                              const PlaneHypothesis& h);

// Depth (camera z) where the ray of pixel p meets the plane; nullopt when the
// ray is parallel or the hit lies behind the camera.
std::optional<double> DepthOnPlane(const Camera& cam, const Vector2d& p,
                                   const CameraPlane& plane);

bool FacesCamera(const Camera& cam, const Vector2d& p, const Vector3d& normal);

// Homography mapping reference pixels to source pixels through `plane`
// (expressed in the reference camera frame).
Matrix3d PlaneHomography(const Camera& ref, const Camera& src,
                         const CameraPlane& plane);

// Maps p through the plane defined by h at p into the source view.
// Throws Error(kOutOfBounds) when the warped pixel leaves the source image or
// the plane point is behind the source camera.
Vector2d PlaneInducedCorrespondence(const Camera& ref, const Camera& src,
                                    const Vector2d& p,
                                    const PlaneHypothesis& h);
std::optional<Vector2d> TryPlaneInducedCorrespondence(
    const Camera& ref, const Camera& src, const Vector2d& p,
    const PlaneHypothesis& h);

// Relative depth and normal-angle agreement test used by fusion.
bool DepthEdgeConsistency(const PlaneHypothesis& a, const PlaneHypothesis& b,
                          double rel_tol, double angle_tol_rad);

double AngleBetween(const Vector3d& a, const Vector3d& b);

}  // namespace sdmvs
