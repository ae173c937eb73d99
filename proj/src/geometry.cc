#include "sdmvs/geometry.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "sdmvs/error.h"

namespace sdmvs {

namespace {

constexpr double kRotationTol = 1e-9;

void CheckCamera(const Matrix3d& K, const Matrix3d& R, int width, int height) {
  std::ostringstream why;
  const Matrix3d should_be_identity = R * R.transpose();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      const double expected = r == c ? 1.0 : 0.0;
      if (std::abs(should_be_identity(r, c) - expected) > kRotationTol) {
        why << "R is not orthonormal (R*R^T(" << r << "," << c
            << ") = " << should_be_identity(r, c) << ")";
        throw Error(ErrorCode::kInvalidCamera, why.str());
      }
    }
  }
  const double det = R.determinant();
  if (std::abs(det - 1.0) > kRotationTol) {
    why << "det(R) = " << det << ", expected +1";
    throw Error(ErrorCode::kInvalidCamera, why.str());
  }
  if (K(1, 0) != 0.0 || K(2, 0) != 0.0 || K(2, 1) != 0.0 || K(2, 2) != 1.0) {
    throw Error(ErrorCode::kInvalidCamera,
                "K must be upper triangular with K(2,2) = 1");
  }
  if (!(K(0, 0) > 0.0) || !(K(1, 1) > 0.0)) {
    throw Error(ErrorCode::kInvalidCamera, "focal lengths must be positive");
  }
  if (width < 8 || height < 8) {
    why << "image " << width << "x" << height << " is smaller than 8x8";
    throw Error(ErrorCode::kInvalidCamera, why.str());
  }
}

}  // namespace

Camera::Camera(const Matrix3d& K, const Matrix3d& R, const Vector3d& C,
               int width, int height)
    : K_(K), R_(R), C_(C), width_(width), height_(height) {
  CheckCamera(K, R, width, height);
  K_inv_ = K_.inverse();
}

Camera Camera::AtLevel(int level) const {
  if (level == 0) return *this;
  const double scale = std::ldexp(1.0, -level);
  Matrix3d K = K_;
  K(0, 0) *= scale;
  K(0, 1) *= scale;
  K(1, 1) *= scale;
  K(0, 2) = (K_(0, 2) + 0.5) * scale - 0.5;
  K(1, 2) = (K_(1, 2) + 0.5) * scale - 0.5;
  Camera out = *this;
  out.K_ = K;
  out.K_inv_ = K.inverse();
  out.width_ = width_ >> level;
  out.height_ = height_ >> level;
  return out;
}

std::optional<Projection> TryProject(const Camera& cam, const Vector3d& X) {
  const Vector3d x = cam.WorldToCamera(X);
  if (!(x.z() > 0.0)) return std::nullopt;
  const Vector3d p = cam.K() * x;
  return Projection{Vector2d(p.x() / p.z(), p.y() / p.z()), x.z()};
}

Projection Project(const Camera& cam, const Vector3d& X) {
  auto projection = TryProject(cam, X);
  if (!projection) {
    throw Error(ErrorCode::kBehindCamera, "point has non-positive depth");
  }
  return *projection;
}

Vector3d Unproject(const Camera& cam, const Vector2d& p, double depth) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::kNonPositiveDepth, "depth must be positive");
  }
  if (!cam.InBounds(p)) {
    throw Error(ErrorCode::kOutOfBounds, "pixel outside the image");
  }
  return cam.CameraToWorld(depth * cam.PixelRay(p));
}

CameraPlane PlaneThroughPixel(const Camera& cam, const Vector2d& p,
                              const PlaneHypothesis& h) {
  const Vector3d point = h.depth * cam.PixelRay(p);
  return CameraPlane{h.normal, h.normal.dot(point)};
}

std::optional<double> DepthOnPlane(const Camera& cam, const Vector2d& p,
                                   const CameraPlane& plane) {
  const Vector3d ray = cam.PixelRay(p);
  const double denom = plane.normal.dot(ray);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double depth = plane.offset / denom;
  if (!(depth > 0.0) || !std::isfinite(depth)) return std::nullopt;
  return depth;
}

bool FacesCamera(const Camera& cam, const Vector2d& p, const Vector3d& normal) {
  return normal.dot(cam.PixelRay(p)) < 0.0;
}

Matrix3d PlaneHomography(const Camera& ref, const Camera& src,
                         const CameraPlane& plane) {
  // x_src = R_rel x_ref + t_rel and n.x_ref / offset = 1 on the plane.
  const Matrix3d R_rel = src.R() * ref.R().transpose();
  const Vector3d t_rel = src.R() * (ref.C() - src.C());
  const Matrix3d M =
      R_rel + t_rel * plane.normal.transpose() / plane.offset;
  return src.K() * M * ref.K_inv();
}

std::optional<Vector2d> TryPlaneInducedCorrespondence(
    const Camera& ref, const Camera& src, const Vector2d& p,
    const PlaneHypothesis& h) {
  if (!(h.depth > 0.0)) return std::nullopt;
  const CameraPlane plane = PlaneThroughPixel(ref, p, h);
  if (plane.offset == 0.0) return std::nullopt;
  const Vector3d q = PlaneHomography(ref, src, plane) * Vector3d(p.x(), p.y(), 1.0);
  if (!(q.z() > 0.0)) return std::nullopt;
  const Vector2d pixel(q.x() / q.z(), q.y() / q.z());
  if (!src.InBounds(pixel)) return std::nullopt;
  return pixel;
}

Vector2d PlaneInducedCorrespondence(const Camera& ref, const Camera& src,
                                    const Vector2d& p,
                                    const PlaneHypothesis& h) {
  auto pixel = TryPlaneInducedCorrespondence(ref, src, p, h);
  if (!pixel) {
    throw Error(ErrorCode::kOutOfBounds,
                "plane-induced correspondence leaves the source view");
  }
  return *pixel;
}

double AngleBetween(const Vector3d& a, const Vector3d& b) {
  // atan2 form stays accurate for nearly parallel vectors.
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

bool DepthEdgeConsistency(const PlaneHypothesis& a, const PlaneHypothesis& b,
                          double rel_tol, double angle_tol_rad) {
  if (std::abs(a.depth - b.depth) / a.depth > rel_tol) return false;
  return AngleBetween(a.normal, b.normal) <= angle_tol_rad;
}

}  // namespace sdmvs
