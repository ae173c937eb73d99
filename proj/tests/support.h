#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Geometry>

#include "sdmvs/cost.h"
#include "sdmvs/error.h"
#include "sdmvs/geometry.h"
#include "sdmvs/imaging.h"
#include "sdmvs/refinement.h"
#include "sdmvs/segmentation.h"

namespace sdmvs::fixture {

template <typename Fn>
bool ThrowsCode(Fn&& fn, ErrorCode code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

inline double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Vector3d RandomUnit(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Vector3d v(g(rng), g(rng), g(rng));
  while (v.norm() < 1e-6) v = Vector3d(g(rng), g(rng), g(rng));
  return v.normalized();
}

inline Matrix3d RandomRotation(std::mt19937_64& rng) {
  const Eigen::Quaterniond q(Uniform(rng, -1, 1), Uniform(rng, -1, 1),
                             Uniform(rng, -1, 1), Uniform(rng, -1, 1));
  return q.normalized().toRotationMatrix();
}

inline Matrix3d Intrinsics(double f, int width, int height) {
  Matrix3d K;
  K << f, 0, 0.5 * (width - 1), 0, f, 0.5 * (height - 1), 0, 0, 1;
  return K;
}

// World-to-camera rotation whose optical axis points from C at target.
inline Matrix3d LookAt(const Vector3d& C, const Vector3d& target) {
  const Vector3d z = (target - C).normalized();
  Vector3d up = std::abs(z.y()) < 0.9 ? Vector3d::UnitY() : Vector3d::UnitX();
  const Vector3d x = up.cross(z).normalized();
  const Vector3d y = z.cross(x);
  Matrix3d R;
  R.row(0) = x.transpose();
  R.row(1) = y.transpose();
  R.row(2) = z.transpose();
  return R;
}

inline Camera RandomCamera(std::mt19937_64& rng, int width = 160, int height = 120) {
  const Matrix3d K = Intrinsics(Uniform(rng, 80, 300), width, height);
  const Vector3d C(Uniform(rng, -2, 2), Uniform(rng, -2, 2), Uniform(rng, -2, 2));
  return Camera(K, RandomRotation(rng), C, width, height);
}

// Pixel values on the 8-bit grid, as decoded images are.
inline Image RandomImage(std::mt19937_64& rng, int width, int height, int channels) {
  Image img(width, height, channels);
  for (float& v : img.samples()) v = static_cast<float>(UniformInt(rng, 0, 255)) / 255.0f;
  return img;
}

// Blocky random instances: each cell of a coarse grid gets a random label.
inline LabelMap RandomLabels(std::mt19937_64& rng, int width, int height,
                             int cell, int label_count) {
  LabelMap labels(width, height);
  const int cw = (width + cell - 1) / cell;
  const int ch = (height + cell - 1) / cell;
  std::vector<std::uint32_t> grid(static_cast<std::size_t>(cw) * ch);
  for (auto& g : grid) g = static_cast<std::uint32_t>(UniformInt(rng, 1, label_count));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      labels.at(x, y) = grid[static_cast<std::size_t>(y / cell) * cw + x / cell];
    }
  }
  return labels;
}

inline Distances RandomDistances(std::mt19937_64& rng, int cap) {
  return Distances{UniformInt(rng, 0, cap), UniformInt(rng, 0, cap),
                   UniformInt(rng, 0, cap), UniformInt(rng, 0, cap)};
}

}  // namespace sdmvs::fixture

// Direct formula evaluations, written independently of the library code.
namespace sdmvs::oracle {

// Weighted Pearson correlation with explicit two-pass sums, as 1 - rho.
inline double Ncc(const std::vector<double>& r, const std::vector<double>& s,
                  const std::vector<double>& w) {
  double sw = 0.0, mr = 0.0, ms = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    sw += w[i];
    mr += w[i] * r[i];
    ms += w[i] * s[i];
  }
  mr /= sw;
  ms /= sw;
  double cov = 0.0, vr = 0.0, vs = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    cov += w[i] * (r[i] - mr) * (s[i] - ms);
    vr += w[i] * (r[i] - mr) * (r[i] - mr);
    vs += w[i] * (s[i] - ms) * (s[i] - ms);
  }
  return 1.0 - cov / std::sqrt(vr * vs);
}

struct Deformation {
  int samples_h = 0;
  int samples_v = 0;
  double offset_x = 0.0;
  double offset_y = 0.0;
};

// Horizontal share L (dl + dr) / sum rounded half up and kept in [1, L - 1];
// offsets (dl - dr) / (dl + dr) * Lh and (dd - du) / (dd + du) * Lv.
inline Deformation Deform(const Distances& d, int L) {
  const double sum = d.left + d.right + d.up + d.down;
  Deformation out;
  const double lh = L * (d.left + d.right) / sum;
  out.samples_h = std::clamp(static_cast<int>(std::floor(lh + 0.5)), 1, L - 1);
  out.samples_v = L - out.samples_h;
  if (d.left + d.right > 0) {
    out.offset_x = static_cast<double>(d.left - d.right) / (d.left + d.right) * out.samples_h;
  }
  if (d.up + d.down > 0) {
    out.offset_y = static_cast<double>(d.down - d.up) / (d.up + d.down) * out.samples_v;
  }
  return out;
}

struct Branches {
  // up, right, down, left, then the four diagonals in Direction order
  std::array<double, 8> length{};
  std::array<double, 8> angle{};
};

inline Branches Branch(const Distances& d, int samples_h, int samples_v) {
  const double vs = d.up + d.down;
  const double hs = d.left + d.right;
  const double lu = vs > 0 ? d.up / vs * samples_v : samples_v / 2.0;
  const double ld = vs > 0 ? d.down / vs * samples_v : samples_v / 2.0;
  const double ll = hs > 0 ? d.left / hs * samples_h : samples_h / 2.0;
  const double lr = hs > 0 ? d.right / hs * samples_h : samples_h / 2.0;
  Branches b;
  b.length = {lu, lr, ld, ll, std::sqrt(lu * lu + lr * lr), std::sqrt(ld * ld + lr * lr),
              std::sqrt(ld * ld + ll * ll), std::sqrt(lu * lu + ll * ll)};
  const double half_pi = std::acos(0.0);
  b.angle = {half_pi, 0.0, half_pi, 0.0, std::atan(lu / lr), std::atan(ld / lr),
             std::atan(ld / ll), std::atan(lu / ll)};
  return b;
}

inline double Mean(const std::vector<double>& costs) {
  double sum = 0.0;
  int n = 0;
  for (double c : costs) {
    if (c < kInvalidMatchCost) {
      sum += c;
      ++n;
    }
  }
  return n == 0 ? kInvalidMatchCost : sum / n;
}

// 4I - sum of the 4-neighbours with edge clamping, from the raw image.
inline double Stencil(const Image& img, int x, int y, int c) {
  auto at = [&](int u, int v) {
    return static_cast<double>(img.at(std::clamp(u, 0, img.width() - 1),
                                      std::clamp(v, 0, img.height() - 1), c));
  };
  return 4.0 * at(x, y) - at(x - 1, y) - at(x + 1, y) - at(x, y - 1) - at(x, y + 1);
}

inline double BilinearStencil(const Image& img, double x, double y, int c) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  return (1 - fx) * (1 - fy) * Stencil(img, x0, y0, c) + fx * (1 - fy) * Stencil(img, x1, y0, c) +
         (1 - fx) * fy * Stencil(img, x0, y1, c) + fx * fy * Stencil(img, x1, y1, c);
}

// Literal colour term: max{|lap_j(p_j) - lap_i(p_i)|, tau}.
inline double ColorError(const Image& ref, const Image& src, const Vector2d& pi,
                         const Vector2d& pj, double tau) {
  double sq = 0.0;
  for (int c = 0; c < ref.channels(); ++c) {
    const double d = BilinearStencil(src, pj.x(), pj.y(), c) -
                     BilinearStencil(ref, pi.x(), pi.y(), c);
    sq += d * d;
  }
  return std::max(std::sqrt(sq), tau);
}

inline double Aggregate(const CostComponents& c, const Weights& w) {
  return Eigen::Vector3d(w.ms, w.rp, w.pc).dot(Eigen::Vector3d(c.ms, c.rp, c.pc));
}

// Rotation about e1 then e2 through rotation matrices.
inline Vector3d AxisAngleRotation(const Vector3d& n, const TangentFrame& f,
                                  double theta1, double theta2) {
  const Eigen::AngleAxisd r1(theta1, f.e1.normalized());
  const Eigen::AngleAxisd r2(theta2, f.e2.normalized());
  return r2.toRotationMatrix() * (r1.toRotationMatrix() * n);
}

// Vertex of {w >= eta, sum w = 1} minimizing S . w, by enumeration.
inline Weights LpVertex(const CostComponents& s, double eta) {
  const double hi = 1.0 - 2.0 * eta;
  const std::array<Weights, 3> vertices = {Weights{hi, eta, eta}, Weights{eta, hi, eta},
                                           Weights{eta, eta, hi}};
  Weights best = vertices[0];
  for (const Weights& v : vertices) {
    if (oracle::Aggregate(s, v) < oracle::Aggregate(s, best)) best = v;
  }
  return best;
}

}  // namespace sdmvs::oracle
