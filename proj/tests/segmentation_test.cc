#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "sdmvs/error.h"
#include "sdmvs/segmentation.h"
#include "support.h"

namespace sdmvs {
namespace {

using fixture::ThrowsCode;

// Counts same-instance pixels stepping away from (x, y) until the run breaks.
int ScanRun(const LabelMap& labels, int x, int y, int dx, int dy, int cap) {
  int n = 0;
  int cx = x, cy = y;
  while (true) {
    const int nx = cx + dx, ny = cy + dy;
    if (nx < 0 || ny < 0 || nx >= labels.width() || ny >= labels.height()) break;
    if (!labels.SameInstance(cx, cy, nx, ny)) break;
    ++n;
    cx = nx;
    cy = ny;
  }
  return std::min(n, cap);
}

TEST(BoundaryDistances, UniformMapIsCapLimited) {
  const LabelMap labels(101, 101, 1);
  const BoundaryDistances d = ComputeBoundaryDistances(labels, 50);
  EXPECT_EQ(d.at(50, 50), (Distances{50, 50, 50, 50}));
  EXPECT_EQ(d.at(0, 50).left, 0);
  EXPECT_EQ(d.at(100, 50).right, 0);
}

TEST(BoundaryDistances, VerticalSplitCountsPixelsBeforeTheBoundary) {
  LabelMap labels(100, 20, 1);
  for (int y = 0; y < 20; ++y) {
    for (int x = 50; x < 100; ++x) labels.at(x, y) = 2;
  }
  const BoundaryDistances d = ComputeBoundaryDistances(labels, 200);
  EXPECT_EQ(d.at(49, 5).right, 0);
  EXPECT_EQ(d.at(48, 5).right, 1);
  EXPECT_EQ(d.at(50, 5).left, 0);
  EXPECT_EQ(d.at(49, 5).left, 49);
}

TEST(BoundaryDistances, UnlabeledPixelsAreSingletons) {
  const LabelMap labels(8, 8, 0);
  const BoundaryDistances d = ComputeBoundaryDistances(labels, 10);
  EXPECT_EQ(d.at(4, 4).sum(), 0);
}

TEST(BoundaryDistances, MatchesBruteForceScan) {
  std::mt19937_64 rng(11);
  const LabelMap labels = fixture::RandomLabels(rng, 64, 48, 5, 3);
  const int cap = 12;
  const BoundaryDistances d = ComputeBoundaryDistances(labels, cap);
  for (int y = 0; y < 48; ++y) {
    for (int x = 0; x < 64; ++x) {
      const Distances expected{ScanRun(labels, x, y, -1, 0, cap), ScanRun(labels, x, y, 1, 0, cap),
                               ScanRun(labels, x, y, 0, 1, cap), ScanRun(labels, x, y, 0, -1, cap)};
      ASSERT_EQ(d.at(x, y), expected) << x << "," << y;
    }
  }
}

TEST(BoundaryDistances, LabelDownsampleTakesEvenPixels) {
  std::mt19937_64 rng(12);
  const LabelMap labels = fixture::RandomLabels(rng, 33, 21, 1, 9);
  const LabelMap half = labels.Downsample();
  ASSERT_EQ(half.width(), 16);
  ASSERT_EQ(half.height(), 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 16; ++x) EXPECT_EQ(half.at(x, y), labels.at(2 * x, 2 * y));
  }
}

TEST(DeformPatch, SymmetricDistancesSplitSixFive) {
  const DeformedPatch p = DeformPatch(Distances{10, 10, 10, 10}, 11);
  EXPECT_EQ(p.samples_h, 6);
  EXPECT_EQ(p.samples_v, 5);
  EXPECT_EQ(p.equation_offset, Eigen::Vector2d::Zero());
  EXPECT_EQ(p.shift, Eigen::Vector2i::Zero());
  EXPECT_EQ(p.sample_budget, 30);
  EXPECT_FALSE(p.degenerate);
}

TEST(DeformPatch, NearLeftBoundaryMovesRight) {
  const Distances d{2, 18, 10, 10};
  const DeformedPatch p = DeformPatch(d, 11);
  const oracle::Deformation o = oracle::Deform(d, 11);
  EXPECT_EQ(p.samples_h, 6);
  EXPECT_EQ(p.samples_v, 5);
  EXPECT_NEAR(p.equation_offset.x(), o.offset_x, 1e-12);
  EXPECT_NEAR(p.equation_offset.x(), -4.8, 1e-12);
  EXPECT_GT(p.shift.x(), 0);
  // The window [shift - 5, shift + 5] stays inside [-2, 18].
  EXPECT_GE(p.shift.x() - (p.samples_h - 1), -d.left);
  EXPECT_LE(p.shift.x() + (p.samples_h - 1), d.right);
}

TEST(DeformPatch, ZeroDistancesAreDegenerate) {
  EXPECT_TRUE(DeformPatch(Distances{}, 11).degenerate);
}

TEST(DeformPatch, RejectsEvenOrTinySides) {
  EXPECT_TRUE(ThrowsCode([] { DeformPatch(Distances{1, 1, 1, 1}, 10); }, ErrorCode::kInvalidArgument));
  EXPECT_TRUE(ThrowsCode([] { SquarePatch(3); }, ErrorCode::kInvalidArgument));
}

TEST(DeformPatch, MatchesDirectEvaluation) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 2000; ++i) {
    const Distances d = fixture::RandomDistances(rng, 22);
    if (d.sum() == 0) continue;
    const int L = 2 * fixture::UniformInt(rng, 2, 8) + 1;
    const DeformedPatch p = DeformPatch(d, L);
    const oracle::Deformation o = oracle::Deform(d, L);
    ASSERT_EQ(p.samples_h, o.samples_h);
    ASSERT_EQ(p.samples_v, o.samples_v);
    EXPECT_NEAR(p.equation_offset.x(), o.offset_x, 1e-9);
    EXPECT_NEAR(p.equation_offset.y(), o.offset_y, 1e-9);
    EXPECT_EQ(p.samples_h + p.samples_v, L);
  }
}

TEST(DeformPatch, SampleCountNeverExceedsBudget) {
  std::mt19937_64 rng(14);
  for (int i = 0; i < 2000; ++i) {
    const DeformedPatch p = DeformPatch(fixture::RandomDistances(rng, 30), 11);
    if (p.degenerate) continue;
    EXPECT_LE(p.sample_count(), 30);
    EXPECT_GE(p.sample_count(), 1);
  }
}

TEST(DeformPatch, SquarePatchStrideTwoLayout) {
  const DeformedPatch p = SquarePatch(11);
  std::set<std::pair<int, int>> seen;
  p.ForEachSample([&](int dx, int dy) { seen.insert({dx, dy}); });
  EXPECT_LE(static_cast<int>(seen.size()), 30);
  for (const auto& [dx, dy] : seen) {
    EXPECT_EQ(std::abs(dx) % 2, p.samples_h % 2 == 0 ? 1 : 0);
    EXPECT_LE(std::abs(dx), p.samples_h - 1);
    EXPECT_LE(std::abs(dy), p.samples_v - 1);
  }
}

TEST(DeformPatch, ShiftedCenterStaysInInstance) {
  std::mt19937_64 rng(15);
  const LabelMap labels = fixture::RandomLabels(rng, 64, 64, 7, 4);
  const BoundaryDistances d = ComputeBoundaryDistances(labels, 22);
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const DeformedPatch p = DeformPatchAt(labels, d, x, y, 11);
      if (p.degenerate) continue;
      EXPECT_TRUE(labels.at(x + p.shift.x(), y + p.shift.y()) == labels.at(x, y));
    }
  }
}

TEST(Branches, SymmetricDistancesGiveFortyFiveDegrees) {
  const PropagationPattern p = MakePropagationPattern(Distances{8, 8, 8, 8}, 6, 6);
  for (int i = 4; i < 8; ++i) EXPECT_NEAR(p.angle[i], std::numbers::pi / 4, 1e-12);
  EXPECT_NEAR(p.length[4], p.length[5], 1e-12);
  EXPECT_NEAR(p.length[4], p.length[6], 1e-12);
  EXPECT_NEAR(p.length[4], p.length[7], 1e-12);
}

TEST(Branches, UpShareFollowsDistanceRatio) {
  const PropagationPattern p = MakePropagationPattern(Distances{5, 5, 3, 9}, 6, 5);
  EXPECT_NEAR(p.length[static_cast<int>(Direction::kUp)], 0.75 * 5, 1e-12);
  EXPECT_NEAR(p.length[static_cast<int>(Direction::kDown)], 0.25 * 5, 1e-12);
}

TEST(Branches, MatchDirectEvaluation) {
  std::mt19937_64 rng(16);
  for (int i = 0; i < 2000; ++i) {
    const Distances d = fixture::RandomDistances(rng, 22);
    const int sh = fixture::UniformInt(rng, 1, 10);
    const int sv = 11 - sh;
    const PropagationPattern p = MakePropagationPattern(d, sh, sv);
    const oracle::Branches o = oracle::Branch(d, sh, sv);
    for (int k = 0; k < 8; ++k) {
      EXPECT_NEAR(p.length[k], o.length[k], 1e-9);
      if (p.length[k] > 0.0) {
        EXPECT_NEAR(p.angle[k], o.angle[k], 1e-9);
      }
    }
  }
}

TEST(Branches, SamplesStayInsideImageAndInstance) {
  std::mt19937_64 rng(17);
  const LabelMap labels = fixture::RandomLabels(rng, 40, 30, 6, 3);
  const BoundaryDistances d = ComputeBoundaryDistances(labels, 22);
  std::vector<BranchSample> out;
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      const DeformedPatch patch = DeformPatch(d.at(x, y), 11);
      if (patch.degenerate) continue;
      const auto pattern = MakePropagationPattern(d.at(x, y), patch.samples_h, patch.samples_v);
      EnumerateBranchSamples(pattern, x, y, 40, 30, &labels, out);
      for (const BranchSample& s : out) {
        ASSERT_TRUE(s.x >= 0 && s.y >= 0 && s.x < 40 && s.y < 30);
        EXPECT_EQ(labels.at(s.x, s.y), labels.at(x, y));
        EXPECT_FALSE(s.x == x && s.y == y);
        EXPECT_TRUE(s.domain >= 0 && s.domain < kDirectionCount);
      }
    }
  }
}

TEST(DepthInterval, ConstantRampAndClamp) {
  const DeformedPatch patch = SquarePatch(11);
  const int w = 32, h = 32;
  const std::vector<float> flat(w * h, 2.0f);
  EXPECT_EQ(DepthInterval(patch, 16, 16, flat, w, h, 0.1, 10.0), std::make_pair(2.0, 2.0));

  std::vector<float> ramp(w * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) ramp[y * w + x] = static_cast<float>(x);
  }
  double lo = 1e9, hi = -1e9;
  patch.ForEachSample([&](int dx, int) {
    lo = std::min(lo, 16.0 + dx);
    hi = std::max(hi, 16.0 + dx);
  });
  EXPECT_EQ(DepthInterval(patch, 16, 16, ramp, w, h, 0.0, 100.0), std::make_pair(lo, hi));
  EXPECT_EQ(DepthInterval(patch, 16, 16, ramp, w, h, 13.0, 17.0), std::make_pair(13.0, 17.0));
}

TEST(FallbackSegment, SolidRegions) {
  Image halves(32, 16, 3);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 32; ++x) {
      for (int c = 0; c < 3; ++c) halves.at(x, y, c) = x < 16 ? 0.2f : (c == 0 ? 0.9f : 0.1f);
    }
  }
  const LabelMap two = FallbackSegment(halves);
  std::set<std::uint32_t> ids(two.labels().begin(), two.labels().end());
  EXPECT_EQ(ids.size(), 2u);
  EXPECT_NE(two.at(0, 0), two.at(31, 15));

  const LabelMap one = FallbackSegment(Image(32, 16, 3, 0.5f));
  std::set<std::uint32_t> single(one.labels().begin(), one.labels().end());
  EXPECT_EQ(single.size(), 1u);
}

}  // namespace
}  // namespace sdmvs
