#include <gtest/gtest.h>

#include "sdmvs/config.h"
#include "sdmvs/error.h"
#include "support.h"

namespace sdmvs {
namespace {

TEST(Config, AppliesKnownKeys) {
  Settings s;
  ApplyConfigText("# comment\npatch_side = 7\nw_rp = 0.5  # trailing\nconsistency_min = 3\n"
                  "multi_scale_cost = false\nsweeps_per_iteration = 4\n",
                  "test.cfg", s);
  EXPECT_EQ(s.pipeline.patch_side, 7);
  EXPECT_EQ(s.pipeline.initial_weights.rp, 0.5);
  EXPECT_EQ(s.fusion.consistency_min, 3);
  EXPECT_FALSE(s.pipeline.cost.multi_scale);
  EXPECT_EQ(s.pipeline.sweeps_per_iteration, 4);
}

TEST(Config, ErrorsNameSourceAndLine) {
  Settings s;
  try {
    ApplyConfigText("patch_side = 7\n\nno_such_key = 1\n", "test.cfg", s);
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParseError);
    EXPECT_NE(std::string(e.what()).find("test.cfg:3"), std::string::npos) << e.what();
  }
  EXPECT_TRUE(fixture::ThrowsCode([&] { ApplyConfigText("patch_side = seven", "c", s); },
                                  ErrorCode::kParseError));
  EXPECT_TRUE(fixture::ThrowsCode([&] { ApplyConfigText("patch_side 7", "c", s); },
                                  ErrorCode::kParseError));
}

TEST(Config, AblationKeySelectsVariant) {
  Settings s;
  ApplyConfigText("ablation = acm-cost", "c", s);
  EXPECT_TRUE(s.pipeline.cost.square_patch);
  EXPECT_FALSE(s.pipeline.cost.multi_scale);
}

TEST(Config, SerializationRoundTrips) {
  Settings s;
  ApplyConfigText("patch_side = 9\nw_ms = 0.7\nfuse_rel_depth_tol = 0.003\nrefinement = false\n"
                  "seed = 12345678901\n",
                  "c", s);
  Settings back;
  ApplyConfigText(SerializeConfig(s), "round-trip", back);
  EXPECT_EQ(SerializeConfig(back), SerializeConfig(s));
  EXPECT_EQ(back.pipeline.patch_side, 9);
  EXPECT_EQ(back.pipeline.seed, 12345678901u);
  EXPECT_FALSE(back.pipeline.refinement);
  EXPECT_EQ(back.fusion.rel_depth_tol, 0.003);
}

TEST(Ablation, NamesRoundTrip) {
  for (const char* name : {"none", "acm-cost", "no-adp-cost", "no-mul-cost", "acm-prop", "no-adp-prop",
                           "no-mul-prop", "no-ref", "eq9-ref", "no-em"}) {
    const auto a = ParseAblation(name);
    ASSERT_TRUE(a.has_value()) << name;
    EXPECT_EQ(AblationName(*a), name);
  }
  EXPECT_FALSE(ParseAblation("bogus").has_value());
}

}  // namespace
}  // namespace sdmvs
