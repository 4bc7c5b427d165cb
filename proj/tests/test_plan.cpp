#include <set>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vesselaug/vesselaug.hpp"

using namespace vesselaug;
using vesselaug::testing::random_sample;

#ifndef VESSELAUG_SOURCE_DIR
#define VESSELAUG_SOURCE_DIR "."
#endif

namespace {

const std::set<std::string> kAllTransforms = {
    "rotate", "flip",    "zoom_out", "crop",    "shift",   "shear",   "elastic",  "grid",
    "optical", "noise",  "gamma",    "equalize", "dropout", "sharpen", "blur",    "contrast"};

}  // namespace

TEST(Registry, HoldsTheSixteenTransforms) {
  std::set<std::string> names;
  for (const auto& def : transform_registry()) names.insert(def.name);
  EXPECT_EQ(names, kAllTransforms);
  EXPECT_THROW(find_transform("mosaic"), PlanError);
}

TEST(DefaultPlan, ContainsExactlyTheSixteenTransforms) {
  std::set<std::string> names;
  for (const auto& e : default_paper_plan().entries) {
    for (const auto& s : e.steps) names.insert(s.transform);
  }
  EXPECT_EQ(names, kAllTransforms);
}

TEST(DefaultPlan, StagesFollowTheIterationOrder) {
  const AugmentationPlan plan = default_paper_plan();
  const std::map<std::string, int> expected_stage = {
      {"rotate", 1}, {"flip", 1},  {"shift", 2},   {"zoom_out", 2}, {"crop", 2},
      {"noise", 3},  {"elastic", 3}, {"gamma", 4}};
  int last = 0;
  for (const auto& e : plan.entries) {
    EXPECT_GE(e.stage, last);
    last = e.stage;
    const auto it = expected_stage.find(e.steps[0].transform);
    EXPECT_EQ(e.stage, it == expected_stage.end() ? 5 : it->second) << e.steps[0].transform;
  }
  EXPECT_EQ(plan.replicate_total(), 63u);
  EXPECT_EQ(plan.outputs_per_source(), 64u);
  EXPECT_NE(plan.description.find("not published"), std::string::npos);
}

TEST(DefaultPlan, HashStableAndFormatIndependent) {
  const AugmentationPlan a = default_paper_plan();
  EXPECT_EQ(a.hash(), default_paper_plan().hash());
  EXPECT_EQ(a.hash().size(), 64u);
  EXPECT_EQ(parse_plan(a.to_json().dump(4)).hash(), a.hash());
  EXPECT_EQ(parse_plan(a.to_json().dump()).hash(), a.hash());
  AugmentationPlan b = a;
  b.master_seed = 7;
  EXPECT_NE(b.hash(), a.hash());
}

TEST(DefaultPlan, ShippedPlanFileMatches) {
  const std::string text =
      vesselaug::testing::read_bytes(std::filesystem::path(VESSELAUG_SOURCE_DIR) / "plans" / "staged_default.plan");
  ASSERT_FALSE(text.empty());
  EXPECT_EQ(parse_plan(text).hash(), default_paper_plan().hash());
}

TEST(PlanParse, Defaults) {
  const AugmentationPlan p = parse_plan(R"({"entries":[{"transform":"flip"}]})");
  EXPECT_EQ(p.master_seed, kDefaultSeed);
  EXPECT_TRUE(p.include_originals);
  EXPECT_EQ(p.composition, CompositionMode::single);
  EXPECT_EQ(p.channels, ChannelPolicy::rgb);
  EXPECT_EQ(p.entries[0].count, 1);
}

TEST(PlanParse, Rejections) {
  EXPECT_THROW(parse_plan("{not json"), PlanError);
  EXPECT_THROW(parse_plan(R"([])"), PlanError);
  EXPECT_THROW(parse_plan(R"({"entries":[{"transform":"warp9"}]})"), PlanError);
  EXPECT_THROW(parse_plan(R"({"entries":[{"transform":"flip","count":0}]})"), PlanError);
  EXPECT_THROW(parse_plan(R"({"entries":[{"transform":"gamma","params":{"gama":1.2}}]})"), PlanError);
  EXPECT_THROW(parse_plan(R"({"entries":[],"sed":1})"), PlanError);
  EXPECT_THROW(parse_plan(R"({"schema_version":2,"entries":[]})"), PlanError);
  EXPECT_THROW(parse_plan(R"({"composition":"random","entries":[]})"), PlanError);
  EXPECT_THROW(parse_plan(R"({"channels":"cmyk","entries":[]})"), PlanError);
  EXPECT_THROW(parse_plan(R"({"entries":[{"chain":[{"transform":"flip"},{"transform":"blur"}]}]})"),
               PlanError);
  EXPECT_THROW(parse_plan(R"({"entries":[{"transform":"flip","chain":[]}]})"), PlanError);
}

TEST(PlanParse, ChainedRoundTrip) {
  const AugmentationPlan p = parse_plan(
      R"({"composition":"chained","entries":[{"count":2,"chain":[{"transform":"flip"},{"transform":"blur","params":{"sigma":0.8}}]}]})");
  ASSERT_EQ(p.entries[0].steps.size(), 2u);
  EXPECT_EQ(parse_plan(p.canonical()).hash(), p.hash());
}

TEST(ResolveSpec, Distributions) {
  RandomStream rng(1);
  for (int i = 0; i < 500; ++i) {
    const double u = detail::resolve_spec(json{{"uniform", {0.6, 1.6}}}, rng, "t").get<double>();
    ASSERT_GE(u, 0.6);
    ASSERT_LT(u, 1.6);
    const auto k = detail::resolve_spec(json{{"uniform_int", {-2, 2}}}, rng, "t").get<int>();
    ASSERT_GE(k, -2);
    ASSERT_LE(k, 2);
    const auto c = detail::resolve_spec(json{{"choice", {5, 10, 20}}}, rng, "t").get<int>();
    ASSERT_TRUE(c == 5 || c == 10 || c == 20);
  }
  EXPECT_EQ(detail::resolve_spec(json(3.5), rng, "t"), json(3.5));
  EXPECT_THROW(detail::resolve_spec(json{{"gauss", {0, 1}}}, rng, "t"), PlanError);
  EXPECT_THROW(detail::resolve_spec(json{{"uniform_int", {1.5, 2}}}, rng, "t"), PlanError);
  EXPECT_THROW(detail::resolve_spec(json{{"choice", json::array()}}, rng, "t"), PlanError);
}

TEST(ResolveStep, EveryTransformResolvesAndReapplies) {
  const Sample s = random_sample(40, 36, 1, "p");
  for (const auto& def : transform_registry()) {
    RandomStream a(derive_stream(SeedSpec{42, "p", 0, 0}));
    RandomStream b(derive_stream(SeedSpec{42, "p", 0, 0}));
    const ResolvedStep r1 = resolve_step(PlanStep{def.name, json::object()}, s, a);
    const ResolvedStep r2 = resolve_step(PlanStep{def.name, json::object()}, s, b);
    EXPECT_EQ(r1.params, r2.params) << def.name;
    for (const auto& item : r1.params.items()) {
      EXPECT_FALSE(item.value().is_object()) << def.name << "." << item.key() << " left unresolved";
    }
    const Sample o1 = apply_steps(s, {r1});
    EXPECT_EQ(o1, apply_steps(s, {r1})) << def.name;
    if (!def.geometric) {
      EXPECT_EQ(o1.vessels(), s.vessels()) << def.name;
      EXPECT_EQ(o1.fov(), s.fov()) << def.name;
    }
  }
}

TEST(ResolveStep, ResolvedRotationMatchesDirectCall) {
  const Sample s = random_sample(20, 20, 2, "p");
  RandomStream rng(3);
  const ResolvedStep r = resolve_step(PlanStep{"rotate", {{"angle", 90}}}, s, rng);
  EXPECT_EQ(r.params.at("angle"), 90);
  EXPECT_EQ(apply_steps(s, {r}), rotate(s, 90.0));
}

TEST(ResolveStep, CropRecordsOffsetsAndClampsSize) {
  const Sample s = random_sample(30, 50, 3, "p");
  RandomStream rng(4);
  const ResolvedStep r = resolve_step(PlanStep{"crop", {{"size", 100}}}, s, rng);
  EXPECT_EQ(r.params.at("size"), 30);
  EXPECT_EQ(r.params.at("x"), 0);
  EXPECT_TRUE(r.params.contains("y"));
}

TEST(ResolveStep, ExplicitGridFactorsCarriedThrough) {
  const Sample s = random_sample(20, 20, 4, "p");
  RandomStream rng(5);
  const json f = {1.0, 1.0, 1.0};
  const ResolvedStep r =
      resolve_step(PlanStep{"grid", {{"cells", 3}, {"factors_x", f}, {"factors_y", f}}}, s, rng);
  EXPECT_EQ(r.params.at("factors_x"), f);
  EXPECT_EQ(r.params.at("factors_y"), f);
}

TEST(ApplySteps, PixelStepLeavesMasksBytewise) {
  const Sample s = random_sample(16, 16, 5, "p");
  const ResolvedStep blur_step{"blur", {{"sigma", 1.0}}};
  const Sample out = apply_steps(s, {blur_step});
  EXPECT_EQ(out.vessels(), s.vessels());
  EXPECT_NE(out.image(), s.image());
}
