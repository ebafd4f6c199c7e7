/* Copyright 2026 The XEdge Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "xedge/explainers.h"

#include <cmath>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xedge/error.h"

namespace xedge {
namespace {

RiseConfig Exhaustive(int grid, int h, int w) {
  RiseConfig cfg;
  cfg.mode = RiseMode::kExhaustive;
  cfg.grid = grid;
  cfg.height = h;
  cfg.width = w;
  return cfg;
}

TEST(RiseMaskTest, ExhaustiveEnumeratesAllGrids) {
  const RiseConfig cfg = Exhaustive(2, 4, 4);
  const auto masks = GenerateRiseMasks(cfg);
  ASSERT_EQ(masks.size(), 16u);
  std::vector<double> mean(16, 0.0);
  for (const auto& m : masks) {
    for (size_t p = 0; p < m.size(); ++p) {
      ASSERT_TRUE(m[p] == 0.0f || m[p] == 1.0f);
      mean[p] += m[p] / 16.0;
    }
  }
  for (double v : mean) EXPECT_DOUBLE_EQ(v, 0.5);
  // Nearest upsampling: each 2x2 block follows one grid cell.
  EXPECT_EQ(masks[1][0], 1.0f);
  EXPECT_EQ(masks[1][5], 1.0f);
  EXPECT_EQ(masks[1][2], 0.0f);
}

TEST(RiseMaskTest, ExhaustiveRejectsLargeGrids) {
  EXPECT_THROW(Exhaustive(5, 10, 10).Validate(), Error);
  EXPECT_NO_THROW(Exhaustive(4, 8, 8).Validate());
}

TEST(RiseMaskTest, MonteCarloEmpiricalMeanNearKeepProbability) {
  RiseConfig cfg;
  cfg.n_masks = 10000;
  cfg.grid = 4;
  cfg.height = 12;
  cfg.width = 12;
  cfg.jobs = 4;
  const auto masks = GenerateRiseMasks(cfg);
  for (size_t p = 0; p < 144; ++p) {
    double mean = 0.0;
    for (const auto& m : masks) mean += m[p];
    mean /= masks.size();
    EXPECT_GE(mean, 0.47);
    EXPECT_LE(mean, 0.53);
  }
}

TEST(RiseMaskTest, KeepProbabilityOneGivesAllOnes) {
  RiseConfig cfg;
  cfg.n_masks = 5;
  cfg.keep_prob = 1.0;
  cfg.height = 9;
  cfg.width = 7;
  for (const auto& m : GenerateRiseMasks(cfg)) {
    for (float v : m) EXPECT_FLOAT_EQ(v, 1.0f);
  }
}

TEST(RiseMaskTest, MasksDependOnlyOnSeedAndIndex) {
  RiseConfig cfg;
  cfg.height = 10;
  cfg.width = 10;
  EXPECT_EQ(GenerateRiseMask(cfg, 17), GenerateRiseMask(cfg, 17));
  EXPECT_NE(GenerateRiseMask(cfg, 17), GenerateRiseMask(cfg, 18));
  RiseConfig other = cfg;
  other.seed = 43;
  EXPECT_NE(GenerateRiseMask(cfg, 17), GenerateRiseMask(other, 17));
}

TEST(RiseTest, ConstantModelGivesUniformSaliency) {
  ConstantModel model(0.35, 1);
  const ImageTensor img(1, 4, 4, RangeTag::kUnit, 0.5f);
  const auto res = ExplainRise(ClassScorer::WholeImage(model, 1), img, 1, Exhaustive(2, 4, 4));
  for (float v : res.saliency.values) EXPECT_NEAR(v, 0.35, 1e-6);
}

TEST(RiseTest, ZeroScoreModelGivesZeroSaliency) {
  ConstantModel model(0.0, 1);
  const ImageTensor img(1, 4, 4, RangeTag::kUnit, 0.5f);
  const auto res = ExplainRise(ClassScorer::WholeImage(model, 1), img, 1, Exhaustive(2, 4, 4));
  for (float v : res.saliency.values) EXPECT_EQ(v, 0.0f);
}

// f(I * M) = I00 * M00; with 16 masks, sum M00^2 = 8 and sum M00 M_p = 4.
TEST(RiseTest, PixelIndicatorExhaustiveOracle) {
  BinaryMask templ(2, 2);
  templ.set(0, 0);
  RegionTemplateModel model(templ, 1);
  const float i00 = 0.8f;
  const ImageTensor img(1, 2, 2, RangeTag::kUnit, std::vector<float>{i00, 0.3f, 0.6f, 0.9f});
  const auto res = ExplainRise(ClassScorer::WholeImage(model, 1), img, 1, Exhaustive(2, 2, 2));
  const double sum_f_m00 = 8.0 * i00;
  const double sum_f_mp = 4.0 * i00;
  EXPECT_NEAR(res.saliency.at(0, 0), sum_f_m00 / (0.5 * 16), 1e-6);
  EXPECT_NEAR(res.saliency.at(0, 1), sum_f_mp / (0.5 * 16), 1e-6);
  EXPECT_NEAR(res.saliency.at(1, 0), sum_f_mp / (0.5 * 16), 1e-6);
  EXPECT_NEAR(res.saliency.at(1, 1), sum_f_mp / (0.5 * 16), 1e-6);
  EXPECT_EQ(res.saliency.at(0, 0), 2.0f * res.saliency.at(1, 1));
}

TEST(RiseTest, ResultDoesNotDependOnJobs) {
  const RegionTemplateModel model{RegionTemplateModel::FractionRect{}};
  Rng rng(2);
  const ImageTensor img = testing::RandomImage(rng, 3, 12, 12);
  RiseConfig cfg;
  cfg.n_masks = 300;
  cfg.grid = 4;
  cfg.height = 12;
  cfg.width = 12;
  cfg.batch = 7;
  cfg.jobs = 1;
  const auto a = ExplainRise(model, img, 1, 1, cfg);
  cfg.jobs = 5;
  cfg.batch = 64;
  const auto b = ExplainRise(model, img, 1, 1, cfg);
  EXPECT_EQ(a.saliency, b.saliency);
  EXPECT_EQ(a.config_digest, b.config_digest);
}

TEST(RiseTest, ScoreScalingScalesSaliency) {
  const ImageTensor img(1, 4, 4, RangeTag::kUnit, 0.5f);
  ConstantModel low(0.2, 1), high(0.4, 1);
  const auto a = ExplainRise(ClassScorer::WholeImage(low, 1), img, 1, Exhaustive(2, 4, 4));
  const auto b = ExplainRise(ClassScorer::WholeImage(high, 1), img, 1, Exhaustive(2, 4, 4));
  for (size_t p = 0; p < a.saliency.values.size(); ++p) {
    EXPECT_NEAR(b.saliency.values[p], 2.0 * a.saliency.values[p], 1e-6);
  }
}

TEST(RiseTest, UnshiftedMonteCarloApproachesExhaustive) {
  BrightnessToyModel model(1);
  Rng rng(8);
  const ImageTensor img = testing::RandomImage(rng, 1, 6, 6);
  const auto scorer = ClassScorer::WholeImage(model, 1);
  const auto exact = ExplainRise(scorer, img, 1, Exhaustive(3, 6, 6));
  RiseConfig mc;
  mc.n_masks = 20000;
  mc.grid = 3;
  mc.height = 6;
  mc.width = 6;
  mc.smooth = false;
  mc.jobs = 4;
  const auto approx = ExplainRise(scorer, img, 1, mc);
  for (size_t p = 0; p < exact.saliency.values.size(); ++p) {
    EXPECT_NEAR(approx.saliency.values[p], exact.saliency.values[p],
                0.05 * exact.saliency.values[p]);
  }
}

TEST(RiseTest, RejectsSizeMismatch) {
  ConstantModel model(0.5, 1);
  EXPECT_THROW(ExplainRise(ClassScorer::WholeImage(model, 1),
                           ImageTensor(1, 4, 4, RangeTag::kUnit), 1, Exhaustive(2, 3, 3)),
               Error);
}

IntrospectionRecord OneChannel(std::vector<float> acts, std::vector<float> grads) {
  return IntrospectionRecord{1, 1, static_cast<int>(acts.size()), std::move(acts),
                             std::move(grads)};
}

TEST(GradCamTest, UnitGradientsGiveReluOfActivations) {
  const auto cam = GradCamFromRecord(OneChannel({-1.0f, 0.5f, 2.0f}, {1.0f, 1.0f, 1.0f}));
  EXPECT_EQ(cam, (std::vector<float>{0.0f, 0.5f, 2.0f}));
}

TEST(GradCamTest, ZeroGradientsGiveZeroMap) {
  const auto cam = GradCamFromRecord(OneChannel({1.0f, 2.0f}, {0.0f, 0.0f}));
  EXPECT_EQ(cam, (std::vector<float>{0.0f, 0.0f}));
}

TEST(GradCamTest, NonPositiveActivationsWithPositiveWeightVanish) {
  const auto cam = GradCamFromRecord(OneChannel({-1.0f, 0.0f, -3.0f}, {0.5f, 0.2f, 0.1f}));
  for (float v : cam) EXPECT_EQ(v, 0.0f);
}

TEST(GradCamTest, ExplainNormalizesAndNeedsIntrospection) {
  const LinearConvToyModel model = LinearConvToyModel::Random(3);
  Rng rng(4);
  const ImageTensor img = testing::RandomImage(rng, 3, 8, 8);
  const auto res = ExplainGradCam(model, img, 1, 1);
  ASSERT_EQ(res.saliency.values.size(), 64u);
  for (float v : res.saliency.values) {
    EXPECT_GE(v, 0.0f);
    EXPECT_LE(v, 1.0f);
  }
  BrightnessToyModel opaque;
  try {
    ExplainGradCam(opaque, img, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

}  // namespace
}  // namespace xedge
