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

#include "xedge/imaging.h"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xedge/error.h"
#include "xedge/random.h"

namespace xedge {
namespace {

TEST(ImageTensorTest, RejectsOutOfRangeValues) {
  EXPECT_THROW(ImageTensor(1, 1, 2, RangeTag::kUnit, std::vector<float>{0.5f, 1.5f}), Error);
  EXPECT_THROW(ImageTensor(1, 1, 2, RangeTag::kRaw255, std::vector<float>{-1.0f, 0.0f}), Error);
  EXPECT_THROW(ImageTensor(1, 2, 2, RangeTag::kUnit, std::vector<float>{0.0f}), Error);
  EXPECT_NO_THROW(ImageTensor(1, 1, 2, RangeTag::kNormalized, std::vector<float>{-3.0f, 4.0f}));
}

TEST(NormalizeTest, MatchesHandComputedValues) {
  ImageTensor img(3, 1, 1, RangeTag::kRaw255,
                  std::vector<float>{255.0f, 0.0f, 0.406f * 255.0f});
  const ImageTensor n = NormalizeImage(img, NormalizationSpec::ImageNet());
  EXPECT_EQ(n.range(), RangeTag::kNormalized);
  EXPECT_NEAR(n.at(0, 0, 0), (1.0 - 0.485) / 0.229, 1e-6);
  EXPECT_NEAR(n.at(1, 0, 0), -0.456 / 0.224, 1e-6);
  EXPECT_NEAR(n.at(2, 0, 0), 0.0, 1e-6);
}

TEST(NormalizeTest, RoundTripsThroughDenormalize) {
  Rng rng(7);
  const ImageTensor img = testing::RandomImage(rng, 3, 16, 16, RangeTag::kRaw255);
  const auto spec = NormalizationSpec::ImageNet();
  const ImageTensor back = DenormalizeImage(NormalizeImage(img, spec), spec);
  EXPECT_EQ(back.range(), RangeTag::kRaw255);
  for (size_t i = 0; i < img.data().size(); ++i) {
    EXPECT_NEAR(back.data()[i], img.data()[i], 1e-5);
  }
}

TEST(NormalizeTest, RejectsWrongRangeOrChannels) {
  EXPECT_THROW(NormalizeImage(ImageTensor(3, 1, 1, RangeTag::kUnit), NormalizationSpec::ImageNet()),
               Error);
  EXPECT_THROW(
      NormalizeImage(ImageTensor(1, 1, 1, RangeTag::kRaw255), NormalizationSpec::ImageNet()),
      Error);
}

TEST(ResizeTest, HalfPixelBilinearUpsample) {
  ImageTensor img(1, 1, 2, RangeTag::kUnit, std::vector<float>{0.0f, 1.0f});
  const ImageTensor up = ResizeBilinear(img, 1, 4);
  ASSERT_EQ(up.width(), 4);
  EXPECT_NEAR(up.at(0, 0, 0), 0.0, 1e-7);
  EXPECT_NEAR(up.at(0, 0, 1), 0.25, 1e-7);
  EXPECT_NEAR(up.at(0, 0, 2), 0.75, 1e-7);
  EXPECT_NEAR(up.at(0, 0, 3), 1.0, 1e-7);
}

TEST(ResizeTest, SameSizeIsIdentity) {
  Rng rng(3);
  const ImageTensor img = testing::RandomImage(rng, 3, 6, 5, RangeTag::kRaw255);
  EXPECT_EQ(ResizeBilinear(img, 6, 5), img);
}

TEST(BlurTest, KernelIsNormalizedAndSymmetric) {
  const auto k = GaussianKernel(5.0);
  ASSERT_EQ(k.size(), 31u);
  double sum = 0.0;
  for (size_t i = 0; i < k.size(); ++i) {
    sum += k[i];
    EXPECT_DOUBLE_EQ(k[i], k[k.size() - 1 - i]);
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(BlurTest, ConstantImageUnchanged) {
  ImageTensor img(2, 7, 9, RangeTag::kUnit, 0.3f);
  const ImageTensor b = GaussianBlur(img, 2.0);
  for (float v : b.data()) EXPECT_NEAR(v, 0.3f, 1e-6);
}

// Closed-triangle membership by barycentric signs.
bool InTriangle(const Polygon& t, double x, double y) {
  auto cross = [](const Point& a, const Point& b, double px, double py) {
    return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
  };
  const double d1 = cross(t[0], t[1], x, y);
  const double d2 = cross(t[1], t[2], x, y);
  const double d3 = cross(t[2], t[0], x, y);
  const double eps = 1e-9;
  const bool has_neg = d1 < -eps || d2 < -eps || d3 < -eps;
  const bool has_pos = d1 > eps || d2 > eps || d3 > eps;
  return !(has_neg && has_pos);
}

TEST(RasterizeTest, RandomTrianglesMatchBarycentricOracle) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Polygon t;
    for (int k = 0; k < 3; ++k) t.push_back({rng.Uniform(-2, 18), rng.Uniform(-2, 18)});
    const double area2 = std::abs((t[1].x - t[0].x) * (t[2].y - t[0].y) -
                                  (t[2].x - t[0].x) * (t[1].y - t[0].y));
    if (area2 < 1e-3) continue;
    const BinaryMask mask = RasterizePolygon(t, 16, 16);
    for (int r = 0; r < 16; ++r) {
      for (int c = 0; c < 16; ++c) {
        ASSERT_EQ(mask.at(r, c), InTriangle(t, c, r)) << "trial " << trial << " at " << r << "," << c;
      }
    }
  }
}

TEST(RasterizeTest, AxisAlignedRectangleIsInclusive) {
  const Polygon rect = {{2, 1}, {5, 1}, {5, 3}, {2, 3}};
  const BinaryMask m = RasterizePolygon(rect, 8, 8);
  EXPECT_EQ(m.Count(), 4 * 3);
  EXPECT_TRUE(m.at(1, 2));
  EXPECT_TRUE(m.at(3, 5));
  EXPECT_FALSE(m.at(0, 2));
}

TEST(RasterizeTest, RejectsDegenerateInput) {
  EXPECT_THROW(RasterizePolygon({{0, 0}, {1, 1}}, 4, 4), Error);
  EXPECT_THROW(RasterizePolygon({{0, 0}, {1, NAN}, {2, 2}}, 4, 4), Error);
}

TEST(MaskOpsTest, DilateSinglePixel) {
  BinaryMask m(7, 7);
  m.set(3, 3);
  const BinaryMask d = DilateMask(m, 2);
  EXPECT_EQ(d.Count(), 25);
  EXPECT_TRUE(d.at(1, 1));
  EXPECT_FALSE(d.at(0, 3));
}

TEST(MaskOpsTest, SetAlgebra) {
  BinaryMask a(1, 4), b(1, 4);
  a.bits = {1, 1, 0, 0};
  b.bits = {0, 1, 1, 0};
  EXPECT_EQ(MaskUnion(a, b).Count(), 3);
  EXPECT_EQ(MaskIntersection(a, b).Count(), 1);
  EXPECT_EQ(MaskDifference(a, b).Count(), 1);
  EXPECT_TRUE(MaskContains(MaskUnion(a, b), a));
  EXPECT_FALSE(MaskContains(a, b));
}

TEST(SaliencyTest, TopKBreaksTiesRowMajor) {
  SaliencyMap sal(1, 2, 2, {0.5f, 0.5f, 0.5f, 0.9f});
  const BinaryMask top = TopKBinarize(sal, 2);
  EXPECT_TRUE(top.at(1, 1));
  EXPECT_TRUE(top.at(0, 0));
  EXPECT_FALSE(top.at(0, 1));
}

TEST(SaliencyTest, MinMaxNormalize) {
  const SaliencyMap n = MinMaxNormalize(SaliencyMap(1, 1, 3, {2.0f, 4.0f, 3.0f}));
  EXPECT_FLOAT_EQ(n.values[0], 0.0f);
  EXPECT_FLOAT_EQ(n.values[1], 1.0f);
  EXPECT_FLOAT_EQ(n.values[2], 0.5f);
  const SaliencyMap c = MinMaxNormalize(SaliencyMap(1, 1, 2, {3.0f, 3.0f}));
  EXPECT_FLOAT_EQ(c.values[0], 1.0f);
  const SaliencyMap z = MinMaxNormalize(SaliencyMap(1, 1, 2, {0.0f, 0.0f}));
  EXPECT_FLOAT_EQ(z.values[0], 0.0f);
}

TEST(SaliencyTest, RejectsNonFinite) {
  EXPECT_THROW(SaliencyMap(1, 1, 1, {NAN}), Error);
}

TEST(BoxTest, RectIouOfOffsetBlocks) {
  const BBoxRect a{0, 1, 0, 1};
  const BBoxRect b{1, 2, 1, 2};
  EXPECT_NEAR(RectIoU(a, b), 1.0 / 7.0, 1e-12);
  EXPECT_DOUBLE_EQ(RectIoU(a, a), 1.0);
}

TEST(BoxTest, BBoxOfMask) {
  BinaryMask m(5, 5);
  m.set(1, 3);
  m.set(4, 0);
  EXPECT_EQ(BBoxOfMask(m), (BBoxRect{1, 4, 0, 3}));
  EXPECT_THROW(BBoxOfMask(BinaryMask(2, 2)), Error);
}

TEST(PropertyTest, ResizeStaysWithinInputBounds) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const ImageTensor img = testing::RandomImage(rng, 1, 5, 7);
    const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
    const ImageTensor out = ResizeBilinear(img, 13, 3);
    for (float v : out.data()) {
      EXPECT_GE(v, *lo);
      EXPECT_LE(v, *hi);
    }
  }
}

TEST(PropertyTest, TopKPopulationIsExact) {
  Rng rng(4);
  std::vector<float> v(64);
  for (float& x : v) x = static_cast<float>(rng.UniformInt(4));  // many ties
  const SaliencyMap sal(1, 8, 8, v);
  for (int k = 0; k <= 64; k += 7) EXPECT_EQ(TopKBinarize(sal, k).Count(), k);
}

TEST(PropertyTest, DilationComposesAwayFromBorders) {
  Rng rng(9);
  BinaryMask m(20, 20);
  for (int r = 6; r < 14; ++r) {
    for (int c = 6; c < 14; ++c) m.set(r, c, rng.Bernoulli(0.2));
  }
  EXPECT_EQ(DilateMask(DilateMask(m, 1), 2), DilateMask(m, 3));
}

}  // namespace
}  // namespace xedge
