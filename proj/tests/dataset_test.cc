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

#include "xedge/dataset.h"

#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "test_util.h"
#include "xedge/artifact_io.h"
#include "xedge/error.h"

namespace xedge {
namespace {

using testing::Fixture;

class DatasetFixtureTest : public ::testing::TestWithParam<std::string> {};

TEST_P(DatasetFixtureTest, ParseWriteParseRoundTrip) {
  const Dataset ds = LoadDataset(Fixture(GetParam()));
  const Dataset again = ParseDataset(WriteDataset(ds));
  EXPECT_EQ(ds, again);
  EXPECT_EQ(WriteDataset(ds), WriteDataset(again));
  EXPECT_EQ(DatasetDigest(ds), DatasetDigest(again));
}

INSTANTIATE_TEST_SUITE_P(AllFixtures, DatasetFixtureTest,
                         ::testing::Values("mini.json", "ten.json", "void.json"));

TEST(DatasetTest, ParsesMiniFixture) {
  const Dataset ds = LoadDataset(Fixture("mini.json"));
  EXPECT_EQ(ds.images.size(), 5u);
  EXPECT_EQ(ds.categories.size(), 2u);
  EXPECT_EQ(ds.annotations.size(), 9u);
  EXPECT_EQ(ds.ImagePath(1), Fixture("mini/img_1.png"));
  EXPECT_FALSE(ds.VoidCategoryId().has_value());
}

TEST(DatasetTest, VoidAnnotationsAreFlaggedAndExcluded) {
  const Dataset ds = LoadDataset(Fixture("void.json"));
  ASSERT_TRUE(ds.VoidCategoryId().has_value());
  EXPECT_EQ(*ds.VoidCategoryId(), 3);
  const auto labels = ds.LabelCategories();
  EXPECT_TRUE(std::none_of(labels.begin(), labels.end(),
                           [](const Category& c) { return c.name == "void"; }));
  EXPECT_EQ(BuildVoidMask(ds, 1).Count(), 4 * 4);
  EXPECT_TRUE(MaskIntersection(BuildVoidMask(ds, 1), BuildLabeledMask(ds, 1)).Empty());
}

TEST(DatasetTest, CategoryMaskOfCableIsOnePixelTall) {
  const Dataset ds = LoadDataset(Fixture("mini.json"));
  const BinaryMask cable = BuildCategoryMask(ds, 1, 2);
  EXPECT_EQ(cable.Count(), 12);
  const BBoxRect box = BBoxOfMask(cable);
  EXPECT_EQ(box.row_min, box.row_max);
}

TEST(DatasetTest, RleSegmentationIsUnsupported) {
  const std::string doc = R"({"images":[{"id":1,"file_name":"a.png","width":4,"height":4}],
    "categories":[{"id":1,"name":"x"}],
    "annotations":[{"id":1,"image_id":1,"category_id":1,
                    "segmentation":{"counts":[1,2],"size":[4,4]}}]})";
  try {
    ParseDataset(doc);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

TEST(DatasetTest, DanglingReferenceNamesTheId) {
  const std::string doc = R"({"images":[{"id":1,"file_name":"a.png","width":4,"height":4}],
    "categories":[{"id":1,"name":"x"}],
    "annotations":[{"id":9,"image_id":77,"category_id":1,
                    "segmentation":[[0,0,2,0,2,2]]}]})";
  try {
    ParseDataset(doc);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
    EXPECT_NE(std::string(e.what()).find("77"), std::string::npos);
  }
}

TEST(DatasetTest, MissingArraysIsParseError) {
  try {
    ParseDataset(R"({"images":[]})");
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

TEST(SplitTest, TenImagesSplitEightTwo) {
  const Dataset ds = LoadDataset(Fixture("ten.json"));
  const auto [train, val] = SplitDataset(ds, {0.8, 42});
  EXPECT_EQ(train.images.size(), 8u);
  EXPECT_EQ(val.images.size(), 2u);
  std::set<int64_t> all;
  for (const auto& i : train.images) all.insert(i.id);
  for (const auto& i : val.images) EXPECT_TRUE(all.insert(i.id).second);
  EXPECT_EQ(all.size(), 10u);
  // Annotations follow their images.
  EXPECT_EQ(train.annotations.size() + val.annotations.size(), ds.annotations.size());
}

TEST(SplitTest, SameSeedSameSplitDifferentSeedUsuallyDiffers) {
  const Dataset ds = LoadDataset(Fixture("ten.json"));
  EXPECT_EQ(SplitDataset(ds, {0.8, 42}).second, SplitDataset(ds, {0.8, 42}).second);
  bool any_differs = false;
  for (uint64_t seed = 1; seed < 6; ++seed) {
    any_differs |= !(SplitDataset(ds, {0.8, seed}).second == SplitDataset(ds, {0.8, 42}).second);
  }
  EXPECT_TRUE(any_differs);
}

TEST(VoidCategoryTest, EnsureAddsOnceWithFreshId) {
  Dataset ds = LoadDataset(Fixture("mini.json"));
  const int64_t id = EnsureVoidCategory(ds);
  EXPECT_EQ(id, 3);
  EXPECT_EQ(EnsureVoidCategory(ds), 3);
  EXPECT_EQ(ds.categories.size(), 3u);
  EXPECT_EQ(NextAnnotationId(ds), 10);
}

}  // namespace
}  // namespace xedge
