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

#include "xedge/report.h"

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_util.h"
#include "xedge/artifact_io.h"
#include "xedge/error.h"

namespace xedge {
namespace {

using ::xedge::testing::Fixture;

MetricReport PublishedTable() { return ParseReportJson(ReadFile(Fixture("published_results.json"))); }

TEST(RankTest, PublishedTableSelectsRise) {
  const Ranking r = RankMethods(PublishedTable().methods);
  EXPECT_EQ(r.advisable, "RISE");
  ASSERT_EQ(r.table.size(), 10u);
  EXPECT_EQ(r.table[0].name, "RISE");
  EXPECT_EQ(r.table[0].wins, 3);  // Bbox, Del, Ins
  EXPECT_EQ(r.table[1].name, "EigenGradCAM");
  EXPECT_EQ(r.table[1].wins, 2);  // EBPG, IoU
}

TEST(RankTest, PublishedTableValues) {
  const MetricReport t = PublishedTable();
  const auto& rise = t.methods.back();
  EXPECT_EQ(rise.name, "RISE");
  EXPECT_DOUBLE_EQ(rise.ebpg, 62.42);
  EXPECT_DOUBLE_EQ(rise.bbox, 63.52);
  EXPECT_DOUBLE_EQ(rise.iou, 56.13);
  EXPECT_DOUBLE_EQ(rise.del, 0.123);
  EXPECT_DOUBLE_EQ(rise.ins, 0.691);
}

TEST(RankTest, RankingIgnoresInputOrder) {
  auto methods = PublishedTable().methods;
  std::reverse(methods.begin(), methods.end());
  EXPECT_EQ(RankMethods(methods).advisable, "RISE");
}

TEST(RankTest, TiesGoToLowerDeletion) {
  // A wins EBPG and Bbox; B wins IoU, Del and Ins.
  std::vector<MethodAggregate> m = {{"A", 60, 60, 10, 0.5, 0.4, 1}, {"B", 10, 10, 60, 0.2, 0.9, 1}};
  const Ranking r = RankMethods(m);
  EXPECT_EQ(r.advisable, "B");
  EXPECT_EQ(r.table[0].wins, 3);
  EXPECT_EQ(r.table[1].wins, 2);
  std::vector<MethodAggregate> tie = {{"A", 60, 10, 10, 0.3, 0.4, 1},
                                      {"B", 10, 60, 10, 0.3, 0.4, 1}};
  EXPECT_EQ(RankMethods(tie).advisable, "A");
  tie[1].del = 0.2;
  EXPECT_EQ(RankMethods(tie).advisable, "B");
}

TEST(RankTest, EmptyInputIsRejected) { EXPECT_THROW(RankMethods({}), Error); }

TEST(AggregateTest, MeansAreHandComputed) {
  std::vector<SampleRow> rows = {{"rise", 1, 1, 0.5, 0.25, 0.1, 0.2, 0.6},
                                 {"rise", 2, 1, 1.0, 0.75, 0.3, 0.4, 0.8}};
  const MethodAggregate a = AggregateRows("RISE", rows);
  EXPECT_DOUBLE_EQ(a.ebpg, 75.0);
  EXPECT_DOUBLE_EQ(a.bbox, 50.0);
  EXPECT_NEAR(a.iou, 20.0, 1e-12);
  EXPECT_NEAR(a.del, 0.3, 1e-12);
  EXPECT_NEAR(a.ins, 0.7, 1e-12);
  EXPECT_EQ(a.samples, 2);
  EXPECT_THROW(AggregateRows("RISE", {}), Error);
}

TEST(ReportJsonTest, RoundTripAndStableBytes) {
  MetricReport rep = PublishedTable();
  rep.rows = {{"rise", 3, 1, 0.5, 0.25, 0.125, 0.2, 0.6}};
  rep.dataset_digest = "abc";
  rep.advisable = "RISE";
  rep.created_at = "1970-01-01T00:00:00Z";
  const std::string once = EmitReportJson(rep);
  const MetricReport back = ParseReportJson(once);
  EXPECT_EQ(EmitReportJson(back), once);
  EXPECT_EQ(back.advisable, "RISE");
  EXPECT_EQ(back.methods.size(), 10u);
  ASSERT_EQ(back.rows.size(), 1u);
  EXPECT_NEAR(back.rows[0].iou, 0.125, 1e-12);
  EXPECT_EQ(EmitReportJson(rep), once);
}

TEST(ReportJsonTest, MissingMetricIsParseError) {
  const std::string doc = R"({"methods":[{"name":"X","ebpg":1,"bbox":1,"iou":1,"del":0.1}]})";
  try {
    ParseReportJson(doc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidArgument);
    EXPECT_NE(std::string(e.what()).find("ins"), std::string::npos) << e.what();
  }
}

TEST(ReportMarkdownTest, OneRowPerMethod) {
  MetricReport rep = PublishedTable();
  rep.advisable = "RISE";
  const std::string md = EmitReportMarkdown(rep);
  EXPECT_NE(md.find("| RISE |"), std::string::npos);
  EXPECT_NE(md.find("62.42"), std::string::npos);
  EXPECT_NE(md.find("0.123"), std::string::npos);
  EXPECT_NE(md.find("RISE"), std::string::npos);
  int rows = 0;
  for (size_t p = md.find("\n| "); p != std::string::npos; p = md.find("\n| ", p + 1)) ++rows;
  EXPECT_EQ(rows, 10);
  EXPECT_NE(md.find("**63.52**"), std::string::npos);  // strict column best
}

class EvaluateTest : public ::testing::Test {
 protected:
  EvaluationConfig Config(int jobs) {
    EvaluationConfig cfg;
    cfg.rise.n_masks = 64;
    cfg.rise.grid = 3;
    cfg.rise.seed = 5;
    cfg.jobs = jobs;
    return cfg;
  }
};

TEST_F(EvaluateTest, RowsCoverEveryLabeledPair) {
  const Dataset ds = LoadDataset(Fixture("mini.json"));
  const auto model = MakeToyModel("toy:region");
  const auto rows = EvaluateMethodRows("rise", *model, ds, Config(1));
  EXPECT_EQ(rows.size(), 9u);  // five towers, four cables
  for (size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LE(std::make_pair(rows[i - 1].image_id, rows[i - 1].category_id),
              std::make_pair(rows[i].image_id, rows[i].category_id));
  }
  for (const auto& r : rows) {
    EXPECT_GE(r.ebpg, 0.0);
    EXPECT_LE(r.ebpg, 1.0 + 1e-12);
    EXPECT_GE(r.del, 0.0);
    EXPECT_LE(r.ins, 1.0 + 1e-12);
  }
}

TEST_F(EvaluateTest, JobsDoNotChangeRows) {
  const Dataset ds = LoadDataset(Fixture("mini.json"));
  const auto model = MakeToyModel("toy:linear-conv");
  const auto a = EvaluateMethodRows("rise", *model, ds, Config(1));
  const auto b = EvaluateMethodRows("rise", *model, ds, Config(4));
  EXPECT_EQ(a, b);
  const auto g1 = EvaluateMethodRows("gradcam", *model, ds, Config(1));
  const auto g4 = EvaluateMethodRows("gradcam", *model, ds, Config(3));
  EXPECT_EQ(g1, g4);
}

TEST_F(EvaluateTest, ResizeScalesGroundTruth) {
  const Dataset ds = LoadDataset(Fixture("mini.json"));
  const ImageInfo& info = ds.images.front();
  const BinaryMask full = GroundTruthMask(ds, info, 1, 16, 16);
  const BinaryMask big = GroundTruthMask(ds, info, 1, 32, 32);
  // Vertices sit on pixel centres: the tower spans 6 x 7 units, so 7 x 8
  // pixels at full size and 12 x 14 once the units double.
  EXPECT_EQ(full.Count(), 7 * 8);
  EXPECT_EQ(big.Count(), 12 * 14);
}

TEST_F(EvaluateTest, UnknownMethodAndGradcamOnOpaqueModel) {
  const Dataset ds = LoadDataset(Fixture("mini.json"));
  const auto region = MakeToyModel("toy:region");
  EXPECT_THROW(EvaluateMethodRows("lime", *region, ds, Config(1)), Error);
  try {
    EvaluateMethodRows("gradcam", *region, ds, Config(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupported);
  }
}

}  // namespace
}  // namespace xedge
