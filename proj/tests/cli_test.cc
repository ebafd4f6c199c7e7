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

#include <filesystem>
#include <map>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

#include "test_util.h"
#include "xedge/artifact_io.h"
#include "xedge/dataset.h"
#include "xedge/review_service.h"

namespace xedge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ::xedge::testing::Fixture;
using ::xedge::testing::RunCommand;
using ::xedge::testing::TempDir;

std::string Cli(const std::string& args) {
  return std::string(XEDGE_CLI) + " " + args + " 2>/dev/null";
}

std::string Mini() { return "--dataset " + Fixture("mini.json").string(); }

// Relative path -> bytes of every file under root.
std::map<std::string, std::string> Snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = ReadFile(e.path());
  }
  return files;
}

TEST(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(RunCommand(Cli("")).exit_code, 2);
  EXPECT_EQ(RunCommand(Cli("frobnicate")).exit_code, 2);
  EXPECT_EQ(RunCommand(Cli("explain --sample 1")).exit_code, 2);  // --model missing
  EXPECT_EQ(RunCommand(Cli("--format xml rank --report x")).exit_code, 2);
}

TEST(CliTest, RuntimeErrorsExitOne) {
  TempDir dir;
  EXPECT_EQ(RunCommand(Cli(Mini() + " --out " + dir.path().string() +
                           " explain --model toy:region --sample 99"))
                .exit_code,
            1);
  EXPECT_EQ(RunCommand(Cli(Mini() + " --out " + dir.path().string() +
                           " explain --method gradcam --model toy:region --sample 1"))
                .exit_code,
            1);
}

TEST(CliTest, RankPublishedTable) {
  const auto r = RunCommand(Cli("rank --report " + Fixture("published_results.json").string()));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("advisable: RISE"), std::string::npos) << r.output;
  const auto j = RunCommand(Cli("--format json rank --report " + Fixture("published_results.json").string()));
  EXPECT_EQ(json::parse(j.output)["advisable"], "RISE");
}

TEST(CliTest, ExplainWritesSaliencyArtifacts) {
  TempDir dir;
  const auto r = RunCommand(Cli(Mini() + " --out " + dir.path().string() +
                                " explain --model toy:region --sample 1 --masks 64 --grid 3"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  for (const char* cat : {"1", "2"}) {
    for (const char* ext : {".f32", ".json", ".png"}) {
      EXPECT_TRUE(fs::exists(dir.path() / "saliency" / (std::string("1_") + cat + "_rise" + ext)))
          << cat << ext;
    }
  }
}

TEST(CliTest, EvalXaiThenRank) {
  TempDir dir;
  const std::string out = dir.path().string();
  const auto r = RunCommand(Cli(Mini() + " --out " + out +
                                " eval-xai --model toy:linear-conv --methods rise,gradcam"
                                " --split all --masks 64 --grid 3"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const json report = json::parse(ReadFile(dir.path() / "report.json"));
  ASSERT_EQ(report["methods"].size(), 2u);
  EXPECT_EQ(report["samples"].size(), 18u);  // 9 labeled pairs x 2 methods
  EXPECT_TRUE(fs::exists(dir.path() / "report.md"));
  const auto ranked = RunCommand(Cli("rank --report " + out + "/report.json"));
  EXPECT_EQ(ranked.exit_code, 0);
  EXPECT_NE(ranked.output.find("advisable: " + report["advisable"].get<std::string>()),
            std::string::npos);
}

TEST(CliTest, AugmentEnlargeAndDecisionReplay) {
  TempDir dir;
  const std::string out = (dir.path() / "enl").string();
  auto r = RunCommand(Cli(Mini() + " --out " + out + " augment --enlarge 2 --radius 2"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Dataset ds = LoadDataset(fs::path(out) / "dataset.json");
  EXPECT_EQ(BuildCategoryMask(ds, 1, 2).Count(), 16 * 5);  // 12 x 1 line, clipped 5-row band
  EXPECT_TRUE(fs::exists(ds.image_root / ds.images[0].file_name));

  const fs::path log = dir.path() / "log.jsonl";
  {
    DecisionLog writer(log);
    DecisionRecord rec;
    rec.sample_id = 1;
    rec.action = DecisionAction::kEnlarge;
    rec.params = {{"radius", 2}, {"category_ids", {2}}};
    rec.author = "a";
    rec.client_token = "t";
    rec.timestamp = "1970-01-01T00:00:00Z";
    writer.Append(rec);
  }
  const std::string out2 = (dir.path() / "rep").string();
  r = RunCommand(Cli(Mini() + " --out " + out2 + " augment --decisions " + log.string()));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const Dataset replayed = LoadDataset(fs::path(out2) / "dataset.json");
  EXPECT_EQ(BuildCategoryMask(replayed, 1, 2).bits, BuildCategoryMask(ds, 1, 2).bits);
  EXPECT_EQ(RunCommand(Cli(Mini() + " --out " + out2 + " augment")).exit_code, 2);
}

TEST(CliTest, SegEvalTable) {
  TempDir dir;
  LabelMap pred{4, 4, std::vector<int32_t>(16, 0)};
  LabelMap gt = pred;
  for (int i : {0, 1, 4, 5}) pred.labels[i] = 1;
  for (int i : {5, 6, 9, 10}) gt.labels[i] = 1;
  SaveLabelMap(dir.path() / "pred.png", pred);
  SaveLabelMap(dir.path() / "gt.png", gt);
  const auto r = RunCommand(Cli("--out " + dir.path().string() + " seg-eval --pred " +
                                (dir.path() / "pred.png").string() + " --gt " +
                                (dir.path() / "gt.png").string() + " --categories 1"));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const json j = json::parse(ReadFile(dir.path() / "seg_eval.json"));
  EXPECT_DOUBLE_EQ(j["miou"].get<double>(), 14.29);
}

TEST(CliTest, TextExplainWithMock) {
  TempDir dir;
  const auto r = RunCommand(Cli(Mini() + " --out " + dir.path().string() +
                                " text-explain --model toy:region --sample 1 --category 1"
                                " --masks 32 --grid 3 --mock \"MOST focused: tower body\""));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("MOST focused: tower body"), std::string::npos) << r.output;
}

TEST(CliTest, ArtifactsAreByteIdenticalAcrossRunsAndJobs) {
  TempDir dir;
  std::vector<std::map<std::string, std::string>> snaps;
  for (const char* jobs : {"1", "4", "1"}) {
    const fs::path out = dir.path() / (std::string("run") + std::to_string(snaps.size()));
    const std::string common = Mini() + " --out " + out.string() + " --jobs " + jobs;
    ASSERT_EQ(RunCommand(Cli(common + " explain --model toy:linear-conv --sample 2 --masks 96"
                                      " --grid 3")).exit_code, 0);
    ASSERT_EQ(RunCommand(Cli(common + " eval-xai --model toy:linear-conv --methods rise,gradcam"
                                      " --split all --masks 64 --grid 3")).exit_code, 0);
    ASSERT_EQ(RunCommand(Cli(common + " augment --enlarge 2 --radius 2")).exit_code, 0);
    snaps.push_back(Snapshot(out));
  }
  ASSERT_GE(snaps[0].size(), 8u);
  EXPECT_EQ(snaps[0], snaps[1]);
  EXPECT_EQ(snaps[0], snaps[2]);
}

}  // namespace
}  // namespace xedge
