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
#ifndef XEDGE_REPORT_H_
#define XEDGE_REPORT_H_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "xedge/dataset.h"
#include "xedge/explainers.h"
#include "xedge/metrics.h"
#include "xedge/model.h"

namespace xedge {

// One (sample, category) evaluation. Plausibility values are fractions.
struct SampleRow {
  std::string method;
  int64_t image_id = 0;
  int64_t category_id = 0;
  double ebpg = 0.0;
  double bbox = 0.0;
  double iou = 0.0;
  double del = 0.0;
  double ins = 0.0;
  bool operator==(const SampleRow&) const = default;
};

// Per-method means. EBPG, Bbox and IoU are percentages; Del and Ins are AUCs.
struct MethodAggregate {
  std::string name;
  double ebpg = 0.0;
  double bbox = 0.0;
  double iou = 0.0;
  double del = 0.0;
  double ins = 0.0;
  int64_t samples = 0;
  bool operator==(const MethodAggregate&) const = default;
};

struct MetricReport {
  std::vector<MethodAggregate> methods;
  std::vector<SampleRow> rows;
  std::string dataset_digest;
  std::string advisable;
  std::string created_at;
  bool operator==(const MetricReport&) const = default;
};

struct EvaluationConfig {
  RiseConfig rise;  // height/width are filled per image
  FaithfulnessConfig faithfulness;
  // Resize every image (and its ground truth) to size x size; 0 keeps it.
  int resize = 0;
  int jobs = 1;
};

using ImageLoader = std::function<ImageTensor(const Dataset&, const ImageInfo&)>;

// Reads ds.image_root / file_name from disk.
ImageTensor LoadDatasetImage(const Dataset& ds, const ImageInfo& info);

// Ground truth for a category, rasterized at the requested size.
BinaryMask GroundTruthMask(const Dataset& ds, const ImageInfo& info, int64_t category_id,
                           int height, int width);

// Explains every (image, category) pair with a nonempty ground truth and
// scores it. Rows come back in (image id, category id) order.
std::vector<SampleRow> EvaluateMethodRows(const std::string& method,
                                          const SegmentationModel& model, const Dataset& ds,
                                          const EvaluationConfig& cfg,
                                          const ImageLoader& loader = LoadDatasetImage);

// Arithmetic means of the rows; throws when there are none.
MethodAggregate AggregateRows(const std::string& method, const std::vector<SampleRow>& rows);

MethodAggregate EvaluateMethodOverSet(const std::string& method, const SegmentationModel& model,
                                      const Dataset& ds, const EvaluationConfig& cfg,
                                      std::vector<SampleRow>* rows = nullptr,
                                      const ImageLoader& loader = LoadDatasetImage);

struct RankEntry {
  std::string name;
  int wins = 0;
  double del = 0.0;
  double ins = 0.0;
};

struct Ranking {
  std::string advisable;
  std::vector<RankEntry> table;  // best first
};

// Counts, per method, the columns (EBPG, Bbox, IoU, Ins higher; Del lower)
// where it is strictly best. Most wins is advisable; ties go to lower Del,
// then higher Ins, then name.
Ranking RankMethods(const std::vector<MethodAggregate>& methods);

std::string EmitReportJson(const MetricReport& report);
std::string EmitReportMarkdown(const MetricReport& report);
MetricReport ParseReportJson(std::string_view document);

}  // namespace xedge

#endif  // XEDGE_REPORT_H_
