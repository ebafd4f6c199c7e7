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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include <json.hpp>

#include "xedge/artifact_io.h"
#include "xedge/error.h"
#include "xedge/parallel.h"

namespace xedge {

using nlohmann::json;

ImageTensor LoadDatasetImage(const Dataset& ds, const ImageInfo& info) {
  return LoadImage(ds.image_root / info.file_name);
}

BinaryMask GroundTruthMask(const Dataset& ds, const ImageInfo& info, int64_t category_id,
                           int height, int width) {
  if (height == info.height && width == info.width) {
    return BuildCategoryMask(ds, info.id, category_id);
  }
  // Scale polygons under the same half-pixel convention as the image.
  const double sy = static_cast<double>(height) / info.height;
  const double sx = static_cast<double>(width) / info.width;
  BinaryMask mask(height, width);
  for (const Annotation* ann : ds.AnnotationsFor(info.id)) {
    if (ann->is_void || ann->category_id != category_id) continue;
    for (const Polygon& poly : ann->polygons) {
      Polygon scaled;
      for (const Point& p : poly) scaled.push_back({(p.x + 0.5) * sx - 0.5, (p.y + 0.5) * sy - 0.5});
      mask = MaskUnion(mask, RasterizePolygon(scaled, height, width));
    }
  }
  return mask;
}

namespace {

SampleRow EvaluateOne(const std::string& method, const SegmentationModel& model,
                      const Dataset& ds, const ImageInfo& info, const ImageTensor& img,
                      const Category& cat, const BinaryMask& gt, const EvaluationConfig& cfg,
                      int jobs) {
  const int class_index = ResolveClassIndex(model.descriptor(), cat.id, cat.name);
  ExplainResult explained;
  if (method == "rise") {
    RiseConfig rise = cfg.rise;
    rise.height = img.height();
    rise.width = img.width();
    rise.jobs = jobs;
    explained = ExplainRise(model, img, static_cast<int>(cat.id), class_index, rise);
  } else if (method == "gradcam") {
    explained = ExplainGradCam(model, img, static_cast<int>(cat.id), class_index);
  } else {
    Fail(ErrorCode::kInvalidArgument, "unknown XAI method '" + method + "'");
  }
  SampleRow row;
  row.method = method;
  row.image_id = info.id;
  row.category_id = cat.id;
  try {
    const PlausibilityScores p = PlausibilityMetrics(explained.saliency, gt);
    row.ebpg = p.ebpg;
    row.bbox = p.bbox;
    row.iou = p.iou;
  } catch (const Error& e) {
    // A zero-energy map points at nothing.
    if (e.code() != ErrorCode::kInvalidArgument) throw;
  }
  const auto [del, ins] = FaithfulnessCurves(model, img, explained.saliency, class_index,
                                             cfg.faithfulness);
  row.del = del.auc;
  row.ins = ins.auc;
  (void)ds;
  return row;
}

}  // namespace

std::vector<SampleRow> EvaluateMethodRows(const std::string& method,
                                          const SegmentationModel& model, const Dataset& ds,
                                          const EvaluationConfig& cfg,
                                          const ImageLoader& loader) {
  if (ds.images.empty()) Fail(ErrorCode::kInvalidArgument, "evaluation set is empty");
  std::vector<ImageInfo> images = ds.images;
  std::sort(images.begin(), images.end(),
            [](const ImageInfo& a, const ImageInfo& b) { return a.id < b.id; });
  const std::vector<Category> categories = ds.LabelCategories();

  // Samples fan out only for concurrent-safe models; otherwise the
  // parallelism goes to the mask evaluations inside RISE.
  const bool fan_out = model.concurrency() == Concurrency::kConcurrentSafe;
  const int outer_jobs = fan_out ? cfg.jobs : 1;
  const int inner_jobs = fan_out ? 1 : cfg.jobs;

  std::vector<std::vector<SampleRow>> per_image(images.size());
  ParallelFor(static_cast<int64_t>(images.size()), outer_jobs, [&](int64_t i) {
    const ImageInfo& info = images[i];
    ImageTensor img = ToUnitRange(loader(ds, info));
    if (cfg.resize > 0) img = ResizeBilinear(img, cfg.resize, cfg.resize);
    for (const Category& cat : categories) {
      const BinaryMask gt = GroundTruthMask(ds, info, cat.id, img.height(), img.width());
      if (gt.Empty()) continue;
      per_image[i].push_back(EvaluateOne(method, model, ds, info, img, cat, gt, cfg, inner_jobs));
    }
  });
  std::vector<SampleRow> rows;
  for (auto& r : per_image) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

MethodAggregate AggregateRows(const std::string& method, const std::vector<SampleRow>& rows) {
  if (rows.empty()) {
    Fail(ErrorCode::kInvalidArgument,
         "method '" + method + "' has no evaluable samples (every ground truth was empty)");
  }
  MethodAggregate agg;
  agg.name = method;
  for (const SampleRow& r : rows) {
    agg.ebpg += r.ebpg;
    agg.bbox += r.bbox;
    agg.iou += r.iou;
    agg.del += r.del;
    agg.ins += r.ins;
  }
  const double n = static_cast<double>(rows.size());
  agg.ebpg = 100.0 * agg.ebpg / n;
  agg.bbox = 100.0 * agg.bbox / n;
  agg.iou = 100.0 * agg.iou / n;
  agg.del /= n;
  agg.ins /= n;
  agg.samples = static_cast<int64_t>(rows.size());
  return agg;
}

MethodAggregate EvaluateMethodOverSet(const std::string& method, const SegmentationModel& model,
                                      const Dataset& ds, const EvaluationConfig& cfg,
                                      std::vector<SampleRow>* rows, const ImageLoader& loader) {
  auto result = EvaluateMethodRows(method, model, ds, cfg, loader);
  MethodAggregate agg = AggregateRows(method, result);
  if (rows) *rows = std::move(result);
  return agg;
}

Ranking RankMethods(const std::vector<MethodAggregate>& methods) {
  if (methods.empty()) Fail(ErrorCode::kInvalidArgument, "no methods to rank");
  for (const auto& m : methods) {
    for (double v : {m.ebpg, m.bbox, m.iou, m.del, m.ins}) {
      if (!std::isfinite(v)) {
        Fail(ErrorCode::kInvalidArgument, "method '" + m.name + "' is missing a metric column");
      }
    }
  }
  struct Column {
    double MethodAggregate::*field;
    bool higher_better;
  };
  const Column columns[] = {{&MethodAggregate::ebpg, true},
                            {&MethodAggregate::bbox, true},
                            {&MethodAggregate::iou, true},
                            {&MethodAggregate::del, false},
                            {&MethodAggregate::ins, true}};
  std::vector<RankEntry> table;
  for (const auto& m : methods) table.push_back({m.name, 0, m.del, m.ins});
  for (const Column& col : columns) {
    std::optional<size_t> best;
    bool tied = false;
    for (size_t i = 0; i < methods.size(); ++i) {
      const double v = methods[i].*col.field;
      if (!best) {
        best = i;
        continue;
      }
      const double b = methods[*best].*col.field;
      if (v == b) {
        tied = true;
      } else if (col.higher_better ? v > b : v < b) {
        best = i;
        tied = false;
      }
    }
    if (!tied) ++table[*best].wins;
  }
  std::sort(table.begin(), table.end(), [](const RankEntry& a, const RankEntry& b) {
    if (a.wins != b.wins) return a.wins > b.wins;
    if (a.del != b.del) return a.del < b.del;
    if (a.ins != b.ins) return a.ins > b.ins;
    return a.name < b.name;
  });
  return Ranking{table.front().name, std::move(table)};
}

namespace {

double RoundTo(double v, int places) {
  const double scale = std::pow(10.0, places);
  return std::round(v * scale) / scale;
}

std::string Fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

std::vector<MethodAggregate> SortedMethods(const MetricReport& report) {
  auto methods = report.methods;
  std::sort(methods.begin(), methods.end(),
            [](const MethodAggregate& a, const MethodAggregate& b) { return a.name < b.name; });
  return methods;
}

}  // namespace

std::string EmitReportJson(const MetricReport& report) {
  json methods = json::array();
  for (const auto& m : SortedMethods(report)) {
    methods.push_back({{"name", m.name},
                       {"ebpg", RoundTo(m.ebpg, 2)},
                       {"bbox", RoundTo(m.bbox, 2)},
                       {"iou", RoundTo(m.iou, 2)},
                       {"del", RoundTo(m.del, 3)},
                       {"ins", RoundTo(m.ins, 3)},
                       {"samples", m.samples}});
  }
  json samples = json::array();
  for (const auto& r : report.rows) {
    samples.push_back({{"method", r.method},
                       {"image_id", r.image_id},
                       {"category_id", r.category_id},
                       {"ebpg", RoundTo(100.0 * r.ebpg, 2)},
                       {"bbox", RoundTo(100.0 * r.bbox, 2)},
                       {"iou", RoundTo(100.0 * r.iou, 2)},
                       {"del", RoundTo(r.del, 3)},
                       {"ins", RoundTo(r.ins, 3)}});
  }
  json doc = {{"methods", std::move(methods)},
              {"samples", std::move(samples)},
              {"advisable", report.advisable},
              {"dataset_digest", report.dataset_digest},
              {"created_at", report.created_at}};
  return doc.dump(2) + "\n";
}

std::string EmitReportMarkdown(const MetricReport& report) {
  const auto methods = SortedMethods(report);
  // Bold marks the strict best of each column.
  auto best_of = [&](double MethodAggregate::*field, bool higher) -> std::optional<double> {
    std::optional<double> best;
    int count = 0;
    for (const auto& m : methods) {
      const double v = RoundTo(m.*field, field == &MethodAggregate::del ||
                                                 field == &MethodAggregate::ins
                                             ? 3
                                             : 2);
      if (!best || (higher ? v > *best : v < *best)) {
        best = v;
        count = 1;
      } else if (v == *best) {
        ++count;
      }
    }
    if (count != 1) return std::nullopt;
    return best;
  };
  const auto b_ebpg = best_of(&MethodAggregate::ebpg, true);
  const auto b_bbox = best_of(&MethodAggregate::bbox, true);
  const auto b_iou = best_of(&MethodAggregate::iou, true);
  const auto b_del = best_of(&MethodAggregate::del, false);
  const auto b_ins = best_of(&MethodAggregate::ins, true);
  auto cell = [](double v, int places, const std::optional<double>& best) {
    const std::string s = Fixed(v, places);
    return best && RoundTo(v, places) == *best ? "**" + s + "**" : s;
  };

  std::string out = "| Method | EBPG (%) ↑ | BBox (%) ↑ | IoU (%) ↑ | Del ↓ | Ins ↑ |\n";
  out += "|---|---:|---:|---:|---:|---:|\n";
  for (const auto& m : methods) {
    out += "| " + m.name + " | " + cell(m.ebpg, 2, b_ebpg) + " | " + cell(m.bbox, 2, b_bbox) +
           " | " + cell(m.iou, 2, b_iou) + " | " + cell(m.del, 3, b_del) + " | " +
           cell(m.ins, 3, b_ins) + " |\n";
  }
  out += "\nAdvisable method: " + report.advisable + "\n";
  out += "Dataset digest: " + report.dataset_digest + "\n";
  return out;
}

MetricReport ParseReportJson(std::string_view document) {
  MetricReport report;
  try {
    const json doc = json::parse(document);
    for (const auto& j : doc.at("methods")) {
      MethodAggregate m;
      m.name = j.at("name").get<std::string>();
      auto metric = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number()) {
          Fail(ErrorCode::kInvalidArgument,
               "method '" + m.name + "' is missing metric column '" + key + "'");
        }
        return j[key].get<double>();
      };
      m.ebpg = metric("ebpg");
      m.bbox = metric("bbox");
      m.iou = metric("iou");
      m.del = metric("del");
      m.ins = metric("ins");
      m.samples = j.value("samples", int64_t{0});
      report.methods.push_back(std::move(m));
    }
    if (doc.contains("samples")) {
      for (const auto& j : doc["samples"]) {
        SampleRow r;
        r.method = j.at("method").get<std::string>();
        r.image_id = j.at("image_id").get<int64_t>();
        r.category_id = j.at("category_id").get<int64_t>();
        r.ebpg = j.at("ebpg").get<double>() / 100.0;
        r.bbox = j.at("bbox").get<double>() / 100.0;
        r.iou = j.at("iou").get<double>() / 100.0;
        r.del = j.at("del").get<double>();
        r.ins = j.at("ins").get<double>();
        report.rows.push_back(std::move(r));
      }
    }
    report.advisable = doc.value("advisable", "");
    report.dataset_digest = doc.value("dataset_digest", "");
    report.created_at = doc.value("created_at", "");
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("report JSON: ") + e.what());
  }
  return report;
}

}  // namespace xedge
