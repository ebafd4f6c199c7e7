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

// Command-line entry point: explain, eval-xai, rank, augment, seg-eval,
// serve and text-explain.

#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "xedge/artifact_io.h"
#include "xedge/augment.h"
#include "xedge/dataset.h"
#include "xedge/error.h"
#include "xedge/explainers.h"
#include "xedge/external_model.h"
#include "xedge/metrics.h"
#include "xedge/parallel.h"
#include "xedge/report.h"
#include "xedge/review_http.h"
#include "xedge/review_service.h"
#include "xedge/textual_explain.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace xedge {
namespace {

struct GlobalFlags {
  std::string dataset;
  std::string models;
  std::string out = "out";
  uint64_t seed = 42;
  int jobs = 0;
  std::string format = "text";
  std::string created_at;
};

struct RiseFlags {
  int masks = 4000;
  int grid = 7;
  double keep_prob = 0.5;
  int batch = 32;
};

void AddRiseFlags(CLI::App* cmd, RiseFlags& f) {
  cmd->add_option("--masks", f.masks, "RISE mask count")->check(CLI::PositiveNumber);
  cmd->add_option("--grid", f.grid, "RISE grid size")->check(CLI::PositiveNumber);
  cmd->add_option("--keep-prob", f.keep_prob, "RISE cell keep probability")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--batch", f.batch, "RISE forward batch")->check(CLI::PositiveNumber);
}

RiseConfig MakeRise(const GlobalFlags& g, const RiseFlags& f) {
  RiseConfig cfg;
  cfg.n_masks = f.masks;
  cfg.grid = f.grid;
  cfg.keep_prob = f.keep_prob;
  cfg.batch = f.batch;
  cfg.seed = g.seed;
  cfg.jobs = ResolveJobs(g.jobs);
  return cfg;
}

Dataset RequireDataset(const GlobalFlags& g) {
  if (g.dataset.empty()) throw CLI::ValidationError("--dataset", "this command needs --dataset");
  return LoadDataset(g.dataset);
}

std::optional<fs::path> Registry(const GlobalFlags& g) {
  if (g.models.empty()) return std::nullopt;
  return fs::path(g.models);
}

// Fixed creation stamp so reports are reproducible: flag, then
// SOURCE_DATE_EPOCH, then the Unix epoch.
std::string CreatedAt(const GlobalFlags& g) {
  if (!g.created_at.empty()) return g.created_at;
  std::time_t t = 0;
  if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) t = std::strtoll(env, nullptr, 10);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void Emit(const GlobalFlags& g, const json& summary, const std::string& text) {
  if (g.format == "json") {
    std::cout << summary.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// --- explain ---------------------------------------------------------------

struct ExplainFlags {
  std::string method = "rise";
  std::string model;
  int64_t sample = 0;
  std::vector<int64_t> categories;
  RiseFlags rise;
};

int RunExplain(const GlobalFlags& g, const ExplainFlags& f) {
  const Dataset ds = RequireDataset(g);
  const auto model = LoadModel(f.model, Registry(g));
  const ImageInfo* info = ds.FindImage(f.sample);
  if (!info) Fail(ErrorCode::kNotFound, "unknown sample " + std::to_string(f.sample));
  const ImageTensor img = LoadDatasetImage(ds, *info);

  std::vector<int64_t> cats = f.categories;
  if (cats.empty()) {
    for (const Category& c : ds.LabelCategories()) {
      const int64_t id = c.id;
      if (!BuildCategoryMask(ds, f.sample, id).Empty()) cats.push_back(id);
    }
  }
  json written = json::array();
  std::string text;
  for (int64_t cat_id : cats) {
    const Category* cat = ds.FindCategory(cat_id);
    if (!cat) Fail(ErrorCode::kNotFound, "unknown category " + std::to_string(cat_id));
    const int cls = ResolveClassIndex(model->descriptor(), cat_id, cat->name);
    ExplainResult result;
    if (f.method == "rise") {
      RiseConfig cfg = MakeRise(g, f.rise);
      cfg.height = img.height();
      cfg.width = img.width();
      result = ExplainRise(*model, img, static_cast<int>(cat_id), cls, cfg);
    } else if (f.method == "gradcam") {
      result = ExplainGradCam(*model, img, static_cast<int>(cat_id), cls);
    } else {
      throw CLI::ValidationError("--method", "unknown method '" + f.method + "'");
    }
    const fs::path stem = fs::path(g.out) / "saliency" /
                          (std::to_string(f.sample) + "_" + std::to_string(cat_id) + "_" +
                           f.method);
    SaliencySidecar sidecar;
    sidecar.category = static_cast<int>(cat_id);
    sidecar.height = img.height();
    sidecar.width = img.width();
    sidecar.method = result.method;
    sidecar.seed = result.seed;
    sidecar.model_id = model->descriptor().model_id;
    sidecar.config_digest = result.config_digest;
    WriteSaliencyArtifact(stem, result.saliency, sidecar);
    written.push_back({{"category_id", cat_id}, {"artifact", stem.string() + ".f32"}});
    text += "wrote " + stem.string() + ".{f32,json,png}\n";
  }
  Emit(g, {{"sample", f.sample}, {"method", f.method}, {"artifacts", written}}, text);
  return 0;
}

// --- eval-xai --------------------------------------------------------------

struct EvalFlags {
  std::string methods = "rise";
  std::string model;
  std::string split = "val";
  double train_fraction = 0.8;
  int resize = 0;
  int64_t steps = 0;
  int64_t pixels_per_step = 0;
  double blur_sigma = 5.0;
  std::string region = "frozen";
  RiseFlags rise;
};

int RunEvalXai(const GlobalFlags& g, const EvalFlags& f) {
  const Dataset full = RequireDataset(g);
  Dataset ds = full;
  if (f.split != "all") {
    const auto [train, val] = SplitDataset(full, {f.train_fraction, g.seed});
    ds = f.split == "train" ? train : val;
  }
  if (ds.images.empty()) Fail(ErrorCode::kInvalidArgument, "the " + f.split + " split is empty");
  const auto model = LoadModel(f.model, Registry(g));

  EvaluationConfig cfg;
  cfg.rise = MakeRise(g, f.rise);
  cfg.faithfulness.steps = f.steps;
  cfg.faithfulness.pixels_per_step = f.pixels_per_step;
  cfg.faithfulness.blur_sigma = f.blur_sigma;
  cfg.faithfulness.region =
      f.region == "whole" ? TargetRegionPolicy::kWholeImage : TargetRegionPolicy::kFrozenArgmax;
  cfg.resize = f.resize;
  cfg.jobs = ResolveJobs(g.jobs);

  MetricReport report;
  for (const std::string& method : SplitList(f.methods)) {
    std::vector<SampleRow> rows;
    MethodAggregate agg = EvaluateMethodOverSet(method, *model, ds, cfg, &rows);
    agg.name = method == "rise" ? "RISE" : method == "gradcam" ? "GradCAM" : method;
    for (SampleRow& row : rows) row.method = agg.name;
    report.methods.push_back(agg);
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  if (report.methods.empty()) throw CLI::ValidationError("--methods", "no methods given");
  report.advisable = RankMethods(report.methods).advisable;
  report.dataset_digest = DatasetDigest(ds);
  report.created_at = CreatedAt(g);

  const fs::path out(g.out);
  WriteFile(out / "report.json", EmitReportJson(report));
  WriteFile(out / "report.md", EmitReportMarkdown(report));
  Emit(g, json::parse(EmitReportJson(report)),
       EmitReportMarkdown(report) + "\nwrote " + (out / "report.json").string() + "\n");
  return 0;
}

// --- rank ------------------------------------------------------------------

int RunRank(const GlobalFlags& g, const std::string& report_path) {
  const MetricReport report = ParseReportJson(ReadFile(report_path));
  const Ranking ranking = RankMethods(report.methods);
  json table = json::array();
  std::string text = "advisable: " + ranking.advisable + "\n";
  for (const RankEntry& e : ranking.table) {
    table.push_back({{"name", e.name}, {"wins", e.wins}});
    text += "  " + e.name + "  wins=" + std::to_string(e.wins) + "\n";
  }
  Emit(g, {{"advisable", ranking.advisable}, {"ranking", table}}, text);
  return 0;
}

// --- augment ---------------------------------------------------------------

struct AugmentFlags {
  std::string plan;
  std::string decisions;
  std::vector<int64_t> enlarge;
  int radius = 2;
  int thin_threshold = kDefaultThinThreshold;
};

int RunAugment(const GlobalFlags& g, const AugmentFlags& f) {
  const Dataset ds = RequireDataset(g);
  const int modes = !f.plan.empty() + !f.decisions.empty() + !f.enlarge.empty();
  if (modes != 1) {
    throw CLI::ValidationError("augment", "give exactly one of --plan, --decisions, --enlarge");
  }
  const fs::path out(g.out);
  Dataset result;
  if (!f.plan.empty()) {
    AugmentationPlan plan = ParseAugmentationPlan(ReadFile(f.plan));
    plan.seed = g.seed;
    result = AugmentDatasetImages(ds, plan, out, LoadDatasetImage, ResolveJobs(g.jobs));
  } else if (!f.decisions.empty()) {
    if (!fs::exists(f.decisions)) Fail(ErrorCode::kNotFound, "no decision log " + f.decisions);
    const DecisionLog log(f.decisions);
    result = ReplayDecisions(ds, log.Entries());
  } else {
    result = EnlargeAnnotations(ds, f.enlarge, f.radius, f.thin_threshold);
  }
  if (f.plan.empty()) result.image_root = ds.image_root;
  std::string doc = WriteDataset(result);
  if (f.plan.empty()) {
    // Keep image paths resolvable from the output directory.
    json j = json::parse(doc);
    for (auto& img : j["images"]) {
      const fs::path abs = fs::absolute(ds.image_root / img["file_name"].get<std::string>());
      img["file_name"] = abs.lexically_normal().lexically_relative(fs::absolute(out)).string();
    }
    doc = j.dump(2) + "\n";
  }
  WriteFile(out / "dataset.json", doc);
  const std::string digest = DatasetDigest(result);
  Emit(g, {{"dataset", (out / "dataset.json").string()}, {"digest", digest}},
       "wrote " + (out / "dataset.json").string() + "\ndigest: " + digest + "\n");
  return 0;
}

// --- seg-eval --------------------------------------------------------------

struct SegEvalFlags {
  std::string pred;
  std::string gt;
  std::vector<int32_t> categories;
  std::optional<int32_t> void_label;
};

int RunSegEval(const GlobalFlags& g, const SegEvalFlags& f) {
  const LabelMap pred = LoadLabelMap(f.pred);
  const LabelMap gt = LoadLabelMap(f.gt);
  if (pred.height != gt.height || pred.width != gt.width) {
    Fail(ErrorCode::kInvalidArgument, "prediction and ground truth sizes differ");
  }
  std::vector<int32_t> cats = f.categories;
  std::optional<int32_t> void_label = f.void_label;
  if (cats.empty()) {
    const Dataset ds = RequireDataset(g);
    for (const Category& c : ds.LabelCategories()) cats.push_back(static_cast<int32_t>(c.id));
    if (!void_label) {
      if (auto v = ds.VoidCategoryId()) void_label = static_cast<int32_t>(*v);
    }
  }
  const SegmentationIouResult r = SegmentationIou(pred.labels, gt.labels, cats, void_label);
  json per_class = json::object();
  std::ostringstream text;
  text << "| Class | IoU (%) |\n|---|---|\n";
  char buf[64];
  for (const auto& [cls, iou] : r.per_class) {
    std::snprintf(buf, sizeof(buf), "%.2f", iou);
    per_class[std::to_string(cls)] = std::stod(buf);
    text << "| " << cls << " | " << buf << " |\n";
  }
  std::snprintf(buf, sizeof(buf), "%.2f", r.miou);
  text << "| mIoU | " << buf << " |\n";
  const json summary = {{"per_class", per_class}, {"miou", std::stod(buf)}};
  WriteFile(fs::path(g.out) / "seg_eval.json", summary.dump(2) + "\n");
  Emit(g, summary, text.str());
  return 0;
}

// --- serve -----------------------------------------------------------------

struct ServeFlags {
  std::string model;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string token;
  std::string report;
  RiseFlags rise;
};

int RunServe(const GlobalFlags& g, const ServeFlags& f) {
  Dataset ds = RequireDataset(g);
  std::shared_ptr<const SegmentationModel> model = LoadModel(f.model, Registry(g));
  ReviewServiceOptions opts;
  opts.root = fs::path(g.out) / "review";
  opts.split = {0.8, g.seed};
  if (!f.report.empty()) opts.initial_report = json::parse(ReadFile(f.report));
  ReviewService service(std::move(ds), MakeBundleGenerator(model, MakeRise(g, f.rise)),
                        std::move(opts));
  HttpServerOptions http;
  http.host = f.host;
  http.port = f.port;
  http.token = f.token;
  ReviewHttpServer server(service, http);
  std::cerr << "serving on http://" << f.host << ":" << f.port << "\n";
  server.Run();
  return 0;
}

// --- text-explain ----------------------------------------------------------

struct TextFlags {
  std::string model;
  int64_t sample = 0;
  int64_t category = 0;
  std::string config;
  std::optional<std::string> mock;
  RiseFlags rise;
};

int RunTextExplain(const GlobalFlags& g, const TextFlags& f) {
  const Dataset ds = RequireDataset(g);
  const auto model = LoadModel(f.model, Registry(g));
  const ImageInfo* info = ds.FindImage(f.sample);
  if (!info) Fail(ErrorCode::kNotFound, "unknown sample " + std::to_string(f.sample));
  const Category* cat = ds.FindCategory(f.category);
  if (!cat) Fail(ErrorCode::kNotFound, "unknown category " + std::to_string(f.category));
  if (!f.mock && f.config.empty()) {
    throw CLI::ValidationError("text-explain", "give --config or --mock");
  }

  const ImageTensor img = LoadDatasetImage(ds, *info);
  const int cls = ResolveClassIndex(model->descriptor(), cat->id, cat->name);
  RiseConfig rise = MakeRise(g, f.rise);
  rise.height = img.height();
  rise.width = img.width();
  const SaliencyMap sal = ExplainRise(*model, img, static_cast<int>(cat->id), cls, rise).saliency;
  const BinaryMask gt = BuildCategoryMask(ds, f.sample, cat->id);
  const BinaryMask pred = ArgmaxRegion(PredictScores(*model, img), cls);
  const ExplanationRequest req = BuildPrompt(RenderPromptImages(img, gt, pred, sal), cat->name);

  LvlmConfig cfg = f.config.empty() ? LvlmConfig{} : ParseLvlmConfig(ReadFile(f.config));
  if (f.config.empty()) {
    if (const char* key = std::getenv("XEDGE_API_KEY")) cfg.api_key = key;
  }
  std::unique_ptr<ChatBackend> backend;
  if (f.mock) {
    backend = std::make_unique<MockChatBackend>(
        std::vector<HttpReply>{{200, MockChatBackend::CompletionBody(*f.mock)}});
  } else {
    backend = std::make_unique<HttpChatBackend>(cfg);
  }
  const LvlmResponse resp = RequestExplanation(req, *backend, cfg);
  const fs::path out = fs::path(g.out) / "text";
  const std::string stem = std::to_string(f.sample) + "_" + std::to_string(cat->id);
  WriteFile(out / (stem + ".txt"), resp.text + "\n");
  WriteFile(out / (stem + ".request.json"), EncodeChatRequest(req, cfg.model_name) + "\n");
  Emit(g,
       {{"sample", f.sample}, {"category", cat->name}, {"text", resp.text},
        {"request_digest", RequestDigest(req, cfg.model_name)}},
       resp.text + "\n");
  return 0;
}

int Main(int argc, char** argv) {
  CLI::App app{"xedge: explainable segmentation toolkit"};
  app.require_subcommand(0, 1);
  GlobalFlags g;
  app.add_option("--dataset", g.dataset, "COCO-style dataset JSON");
  app.add_option("--models", g.models, "model registry JSON");
  app.add_option("--out", g.out, "output directory");
  app.add_option("--seed", g.seed, "random seed");
  app.add_option("--jobs", g.jobs, "worker threads (0 = logical cores)");
  app.add_option("--format", g.format, "stdout format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--created-at", g.created_at, "timestamp recorded in reports");

  ExplainFlags explain;
  auto* explain_cmd = app.add_subcommand("explain", "saliency map for one sample");
  explain_cmd->add_option("--method", explain.method)->check(CLI::IsMember({"rise", "gradcam"}));
  explain_cmd->add_option("--model", explain.model)->required();
  explain_cmd->add_option("--sample", explain.sample, "image id")->required();
  explain_cmd->add_option("--category", explain.categories, "category ids")->delimiter(',');
  AddRiseFlags(explain_cmd, explain.rise);

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval-xai", "score XAI methods over a split");
  eval_cmd->add_option("--methods", eval.methods, "comma-separated: rise,gradcam");
  eval_cmd->add_option("--model", eval.model)->required();
  eval_cmd->add_option("--split", eval.split)->check(CLI::IsMember({"val", "train", "all"}));
  eval_cmd->add_option("--train-fraction", eval.train_fraction)->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--resize", eval.resize, "resize images to NxN first");
  eval_cmd->add_option("--steps", eval.steps, "faithfulness steps (0 = cover image)");
  eval_cmd->add_option("--pixels-per-step", eval.pixels_per_step, "0 = ceil(HW/100)");
  eval_cmd->add_option("--blur-sigma", eval.blur_sigma, "insertion baseline blur");
  eval_cmd->add_option("--region", eval.region)->check(CLI::IsMember({"frozen", "whole"}));
  AddRiseFlags(eval_cmd, eval.rise);

  std::string report_path;
  auto* rank_cmd = app.add_subcommand("rank", "pick the advisable method of a report");
  rank_cmd->add_option("--report", report_path)->required()->check(CLI::ExistingFile);

  AugmentFlags augment;
  auto* augment_cmd = app.add_subcommand("augment", "build an augmented dataset");
  augment_cmd->add_option("--plan", augment.plan, "augmentation plan JSON");
  augment_cmd->add_option("--decisions", augment.decisions, "decision log JSONL to replay");
  augment_cmd->add_option("--enlarge", augment.enlarge, "category ids to enlarge")
      ->delimiter(',');
  augment_cmd->add_option("--radius", augment.radius)->check(CLI::NonNegativeNumber);
  augment_cmd->add_option("--thin-threshold", augment.thin_threshold)
      ->check(CLI::NonNegativeNumber);

  SegEvalFlags seg;
  auto* seg_cmd = app.add_subcommand("seg-eval", "per-class IoU of label maps");
  seg_cmd->add_option("--pred", seg.pred)->required()->check(CLI::ExistingFile);
  seg_cmd->add_option("--gt", seg.gt)->required()->check(CLI::ExistingFile);
  seg_cmd->add_option("--categories", seg.categories, "class labels")->delimiter(',');
  seg_cmd->add_option("--void", seg.void_label, "void label");

  ServeFlags serve;
  auto* serve_cmd = app.add_subcommand("serve", "run the review service");
  serve_cmd->add_option("--model", serve.model)->required();
  serve_cmd->add_option("--host", serve.host);
  serve_cmd->add_option("--port", serve.port);
  serve_cmd->add_option("--token", serve.token, "static bearer token");
  serve_cmd->add_option("--report", serve.report, "report served until a job runs");
  AddRiseFlags(serve_cmd, serve.rise);

  TextFlags text;
  auto* text_cmd = app.add_subcommand("text-explain", "LVLM explanation of a saliency map");
  text_cmd->add_option("--model", text.model)->required();
  text_cmd->add_option("--sample", text.sample)->required();
  text_cmd->add_option("--category", text.category)->required();
  text_cmd->add_option("--config", text.config, "LVLM config JSON");
  text_cmd->add_option("--mock", text.mock, "answer with this text instead of calling out");
  AddRiseFlags(text_cmd, text.rise);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*explain_cmd) return RunExplain(g, explain);
    if (*eval_cmd) return RunEvalXai(g, eval);
    if (*rank_cmd) return RunRank(g, report_path);
    if (*augment_cmd) return RunAugment(g, augment);
    if (*seg_cmd) return RunSegEval(g, seg);
    if (*serve_cmd) return RunServe(g, serve);
    if (*text_cmd) return RunTextExplain(g, text);
  } catch (const CLI::Error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error [" << ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace
}  // namespace xedge

int main(int argc, char** argv) { return xedge::Main(argc, argv); }
