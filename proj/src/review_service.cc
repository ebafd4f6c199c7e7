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

#include "xedge/review_service.h"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>

#include "xedge/artifact_io.h"
#include "xedge/augment.h"
#include "xedge/error.h"
#include "xedge/metrics.h"
#include "xedge/report.h"

namespace xedge {

using nlohmann::json;

ArtifactStore::ArtifactStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::string ArtifactStore::Put(std::string_view bytes, const std::string& ext) {
  const std::string ref = Sha256Hex(bytes) + "." + ext;
  const auto path = root_ / ref;
  if (!std::filesystem::exists(path)) WriteFile(path, bytes);
  return ref;
}

namespace {

bool ValidRef(const std::string& ref) {
  static const std::regex kRef("[0-9a-f]{64}\\.[a-z0-9]{1,8}");
  return std::regex_match(ref, kRef);
}

}  // namespace

bool ArtifactStore::Contains(const std::string& ref) const {
  return ValidRef(ref) && std::filesystem::exists(root_ / ref);
}

std::string ArtifactStore::Get(const std::string& ref) const {
  if (!Contains(ref)) Fail(ErrorCode::kNotFound, "unknown artifact '" + ref + "'");
  return ReadFile(root_ / ref);
}

// ---------------------------------------------------------------------------

const char* DecisionActionName(DecisionAction action) {
  switch (action) {
    case DecisionAction::kEnlarge:
      return "enlarge";
    case DecisionAction::kAddVoid:
      return "add_void";
    case DecisionAction::kNote:
      return "note";
  }
  return "?";
}

DecisionAction ParseDecisionAction(const std::string& name) {
  if (name == "enlarge") return DecisionAction::kEnlarge;
  if (name == "add_void") return DecisionAction::kAddVoid;
  if (name == "note") return DecisionAction::kNote;
  Fail(ErrorCode::kInvalidArgument, "unknown decision action '" + name + "'");
}

DecisionRecord DecisionFromJson(const json& j) {
  DecisionRecord rec;
  try {
    rec.decision_id = j.value("decision_id", "");
    rec.sample_id = j.at("sample_id").get<int64_t>();
    rec.action = ParseDecisionAction(j.at("action").get<std::string>());
    rec.params = j.value("params", json::object());
    rec.author = j.value("author", "");
    rec.timestamp = j.value("timestamp", "");
    rec.client_token = j.value("client_token", "");
  } catch (const json::exception& e) {
    Fail(ErrorCode::kInvalidArgument, std::string("malformed decision: ") + e.what());
  }
  return rec;
}

json DecisionToJson(const DecisionRecord& rec) {
  return {{"decision_id", rec.decision_id}, {"sample_id", rec.sample_id},
          {"action", DecisionActionName(rec.action)}, {"params", rec.params},
          {"author", rec.author}, {"timestamp", rec.timestamp},
          {"client_token", rec.client_token}};
}

void ValidateDecisionParams(const DecisionRecord& rec) {
  Require(!rec.client_token.empty(), "decision needs a client_token");
  Require(!rec.author.empty(), "decision needs an author");
  const json& p = rec.params;
  Require(p.is_object(), "decision params must be an object");
  switch (rec.action) {
    case DecisionAction::kEnlarge: {
      Require(p.contains("radius") && p["radius"].is_number_integer() &&
                  p["radius"].get<int64_t>() >= 0,
              "enlarge needs an integer radius >= 0");
      Require(p.contains("category_ids") && p["category_ids"].is_array() &&
                  !p["category_ids"].empty(),
              "enlarge needs a nonempty category_ids array");
      for (const auto& id : p["category_ids"]) {
        Require(id.is_number_integer(), "category_ids must hold integers");
      }
      if (p.contains("thin_threshold")) {
        Require(p["thin_threshold"].is_number_integer() && p["thin_threshold"].get<int>() >= 0,
                "thin_threshold must be an integer >= 0");
      }
      break;
    }
    case DecisionAction::kAddVoid:
      VoidPolygons(rec);
      break;
    case DecisionAction::kNote:
      Require(p.contains("text") && p["text"].is_string() &&
                  !p["text"].get<std::string>().empty(),
              "note needs nonempty text");
      break;
  }
}

std::vector<Polygon> VoidPolygons(const DecisionRecord& rec) {
  const json& p = rec.params;
  Require(p.contains("polygons") && p["polygons"].is_array() && !p["polygons"].empty(),
          "add_void needs a nonempty polygons array");
  std::vector<Polygon> out;
  for (size_t i = 0; i < p["polygons"].size(); ++i) {
    const json& flat = p["polygons"][i];
    Require(flat.is_array() && flat.size() % 2 == 0,
            "polygon " + std::to_string(i) + " must be a flat [x0, y0, x1, y1, ...] array");
    if (flat.size() < 6) {
      Fail(ErrorCode::kInvalidArgument, "polygon " + std::to_string(i) + " has " +
                                            std::to_string(flat.size() / 2) +
                                            " vertices; at least 3 are needed");
    }
    Polygon poly;
    for (size_t k = 0; k < flat.size(); k += 2) {
      Require(flat[k].is_number() && flat[k + 1].is_number(), "polygon coordinates must be numbers");
      const double x = flat[k].get<double>();
      const double y = flat[k + 1].get<double>();
      Require(std::isfinite(x) && std::isfinite(y), "polygon coordinates must be finite");
      poly.push_back({x, y});
    }
    out.push_back(std::move(poly));
  }
  return out;
}

json AckToJson(const DecisionAck& ack) {
  return {{"decision_id", ack.decision_id}, {"log_index", ack.log_index}, {"digest", ack.digest}};
}

// ---------------------------------------------------------------------------

DecisionLog::DecisionLog(std::filesystem::path path) : path_(std::move(path)) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (!std::filesystem::exists(path_)) return;
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      Fail(ErrorCode::kParse, "decision log line " + std::to_string(entries_.size() + 1) +
                                  ": " + e.what());
    }
    DecisionRecord rec = DecisionFromJson(j);
    DecisionAck ack{rec.decision_id, j.at("index").get<int64_t>(), j.at("digest").get<std::string>()};
    by_token_[rec.client_token] = entries_.size();
    entries_.push_back(std::move(rec));
    acks_.push_back(std::move(ack));
  }
}

DecisionAck DecisionLog::Append(DecisionRecord rec) {
  std::lock_guard<std::mutex> lock(mu_);
  if (auto it = by_token_.find(rec.client_token); it != by_token_.end()) {
    return acks_[it->second];
  }
  const int64_t index = static_cast<int64_t>(entries_.size());
  char id[32];
  std::snprintf(id, sizeof(id), "dec-%06lld", static_cast<long long>(index));
  rec.decision_id = id;
  const std::string prev = acks_.empty() ? std::string() : acks_.back().digest;
  json entry = DecisionToJson(rec);
  entry["index"] = index;
  entry["prev_digest"] = prev;
  const std::string digest = Sha256Hex(prev + entry.dump());
  entry["digest"] = digest;
  const std::string line = entry.dump() + "\n";

  std::FILE* f = std::fopen(path_.c_str(), "ab");
  if (!f) Fail(ErrorCode::kIo, "cannot open decision log " + path_.string());
  const bool ok = std::fwrite(line.data(), 1, line.size(), f) == line.size() &&
                  std::fflush(f) == 0 && ::fsync(fileno(f)) == 0;
  std::fclose(f);
  if (!ok) Fail(ErrorCode::kIo, "cannot append to decision log " + path_.string());

  DecisionAck ack{rec.decision_id, index, digest};
  by_token_[rec.client_token] = entries_.size();
  entries_.push_back(std::move(rec));
  acks_.push_back(ack);
  return ack;
}

std::vector<DecisionRecord> DecisionLog::Entries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_;
}

size_t DecisionLog::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

std::string DecisionLog::HeadDigest() const {
  std::lock_guard<std::mutex> lock(mu_);
  return acks_.empty() ? std::string() : acks_.back().digest;
}

Dataset ReplayDecisions(const Dataset& source, const std::vector<DecisionRecord>& log,
                        std::optional<int64_t> sample_scope) {
  Dataset ds = source;
  for (const DecisionRecord& rec : log) {
    if (sample_scope && rec.sample_id != *sample_scope) continue;
    switch (rec.action) {
      case DecisionAction::kEnlarge: {
        const auto ids = rec.params.at("category_ids").get<std::vector<int64_t>>();
        ds = EnlargeAnnotations(ds, ids, rec.params.at("radius").get<int>(),
                                rec.params.value("thin_threshold", kDefaultThinThreshold),
                                std::set<int64_t>{rec.sample_id});
        break;
      }
      case DecisionAction::kAddVoid:
        ds = AddVoidAnnotation(ds, rec.sample_id, VoidPolygons(rec));
        break;
      case DecisionAction::kNote:
        break;
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------

json BundleToJson(const SampleBundle& bundle) {
  json panels = json::array();
  for (const BundlePanel& p : bundle.panels) {
    json j = {{"category_id", p.category_id}, {"category", p.category},
              {"gt", p.gt}, {"prediction", p.prediction},
              {"saliency", p.saliency}, {"saliency_raw", p.saliency_raw},
              {"metrics", p.metrics}};
    if (p.text) j["text"] = *p.text;
    panels.push_back(std::move(j));
  }
  return {{"sample_id", bundle.sample_id}, {"split", bundle.split}, {"image", bundle.image},
          {"panels", std::move(panels)}, {"status", "ready"}};
}

BundleGenerator MakeBundleGenerator(std::shared_ptr<const SegmentationModel> model,
                                    RiseConfig rise, std::shared_ptr<ChatBackend> text_backend,
                                    LvlmConfig text_cfg) {
  Require(model != nullptr, "bundle generator needs a model");
  return [model, rise, text_backend, text_cfg](const Dataset& ds, int64_t sample_id,
                                               ArtifactStore& store) {
    const ImageInfo* info = ds.FindImage(sample_id);
    if (!info) Fail(ErrorCode::kNotFound, "unknown sample " + std::to_string(sample_id));
    const ImageTensor img = LoadDatasetImage(ds, *info);
    SampleBundle bundle;
    bundle.sample_id = sample_id;
    bundle.image = store.Put(EncodePng(img), "png");
    const ScoreMapOutput scores = PredictScores(*model, img);
    const auto void_id = ds.VoidCategoryId();
    std::vector<Category> cats = ds.categories;
    std::sort(cats.begin(), cats.end(),
              [](const Category& a, const Category& b) { return a.id < b.id; });
    for (const Category& cat : cats) {
      if (void_id && cat.id == *void_id) continue;
      const BinaryMask gt = BuildCategoryMask(ds, sample_id, cat.id);
      if (gt.Empty()) continue;
      const int cls = ResolveClassIndex(model->descriptor(), cat.id, cat.name);
      const BinaryMask pred = ArgmaxRegion(scores, cls);
      RiseConfig cfg = rise;
      cfg.height = img.height();
      cfg.width = img.width();
      const SaliencyMap sal =
          ExplainRise(*model, img, static_cast<int>(cat.id), cls, cfg).saliency;

      BundlePanel panel;
      panel.category_id = cat.id;
      panel.category = cat.name;
      panel.gt = store.Put(EncodeMaskPng(gt), "png");
      panel.prediction = store.Put(EncodeMaskPng(pred), "png");
      panel.saliency = store.Put(EncodeSaliencyPreviewPng(sal), "png");
      panel.saliency_raw = store.Put(EncodeSaliencyRaw(sal), "f32");
      PlausibilityScores ps;
      try {
        ps = PlausibilityMetrics(sal, gt);
      } catch (const Error&) {
        // Zero-energy saliency scores zero plausibility.
      }
      panel.metrics = {{"ebpg", ps.ebpg}, {"iou", ps.iou}, {"bbox", ps.bbox},
                       {"dice_loss", DiceLoss(pred, gt)}};
      if (text_backend) {
        const ExplanationRequest req =
            BuildPrompt(RenderPromptImages(img, gt, pred, sal), cat.name);
        panel.text = RequestExplanation(req, *text_backend, text_cfg).text;
      }
      bundle.panels.push_back(std::move(panel));
    }
    return bundle;
  };
}

const char* JobStateName(JobState state) {
  switch (state) {
    case JobState::kPending:
      return "pending";
    case JobState::kRunning:
      return "running";
    case JobState::kDone:
      return "done";
    case JobState::kFailed:
      return "failed";
  }
  return "?";
}

json JobToJson(const JobStatus& job) {
  json history = json::array();
  for (JobState s : job.history) history.push_back(JobStateName(s));
  json j = {{"job_id", job.job_id}, {"scope", job.scope}, {"state", JobStateName(job.state)},
            {"history", std::move(history)}};
  if (!job.dataset_digest.empty()) j["dataset_digest"] = job.dataset_digest;
  if (!job.dataset_ref.empty()) j["dataset_ref"] = job.dataset_ref;
  if (!job.error.empty()) j["error"] = job.error;
  return j;
}

// ---------------------------------------------------------------------------

namespace {

std::string UtcNow() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string ScopeKey(std::optional<int64_t> sample) {
  return sample ? "sample:" + std::to_string(*sample) : std::string("dataset");
}

}  // namespace

ReviewService::ReviewService(Dataset source, BundleGenerator generator,
                             ReviewServiceOptions options)
    : source_(std::move(source)),
      generator_(std::move(generator)),
      options_(std::move(options)),
      store_(options_.root / "artifacts"),
      log_(options_.root / "decisions.jsonl") {
  source_.Validate();
  for (const ImageInfo& info : SplitDataset(source_, options_.split).first.images) {
    train_ids_.insert(info.id);
  }
  current_ = ReplayDecisions(source_, log_.Entries());
  latest_report_ = options_.initial_report;
  const auto report_path = options_.root / "reports" / "latest.json";
  if (std::filesystem::exists(report_path)) latest_report_ = json::parse(ReadFile(report_path));
}

ReviewService::~ReviewService() {
  std::vector<std::thread> threads;
  {
    std::lock_guard<std::mutex> lock(mu_);
    stopping_ = true;
    threads.swap(threads_);
  }
  for (auto& t : threads) t.join();
}

bool ReviewService::IsTrainSample(int64_t sample_id) const {
  return train_ids_.count(sample_id) > 0;
}

Dataset ReviewService::CurrentDataset() const {
  std::lock_guard<std::mutex> lock(mu_);
  return current_;
}

json ReviewService::ListSamples() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<ImageInfo> images = source_.images;
  std::sort(images.begin(), images.end(),
            [](const ImageInfo& a, const ImageInfo& b) { return a.id < b.id; });
  json samples = json::array();
  for (const ImageInfo& info : images) {
    std::string state = "none";
    if (auto it = bundles_.find(info.id); it != bundles_.end()) {
      state = it->second.state == BundleSlot::State::kReady     ? "ready"
              : it->second.state == BundleSlot::State::kPending ? "pending"
                                                                : "failed";
    }
    samples.push_back({{"id", info.id}, {"file_name", info.file_name},
                       {"split", IsTrainSample(info.id) ? "train" : "val"},
                       {"bundle", state}});
  }
  return {{"samples", std::move(samples)}};
}

void ReviewService::StartBundle(int64_t sample_id, const Dataset& ds) {
  // mu_ held by the caller.
  bundles_[sample_id] = BundleSlot{};
  threads_.emplace_back([this, sample_id, ds] {
    BundleSlot slot;
    try {
      slot.bundle = generator_(ds, sample_id, store_);
      slot.bundle.sample_id = sample_id;
      slot.bundle.split = IsTrainSample(sample_id) ? "train" : "val";
      slot.state = BundleSlot::State::kReady;
    } catch (const std::exception& e) {
      slot.state = BundleSlot::State::kFailed;
      slot.error = e.what();
    }
    std::lock_guard<std::mutex> lock(mu_);
    bundles_[sample_id] = std::move(slot);
    cv_.notify_all();
  });
}

BundleResult ReviewService::GetSampleBundle(int64_t sample_id) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!source_.FindImage(sample_id)) {
    Fail(ErrorCode::kNotFound, "unknown sample " + std::to_string(sample_id));
  }
  auto it = bundles_.find(sample_id);
  if (it == bundles_.end()) {
    StartBundle(sample_id, current_);
    return {true, 1, {}};
  }
  switch (it->second.state) {
    case BundleSlot::State::kReady:
      return {false, 0, it->second.bundle};
    case BundleSlot::State::kPending:
      return {true, 1, {}};
    case BundleSlot::State::kFailed: {
      const std::string error = it->second.error;
      // Retry on the next request.
      bundles_.erase(it);
      Fail(ErrorCode::kBackend, "bundle generation failed: " + error);
    }
  }
  return {true, 1, {}};
}

BundleResult ReviewService::WaitBundle(int64_t sample_id) {
  BundleResult first = GetSampleBundle(sample_id);
  if (!first.pending) return first;
  {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [&] {
      auto it = bundles_.find(sample_id);
      return it == bundles_.end() || it->second.state != BundleSlot::State::kPending;
    });
  }
  return GetSampleBundle(sample_id);
}

DecisionAck ReviewService::RecordDecision(DecisionRecord rec) {
  ValidateDecisionParams(rec);
  if (!source_.FindImage(rec.sample_id)) {
    Fail(ErrorCode::kNotFound, "unknown sample " + std::to_string(rec.sample_id));
  }
  if (rec.action != DecisionAction::kNote && !IsTrainSample(rec.sample_id)) {
    Fail(ErrorCode::kConflict, "sample " + std::to_string(rec.sample_id) +
                                   " belongs to the validation split and is read-only");
  }
  // Dry run against the source so replay cannot fail later.
  if (rec.action != DecisionAction::kNote) ReplayDecisions(source_, {rec});
  if (rec.timestamp.empty()) rec.timestamp = UtcNow();
  return log_.Append(std::move(rec));
}

std::string ReviewService::TriggerReevaluation(std::optional<int64_t> sample_scope) {
  if (sample_scope && !source_.FindImage(*sample_scope)) {
    Fail(ErrorCode::kNotFound, "unknown sample " + std::to_string(*sample_scope));
  }
  size_t relevant = 0;
  for (const DecisionRecord& rec : log_.Entries()) {
    if (rec.action == DecisionAction::kNote) continue;
    if (sample_scope && rec.sample_id != *sample_scope) continue;
    ++relevant;
  }
  const std::string scope = ScopeKey(sample_scope);
  if (relevant == 0) {
    Fail(ErrorCode::kInvalidArgument, "decision log has no augmenting decisions for " + scope);
  }
  std::lock_guard<std::mutex> lock(mu_);
  if (active_scope_.count(scope)) {
    Fail(ErrorCode::kConflict,
         "re-evaluation " + active_scope_[scope] + " is already active for " + scope);
  }
  const std::string job_id = "job-" + std::to_string(next_job_++);
  JobStatus job;
  job.job_id = job_id;
  job.scope = scope;
  job.history = {JobState::kPending};
  jobs_[job_id] = job;
  active_scope_[scope] = job_id;
  threads_.emplace_back([this, job_id, sample_scope] { RunJob(job_id, sample_scope); });
  return job_id;
}

void ReviewService::RunJob(const std::string& job_id, std::optional<int64_t> sample_scope) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    jobs_[job_id].state = JobState::kRunning;
    jobs_[job_id].history.push_back(JobState::kRunning);
    cv_.notify_all();
  }
  if (options_.on_job_running) options_.on_job_running(job_id);

  JobStatus result;
  Dataset full;
  std::map<int64_t, SampleBundle> refreshed;
  json report;
  try {
    const std::vector<DecisionRecord> entries = log_.Entries();
    const Dataset scoped = ReplayDecisions(source_, entries, sample_scope);
    result.dataset_ref = store_.Put(WriteDataset(scoped), "json");
    result.dataset_digest = DatasetDigest(scoped);
    full = sample_scope ? ReplayDecisions(source_, entries) : scoped;

    std::set<int64_t> affected;
    for (const DecisionRecord& rec : entries) {
      if (rec.action == DecisionAction::kNote) continue;
      if (sample_scope && rec.sample_id != *sample_scope) continue;
      affected.insert(rec.sample_id);
    }
    json samples = json::array();
    for (int64_t id : affected) {
      SampleBundle bundle = generator_(full, id, store_);
      bundle.sample_id = id;
      bundle.split = IsTrainSample(id) ? "train" : "val";
      json metrics = json::array();
      for (const BundlePanel& p : bundle.panels) {
        metrics.push_back({{"category_id", p.category_id}, {"metrics", p.metrics}});
      }
      samples.push_back({{"sample_id", id}, {"panels", std::move(metrics)}});
      refreshed[id] = std::move(bundle);
    }
    report = {{"job_id", job_id}, {"scope", ScopeKey(sample_scope)},
              {"dataset_digest", result.dataset_digest}, {"dataset_ref", result.dataset_ref},
              {"samples", std::move(samples)}};
    WriteFile(options_.root / "reports" / "latest.json", report.dump(2) + "\n");
    result.state = JobState::kDone;
  } catch (const std::exception& e) {
    result.state = JobState::kFailed;
    result.error = e.what();
  }

  std::lock_guard<std::mutex> lock(mu_);
  JobStatus& job = jobs_[job_id];
  job.state = result.state;
  job.history.push_back(result.state);
  job.error = result.error;
  job.dataset_digest = result.dataset_digest;
  job.dataset_ref = result.dataset_ref;
  if (result.state == JobState::kDone) {
    current_ = std::move(full);
    for (auto& [id, bundle] : refreshed) {
      BundleSlot slot;
      slot.state = BundleSlot::State::kReady;
      slot.bundle = std::move(bundle);
      bundles_[id] = std::move(slot);
    }
    latest_report_ = std::move(report);
  }
  active_scope_.erase(job.scope);
  cv_.notify_all();
}

JobStatus ReviewService::GetJob(const std::string& job_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) Fail(ErrorCode::kNotFound, "unknown job '" + job_id + "'");
  return it->second;
}

JobStatus ReviewService::WaitJob(const std::string& job_id) const {
  std::unique_lock<std::mutex> lock(mu_);
  if (!jobs_.count(job_id)) Fail(ErrorCode::kNotFound, "unknown job '" + job_id + "'");
  cv_.wait(lock, [&] {
    const JobState s = jobs_.at(job_id).state;
    return s == JobState::kDone || s == JobState::kFailed;
  });
  return jobs_.at(job_id);
}

std::optional<json> ReviewService::LatestReport() const {
  std::lock_guard<std::mutex> lock(mu_);
  return latest_report_;
}

}  // namespace xedge
