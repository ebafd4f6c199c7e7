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

#ifndef XEDGE_REVIEW_SERVICE_H_
#define XEDGE_REVIEW_SERVICE_H_

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "xedge/dataset.h"
#include "xedge/explainers.h"
#include "xedge/model.h"
#include "xedge/textual_explain.h"

namespace xedge {

// Content-addressed blobs: <root>/<sha256>.<ext>.
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path root);
  // Returns the reference "<sha256>.<ext>".
  std::string Put(std::string_view bytes, const std::string& ext);
  bool Contains(const std::string& ref) const;
  std::string Get(const std::string& ref) const;
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
};

enum class DecisionAction { kEnlarge, kAddVoid, kNote };

const char* DecisionActionName(DecisionAction action);
DecisionAction ParseDecisionAction(const std::string& name);

struct DecisionRecord {
  std::string decision_id;  // assigned by the log
  int64_t sample_id = 0;
  DecisionAction action = DecisionAction::kNote;
  // enlarge: {radius, category_ids, thin_threshold?}; add_void: {polygons:
  // [[x0, y0, x1, y1, ...], ...]}; note: {text}.
  nlohmann::json params = nlohmann::json::object();
  std::string author;
  std::string timestamp;
  std::string client_token;
};

DecisionRecord DecisionFromJson(const nlohmann::json& j);
nlohmann::json DecisionToJson(const DecisionRecord& rec);
// Schema check of the action parameters; dataset checks happen in the service.
void ValidateDecisionParams(const DecisionRecord& rec);
std::vector<Polygon> VoidPolygons(const DecisionRecord& rec);

struct DecisionAck {
  std::string decision_id;
  int64_t log_index = 0;
  std::string digest;  // chained digest of the log up to this entry
  bool operator==(const DecisionAck&) const = default;
};

nlohmann::json AckToJson(const DecisionAck& ack);

// Append-only JSONL log. Each line carries the record, its index and a
// digest chained over the previous entry. Appends are fsync'ed.
class DecisionLog {
 public:
  explicit DecisionLog(std::filesystem::path path);
  // Idempotent per client token: a repeated token returns the original ack.
  DecisionAck Append(DecisionRecord rec);
  std::vector<DecisionRecord> Entries() const;
  size_t size() const;
  std::string HeadDigest() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::vector<DecisionRecord> entries_;
  std::vector<DecisionAck> acks_;
  std::map<std::string, size_t> by_token_;
};

// Applies the augmenting decisions (enlarge, add_void) in log order.
Dataset ReplayDecisions(const Dataset& source, const std::vector<DecisionRecord>& log,
                        std::optional<int64_t> sample_scope = std::nullopt);

struct BundlePanel {
  int64_t category_id = 0;
  std::string category;
  std::string gt;                // artifact refs
  std::string prediction;
  std::string saliency;          // PNG preview
  std::string saliency_raw;      // float32 raw map
  nlohmann::json metrics = nlohmann::json::object();
  std::optional<std::string> text;
};

struct SampleBundle {
  int64_t sample_id = 0;
  std::string split;  // "train" (editable) or "val" (read-only)
  std::string image;
  std::vector<BundlePanel> panels;
};

nlohmann::json BundleToJson(const SampleBundle& bundle);

struct BundleResult {
  bool pending = false;
  int retry_after_s = 1;
  SampleBundle bundle;  // valid when !pending
};

// Computes a bundle for one sample against the given dataset.
using BundleGenerator = std::function<SampleBundle(const Dataset& ds, int64_t sample_id,
                                                   ArtifactStore& store)>;

// Default generator: prediction, RISE saliency and plausibility/Dice metrics
// for every labeled category of the sample; optional LVLM text.
BundleGenerator MakeBundleGenerator(std::shared_ptr<const SegmentationModel> model,
                                    RiseConfig rise, std::shared_ptr<ChatBackend> text_backend = {},
                                    LvlmConfig text_cfg = {});

enum class JobState { kPending, kRunning, kDone, kFailed };
const char* JobStateName(JobState state);

struct JobStatus {
  std::string job_id;
  std::string scope;  // "dataset" or "sample:<id>"
  JobState state = JobState::kPending;
  std::vector<JobState> history;
  std::string dataset_digest;
  std::string dataset_ref;
  std::string error;
};

nlohmann::json JobToJson(const JobStatus& job);

struct ReviewServiceOptions {
  std::filesystem::path root;   // log, artifacts, reports
  SplitSpec split;
  // Called by each job thread once it is running, before replay; tests use
  // it to hold a job in the running state.
  std::function<void(const std::string& job_id)> on_job_running;
  // Report served by /reports/latest until a job writes one.
  std::optional<nlohmann::json> initial_report;
};

class ReviewService {
 public:
  ReviewService(Dataset source, BundleGenerator generator, ReviewServiceOptions options);
  ~ReviewService();
  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  nlohmann::json ListSamples() const;
  // Starts generation on first request and reports pending until done.
  BundleResult GetSampleBundle(int64_t sample_id);
  DecisionAck RecordDecision(DecisionRecord rec);
  // scope: nullopt for the whole dataset, else one sample.
  std::string TriggerReevaluation(std::optional<int64_t> sample_scope);
  JobStatus GetJob(const std::string& job_id) const;
  // Blocks until the job leaves pending/running.
  JobStatus WaitJob(const std::string& job_id) const;
  // Blocks until the bundle is no longer pending.
  BundleResult WaitBundle(int64_t sample_id);
  std::optional<nlohmann::json> LatestReport() const;

  ArtifactStore& store() { return store_; }
  const DecisionLog& log() const { return log_; }
  Dataset CurrentDataset() const;
  bool IsTrainSample(int64_t sample_id) const;

 private:
  struct BundleSlot {
    enum class State { kPending, kReady, kFailed } state = State::kPending;
    SampleBundle bundle;
    std::string error;
  };

  void RunJob(const std::string& job_id, std::optional<int64_t> sample_scope);
  void StartBundle(int64_t sample_id, const Dataset& ds);

  const Dataset source_;
  BundleGenerator generator_;
  ReviewServiceOptions options_;
  ArtifactStore store_;
  DecisionLog log_;
  std::set<int64_t> train_ids_;

  mutable std::mutex mu_;
  mutable std::condition_variable cv_;
  Dataset current_;
  std::map<int64_t, BundleSlot> bundles_;
  std::map<std::string, JobStatus> jobs_;
  std::map<std::string, std::string> active_scope_;  // scope -> job id
  std::optional<nlohmann::json> latest_report_;
  int64_t next_job_ = 1;
  std::vector<std::thread> threads_;
  bool stopping_ = false;
};

}  // namespace xedge

#endif  // XEDGE_REVIEW_SERVICE_H_
