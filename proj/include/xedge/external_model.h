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
#ifndef XEDGE_EXTERNAL_MODEL_H_
#define XEDGE_EXTERNAL_MODEL_H_

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "xedge/model.h"

namespace xedge {

// Inference wire format, one JSON object per line (process) or per POST
// body (HTTP):
//   request  {"image": base64(float32 LE, C*H*W), "shape": [C, H, W]}
//   response {"probs": base64(float32 LE, K*H*W), "shape": [K, H, W]}
//            or {"error": "..."}
std::string EncodeInferenceRequest(const ImageTensor& img);
ImageTensor DecodeInferenceRequest(const std::string& line);
std::string EncodeInferenceResponse(const ScoreMapOutput& out);
ScoreMapOutput DecodeInferenceResponse(const std::string& line);

struct AdapterOptions {
  ModelDescriptor descriptor;
  // Apply ImageNet normalization to the raw255 form before sending.
  bool normalize = false;
  bool concurrent = false;
};

// Talks to a long-running child process over stdin/stdout. Requests are
// serialized; the adapter is exclusive.
class ProcessModelAdapter : public SegmentationModel {
 public:
  ProcessModelAdapter(std::vector<std::string> argv, AdapterOptions options);
  ~ProcessModelAdapter() override;
  ProcessModelAdapter(const ProcessModelAdapter&) = delete;
  ProcessModelAdapter& operator=(const ProcessModelAdapter&) = delete;

  const ModelDescriptor& descriptor() const override { return options_.descriptor; }
  Concurrency concurrency() const override { return Concurrency::kExclusive; }
  ScoreMapOutput Predict(const ImageTensor& img) const override;

 private:
  std::string RoundTrip(const std::string& line) const;

  AdapterOptions options_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::mutex mu_;
  mutable std::string read_buffer_;
};

// POSTs each request to an HTTP endpoint.
class HttpModelAdapter : public SegmentationModel {
 public:
  HttpModelAdapter(std::string endpoint_url, AdapterOptions options);

  const ModelDescriptor& descriptor() const override { return options_.descriptor; }
  Concurrency concurrency() const override {
    return options_.concurrent ? Concurrency::kConcurrentSafe : Concurrency::kExclusive;
  }
  ScoreMapOutput Predict(const ImageTensor& img) const override;

 private:
  std::string base_;
  std::string path_;
  AdapterOptions options_;
  mutable std::mutex mu_;
};

// Model registry file:
//   {"models": [{"id": "...", "kind": "toy" | "process" | "http",
//                "toy": "region", "command": ["python3", "serve.py"],
//                "endpoint": "http://host:port/infer", "stage": "base",
//                "channels": 3, "height": 0, "width": 0,
//                "classes": ["background", ...], "normalize": false,
//                "concurrent": false}]}
struct RegistryEntry {
  std::string id;
  std::string kind;
  std::string toy;
  std::vector<std::string> command;
  std::string endpoint;
  AdapterOptions options;
};

std::vector<RegistryEntry> ParseModelRegistry(const std::string& document);

// Resolves "toy:<name>" directly, otherwise looks the id up in the registry.
std::unique_ptr<SegmentationModel> LoadModel(const std::string& spec,
                                             const std::optional<std::filesystem::path>& registry);

}  // namespace xedge

#endif  // XEDGE_EXTERNAL_MODEL_H_
