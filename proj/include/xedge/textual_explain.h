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

#ifndef XEDGE_TEXTUAL_EXPLAIN_H_
#define XEDGE_TEXTUAL_EXPLAIN_H_

#include <chrono>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "xedge/imaging.h"

namespace xedge {

// PNG bytes of the four prompt images; absent parts are reported by name.
struct PromptImages {
  std::optional<std::string> original;
  std::optional<std::string> ground_truth;
  std::optional<std::string> segmentation;
  std::optional<std::string> explanation;
};

// Renders the prompt images of one sample: the input, the ground-truth and
// predicted masks, and the saliency preview.
PromptImages RenderPromptImages(const ImageTensor& img, const BinaryMask& gt,
                                const BinaryMask& prediction, const SaliencyMap& sal);

struct ImagePart {
  std::string name;
  std::string png_base64;
};

struct ExplanationRequest {
  std::string system_text;
  std::string user_text;
  std::string category;
  std::vector<ImagePart> images;  // original, ground truth, segmentation, explanation
};

// The system message: role, input structure, step-by-step instruction,
// concentration guidance and answer format, in that order.
std::string SystemPromptText();

ExplanationRequest BuildPrompt(const PromptImages& images, const std::string& category);

struct LvlmConfig {
  std::string endpoint_url;
  std::string model_name = "vision-chat";
  std::string api_key;
  size_t max_image_bytes = 20u * 1024u * 1024u;
  int concurrency = 2;
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{60};
  // Response cache directory; empty disables caching.
  std::filesystem::path cache_dir;
};

// Parses {endpoint_url, model_name, max_image_bytes, concurrency, ...}; the
// key is taken from XEDGE_API_KEY.
LvlmConfig ParseLvlmConfig(std::string_view document);

// Chat-completion body: messages [{system}, {user: text + 4 data-URL images}].
std::string EncodeChatRequest(const ExplanationRequest& req, const std::string& model_name);
std::string RequestDigest(const ExplanationRequest& req, const std::string& model_name);

struct HttpReply {
  int status = 0;  // 0 when the transport failed or timed out
  std::string body;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  // Must be safe to call concurrently.
  virtual HttpReply Post(const std::string& body) = 0;
};

// Offline backend replaying scripted replies; the last one repeats.
class MockChatBackend : public ChatBackend {
 public:
  explicit MockChatBackend(std::vector<HttpReply> script) : script_(std::move(script)) {}
  // Always answers with a completion whose content is `text`.
  static MockChatBackend Echo(const std::string& text);
  static std::string CompletionBody(const std::string& text);

  HttpReply Post(const std::string& body) override;
  int calls() const;
  std::string last_body() const;

 private:
  mutable std::mutex mu_;
  std::vector<HttpReply> script_;
  int calls_ = 0;
  std::string last_body_;
};

class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(LvlmConfig cfg) : cfg_(std::move(cfg)) {}
  HttpReply Post(const std::string& body) override;

 private:
  LvlmConfig cfg_;
};

struct LvlmResponse {
  std::string text;
  nlohmann::json usage;
  double latency_ms = 0.0;
  int attempts = 0;
  bool cached = false;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

// Sends the request, retrying transport failures, 429 and 5xx replies with
// exponential backoff. Oversized images fail before any network call.
LvlmResponse RequestExplanation(const ExplanationRequest& req, ChatBackend& backend,
                                const LvlmConfig& cfg, const Sleeper& sleep = {});

// Runs requests with at most cfg.concurrency in flight; results keep order.
std::vector<LvlmResponse> RequestExplanations(const std::vector<ExplanationRequest>& reqs,
                                              ChatBackend& backend, const LvlmConfig& cfg,
                                              const Sleeper& sleep = {});

}  // namespace xedge

#endif  // XEDGE_TEXTUAL_EXPLAIN_H_
