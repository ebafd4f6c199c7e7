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

#include "xedge/textual_explain.h"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "xedge/artifact_io.h"
#include "xedge/error.h"
#include "xedge/parallel.h"

namespace xedge {

using nlohmann::json;

PromptImages RenderPromptImages(const ImageTensor& img, const BinaryMask& gt,
                                const BinaryMask& prediction, const SaliencyMap& sal) {
  PromptImages out;
  out.original = EncodePng(img.range() == RangeTag::kNormalized ? ToRaw255(img) : img);
  out.ground_truth = EncodeMaskPng(gt);
  out.segmentation = EncodeMaskPng(prediction);
  out.explanation = EncodeSaliencyPreviewPng(sal);
  return out;
}

std::string SystemPromptText() {
  return "You are an XAI expert who describes saliency maps produced by explainable AI "
         "methods for a semantic segmentation model.\n"
         "\n"
         "Input structure: you receive four images of the same scene, in this order: "
         "(1) the original image, (2) the ground truth image marking the annotated object, "
         "(3) the segmentation image predicted by the model, and (4) the explanation map "
         "image, where warmer or brighter colors indicate regions of higher importance.\n"
         "\n"
         "Think step-by-step: first identify the parts of the requested category in each "
         "image, then compare the segmentation with the ground truth, then relate both to "
         "the explanation map.\n"
         "\n"
         "Describe the concentrated regions of the explanation map: state where the model "
         "focuses the most, where it focuses the least, and whether those regions lie on "
         "the object.\n"
         "\n"
         "Answer format: keep the final answer correct and simple so that an end user "
         "without machine-learning background understands it. Use short sentences, start "
         "with the most focused region, then the least focused region, and finish with a "
         "one-sentence verdict on whether the segmentation is reliable.";
}

ExplanationRequest BuildPrompt(const PromptImages& images, const std::string& category) {
  if (category.empty()) Fail(ErrorCode::kInvalidArgument, "prompt category must be nonempty");
  const std::pair<const char*, const std::optional<std::string>*> parts[] = {
      {"original", &images.original},
      {"ground_truth", &images.ground_truth},
      {"segmentation", &images.segmentation},
      {"explanation", &images.explanation},
  };
  ExplanationRequest req;
  req.system_text = SystemPromptText();
  req.category = category;
  req.user_text = "Category: " + category +
                  ". The images follow in order: original, ground truth, segmentation, "
                  "explanation map.";
  int ref_h = -1;
  int ref_w = -1;
  for (const auto& [name, png] : parts) {
    if (!png->has_value() || (*png)->empty()) {
      Fail(ErrorCode::kInvalidArgument, std::string("prompt image '") + name + "' is missing");
    }
    int h = 0;
    int w = 0;
    PngDimensions(**png, &h, &w);
    if (ref_h < 0) {
      ref_h = h;
      ref_w = w;
    } else if (h != ref_h || w != ref_w) {
      Fail(ErrorCode::kInvalidArgument,
           std::string("prompt image '") + name + "' is " + std::to_string(h) + "x" +
               std::to_string(w) + ", expected " + std::to_string(ref_h) + "x" +
               std::to_string(ref_w));
    }
    req.images.push_back({name, Base64Encode(**png)});
  }
  return req;
}

LvlmConfig ParseLvlmConfig(std::string_view document) {
  LvlmConfig cfg;
  try {
    const json j = json::parse(document);
    cfg.endpoint_url = j.value("endpoint_url", "");
    cfg.model_name = j.value("model_name", cfg.model_name);
    cfg.max_image_bytes = j.value("max_image_bytes", cfg.max_image_bytes);
    cfg.concurrency = j.value("concurrency", cfg.concurrency);
    cfg.max_attempts = j.value("max_attempts", cfg.max_attempts);
    cfg.initial_backoff = std::chrono::milliseconds(
        j.value("initial_backoff_ms", static_cast<int64_t>(cfg.initial_backoff.count())));
    cfg.timeout = std::chrono::seconds(
        j.value("timeout_s", static_cast<int64_t>(cfg.timeout.count())));
    cfg.cache_dir = j.value("cache_dir", "");
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("LVLM config: ") + e.what());
  }
  Require(cfg.concurrency >= 1, "LVLM concurrency must be >= 1");
  Require(cfg.max_attempts >= 1, "LVLM max_attempts must be >= 1");
  if (const char* key = std::getenv("XEDGE_API_KEY")) cfg.api_key = key;
  return cfg;
}

std::string EncodeChatRequest(const ExplanationRequest& req, const std::string& model_name) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", req.user_text}});
  for (const ImagePart& part : req.images) {
    content.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + part.png_base64}}}});
  }
  json body = {{"model", model_name},
               {"messages",
                json::array({{{"role", "system"}, {"content", req.system_text}},
                             {{"role", "user"}, {"content", std::move(content)}}})}};
  return body.dump();
}

std::string RequestDigest(const ExplanationRequest& req, const std::string& model_name) {
  return Sha256Hex(EncodeChatRequest(req, model_name));
}

MockChatBackend MockChatBackend::Echo(const std::string& text) {
  return MockChatBackend({{200, CompletionBody(text)}});
}

std::string MockChatBackend::CompletionBody(const std::string& text) {
  json body = {{"choices", json::array({{{"index", 0},
                                         {"message", {{"role", "assistant"}, {"content", text}}}}})},
               {"usage", {{"prompt_tokens", 0}, {"completion_tokens", 0}}}};
  return body.dump();
}

HttpReply MockChatBackend::Post(const std::string& body) {
  std::lock_guard<std::mutex> lock(mu_);
  last_body_ = body;
  if (script_.empty()) return {0, ""};
  const size_t i = std::min<size_t>(calls_, script_.size() - 1);
  ++calls_;
  return script_[i];
}

int MockChatBackend::calls() const {
  std::lock_guard<std::mutex> lock(mu_);
  return calls_;
}

std::string MockChatBackend::last_body() const {
  std::lock_guard<std::mutex> lock(mu_);
  return last_body_;
}

HttpReply HttpChatBackend::Post(const std::string& body) {
  // Split "scheme://host[:port]/path".
  const std::string& url = cfg_.endpoint_url;
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    Fail(ErrorCode::kInvalidArgument, "LVLM endpoint must be an absolute URL: " + url);
  }
  const size_t path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  httplib::Client client(origin);
  client.set_connection_timeout(cfg_.timeout);
  client.set_read_timeout(cfg_.timeout);
  client.set_write_timeout(cfg_.timeout);
  httplib::Headers headers;
  if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) return {0, httplib::to_string(res.error())};
  return {res->status, res->body};
}

namespace {

std::string ExtractContent(const std::string& body) {
  try {
    const json j = json::parse(body);
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string text;
    for (const auto& part : content) {
      if (part.value("type", "") == "text") text += part.value("text", "");
    }
    return text;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kBackend, std::string("malformed chat completion: ") + e.what());
  }
}

bool Retryable(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

LvlmResponse RequestExplanation(const ExplanationRequest& req, ChatBackend& backend,
                                const LvlmConfig& cfg, const Sleeper& sleep) {
  Require(req.images.size() == 4, "explanation request needs exactly four images");
  for (const ImagePart& part : req.images) {
    // Decoded size from the base64 length, without decoding.
    const size_t bytes = part.png_base64.size() / 4 * 3;
    if (bytes > cfg.max_image_bytes) {
      Fail(ErrorCode::kPayloadTooLarge, "image '" + part.name + "' is " + std::to_string(bytes) +
                                            " bytes, over the " +
                                            std::to_string(cfg.max_image_bytes) + " byte cap");
    }
  }
  const std::string body = EncodeChatRequest(req, cfg.model_name);
  const std::filesystem::path cache_file =
      cfg.cache_dir.empty() ? std::filesystem::path()
                            : cfg.cache_dir / (Sha256Hex(body) + ".json");
  if (!cache_file.empty() && std::filesystem::exists(cache_file)) {
    const json cached = json::parse(ReadFile(cache_file));
    LvlmResponse out;
    out.text = cached.at("text").get<std::string>();
    out.usage = cached.value("usage", json::object());
    out.cached = true;
    return out;
  }

  const auto start = std::chrono::steady_clock::now();
  auto backoff = cfg.initial_backoff;
  HttpReply reply;
  int attempt = 0;
  while (true) {
    ++attempt;
    reply = backend.Post(body);
    if (reply.status == 401 || reply.status == 403) {
      Fail(ErrorCode::kAuth, "LVLM endpoint rejected the credentials (HTTP " +
                                 std::to_string(reply.status) + ")");
    }
    if (reply.status >= 200 && reply.status < 300) break;
    if (!Retryable(reply.status)) {
      Fail(ErrorCode::kBackend, "LVLM endpoint returned HTTP " + std::to_string(reply.status));
    }
    if (attempt >= cfg.max_attempts) {
      if (reply.status == 0) {
        Fail(ErrorCode::kTimeout, "LVLM endpoint unreachable after " + std::to_string(attempt) +
                                      " attempts: " + reply.body);
      }
      Fail(ErrorCode::kBackend, "LVLM endpoint failed after " + std::to_string(attempt) +
                                    " attempts (last HTTP " + std::to_string(reply.status) + ")");
    }
    if (sleep) {
      sleep(backoff);
    } else {
      std::this_thread::sleep_for(backoff);
    }
    backoff *= 2;
  }

  LvlmResponse out;
  out.text = ExtractContent(reply.body);
  if (out.text.empty()) Fail(ErrorCode::kBackend, "LVLM returned an empty explanation");
  const json parsed = json::parse(reply.body);
  out.usage = parsed.value("usage", json::object());
  out.attempts = attempt;
  out.latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  if (!cache_file.empty()) {
    WriteFile(cache_file, json({{"text", out.text}, {"usage", out.usage}}).dump(2) + "\n");
  }
  return out;
}

std::vector<LvlmResponse> RequestExplanations(const std::vector<ExplanationRequest>& reqs,
                                              ChatBackend& backend, const LvlmConfig& cfg,
                                              const Sleeper& sleep) {
  std::vector<LvlmResponse> out(reqs.size());
  ParallelFor(static_cast<int64_t>(reqs.size()), cfg.concurrency,
              [&](int64_t i) { out[i] = RequestExplanation(reqs[i], backend, cfg, sleep); });
  return out;
}

}  // namespace xedge
