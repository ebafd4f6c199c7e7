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
#include "xedge/external_model.h"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>

#include <httplib.h>
#include <json.hpp>

#include "xedge/artifact_io.h"
#include "xedge/error.h"

namespace xedge {

using nlohmann::json;

namespace {

std::string FloatsToBase64(const std::vector<float>& values) {
  std::string raw(values.size() * 4, '\0');
  for (size_t i = 0; i < values.size(); ++i) {
    uint32_t bits = std::bit_cast<uint32_t>(values[i]);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    std::memcpy(raw.data() + 4 * i, &bits, 4);
  }
  return Base64Encode(raw);
}

std::vector<float> Base64ToFloats(const std::string& text, size_t expected) {
  const std::string raw = Base64Decode(text);
  if (raw.size() != expected * 4) {
    Fail(ErrorCode::kBackend, "payload holds " + std::to_string(raw.size()) +
                                  " bytes, shape needs " + std::to_string(expected * 4));
  }
  std::vector<float> out(expected);
  for (size_t i = 0; i < expected; ++i) {
    uint32_t bits;
    std::memcpy(&bits, raw.data() + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
    out[i] = std::bit_cast<float>(bits);
  }
  return out;
}

std::array<int, 3> ParseShape(const json& j) {
  if (!j.is_array() || j.size() != 3) Fail(ErrorCode::kBackend, "shape must be [a, b, c]");
  std::array<int, 3> s{j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
  for (int v : s) {
    if (v <= 0) Fail(ErrorCode::kBackend, "shape entries must be positive");
  }
  return s;
}

ImageTensor Preprocess(const ImageTensor& img, const AdapterOptions& options) {
  if (!options.normalize) return img;
  return NormalizeImage(ToRaw255(img), NormalizationSpec::ImageNet());
}

}  // namespace

std::string EncodeInferenceRequest(const ImageTensor& img) {
  json j = {{"image", FloatsToBase64(img.data())},
            {"shape", {img.channels(), img.height(), img.width()}}};
  return j.dump();
}

ImageTensor DecodeInferenceRequest(const std::string& line) {
  try {
    const json j = json::parse(line);
    const auto s = ParseShape(j.at("shape"));
    auto data = Base64ToFloats(j.at("image").get<std::string>(),
                               static_cast<size_t>(s[0]) * s[1] * s[2]);
    return ImageTensor(s[0], s[1], s[2], RangeTag::kNormalized, std::move(data));
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("inference request: ") + e.what());
  }
}

std::string EncodeInferenceResponse(const ScoreMapOutput& out) {
  json j = {{"probs", FloatsToBase64(out.probs)}, {"shape", {out.classes, out.height, out.width}}};
  return j.dump();
}

ScoreMapOutput DecodeInferenceResponse(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    Fail(ErrorCode::kBackend, std::string("malformed inference response: ") + e.what());
  }
  if (j.contains("error")) {
    Fail(ErrorCode::kBackend, "inference backend error: " + j["error"].dump());
  }
  try {
    const auto s = ParseShape(j.at("shape"));
    ScoreMapOutput out{s[0], s[1], s[2], {}};
    out.probs = Base64ToFloats(j.at("probs").get<std::string>(),
                               static_cast<size_t>(s[0]) * s[1] * s[2]);
    return out;
  } catch (const json::exception& e) {
    Fail(ErrorCode::kBackend, std::string("inference response: ") + e.what());
  }
}

ProcessModelAdapter::ProcessModelAdapter(std::vector<std::string> argv, AdapterOptions options)
    : options_(std::move(options)) {
  Require(!argv.empty(), "process adapter needs a command");
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
    Fail(ErrorCode::kBackend, std::string("pipe: ") + std::strerror(errno));
  }
  pid_ = fork();
  if (pid_ < 0) Fail(ErrorCode::kBackend, std::string("fork: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    std::vector<char*> args;
    for (auto& a : argv) args.push_back(a.data());
    args.push_back(nullptr);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  fcntl(to_child_, F_SETFD, FD_CLOEXEC);
  fcntl(from_child_, F_SETFD, FD_CLOEXEC);
  // A dead child must surface as EPIPE, not kill the engine.
  signal(SIGPIPE, SIG_IGN);
}

ProcessModelAdapter::~ProcessModelAdapter() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(pid_, &status, 0);
  }
}

std::string ProcessModelAdapter::RoundTrip(const std::string& line) const {
  std::lock_guard<std::mutex> lock(mu_);
  const std::string msg = line + "\n";
  size_t off = 0;
  while (off < msg.size()) {
    const ssize_t n = write(to_child_, msg.data() + off, msg.size() - off);
    if (n <= 0) Fail(ErrorCode::kBackend, "inference process closed its input");
    off += static_cast<size_t>(n);
  }
  for (;;) {
    if (auto nl = read_buffer_.find('\n'); nl != std::string::npos) {
      std::string reply = read_buffer_.substr(0, nl);
      read_buffer_.erase(0, nl + 1);
      return reply;
    }
    char buf[65536];
    const ssize_t n = read(from_child_, buf, sizeof(buf));
    if (n <= 0) Fail(ErrorCode::kBackend, "inference process exited without a response");
    read_buffer_.append(buf, static_cast<size_t>(n));
  }
}

ScoreMapOutput ProcessModelAdapter::Predict(const ImageTensor& img) const {
  return DecodeInferenceResponse(RoundTrip(EncodeInferenceRequest(Preprocess(img, options_))));
}

HttpModelAdapter::HttpModelAdapter(std::string endpoint_url, AdapterOptions options)
    : options_(std::move(options)) {
  const auto scheme_end = endpoint_url.find("://");
  Require(scheme_end != std::string::npos, "endpoint must be an http(s) URL");
  const auto path_start = endpoint_url.find('/', scheme_end + 3);
  base_ = endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_url.substr(path_start);
}

ScoreMapOutput HttpModelAdapter::Predict(const ImageTensor& img) const {
  std::unique_lock<std::mutex> lock(mu_, std::defer_lock);
  if (!options_.concurrent) lock.lock();
  httplib::Client client(base_);
  client.set_read_timeout(120, 0);
  auto res = client.Post(path_, EncodeInferenceRequest(Preprocess(img, options_)),
                         "application/json");
  if (!res) {
    Fail(ErrorCode::kBackend, "inference endpoint unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    Fail(ErrorCode::kBackend, "inference endpoint returned HTTP " + std::to_string(res->status));
  }
  return DecodeInferenceResponse(res->body);
}

std::vector<RegistryEntry> ParseModelRegistry(const std::string& document) {
  std::vector<RegistryEntry> out;
  try {
    const json doc = json::parse(document);
    for (const auto& j : doc.at("models")) {
      RegistryEntry e;
      e.id = j.at("id").get<std::string>();
      e.kind = j.at("kind").get<std::string>();
      e.toy = j.value("toy", "");
      e.command = j.value("command", std::vector<std::string>{});
      e.endpoint = j.value("endpoint", "");
      ModelDescriptor& d = e.options.descriptor;
      d.model_id = e.id;
      d.stage = ParseModelStage(j.value("stage", "base"));
      d.channels = j.value("channels", 3);
      d.height = j.value("height", 0);
      d.width = j.value("width", 0);
      d.class_names = j.value("classes", std::vector<std::string>{});
      d.num_classes = static_cast<int>(d.class_names.size());
      e.options.normalize = j.value("normalize", false);
      e.options.concurrent = j.value("concurrent", false);
      if (e.kind != "toy" && e.kind != "process" && e.kind != "http") {
        Fail(ErrorCode::kParse, "model '" + e.id + "' has unknown kind '" + e.kind + "'");
      }
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kParse, std::string("model registry: ") + e.what());
  }
  return out;
}

std::unique_ptr<SegmentationModel> LoadModel(const std::string& spec,
                                             const std::optional<std::filesystem::path>& registry) {
  if (spec.rfind("toy:", 0) == 0) return MakeToyModel(spec);
  if (!registry) {
    Fail(ErrorCode::kNotFound, "model '" + spec + "' is not a toy model and no registry was given");
  }
  for (const auto& e : ParseModelRegistry(ReadFile(*registry))) {
    if (e.id != spec) continue;
    if (e.kind == "toy") return MakeToyModel(e.toy);
    if (e.kind == "process") return std::make_unique<ProcessModelAdapter>(e.command, e.options);
    return std::make_unique<HttpModelAdapter>(e.endpoint, e.options);
  }
  Fail(ErrorCode::kNotFound, "model '" + spec + "' not found in registry");
}

}  // namespace xedge
