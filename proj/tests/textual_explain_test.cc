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

#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <json.hpp>

#include "test_util.h"
#include "xedge/artifact_io.h"
#include "xedge/error.h"

namespace xedge {
namespace {

using nlohmann::json;

PromptImages SampleImages(int h = 8, int w = 8) {
  Rng rng(1);
  const ImageTensor img = testing::RandomImage(rng, 3, h, w);
  const BinaryMask gt = testing::RandomMask(rng, h, w);
  const BinaryMask pred = testing::RandomMask(rng, h, w);
  std::vector<float> v(static_cast<size_t>(h) * w);
  for (float& x : v) x = static_cast<float>(rng.Uniform01());
  return RenderPromptImages(img, gt, pred, SaliencyMap(1, h, w, v));
}

LvlmConfig NoWaitConfig() {
  LvlmConfig cfg;
  cfg.initial_backoff = std::chrono::milliseconds(0);
  return cfg;
}

TEST(PromptTest, SystemSectionsAppearInOrder) {
  const std::string s = SystemPromptText();
  size_t last = 0;
  for (const char* marker : {"XAI expert", "Input structure", "Think step-by-step",
                             "concentrated", "Answer format"}) {
    const size_t at = s.find(marker);
    ASSERT_NE(at, std::string::npos) << marker;
    EXPECT_GE(at, last) << marker;
    last = at;
  }
}

TEST(PromptTest, CompleteBundleGivesFourDecodableImages) {
  const ExplanationRequest req = BuildPrompt(SampleImages(), "cable");
  EXPECT_NE(req.system_text.find("XAI expert"), std::string::npos);
  EXPECT_NE(req.user_text.find("cable"), std::string::npos);
  ASSERT_EQ(req.images.size(), 4u);
  const std::vector<std::string> names = {"original", "ground_truth", "segmentation",
                                          "explanation"};
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(req.images[i].name, names[i]);
    int h = 0, w = 0;
    PngDimensions(Base64Decode(req.images[i].png_base64), &h, &w);
    EXPECT_EQ(h, 8);
    EXPECT_EQ(w, 8);
  }
}

TEST(PromptTest, MissingPartIsNamed) {
  PromptImages images = SampleImages();
  images.explanation.reset();
  try {
    BuildPrompt(images, "cable");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("explanation"), std::string::npos) << e.what();
  }
}

TEST(PromptTest, DimensionMismatchAndEmptyCategory) {
  PromptImages images = SampleImages();
  images.segmentation = SampleImages(8, 9).segmentation;
  EXPECT_THROW(BuildPrompt(images, "cable"), Error);
  EXPECT_THROW(BuildPrompt(SampleImages(), ""), Error);
}

TEST(PromptTest, RequestBytesAreDeterministic) {
  const std::string a = EncodeChatRequest(BuildPrompt(SampleImages(), "tower"), "m");
  const std::string b = EncodeChatRequest(BuildPrompt(SampleImages(), "tower"), "m");
  EXPECT_EQ(a, b);
  const json j = json::parse(a);
  EXPECT_EQ(j["model"], "m");
  ASSERT_EQ(j["messages"].size(), 2u);
  EXPECT_EQ(j["messages"][0]["role"], "system");
  int image_parts = 0;
  for (const auto& part : j["messages"][1]["content"]) {
    if (part["type"] == "image_url") {
      ++image_parts;
      EXPECT_EQ(part["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0), 0u);
    }
  }
  EXPECT_EQ(image_parts, 4);
}

TEST(RequestTest, MockEchoRoundTrip) {
  MockChatBackend mock = MockChatBackend::Echo("MOST focused: tower body");
  const LvlmResponse r = RequestExplanation(BuildPrompt(SampleImages(), "tower"), mock,
                                            NoWaitConfig());
  EXPECT_EQ(r.text, "MOST focused: tower body");
  EXPECT_EQ(r.attempts, 1);
  EXPECT_EQ(mock.calls(), 1);
}

TEST(RequestTest, ServerErrorThriceIsBackendError) {
  MockChatBackend mock({{500, "boom"}});
  std::vector<std::chrono::milliseconds> waits;
  LvlmConfig cfg;
  try {
    RequestExplanation(BuildPrompt(SampleImages(), "tower"), mock, cfg,
                       [&](std::chrono::milliseconds d) { waits.push_back(d); });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBackend);
  }
  EXPECT_EQ(mock.calls(), 3);
  ASSERT_EQ(waits.size(), 2u);
  EXPECT_EQ(waits[1], 2 * waits[0]);
}

TEST(RequestTest, TransientFailureThenSuccess) {
  MockChatBackend mock(
      {{0, ""}, {429, ""}, {200, MockChatBackend::CompletionBody("ok")}});
  const LvlmResponse r =
      RequestExplanation(BuildPrompt(SampleImages(), "tower"), mock, NoWaitConfig());
  EXPECT_EQ(r.text, "ok");
  EXPECT_EQ(r.attempts, 3);
}

TEST(RequestTest, TimeoutsExhaustedIsTimeout) {
  MockChatBackend mock({{0, ""}});
  try {
    RequestExplanation(BuildPrompt(SampleImages(), "tower"), mock, NoWaitConfig());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
  }
}

TEST(RequestTest, AuthFailureIsNotRetried) {
  MockChatBackend mock({{401, "no"}});
  try {
    RequestExplanation(BuildPrompt(SampleImages(), "tower"), mock, NoWaitConfig());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAuth);
  }
  EXPECT_EQ(mock.calls(), 1);
}

TEST(RequestTest, OversizedImageFailsBeforeTheNetwork) {
  ExplanationRequest req = BuildPrompt(SampleImages(), "tower");
  req.images[1].png_base64 = Base64Encode(std::string(21u * 1024u * 1024u, 'x'));
  MockChatBackend mock = MockChatBackend::Echo("unused");
  try {
    RequestExplanation(req, mock, NoWaitConfig());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPayloadTooLarge);
  }
  EXPECT_EQ(mock.calls(), 0);
}

TEST(RequestTest, CacheServesRepeatedRequests) {
  testing::TempDir dir;
  LvlmConfig cfg = NoWaitConfig();
  cfg.cache_dir = dir.path();
  MockChatBackend mock = MockChatBackend::Echo("cached text");
  const ExplanationRequest req = BuildPrompt(SampleImages(), "tower");
  EXPECT_FALSE(RequestExplanation(req, mock, cfg).cached);
  const LvlmResponse again = RequestExplanation(req, mock, cfg);
  EXPECT_TRUE(again.cached);
  EXPECT_EQ(again.text, "cached text");
  EXPECT_EQ(mock.calls(), 1);
}

TEST(RequestTest, BatchSendsEveryRequest) {
  MockChatBackend mock = MockChatBackend::Echo("x");
  std::vector<ExplanationRequest> reqs;
  for (const char* cat : {"a", "b", "c", "d", "e"}) reqs.push_back(BuildPrompt(SampleImages(), cat));
  const auto out = RequestExplanations(reqs, mock, NoWaitConfig());
  ASSERT_EQ(out.size(), 5u);
  EXPECT_EQ(mock.calls(), 5);
}

TEST(ConfigTest, ParsesFieldsAndKeyFromEnvironment) {
  setenv("XEDGE_API_KEY", "secret", 1);
  const LvlmConfig cfg = ParseLvlmConfig(
      R"({"endpoint_url": "http://x/v1/chat", "model_name": "m", "concurrency": 4,
          "max_image_bytes": 1000})");
  unsetenv("XEDGE_API_KEY");
  EXPECT_EQ(cfg.endpoint_url, "http://x/v1/chat");
  EXPECT_EQ(cfg.model_name, "m");
  EXPECT_EQ(cfg.concurrency, 4);
  EXPECT_EQ(cfg.max_image_bytes, 1000u);
  EXPECT_EQ(cfg.api_key, "secret");
  EXPECT_THROW(ParseLvlmConfig("{"), Error);
}

TEST(HttpBackendTest, SendsBearerAndParsesCompletion) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth;
  server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    seen_auth = req.get_header_value("Authorization");
    res.set_content(MockChatBackend::CompletionBody("served"), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  LvlmConfig cfg = NoWaitConfig();
  cfg.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
  cfg.api_key = "k1";
  HttpChatBackend backend(cfg);
  const LvlmResponse r = RequestExplanation(BuildPrompt(SampleImages(), "tower"), backend, cfg);
  server.stop();
  thread.join();
  EXPECT_EQ(r.text, "served");
  EXPECT_EQ(r.attempts, 2);
  EXPECT_EQ(seen_auth, "Bearer k1");
}

}  // namespace
}  // namespace xedge
