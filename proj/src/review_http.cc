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

#include "xedge/review_http.h"

#include <httplib.h>

namespace xedge {

using nlohmann::json;

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kParse:
      return 400;
    case ErrorCode::kAuth:
      return 401;
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
      return 409;
    case ErrorCode::kPayloadTooLarge:
      return 413;
    case ErrorCode::kUnsupported:
      return 501;
    case ErrorCode::kPending:
      return 202;
    case ErrorCode::kTimeout:
      return 504;
    case ErrorCode::kBackend:
    case ErrorCode::kIo:
      return 500;
  }
  return 500;
}

namespace {

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, const std::string& code,
               const std::string& message) {
  SendJson(res, status, {{"error", {{"code", code}, {"message", message}}}});
}

const char* ContentType(const std::string& ref) {
  if (ref.ends_with(".png")) return "image/png";
  if (ref.ends_with(".json")) return "application/json";
  return "application/octet-stream";
}

}  // namespace

ReviewHttpServer::ReviewHttpServer(ReviewService& service, HttpServerOptions options)
    : service_(service), options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  Register();
}

ReviewHttpServer::~ReviewHttpServer() { Stop(); }

void ReviewHttpServer::Register() {
  httplib::Server& s = *server_;
  const std::string origin = options_.cors_origin;
  const std::string token = options_.token;

  s.set_pre_routing_handler([origin, token](const httplib::Request& req,
                                            httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Headers", "Authorization, Content-Type");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    if (req.method == "OPTIONS") {
      res.status = 204;
      return httplib::Server::HandlerResponse::Handled;
    }
    if (!token.empty() && req.get_header_value("Authorization") != "Bearer " + token) {
      SendError(res, 401, "auth", "missing or invalid bearer token");
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });
  s.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                             std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      SendError(res, HttpStatusFor(e.code()), ErrorCodeName(e.code()), e.what());
    } catch (const json::exception& e) {
      SendError(res, 400, "parse", e.what());
    } catch (const std::exception& e) {
      SendError(res, 500, "internal", e.what());
    }
  });

  s.Get("/samples", [this](const httplib::Request&, httplib::Response& res) {
    SendJson(res, 200, service_.ListSamples());
  });
  s.Get(R"(/samples/(-?\d+)/bundle)", [this](const httplib::Request& req,
                                             httplib::Response& res) {
    const int64_t id = std::stoll(req.matches[1]);
    const BundleResult r = service_.GetSampleBundle(id);
    if (r.pending) {
      res.set_header("Retry-After", std::to_string(r.retry_after_s));
      SendJson(res, 202, {{"sample_id", id}, {"status", "pending"}});
      return;
    }
    SendJson(res, 200, BundleToJson(r.bundle));
  });
  s.Post("/decisions", [this](const httplib::Request& req, httplib::Response& res) {
    const DecisionRecord rec = DecisionFromJson(json::parse(req.body));
    SendJson(res, 200, AckToJson(service_.RecordDecision(rec)));
  });
  s.Post("/jobs/reevaluate", [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<int64_t> scope;
    if (!req.body.empty()) {
      const json body = json::parse(req.body);
      const std::string kind = body.value("scope", "dataset");
      if (kind == "sample") {
        scope = body.at("sample_id").get<int64_t>();
      } else if (kind != "dataset") {
        Fail(ErrorCode::kInvalidArgument, "scope must be 'sample' or 'dataset'");
      }
    }
    const std::string job_id = service_.TriggerReevaluation(scope);
    SendJson(res, 202, JobToJson(service_.GetJob(job_id)));
  });
  s.Get(R"(/jobs/([\w-]+))", [this](const httplib::Request& req, httplib::Response& res) {
    SendJson(res, 200, JobToJson(service_.GetJob(req.matches[1])));
  });
  s.Get("/reports/latest", [this](const httplib::Request&, httplib::Response& res) {
    const auto report = service_.LatestReport();
    if (!report) {
      SendError(res, 404, "not_found", "no report yet");
      return;
    }
    SendJson(res, 200, *report);
  });
  s.Get(R"(/artifacts/([\w.]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string ref = req.matches[1];
    res.set_content(service_.store().Get(ref), ContentType(ref));
  });
}

int ReviewHttpServer::Start() {
  int port = options_.port;
  if (port == 0) {
    port = server_->bind_to_any_port(options_.host);
  } else if (!server_->bind_to_port(options_.host, port)) {
    port = -1;
  }
  if (port < 0) {
    Fail(ErrorCode::kIo, "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void ReviewHttpServer::Run() {
  if (!server_->listen(options_.host, options_.port)) {
    Fail(ErrorCode::kIo, "cannot listen on " + options_.host + ":" + std::to_string(options_.port));
  }
}

void ReviewHttpServer::Stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace xedge
