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

#ifndef XEDGE_REVIEW_HTTP_H_
#define XEDGE_REVIEW_HTTP_H_

#include <memory>
#include <string>
#include <thread>

#include "xedge/error.h"
#include "xedge/review_service.h"

namespace httplib {
class Server;
}  // namespace httplib

namespace xedge {

struct HttpServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // Static bearer token; empty disables the check.
  std::string token;
  std::string cors_origin = "*";
};

int HttpStatusFor(ErrorCode code);

// JSON API over a ReviewService:
//   GET  /samples                 GET  /samples/{id}/bundle
//   POST /decisions               POST /jobs/reevaluate
//   GET  /jobs/{id}               GET  /reports/latest
//   GET  /artifacts/{ref}
class ReviewHttpServer {
 public:
  ReviewHttpServer(ReviewService& service, HttpServerOptions options);
  ~ReviewHttpServer();

  // Binds and serves on a background thread; returns the bound port.
  int Start();
  // Binds and serves on the calling thread until Stop().
  void Run();
  void Stop();

 private:
  void Register();

  ReviewService& service_;
  HttpServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace xedge

#endif  // XEDGE_REVIEW_HTTP_H_
