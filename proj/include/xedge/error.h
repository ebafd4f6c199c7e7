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
#ifndef XEDGE_ERROR_H_
#define XEDGE_ERROR_H_

#include <stdexcept>
#include <string>

namespace xedge {

enum class ErrorCode {
  kInvalidArgument,
  kNotFound,
  kUnsupported,
  kParse,
  kBackend,
  kAuth,
  kTimeout,
  kPayloadTooLarge,
  kConflict,
  kPending,
  kIo,
};

const char* ErrorCodeName(ErrorCode code);

// All library failures are reported as xedge::Error.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void Fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void Require(bool condition, const std::string& message) {
  if (!condition) Fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace xedge

#endif  // XEDGE_ERROR_H_
