// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>

namespace brd {

/// Raw result of one HTTP exchange. status 0 means no response arrived
/// (connection refused, timeout, ...).
struct HttpReply {
  int status = 0;
  std::string body;
  std::string error;
};

/// JSON-over-HTTP POST seam shared by the teacher client and the remote
/// scorer. Implementations must be safe to call from several threads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpReply post(const std::string& path, const std::string& body) = 0;
};

/// cpp-httplib client opening one connection per request. Sends
/// `Authorization: Bearer <token>` when the named environment variable is set.
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string endpoint, double timeout_s, const char* token_env = "BRD_TEACHER_TOKEN");
  HttpReply post(const std::string& path, const std::string& body) override;

 private:
  std::string endpoint_;
  double timeout_s_;
  std::string token_;
};

}  // namespace brd
