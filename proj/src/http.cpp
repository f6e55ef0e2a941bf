// Copyright 2026 The BRD Authors
// SPDX-License-Identifier: Apache-2.0

#include "brd/http.hpp"

#include <httplib.h>

#include <cstdlib>

namespace brd {

HttpTransport::HttpTransport(std::string endpoint, double timeout_s, const char* token_env)
    : endpoint_(std::move(endpoint)), timeout_s_(timeout_s) {
  if (token_env != nullptr) {
    if (const char* token = std::getenv(token_env); token != nullptr) token_ = token;
  }
}

HttpReply HttpTransport::post(const std::string& path, const std::string& body) {
  httplib::Client client(endpoint_);
  const auto secs = static_cast<time_t>(timeout_s_);
  const auto usecs = static_cast<time_t>((timeout_s_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) return HttpReply{0, {}, httplib::to_string(res.error())};
  return HttpReply{res->status, res->body, {}};
}

}  // namespace brd
