/* Copyright 2026 The Driftline Authors. All Rights Reserved.

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

#ifndef DRIFTLINE_HTTP_BACKEND_H_
#define DRIFTLINE_HTTP_BACKEND_H_

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "driftline/backend.h"

namespace driftline {

struct RetryPolicy {
  // Total attempts, including the first one.
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;

  std::chrono::milliseconds backoff_before_attempt(int attempt) const;
};

struct HttpBackendOptions {
  // Base URLs such as "http://127.0.0.1:8000"; t2i and i2t may point at
  // different servers to compose a decoupled pipeline.
  std::string t2i_endpoint;
  std::string i2t_endpoint;
  std::string embed_endpoint;
  std::string detect_endpoint;
  // Overrides the model id reported by /v1/health on the t2i endpoint.
  std::string model_id;
  RetryPolicy retry;
  // Global cap on concurrent requests across all endpoints; also the size of
  // each endpoint's connection pool.
  int max_in_flight = 4;
  std::chrono::milliseconds timeout{120000};
  // Declared embedding dimensions. Backbones absent here lock to the first
  // dimension they report.
  std::map<std::string, std::size_t> backbone_dims;
};

struct HealthInfo {
  std::string model_id;
  std::vector<std::string> capabilities;
  std::string version;
};

// Adapter for the JSON wire protocol:
//   POST /v1/t2i, /v1/i2t, /v1/embed, /v1/detect and GET /v1/health.
// 4xx responses raise kProtocolError immediately; 5xx, timeouts and
// connection failures are retried per RetryPolicy and then raise
// kBackendUnavailable.
class HttpBackend : public ModelBackend, public Embedder, public Detector {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  ~HttpBackend() override;

  HttpBackend(const HttpBackend&) = delete;
  HttpBackend& operator=(const HttpBackend&) = delete;

  std::string model_id() const override;
  T2IResult t2i(std::string_view prompt, std::uint64_t seed,
                ImageSize size) override;
  I2TResult i2t(std::string_view image, std::string_view instruction) override;
  Json describe() const override;

  std::vector<double> embed(const Payload& payload,
                            std::string_view backbone) override;

  std::vector<Detection> detect(std::string_view image,
                                std::span<const std::string> queries) override;

  HealthInfo health(const std::string& endpoint) const;

 private:
  class Pool;

  Json post(const std::string& endpoint, const std::string& path,
            const Json& body) const;
  Json get(const std::string& endpoint, const std::string& path) const;
  Pool& pool_for(const std::string& endpoint) const;

  HttpBackendOptions options_;
  mutable std::mutex mu_;
  mutable std::map<std::string, std::unique_ptr<Pool>> pools_;
  mutable std::map<std::string, std::size_t> locked_dims_;
  mutable std::optional<HealthInfo> t2i_health_;
  std::shared_ptr<struct InFlightGate> gate_;
};

}  // namespace driftline

#endif  // DRIFTLINE_HTTP_BACKEND_H_
