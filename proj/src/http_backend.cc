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

#include "driftline/http_backend.h"

#include <httplib.h>

#include <cmath>
#include <condition_variable>
#include <thread>

#include "driftline/status.h"

namespace driftline {

std::chrono::milliseconds RetryPolicy::backoff_before_attempt(
    int attempt) const {
  // attempt is 1-based; the first attempt has no backoff.
  if (attempt <= 1) return std::chrono::milliseconds(0);
  const double factor = std::pow(multiplier, attempt - 2);
  return std::chrono::milliseconds(static_cast<long long>(
      static_cast<double>(initial_backoff.count()) * factor));
}

struct InFlightGate {
  explicit InFlightGate(int limit) : limit(limit) {}

  void acquire() {
    std::unique_lock lock(mu);
    cv.wait(lock, [&] { return in_flight < limit; });
    ++in_flight;
  }
  void release() {
    {
      std::lock_guard lock(mu);
      --in_flight;
    }
    cv.notify_one();
  }

  std::mutex mu;
  std::condition_variable cv;
  int limit;
  int in_flight = 0;
};

class HttpBackend::Pool {
 public:
  Pool(std::string base_url, std::chrono::milliseconds timeout)
      : base_url_(std::move(base_url)), timeout_(timeout) {}

  std::unique_ptr<httplib::Client> acquire() {
    {
      std::lock_guard lock(mu_);
      if (!idle_.empty()) {
        auto client = std::move(idle_.back());
        idle_.pop_back();
        return client;
      }
    }
    auto client = std::make_unique<httplib::Client>(base_url_);
    if (!client->is_valid()) {
      throw Error(ErrorCode::kConfigError,
                  "invalid backend endpoint '" + base_url_ + "'");
    }
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    client->set_connection_timeout(secs.count(), usecs.count());
    client->set_read_timeout(secs.count(), usecs.count());
    client->set_write_timeout(secs.count(), usecs.count());
    client->set_keep_alive(true);
    return client;
  }

  void release(std::unique_ptr<httplib::Client> client) {
    std::lock_guard lock(mu_);
    idle_.push_back(std::move(client));
  }

 private:
  std::string base_url_;
  std::chrono::milliseconds timeout_;
  std::mutex mu_;
  std::vector<std::unique_ptr<httplib::Client>> idle_;
};

HttpBackend::HttpBackend(HttpBackendOptions options)
    : options_(std::move(options)),
      gate_(std::make_shared<InFlightGate>(std::max(1, options_.max_in_flight))) {
  if (options_.retry.max_attempts < 1) {
    throw Error(ErrorCode::kConfigError, "retry attempts must be >= 1");
  }
}

HttpBackend::~HttpBackend() = default;

HttpBackend::Pool& HttpBackend::pool_for(const std::string& endpoint) const {
  if (endpoint.empty()) {
    throw Error(ErrorCode::kConfigError,
                "no endpoint configured for this capability");
  }
  std::lock_guard lock(mu_);
  auto& slot = pools_[endpoint];
  if (!slot) slot = std::make_unique<Pool>(endpoint, options_.timeout);
  return *slot;
}

namespace {

Json parse_body(const std::string& body, const std::string& what) {
  Json parsed = Json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw Error(ErrorCode::kProtocolError, what + ": body is not a JSON object");
  }
  return parsed;
}

template <typename T>
T require(const Json& obj, const char* key, const std::string& what) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kProtocolError,
                what + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kProtocolError,
                what + ": field '" + key + "' has the wrong type");
  }
}

Meta response_meta(const Json& body, const std::string& what) {
  auto it = body.find("meta");
  if (it == body.end()) return Meta::object();
  if (!it->is_object()) {
    throw Error(ErrorCode::kProtocolError, what + ": 'meta' is not an object");
  }
  return *it;
}

}  // namespace

Json HttpBackend::post(const std::string& endpoint, const std::string& path,
                       const Json& body) const {
  Pool& pool = pool_for(endpoint);
  const std::string payload = body.dump();
  const std::string what = "POST " + endpoint + path;
  std::string last_failure;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    std::this_thread::sleep_for(options_.retry.backoff_before_attempt(attempt));
    gate_->acquire();
    auto client = pool.acquire();
    httplib::Result res = client->Post(path, payload, "application/json");
    pool.release(std::move(client));
    gate_->release();

    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) return parse_body(res->body, what);
    if (status >= 400 && status < 500) {
      throw Error(ErrorCode::kProtocolError,
                  what + " rejected with HTTP " + std::to_string(status) +
                      ": " + res->body);
    }
    last_failure = "HTTP " + std::to_string(status);
  }
  throw Error(ErrorCode::kBackendUnavailable,
              what + " failed after " +
                  std::to_string(options_.retry.max_attempts) +
                  " attempts (last: " + last_failure + ")");
}

Json HttpBackend::get(const std::string& endpoint,
                      const std::string& path) const {
  Pool& pool = pool_for(endpoint);
  const std::string what = "GET " + endpoint + path;
  std::string last_failure;
  for (int attempt = 1; attempt <= options_.retry.max_attempts; ++attempt) {
    std::this_thread::sleep_for(options_.retry.backoff_before_attempt(attempt));
    gate_->acquire();
    auto client = pool.acquire();
    httplib::Result res = client->Get(path);
    pool.release(std::move(client));
    gate_->release();
    if (!res) {
      last_failure = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      return parse_body(res->body, what);
    }
    if (res->status >= 400 && res->status < 500) {
      throw Error(ErrorCode::kProtocolError,
                  what + " rejected with HTTP " + std::to_string(res->status));
    }
    last_failure = "HTTP " + std::to_string(res->status);
  }
  throw Error(ErrorCode::kBackendUnavailable,
              what + " failed (last: " + last_failure + ")");
}

HealthInfo HttpBackend::health(const std::string& endpoint) const {
  const Json body = get(endpoint, "/v1/health");
  const std::string what = "health " + endpoint;
  HealthInfo info;
  info.model_id = require<std::string>(body, "model_id", what);
  info.capabilities =
      require<std::vector<std::string>>(body, "capabilities", what);
  info.version = require<std::string>(body, "version", what);
  return info;
}

std::string HttpBackend::model_id() const {
  if (!options_.model_id.empty()) return options_.model_id;
  {
    std::lock_guard lock(mu_);
    if (t2i_health_) return t2i_health_->model_id;
  }
  HealthInfo info = health(options_.t2i_endpoint);
  std::lock_guard lock(mu_);
  t2i_health_ = info;
  return info.model_id;
}

Json HttpBackend::describe() const {
  Json out = {{"kind", "http"},
              {"t2i_endpoint", options_.t2i_endpoint},
              {"i2t_endpoint", options_.i2t_endpoint},
              {"embed_endpoint", options_.embed_endpoint},
              {"detect_endpoint", options_.detect_endpoint}};
  std::lock_guard lock(mu_);
  if (t2i_health_) {
    out["model_id"] = t2i_health_->model_id;
    out["version"] = t2i_health_->version;
  } else if (!options_.model_id.empty()) {
    out["model_id"] = options_.model_id;
  }
  return out;
}

T2IResult HttpBackend::t2i(std::string_view prompt, std::uint64_t seed,
                           ImageSize size) {
  if (prompt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "t2i prompt must be non-empty");
  }
  const Json request = {{"prompt", std::string(prompt)},
                        {"seed", seed},
                        {"width", size.width},
                        {"height", size.height}};
  const auto start = std::chrono::steady_clock::now();
  const Json body = post(options_.t2i_endpoint, "/v1/t2i", request);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  const std::string what = "t2i response";

  T2IResult result;
  result.meta = response_meta(body, what);
  const std::string encoded = require<std::string>(body, "image_b64", what);
  result.image = conform_image(base64_decode(encoded), size, result.meta);
  result.meta["latency_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
  return result;
}

I2TResult HttpBackend::i2t(std::string_view image,
                           std::string_view instruction) {
  const Json request = {{"image_b64", base64_encode(image)},
                        {"instruction", std::string(instruction)}};
  const auto start = std::chrono::steady_clock::now();
  const Json body = post(options_.i2t_endpoint, "/v1/i2t", request);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  const std::string what = "i2t response";

  I2TResult result;
  result.meta = response_meta(body, what);
  result.text = finish_caption(require<std::string>(body, "text", what));
  result.meta["latency_ms"] =
      std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
  return result;
}

std::vector<double> HttpBackend::embed(const Payload& payload,
                                       std::string_view backbone) {
  Json request = {{"backbone", std::string(backbone)}};
  if (payload.kind == Modality::kText) {
    request["kind"] = "text";
    request["text"] = payload.bytes;
  } else {
    request["kind"] = "image";
    request["image_b64"] = base64_encode(payload.bytes);
  }
  const Json body = post(options_.embed_endpoint, "/v1/embed", request);
  const std::string what = "embed response";
  auto vec = require<std::vector<double>>(body, "vector", what);
  const auto dim = require<std::size_t>(body, "dim", what);
  if (dim != vec.size()) {
    throw Error(ErrorCode::kProtocolError,
                what + ": 'dim' disagrees with vector length");
  }

  std::optional<std::size_t> declared;
  {
    std::lock_guard lock(mu_);
    const std::string key(backbone);
    if (auto it = options_.backbone_dims.find(key);
        it != options_.backbone_dims.end()) {
      declared = it->second;
    } else if (auto locked = locked_dims_.find(key);
               locked != locked_dims_.end()) {
      declared = locked->second;
    } else {
      locked_dims_[key] = vec.size();
    }
  }
  return normalize_embedding(std::move(vec), declared);
}

std::vector<Detection> HttpBackend::detect(
    std::string_view image, std::span<const std::string> queries) {
  if (queries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "detect needs at least one query");
  }
  const Json request = {
      {"image_b64", base64_encode(image)},
      {"queries", std::vector<std::string>(queries.begin(), queries.end())}};
  const Json body = post(options_.detect_endpoint, "/v1/detect", request);
  const std::string what = "detect response";
  const Json list = require<Json>(body, "detections", what);
  if (!list.is_array()) {
    throw Error(ErrorCode::kProtocolError, what + ": 'detections' not a list");
  }
  std::vector<Detection> dets;
  for (const Json& item : list) {
    if (!item.is_object()) {
      throw Error(ErrorCode::kProtocolError, what + ": detection not an object");
    }
    const auto box = require<std::vector<double>>(item, "box", what);
    if (box.size() != 4) {
      throw Error(ErrorCode::kProtocolError, what + ": box needs 4 numbers");
    }
    Detection d;
    d.box = {box[0], box[1], box[2], box[3]};
    d.label = require<std::string>(item, "label", what);
    d.confidence = require<double>(item, "confidence", what);
    dets.push_back(std::move(d));
  }
  validate_detections(dets, queries);
  return dets;
}

}  // namespace driftline
