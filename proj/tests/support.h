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

#ifndef DRIFTLINE_TESTS_SUPPORT_H_
#define DRIFTLINE_TESTS_SUPPORT_H_

#include <httplib.h>

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "driftline/backend.h"
#include "driftline/geneval.h"
#include "driftline/image.h"
#include "driftline/util.h"

namespace driftline::testing {

std::filesystem::path testdata(std::string_view relative);
Json read_json_file(const std::filesystem::path& path);

// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(std::string_view name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

// An httplib server on an ephemeral loopback port, serving from a background
// thread. Register handlers through server() before calling start().
class StubServer {
 public:
  StubServer() = default;
  ~StubServer();

  httplib::Server& server() { return server_; }
  void start();
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

// Every regular file under `root`, keyed by its relative path.
std::map<std::string, std::string> snapshot_tree(const std::filesystem::path& root);

// Builds the image described by an MGG corpus case: a background color and
// pixel rectangles [x0, y0, x1, y1) painted in order.
Image corpus_image(const Json& spec);
std::vector<Detection> detections_from_json(const Json& list);

// Writes `prompts` as a JSONL prompt file.
void write_prompts(const std::filesystem::path& path,
                   const std::vector<GenEvalPrompt>& prompts);

// One valid prompt per task, ids "<task>-<n>".
std::vector<GenEvalPrompt> sample_prompts(int per_task);

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

CliResult invoke_cli(const std::vector<std::string>& args);

// A Text-First GenEval config over sample_prompts(per_task) on the synthetic
// channel, writing runs under `root`.
Json geneval_config(const std::filesystem::path& root, int per_task,
                    int generations, double drift_rate);

}  // namespace driftline::testing

#endif  // DRIFTLINE_TESTS_SUPPORT_H_
