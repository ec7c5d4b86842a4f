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

#include "support.h"

#include <atomic>
#include <chrono>
#include <random>
#include <sstream>
#include <stdexcept>

#include "driftline/cli.h"
#include "driftline/config.h"

namespace driftline::testing {

std::filesystem::path testdata(std::string_view relative) {
  return std::filesystem::path(DRIFTLINE_TESTDATA) / relative;
}

Json read_json_file(const std::filesystem::path& path) {
  return Json::parse(read_file(path));
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  const auto base = std::filesystem::temp_directory_path();
  for (;;) {
    path_ = base / ("driftline-test-" + std::to_string(rd()) + "-" +
                    std::to_string(counter++));
    if (std::filesystem::create_directory(path_)) break;
  }
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

StubServer::~StubServer() {
  server_.stop();
  if (thread_.joinable()) thread_.join();
}

void StubServer::start() {
  port_ = server_.bind_to_any_port("127.0.0.1");
  if (port_ <= 0) throw std::runtime_error("stub server failed to bind");
  thread_ = std::thread([this] { server_.listen_after_bind(); });
  server_.wait_until_ready();
}

std::map<std::string, std::string> snapshot_tree(
    const std::filesystem::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    files[entry.path().lexically_relative(root).generic_string()] =
        read_file(entry.path());
  }
  return files;
}

Image corpus_image(const Json& spec) {
  const auto bg = spec.at("background").get<std::vector<int>>();
  Image image(spec.at("width").get<int>(), spec.at("height").get<int>());
  auto paint = [&](int x0, int y0, int x1, int y1, const std::vector<int>& c) {
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        std::uint8_t* p = image.pixel(x, y);
        p[0] = static_cast<std::uint8_t>(c[0]);
        p[1] = static_cast<std::uint8_t>(c[1]);
        p[2] = static_cast<std::uint8_t>(c[2]);
      }
    }
  };
  paint(0, 0, image.width, image.height, bg);
  for (const Json& r : spec.at("rects")) {
    const auto rect = r.at("rect").get<std::vector<int>>();
    paint(rect[0], rect[1], rect[2], rect[3], r.at("rgb").get<std::vector<int>>());
  }
  return image;
}

std::vector<Detection> detections_from_json(const Json& list) {
  std::vector<Detection> dets;
  for (const Json& d : list) {
    const auto b = d.at("box").get<std::vector<double>>();
    dets.push_back({{b[0], b[1], b[2], b[3]},
                    d.at("label").get<std::string>(),
                    d.at("confidence").get<double>()});
  }
  return dets;
}

void write_prompts(const std::filesystem::path& path,
                   const std::vector<GenEvalPrompt>& prompts) {
  write_file_atomic(path, serialize_prompts(prompts));
}

std::vector<GenEvalPrompt> sample_prompts(int per_task) {
  std::vector<GenEvalPrompt> out;
  for (int i = 1; i <= per_task; ++i) {
    const std::string n = std::to_string(i);
    GenEvalPrompt p;
    p.prompt_id = "single_object-" + n;
    p.task = Task::kSingleObject;
    p.text = "a photo of a bench";
    p.objects = {"bench"};
    out.push_back(p);

    p = {};
    p.prompt_id = "two_object-" + n;
    p.task = Task::kTwoObject;
    p.text = "a photo of a cat and a clock";
    p.objects = {"cat", "clock"};
    out.push_back(p);

    p = {};
    p.prompt_id = "counting-" + n;
    p.task = Task::kCounting;
    p.text = "a photo of three dogs";
    p.objects = {"dog"};
    p.count = 3;
    out.push_back(p);

    p = {};
    p.prompt_id = "colors-" + n;
    p.task = Task::kColors;
    p.text = "a photo of a red car";
    p.objects = {"car"};
    p.colors = {"red"};
    out.push_back(p);

    p = {};
    p.prompt_id = "position-" + n;
    p.task = Task::kPosition;
    p.text = "a photo of a dog left of a cat";
    p.objects = {"dog", "cat"};
    p.relation = Relation::kLeftOf;
    out.push_back(p);

    p = {};
    p.prompt_id = "color_attr-" + n;
    p.task = Task::kColorAttribute;
    p.text = "a photo of a green bench and a purple vase";
    p.objects = {"bench", "vase"};
    p.colors = {"green", "purple"};
    out.push_back(p);
  }
  return out;
}

CliResult invoke_cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  CliResult r;
  r.code = run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

Json geneval_config(const std::filesystem::path& root, int per_task,
                    int generations, double drift_rate) {
  const auto prompts_path = root / "prompts.jsonl";
  if (!std::filesystem::exists(prompts_path)) {
    std::filesystem::create_directories(root);
    write_prompts(prompts_path, sample_prompts(per_task));
  }
  Json c = default_config();
  c["output_dir"] = (root / "runs").string();
  c["run_id"] = "tf";
  c["dataset"] = prompts_path.string();
  c["dataset_kind"] = "geneval";
  c["generations"] = generations;
  c["image_width"] = 64;
  c["image_height"] = 64;
  c["synthetic_drift_rate"] = drift_rate;
  return c;
}

}  // namespace driftline::testing
