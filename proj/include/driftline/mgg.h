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

#ifndef DRIFTLINE_MGG_H_
#define DRIFTLINE_MGG_H_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "driftline/backend.h"
#include "driftline/chain.h"
#include "driftline/geneval.h"
#include "driftline/image.h"

namespace driftline {

double iou(const Box& a, const Box& b);

// Greedy per-label suppression in descending confidence: a box is dropped
// when its IoU with a kept box of the same label exceeds `iou_threshold`.
// Output is sorted by descending confidence (ties by label, then box).
// Throws kInvalidArgument unless 0 < iou_threshold <= 1.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

// Majority vote of per-pixel nearest CIELAB (D65) centroids over the crop
// [floor(x0 W), ceil(x1 W)) x [floor(y0 H), ceil(y1 H)). Throws
// kDegenerateBox when the crop has fewer than 4 pixels.
std::string classify_color(const Image& image, const Box& box);
std::string classify_color(std::string_view image_bytes, const Box& box);

// Dominant-axis comparison of box centres (subject minus reference).
Relation relation(const Box& subject, const Box& reference);

struct ScoreOptions {
  double tau = 0.3;
  double nms_iou = 0.5;
};

// Applies the task rule to raw detector output. Never throws for unmet
// expectations; a degenerate crop simply fails its color check.
int score_detections(const GenEvalPrompt& prompt, const Image& image,
                     std::span<const Detection> detections,
                     const ScoreOptions& options);

// Queries the detector with the prompt's labels, then score_detections.
int score_prompt(const GenEvalPrompt& prompt, std::string_view image_bytes,
                 Detector& detector, const ScoreOptions& options);

struct GenerationScore {
  std::array<double, 6> task_accuracy{};  // kAllTasks order
  double overall = 0;

  friend bool operator==(const GenerationScore&,
                         const GenerationScore&) = default;
};

struct PromptResult {
  Task task = Task::kSingleObject;
  int correct = 0;
};

// Task accuracy is the mean over that task's prompts; overall is the mean of
// the six task accuracies. Throws kMissingTask when a task has no prompts.
GenerationScore generation_score(std::span<const PromptResult> results);

// Throws kEmptyList.
double mgg(std::span<const double> overalls);

struct MggReport {
  std::vector<GenerationScore> generations;  // index k - 1
  double mgg = 0;
};

// Scores the k-th image of every Text-First chain against the prompt whose
// prompt_id equals the chain id. Chains must be complete.
MggReport score_chains(std::span<const ChainRecord> chains,
                       std::span<const GenEvalPrompt> prompts,
                       Detector& detector, const ScoreOptions& options,
                       int threads = 1);

// metrics/mgg.csv and the one-line metrics/mgg.txt ("mgg=<value>").
std::string mgg_csv(const MggReport& report);
std::string mgg_summary_line(const MggReport& report);
MggReport mgg_from_csv(std::string_view csv);

}  // namespace driftline

#endif  // DRIFTLINE_MGG_H_
