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

#ifndef DRIFTLINE_GENEVAL_H_
#define DRIFTLINE_GENEVAL_H_

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "driftline/util.h"

namespace driftline {

// The six compositional task families, in report column order.
enum class Task {
  kSingleObject,
  kTwoObject,
  kCounting,
  kColors,
  kPosition,
  kColorAttribute,
};

inline constexpr std::array<Task, 6> kAllTasks = {
    Task::kSingleObject, Task::kTwoObject, Task::kCounting,
    Task::kColors,       Task::kPosition,  Task::kColorAttribute};

// single_object, two_object, counting, colors, position, color_attr
std::string_view task_name(Task task);
Task parse_task(std::string_view name);
std::size_t task_index(Task task);

enum class Relation { kLeftOf, kRightOf, kAbove, kBelow, kNone };

std::string_view relation_name(Relation r);  // left_of, right_of, above, below
Relation parse_relation(std::string_view name);

// The eleven basic color names the color classifier can emit.
inline constexpr std::array<std::string_view, 11> kColorNames = {
    "red",    "orange", "yellow", "green", "blue", "purple",
    "pink",   "brown",  "black",  "white", "gray"};

// Reference sRGB value for each entry of kColorNames (CSS basic colors).
inline constexpr std::array<std::array<unsigned char, 3>, 11> kColorRgb = {{
    {255, 0, 0},     {255, 165, 0}, {255, 255, 0}, {0, 128, 0},
    {0, 0, 255},     {128, 0, 128}, {255, 192, 203}, {165, 42, 42},
    {0, 0, 0},       {255, 255, 255}, {128, 128, 128}}};

bool is_color_name(std::string_view name);
// Index into kColorNames; throws kInvalidArgument for unknown names.
std::size_t color_index(std::string_view name);

struct GenEvalPrompt {
  std::string prompt_id;
  Task task = Task::kSingleObject;
  std::string text;
  // One object for single_object, counting and colors; two otherwise. For
  // position, objects[0] is the subject and objects[1] the reference.
  std::vector<std::string> objects;
  std::optional<int> count;         // counting only
  std::vector<std::string> colors;  // colors / color_attr, parallel to objects
  std::optional<Relation> relation;  // position only

  // Deduplicated object labels in first-seen order; the detector queries.
  std::vector<std::string> queries() const;

  friend bool operator==(const GenEvalPrompt&, const GenEvalPrompt&) = default;
};

// Throws kParseError naming the offending field when the expectations do not
// match exactly what the task requires.
void validate_prompt(const GenEvalPrompt& prompt);

GenEvalPrompt prompt_from_json(const Json& record);
Json prompt_to_json(const GenEvalPrompt& prompt);

// One JSON record per line: {prompt_id, task, text, expectations}. Blank
// lines are skipped. Errors carry the 1-based line number; repeated
// prompt_ids raise kDuplicateId.
std::vector<GenEvalPrompt> parse_geneval_prompts(std::string_view contents);
std::vector<GenEvalPrompt> load_geneval_rewritten(
    const std::filesystem::path& path);

// Canonical JSONL, one record per line, LF terminated.
std::string serialize_prompts(const std::vector<GenEvalPrompt>& prompts);

}  // namespace driftline

#endif  // DRIFTLINE_GENEVAL_H_
