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

#include "driftline/geneval.h"

#include <algorithm>
#include <set>

#include "driftline/status.h"

namespace driftline {

std::string_view task_name(Task task) {
  switch (task) {
    case Task::kSingleObject: return "single_object";
    case Task::kTwoObject: return "two_object";
    case Task::kCounting: return "counting";
    case Task::kColors: return "colors";
    case Task::kPosition: return "position";
    case Task::kColorAttribute: return "color_attr";
  }
  return "unknown";
}

Task parse_task(std::string_view name) {
  for (Task t : kAllTasks) {
    if (task_name(t) == name) return t;
  }
  throw Error(ErrorCode::kParseError, "unknown task '" + std::string(name) + "'");
}

std::size_t task_index(Task task) { return static_cast<std::size_t>(task); }

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::kLeftOf: return "left_of";
    case Relation::kRightOf: return "right_of";
    case Relation::kAbove: return "above";
    case Relation::kBelow: return "below";
    case Relation::kNone: return "none";
  }
  return "none";
}

Relation parse_relation(std::string_view name) {
  for (Relation r : {Relation::kLeftOf, Relation::kRightOf, Relation::kAbove,
                     Relation::kBelow}) {
    if (relation_name(r) == name) return r;
  }
  throw Error(ErrorCode::kParseError,
              "unknown relation '" + std::string(name) + "'");
}

bool is_color_name(std::string_view name) {
  return std::find(kColorNames.begin(), kColorNames.end(), name) !=
         kColorNames.end();
}

std::size_t color_index(std::string_view name) {
  auto it = std::find(kColorNames.begin(), kColorNames.end(), name);
  if (it == kColorNames.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown color '" + std::string(name) + "'");
  }
  return static_cast<std::size_t>(it - kColorNames.begin());
}

std::vector<std::string> GenEvalPrompt::queries() const {
  std::vector<std::string> out;
  for (const auto& o : objects) {
    if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
  }
  return out;
}

void validate_prompt(const GenEvalPrompt& p) {
  const auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kParseError,
                "prompt '" + p.prompt_id + "' (" + std::string(task_name(p.task)) +
                    "): " + what);
  };
  if (p.prompt_id.empty()) fail("field 'prompt_id' is empty");
  if (p.text.empty()) fail("field 'text' is empty");

  std::size_t want_objects = 1;
  bool want_count = false, want_colors = false, want_relation = false;
  switch (p.task) {
    case Task::kSingleObject: break;
    case Task::kTwoObject: want_objects = 2; break;
    case Task::kCounting: want_count = true; break;
    case Task::kColors: want_colors = true; break;
    case Task::kPosition: want_objects = 2; want_relation = true; break;
    case Task::kColorAttribute: want_objects = 2; want_colors = true; break;
  }
  if (p.objects.size() != want_objects) {
    fail("field 'objects' needs " + std::to_string(want_objects) + " label(s)");
  }
  for (const auto& o : p.objects) {
    if (o.empty()) fail("field 'objects' has an empty label");
  }
  if (want_count && !p.count) fail("missing field 'count'");
  if (!want_count && p.count) fail("unexpected field 'count'");
  if (p.count && *p.count < 1) fail("field 'count' must be >= 1");
  if (want_colors && p.colors.size() != want_objects) {
    fail(p.colors.empty() ? std::string("missing field 'colors'")
                          : std::string("field 'colors' must parallel 'objects'"));
  }
  if (!want_colors && !p.colors.empty()) fail("unexpected field 'colors'");
  for (const auto& c : p.colors) {
    if (!is_color_name(c)) fail("field 'colors' has unknown color '" + c + "'");
  }
  if (want_relation && !p.relation) fail("missing field 'relation'");
  if (!want_relation && p.relation) fail("unexpected field 'relation'");
  if (p.relation && *p.relation == Relation::kNone) {
    fail("field 'relation' cannot be none");
  }
}

namespace {

template <typename T>
T field(const Json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kParseError, where + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kParseError,
                where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

GenEvalPrompt prompt_from_json(const Json& record) {
  if (!record.is_object()) {
    throw Error(ErrorCode::kParseError, "prompt record is not an object");
  }
  static const std::set<std::string> kTop = {"prompt_id", "task", "text",
                                             "expectations"};
  for (auto it = record.begin(); it != record.end(); ++it) {
    if (!kTop.count(it.key())) {
      throw Error(ErrorCode::kParseError, "unexpected field '" + it.key() + "'");
    }
  }
  GenEvalPrompt p;
  p.prompt_id = field<std::string>(record, "prompt_id", "prompt");
  const std::string where = "prompt '" + p.prompt_id + "'";
  p.task = parse_task(field<std::string>(record, "task", where));
  p.text = field<std::string>(record, "text", where);
  const Json exp = field<Json>(record, "expectations", where);
  if (!exp.is_object()) {
    throw Error(ErrorCode::kParseError, where + ": 'expectations' not an object");
  }
  static const std::set<std::string> kExp = {"objects", "count", "colors",
                                             "relation"};
  for (auto it = exp.begin(); it != exp.end(); ++it) {
    if (!kExp.count(it.key())) {
      throw Error(ErrorCode::kParseError,
                  where + ": unexpected field '" + it.key() + "'");
    }
  }
  p.objects = field<std::vector<std::string>>(exp, "objects", where);
  if (exp.contains("count")) p.count = field<int>(exp, "count", where);
  if (exp.contains("colors")) {
    p.colors = field<std::vector<std::string>>(exp, "colors", where);
  }
  if (exp.contains("relation")) {
    p.relation = parse_relation(field<std::string>(exp, "relation", where));
  }
  validate_prompt(p);
  return p;
}

Json prompt_to_json(const GenEvalPrompt& p) {
  Json exp = {{"objects", p.objects}};
  if (p.count) exp["count"] = *p.count;
  if (!p.colors.empty()) exp["colors"] = p.colors;
  if (p.relation) exp["relation"] = std::string(relation_name(*p.relation));
  return Json{{"prompt_id", p.prompt_id},
              {"task", std::string(task_name(p.task))},
              {"text", p.text},
              {"expectations", exp}};
}

std::vector<GenEvalPrompt> parse_geneval_prompts(std::string_view contents) {
  std::vector<GenEvalPrompt> prompts;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) {
      if (end == contents.size()) break;
      continue;
    }
    const std::string prefix = "line " + std::to_string(line_no) + ": ";
    Json record = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded()) {
      throw Error(ErrorCode::kParseError, prefix + "invalid JSON");
    }
    GenEvalPrompt p;
    try {
      p = prompt_from_json(record);
    } catch (const Error& e) {
      throw Error(e.code(), prefix + e.detail());
    }
    if (!seen.insert(p.prompt_id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  prefix + "duplicate prompt_id '" + p.prompt_id + "'");
    }
    prompts.push_back(std::move(p));
    if (end == contents.size()) break;
  }
  return prompts;
}

std::vector<GenEvalPrompt> load_geneval_rewritten(
    const std::filesystem::path& path) {
  return parse_geneval_prompts(read_file(path));
}

std::string serialize_prompts(const std::vector<GenEvalPrompt>& prompts) {
  std::string out;
  for (const auto& p : prompts) {
    out += canonical_json_line(prompt_to_json(p));
    out.push_back('\n');
  }
  return out;
}

}  // namespace driftline
