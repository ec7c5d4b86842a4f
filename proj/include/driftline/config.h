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

#ifndef DRIFTLINE_CONFIG_H_
#define DRIFTLINE_CONFIG_H_

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "driftline/backend.h"
#include "driftline/chain.h"
#include "driftline/geneval.h"
#include "driftline/mgg.h"
#include "driftline/sdr.h"
#include "driftline/similarity.h"
#include "driftline/util.h"

namespace driftline {

// Every key with its default value. The value's JSON type is the key's type.
const Json& default_config();

using Overrides = std::vector<std::pair<std::string, std::string>>;

// Defaults, then `file` (a JSON object), then `overrides` (flag strings
// coerced to each key's type). Unknown keys and ill-typed values raise
// kConfigError; so does a missing file.
Json resolve_config(const std::optional<std::filesystem::path>& file,
                    const Overrides& overrides);

// Applies overrides on top of an already resolved config.
Json apply_overrides(Json config, const Overrides& overrides);

// Throws kConfigError on values outside their domain.
void validate_config(const Json& config);

// Typed views over a resolved config.
StartModality config_start(const Json& config);
ScoreOptions config_score_options(const Json& config);
FitDomain config_fit_domain(const Json& config);
std::string config_backbone(const Json& config, BackboneKind role);
std::vector<DistanceMapping> config_mappings(const Json& config,
                                             StartModality start);
std::filesystem::path config_run_dir(const Json& config);

struct Backends {
  std::shared_ptr<ModelBackend> model;
  std::shared_ptr<Embedder> embedder;  // may be null
  std::shared_ptr<Detector> detector;  // may be null
};

// Builds the configured backend plus the embedder/detector chosen by
// "embedder"/"detector" ("auto" picks the natural companion). `scenes` are
// the prompts a synthetic channel renders.
Backends make_backends(const Json& config,
                       const std::vector<GenEvalPrompt>& scenes);

struct DatasetInput {
  std::vector<ChainSpec> specs;
  std::vector<GenEvalPrompt> prompts;  // geneval datasets only
  std::string fingerprint;
};

// Loads the configured dataset ("nd400" selection file or "geneval" prompt
// file) and plans one chain per item. `model_id` is stamped into the specs.
DatasetInput load_dataset_input(const Json& config, const std::string& model_id);

// Only the prompts (empty unless dataset_kind is geneval).
std::vector<GenEvalPrompt> load_config_prompts(const Json& config);

}  // namespace driftline

#endif  // DRIFTLINE_CONFIG_H_
