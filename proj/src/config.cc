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

#include "driftline/config.h"

#include <cstdlib>
#include <set>

#include "driftline/dataset.h"
#include "driftline/engine.h"
#include "driftline/http_backend.h"
#include "driftline/local_backends.h"
#include "driftline/status.h"

namespace driftline {

const Json& default_config() {
  static const Json kDefaults = {
      {"run_id", "run"},
      {"output_dir", "runs"},
      {"dataset", ""},
      {"dataset_kind", "nd400"},
      {"start_modality", "text_first"},
      {"generations", kDefaultGenerations},
      {"seed", std::uint64_t{0}},
      {"image_width", 512},
      {"image_height", 512},
      {"i2t_instruction", std::string(kDefaultInstruction)},
      {"backend", "synthetic"},
      {"model_id", ""},
      {"embedder", "auto"},
      {"detector", "auto"},
      {"t2i_endpoint", ""},
      {"i2t_endpoint", ""},
      {"embed_endpoint", ""},
      {"detect_endpoint", ""},
      {"replay_dir", ""},
      {"backbone_text", "mpnet"},
      {"backbone_joint", "clip"},
      {"backbone_image", "dino"},
      {"experiments", {2, 3, 4, 5, 6, 7}},
      {"fit_domain", "k"},
      {"tau", 0.3},
      {"nms_iou", 0.5},
      {"concurrency", 4},
      {"retry_attempts", 3},
      {"retry_backoff_ms", 1000},
      {"timeout_ms", 120000},
      {"hash_dim", 64},
      {"synthetic_dim", 16},
      {"synthetic_drift_rate", 0.1},
      {"synthetic_fixed_plane", true},
      {"synthetic_seed", std::uint64_t{0}},
      {"embedding_cache", true},
  };
  return kDefaults;
}

namespace {

[[noreturn]] void config_error(const std::string& message) {
  throw Error(ErrorCode::kConfigError, message);
}

// Converts `value` to the type of the default for `key`.
Json conform(const std::string& key, const Json& value) {
  const Json& defaults = default_config();
  auto it = defaults.find(key);
  if (it == defaults.end()) config_error("unknown config key '" + key + "'");
  const Json& d = *it;
  const auto bad = [&] {
    config_error("config key '" + key + "' expects " + std::string(d.type_name()) +
                 ", got " + value.dump());
  };
  if (d.is_boolean()) {
    if (!value.is_boolean()) bad();
    return value;
  }
  if (d.is_number_float()) {
    if (!value.is_number()) bad();
    return value.get<double>();
  }
  if (d.is_number_unsigned()) {
    if (value.is_number_unsigned()) return value;
    if (value.is_number_integer() && value.get<std::int64_t>() >= 0) {
      return value.get<std::uint64_t>();
    }
    bad();
  }
  if (d.is_number_integer()) {
    if (!value.is_number_integer()) bad();
    return value.get<std::int64_t>();
  }
  if (d.is_string()) {
    if (!value.is_string()) bad();
    return value;
  }
  if (d.is_array()) {
    if (!value.is_array()) bad();
    for (const Json& v : value) {
      if (!v.is_number_integer()) bad();
    }
    return value;
  }
  bad();
  return value;
}

Json parse_flag_value(const std::string& key, const std::string& text) {
  const Json& defaults = default_config();
  auto it = defaults.find(key);
  if (it == defaults.end()) config_error("unknown config key '" + key + "'");
  const auto bad = [&]() -> Json {
    config_error("cannot parse '" + text + "' for config key '" + key + "'");
  };
  if (it->is_string()) return text;
  if (it->is_boolean()) {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
    return bad();
  }
  if (it->is_array()) {
    if (text.starts_with("[")) {
      Json j = Json::parse(text, nullptr, false);
      return j.is_discarded() ? bad() : conform(key, j);
    }
    Json arr = Json::array();
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find(',', pos);
      if (end == std::string::npos) end = text.size();
      const std::string item = text.substr(pos, end - pos);
      char* stop = nullptr;
      const long v = std::strtol(item.c_str(), &stop, 10);
      if (item.empty() || *stop != '\0') return bad();
      arr.push_back(v);
      pos = end + 1;
    }
    return arr;
  }
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_number()) return bad();
  return conform(key, j);
}

}  // namespace

Json apply_overrides(Json config, const Overrides& overrides) {
  for (const auto& [key, value] : overrides) {
    config[key] = parse_flag_value(key, value);
  }
  return config;
}

Json resolve_config(const std::optional<std::filesystem::path>& file,
                    const Overrides& overrides) {
  Json config = default_config();
  if (file) {
    if (!std::filesystem::is_regular_file(*file)) {
      config_error("config file not found: " + file->string());
    }
    const Json j = Json::parse(read_file(*file), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      config_error("config file is not a JSON object: " + file->string());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      config[it.key()] = conform(it.key(), it.value());
    }
  }
  config = apply_overrides(std::move(config), overrides);
  validate_config(config);
  return config;
}

void validate_config(const Json& c) {
  for (auto it = default_config().begin(); it != default_config().end(); ++it) {
    if (!c.contains(it.key())) config_error("missing config key '" + it.key() + "'");
    conform(it.key(), c.at(it.key()));
  }
  const auto one_of = [&](const char* key, std::set<std::string> allowed) {
    const std::string v = c.at(key).get<std::string>();
    if (!allowed.count(v)) config_error(std::string(key) + " has invalid value '" + v + "'");
  };
  one_of("backend", {"synthetic", "mock", "replay", "http"});
  one_of("embedder", {"auto", "synthetic", "hash", "http"});
  one_of("detector", {"auto", "synthetic", "replay", "http", "none"});
  one_of("dataset_kind", {"nd400", "geneval"});
  parse_start_modality(c.at("start_modality").get<std::string>());
  parse_fit_domain(c.at("fit_domain").get<std::string>());
  const auto at_least = [&](const char* key, std::int64_t lo) {
    if (c.at(key).get<std::int64_t>() < lo) {
      config_error(std::string(key) + " must be >= " + std::to_string(lo));
    }
  };
  at_least("generations", 0);
  at_least("image_width", 1);
  at_least("image_height", 1);
  at_least("concurrency", 1);
  at_least("retry_attempts", 1);
  at_least("retry_backoff_ms", 0);
  at_least("timeout_ms", 1);
  at_least("hash_dim", 2);
  at_least("synthetic_dim", 2);
  const double tau = c.at("tau").get<double>();
  if (!(tau >= 0 && tau <= 1)) config_error("tau must be in [0, 1]");
  const double iou = c.at("nms_iou").get<double>();
  if (!(iou > 0 && iou <= 1)) config_error("nms_iou must be in (0, 1]");
  if (!(c.at("synthetic_drift_rate").get<double>() >= 0)) {
    config_error("synthetic_drift_rate must be >= 0");
  }
  for (const Json& e : c.at("experiments")) find_experiment(e.get<int>());
  if (c.at("run_id").get<std::string>().empty() ||
      c.at("run_id").get<std::string>().find('/') != std::string::npos) {
    config_error("run_id must be a non-empty directory name");
  }
}

StartModality config_start(const Json& c) {
  return parse_start_modality(c.at("start_modality").get<std::string>());
}

ScoreOptions config_score_options(const Json& c) {
  return {c.at("tau").get<double>(), c.at("nms_iou").get<double>()};
}

FitDomain config_fit_domain(const Json& c) {
  return parse_fit_domain(c.at("fit_domain").get<std::string>());
}

std::string config_backbone(const Json& c, BackboneKind role) {
  switch (role) {
    case BackboneKind::kText: return c.at("backbone_text").get<std::string>();
    case BackboneKind::kImage: return c.at("backbone_image").get<std::string>();
    case BackboneKind::kJoint: return c.at("backbone_joint").get<std::string>();
  }
  return {};
}

std::vector<DistanceMapping> config_mappings(const Json& c,
                                             StartModality start) {
  std::vector<DistanceMapping> out;
  for (const Json& id : c.at("experiments")) {
    const Experiment& e = find_experiment(id.get<int>());
    if (start_for(e.direction) != start) continue;
    DistanceMapping m{e.direction, config_backbone(c, e.role)};
    check_backbone(m, e.role);
    if (std::find(out.begin(), out.end(), m) != out.end()) {
      config_error("experiments list mapping " + m.key() + " twice");
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::filesystem::path config_run_dir(const Json& c) {
  return std::filesystem::path(c.at("output_dir").get<std::string>()) /
         c.at("run_id").get<std::string>();
}

namespace {

std::shared_ptr<HttpBackend> make_http(const Json& c) {
  HttpBackendOptions o;
  o.t2i_endpoint = c.at("t2i_endpoint").get<std::string>();
  o.i2t_endpoint = c.at("i2t_endpoint").get<std::string>();
  o.embed_endpoint = c.at("embed_endpoint").get<std::string>();
  o.detect_endpoint = c.at("detect_endpoint").get<std::string>();
  o.model_id = c.at("model_id").get<std::string>();
  o.retry.max_attempts = c.at("retry_attempts").get<int>();
  o.retry.initial_backoff =
      std::chrono::milliseconds(c.at("retry_backoff_ms").get<std::int64_t>());
  o.max_in_flight = c.at("concurrency").get<int>();
  o.timeout = std::chrono::milliseconds(c.at("timeout_ms").get<std::int64_t>());
  return std::make_shared<HttpBackend>(std::move(o));
}

SyntheticOptions synthetic_options(const Json& c,
                                   const std::vector<GenEvalPrompt>& scenes) {
  SyntheticOptions o;
  o.dim = c.at("synthetic_dim").get<std::size_t>();
  o.drift_rate = c.at("synthetic_drift_rate").get<double>();
  o.fixed_plane = c.at("synthetic_fixed_plane").get<bool>();
  o.seed = c.at("synthetic_seed").get<std::uint64_t>();
  const std::string id = c.at("model_id").get<std::string>();
  if (!id.empty()) o.model_id = id;
  o.scenes = scenes;
  return o;
}

}  // namespace

Backends make_backends(const Json& c, const std::vector<GenEvalPrompt>& scenes) {
  const std::string kind = c.at("backend").get<std::string>();
  const std::string model_id = c.at("model_id").get<std::string>();
  Backends b;
  std::shared_ptr<SyntheticChannel> synthetic;
  std::shared_ptr<ReplayBackend> replay;
  std::shared_ptr<HttpBackend> http;
  const auto get_synthetic = [&] {
    if (!synthetic) {
      synthetic = std::make_shared<SyntheticChannel>(synthetic_options(c, scenes));
    }
    return synthetic;
  };
  const auto get_http = [&] {
    if (!http) http = make_http(c);
    return http;
  };

  if (kind == "synthetic") {
    b.model = get_synthetic();
  } else if (kind == "mock") {
    b.model = std::make_shared<MockBackend>(model_id.empty() ? "mock" : model_id);
  } else if (kind == "replay") {
    const std::string dir = c.at("replay_dir").get<std::string>();
    if (dir.empty()) config_error("backend 'replay' needs replay_dir");
    replay = std::make_shared<ReplayBackend>(dir);
    if (!model_id.empty() && model_id != replay->model_id()) {
      config_error("model_id '" + model_id + "' does not match replay fixtures ('" +
                   replay->model_id() + "')");
    }
    b.model = replay;
  } else {
    b.model = get_http();
  }

  std::string embedder = c.at("embedder").get<std::string>();
  if (embedder == "auto") {
    embedder = kind == "synthetic" ? "synthetic" : kind == "http" ? "http" : "hash";
  }
  if (embedder == "synthetic") {
    b.embedder = get_synthetic();
  } else if (embedder == "http") {
    b.embedder = get_http();
  } else {
    b.embedder = std::make_shared<HashEmbedder>(c.at("hash_dim").get<std::size_t>());
  }

  std::string detector = c.at("detector").get<std::string>();
  if (detector == "auto") {
    detector = kind == "mock" ? "none" : kind;
  }
  if (detector == "synthetic") {
    b.detector = get_synthetic();
  } else if (detector == "replay") {
    if (!replay) config_error("detector 'replay' needs backend 'replay'");
    b.detector = replay;
  } else if (detector == "http") {
    b.detector = get_http();
  }
  return b;
}

std::vector<GenEvalPrompt> load_config_prompts(const Json& c) {
  if (c.at("dataset_kind").get<std::string>() != "geneval") return {};
  const std::string path = c.at("dataset").get<std::string>();
  if (path.empty()) config_error("dataset path is not set");
  if (!std::filesystem::is_regular_file(path)) {
    config_error("dataset file not found: " + path);
  }
  return load_geneval_rewritten(path);
}

DatasetInput load_dataset_input(const Json& c, const std::string& model_id) {
  const std::string path = c.at("dataset").get<std::string>();
  if (path.empty()) config_error("dataset path is not set");
  if (!std::filesystem::is_regular_file(path)) {
    config_error("dataset file not found: " + path);
  }
  const StartModality start = config_start(c);
  const std::uint64_t run_seed = c.at("seed").get<std::uint64_t>();

  ChainSpec base;
  base.start = start;
  base.num_generations = c.at("generations").get<int>();
  base.model_id = model_id;
  base.i2t_instruction = c.at("i2t_instruction").get<std::string>();
  base.image_size = {c.at("image_width").get<int>(), c.at("image_height").get<int>()};

  DatasetInput input;
  if (c.at("dataset_kind").get<std::string>() == "geneval") {
    if (start != StartModality::kTextFirst) {
      config_error("GenEval prompt datasets run Text-First chains only");
    }
    input.prompts = load_geneval_rewritten(path);
    if (input.prompts.empty()) config_error("prompt file " + path + " is empty");
    input.fingerprint = sha256_hex(serialize_prompts(input.prompts));
    for (const auto& p : input.prompts) {
      ChainSpec s = base;
      s.chain_id = p.prompt_id;
      s.origin_text = p.text;
      s.seed = chain_seed(run_seed, s.chain_id);
      input.specs.push_back(std::move(s));
    }
    return input;
  }

  const Nd400 nd = load_nd400(path);
  input.fingerprint = nd.fingerprint;
  const std::filesystem::path root = std::filesystem::path(path).parent_path();
  for (const auto& pair : nd.pairs) {
    ChainSpec s = base;
    s.chain_id = pair.pair_id;
    if (start == StartModality::kTextFirst) {
      s.origin_text = pair.caption;
    } else {
      if (pair.image_hash.empty()) {
        config_error("pair '" + pair.pair_id + "' has no image_hash; run ingest");
      }
      s.origin_image = OriginImage{
          std::filesystem::absolute(root / pair.image_ref).lexically_normal().string(),
                                   pair.image_hash};
    }
    s.seed = chain_seed(run_seed, s.chain_id);
    input.specs.push_back(std::move(s));
  }
  return input;
}

}  // namespace driftline
