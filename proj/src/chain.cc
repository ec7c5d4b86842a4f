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

#include "driftline/chain.h"

#include "driftline/status.h"

namespace driftline {

std::string_view start_modality_name(StartModality s) {
  return s == StartModality::kTextFirst ? "text_first" : "image_first";
}

StartModality parse_start_modality(std::string_view name) {
  if (name == "text_first") return StartModality::kTextFirst;
  if (name == "image_first") return StartModality::kImageFirst;
  throw Error(ErrorCode::kConfigError,
              "unknown start modality '" + std::string(name) + "'");
}

std::string_view step_kind_name(StepKind k) {
  return k == StepKind::kT2I ? "t2i" : "i2t";
}

bool operator==(const ChainSpec& a, const ChainSpec& b) {
  const auto image_key = [](const std::optional<OriginImage>& o) {
    return o ? o->path + "\n" + o->sha256 : std::string();
  };
  return a.chain_id == b.chain_id && a.start == b.start &&
         a.origin_text == b.origin_text &&
         image_key(a.origin_image) == image_key(b.origin_image) &&
         a.origin_image.has_value() == b.origin_image.has_value() &&
         a.num_generations == b.num_generations && a.model_id == b.model_id &&
         a.i2t_instruction == b.i2t_instruction && a.seed == b.seed &&
         a.image_size == b.image_size;
}

void validate_spec(const ChainSpec& spec) {
  const auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::kConfigError,
                "chain '" + spec.chain_id + "': " + what);
  };
  if (spec.chain_id.empty()) fail("chain_id is empty");
  if (spec.chain_id.find_first_of("/\\") != std::string::npos ||
      spec.chain_id == "." || spec.chain_id == "..") {
    fail("chain_id must be usable as a directory name");
  }
  if (spec.num_generations < 0) fail("num_generations must be >= 0");
  if (spec.start == StartModality::kTextFirst) {
    if (!spec.origin_text || spec.origin_image) {
      fail("Text-First chains need origin_text and no origin_image");
    }
    if (spec.origin_text->empty()) fail("origin_text is empty");
  } else {
    if (!spec.origin_image || spec.origin_text) {
      fail("Image-First chains need origin_image and no origin_text");
    }
  }
  if (spec.image_size.width <= 0 || spec.image_size.height <= 0) {
    fail("image size must be positive");
  }
}

std::vector<PlannedStep> plan_chain(const ChainSpec& spec) {
  if (spec.num_generations < 0) {
    throw Error(ErrorCode::kConfigError, "num_generations must be >= 0");
  }
  std::vector<PlannedStep> steps;
  steps.reserve(static_cast<std::size_t>(spec.num_generations));
  for (int g = 1; g <= spec.num_generations; ++g) {
    // The step producing generation g outputs modality_at(g).
    const StepKind kind = modality_at(spec.start, g) == Modality::kImage
                              ? StepKind::kT2I
                              : StepKind::kI2T;
    steps.push_back({g, kind});
  }
  return steps;
}

Modality modality_at(StartModality start, int g) {
  const bool odd = (g % 2) == 1;
  if (start == StartModality::kTextFirst) {
    return odd ? Modality::kImage : Modality::kText;
  }
  return odd ? Modality::kText : Modality::kImage;
}

std::string artifact_file_name(int g, Modality modality) {
  return "g" + zero_padded(g, 4) +
         (modality == Modality::kImage ? ".png" : ".txt");
}

std::string_view chain_status_name(ChainStatus s) {
  switch (s) {
    case ChainStatus::kComplete: return "complete";
    case ChainStatus::kPartial: return "partial";
    case ChainStatus::kFailed: return "failed";
  }
  return "failed";
}

ChainStatus parse_chain_status(std::string_view name) {
  if (name == "complete") return ChainStatus::kComplete;
  if (name == "partial") return ChainStatus::kPartial;
  if (name == "failed") return ChainStatus::kFailed;
  throw Error(ErrorCode::kParseError,
              "unknown chain status '" + std::string(name) + "'");
}

namespace {

std::filesystem::path resolve_origin(const std::string& path,
                                     const std::filesystem::path& dir) {
  std::filesystem::path p(path);
  if (p.is_absolute() || std::filesystem::exists(p) || dir.empty()) return p;
  return dir / p;
}

}  // namespace

Payload ChainRecord::origin_payload() const {
  if (spec.start == StartModality::kTextFirst) {
    return {Modality::kText, spec.origin_text.value_or("")};
  }
  if (!spec.origin_image) {
    throw Error(ErrorCode::kConfigError, "Image-First chain without origin");
  }
  std::string bytes = read_file(resolve_origin(spec.origin_image->path, dir));
  if (!spec.origin_image->sha256.empty() &&
      sha256_hex(bytes) != spec.origin_image->sha256) {
    throw Error(ErrorCode::kIntegrityError,
                "origin image of chain '" + spec.chain_id +
                    "' does not match its recorded hash");
  }
  return {Modality::kImage, std::move(bytes)};
}

Payload ChainRecord::artifact_payload(const GenerationArtifact& artifact) const {
  if (artifact.modality == Modality::kText) {
    return {Modality::kText, artifact.payload};
  }
  return {Modality::kImage, read_file(dir / artifact.payload)};
}

bool operator==(const ChainRecord& a, const ChainRecord& b) {
  return a.spec == b.spec && a.artifacts == b.artifacts &&
         a.status == b.status && a.error == b.error;
}

Json spec_to_json(const ChainSpec& spec) {
  Json j = {{"chain_id", spec.chain_id},
            {"start_modality", std::string(start_modality_name(spec.start))},
            {"num_generations", spec.num_generations},
            {"model_id", spec.model_id},
            {"i2t_instruction", spec.i2t_instruction},
            {"seed", spec.seed},
            {"image_width", spec.image_size.width},
            {"image_height", spec.image_size.height}};
  if (spec.origin_text) j["origin_text"] = *spec.origin_text;
  if (spec.origin_image) {
    j["origin_image"] = {{"path", spec.origin_image->path},
                         {"sha256", spec.origin_image->sha256}};
  }
  return j;
}

namespace {

template <typename T>
T get_field(const Json& j, const char* key, const char* where) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::kParseError,
                std::string(where) + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::kParseError,
                std::string(where) + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

ChainSpec spec_from_json(const Json& j) {
  constexpr const char* kWhere = "chain spec";
  ChainSpec spec;
  spec.chain_id = get_field<std::string>(j, "chain_id", kWhere);
  spec.start =
      parse_start_modality(get_field<std::string>(j, "start_modality", kWhere));
  spec.num_generations = get_field<int>(j, "num_generations", kWhere);
  spec.model_id = get_field<std::string>(j, "model_id", kWhere);
  spec.i2t_instruction = get_field<std::string>(j, "i2t_instruction", kWhere);
  spec.seed = get_field<std::uint64_t>(j, "seed", kWhere);
  spec.image_size.width = get_field<int>(j, "image_width", kWhere);
  spec.image_size.height = get_field<int>(j, "image_height", kWhere);
  if (j.contains("origin_text")) {
    spec.origin_text = get_field<std::string>(j, "origin_text", kWhere);
  }
  if (j.contains("origin_image")) {
    const Json& o = j.at("origin_image");
    spec.origin_image = OriginImage{get_field<std::string>(o, "path", kWhere),
                                    get_field<std::string>(o, "sha256", kWhere)};
  }
  return spec;
}

Json artifact_to_json(const GenerationArtifact& a) {
  return Json{{"g", a.g},
              {"modality", std::string(modality_name(a.modality))},
              {"file", artifact_file_name(a.g, a.modality)},
              {"parent_g", a.parent_g},
              {"backend_meta", a.backend_meta},
              {"content_hash", a.content_hash}};
}

Json record_to_json(const ChainRecord& record) {
  Json artifacts = Json::array();
  for (const auto& a : record.artifacts) artifacts.push_back(artifact_to_json(a));
  Json j = {{"spec", spec_to_json(record.spec)},
            {"artifacts", std::move(artifacts)},
            {"generations_done", record.generations_done()},
            {"status", std::string(chain_status_name(record.status))}};
  if (record.error) j["error"] = *record.error;
  return j;
}

ChainRecord record_from_json(const Json& j, const std::filesystem::path& dir) {
  constexpr const char* kWhere = "chain record";
  ChainRecord record;
  record.dir = dir;
  record.spec = spec_from_json(get_field<Json>(j, "spec", kWhere));
  record.status = parse_chain_status(get_field<std::string>(j, "status", kWhere));
  if (j.contains("error")) record.error = get_field<std::string>(j, "error", kWhere);
  for (const Json& a : get_field<Json>(j, "artifacts", kWhere)) {
    GenerationArtifact art;
    art.g = get_field<int>(a, "g", kWhere);
    art.modality = parse_modality(get_field<std::string>(a, "modality", kWhere));
    art.parent_g = get_field<int>(a, "parent_g", kWhere);
    art.backend_meta = get_field<Json>(a, "backend_meta", kWhere);
    art.content_hash = get_field<std::string>(a, "content_hash", kWhere);
    const std::string file = get_field<std::string>(a, "file", kWhere);
    if (file != artifact_file_name(art.g, art.modality)) {
      throw Error(ErrorCode::kParseError,
                  "artifact file name '" + file + "' does not match g/modality");
    }
    art.payload = art.modality == Modality::kText ? read_file(dir / file) : file;
    record.artifacts.push_back(std::move(art));
  }
  return record;
}

ChainRecord read_chain(const std::filesystem::path& chain_dir) {
  const Json record = Json::parse(read_file(chain_dir / "record.json"), nullptr,
                                  /*allow_exceptions=*/false);
  if (record.is_discarded()) {
    throw Error(ErrorCode::kParseError,
                "malformed " + (chain_dir / "record.json").string());
  }
  return record_from_json(record, chain_dir);
}

}  // namespace driftline
