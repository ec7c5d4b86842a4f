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

#ifndef DRIFTLINE_CHAIN_H_
#define DRIFTLINE_CHAIN_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "driftline/backend.h"
#include "driftline/image.h"
#include "driftline/util.h"

namespace driftline {

enum class StartModality { kTextFirst, kImageFirst };

std::string_view start_modality_name(StartModality s);  // text_first | image_first
StartModality parse_start_modality(std::string_view name);

enum class StepKind { kT2I, kI2T };

std::string_view step_kind_name(StepKind k);

inline constexpr std::string_view kDefaultInstruction = "Describe this image";
inline constexpr int kDefaultGenerations = 20;

struct OriginImage {
  std::string path;    // local copy made at ingest
  std::string sha256;  // of the file bytes
};

struct ChainSpec {
  std::string chain_id;
  StartModality start = StartModality::kTextFirst;
  std::optional<std::string> origin_text;   // Text-First only
  std::optional<OriginImage> origin_image;  // Image-First only
  int num_generations = kDefaultGenerations;
  std::string model_id;
  std::string i2t_instruction = std::string(kDefaultInstruction);
  std::uint64_t seed = 0;
  ImageSize image_size{512, 512};

  friend bool operator==(const ChainSpec& a, const ChainSpec& b);
};

// Throws kConfigError when the spec breaks its invariants (origin must match
// the start modality, G >= 0, non-empty id).
void validate_spec(const ChainSpec& spec);

struct PlannedStep {
  int g = 0;
  StepKind kind = StepKind::kT2I;

  friend bool operator==(const PlannedStep&, const PlannedStep&) = default;
};

// One step per generation, alternating, starting with T2I for Text-First and
// I2T for Image-First.
std::vector<PlannedStep> plan_chain(const ChainSpec& spec);

// Modality of the artifact produced at generation g >= 1 (g = 0 is the origin).
Modality modality_at(StartModality start, int g);

// "g0001.png" / "g0001.txt".
std::string artifact_file_name(int g, Modality modality);

struct GenerationArtifact {
  int g = 0;
  Modality modality = Modality::kText;
  // The caption for text artifacts; the file name (relative to the chain
  // directory) for image artifacts.
  std::string payload;
  int parent_g = 0;
  Meta backend_meta = Meta::object();
  std::string content_hash;  // SHA-256 of the stored file bytes

  friend bool operator==(const GenerationArtifact&,
                         const GenerationArtifact&) = default;
};

enum class ChainStatus { kComplete, kPartial, kFailed };

std::string_view chain_status_name(ChainStatus s);  // complete|partial|failed
ChainStatus parse_chain_status(std::string_view name);

struct ChainRecord {
  ChainSpec spec;
  std::vector<GenerationArtifact> artifacts;
  ChainStatus status = ChainStatus::kPartial;
  std::optional<std::string> error;
  // Where the chain lives on disk. Not serialized.
  std::filesystem::path dir;

  int generations_done() const { return static_cast<int>(artifacts.size()); }

  // Bytes of the origin (caption text or image file). Image-First origins
  // are hash-checked against the spec.
  Payload origin_payload() const;
  Payload artifact_payload(const GenerationArtifact& artifact) const;

  // Equality ignores `dir`.
  friend bool operator==(const ChainRecord& a, const ChainRecord& b);
};

Json spec_to_json(const ChainSpec& spec);
ChainSpec spec_from_json(const Json& json);
Json artifact_to_json(const GenerationArtifact& artifact);
Json record_to_json(const ChainRecord& record);

// Parses record.json; text payloads are read from their files in `dir`.
ChainRecord record_from_json(const Json& json, const std::filesystem::path& dir);

// Loads spec.json + record.json from a chain directory.
ChainRecord read_chain(const std::filesystem::path& chain_dir);

}  // namespace driftline

#endif  // DRIFTLINE_CHAIN_H_
