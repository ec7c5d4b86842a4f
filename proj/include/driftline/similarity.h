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

#ifndef DRIFTLINE_SIMILARITY_H_
#define DRIFTLINE_SIMILARITY_H_

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "driftline/backend.h"
#include "driftline/chain.h"
#include "driftline/util.h"

namespace driftline {

enum class Direction { kTextToText, kTextToImage, kImageToImage, kImageToText };

// text_to_text, text_to_image, image_to_image, image_to_text
std::string_view direction_name(Direction d);
Direction parse_direction(std::string_view name);

Modality source_modality(Direction d);
Modality target_modality(Direction d);
// Text-First chains carry the text-sourced directions, Image-First the
// image-sourced ones.
StartModality start_for(Direction d);

// What an embedding backbone can encode.
enum class BackboneKind { kText, kImage, kJoint };

std::string_view backbone_kind_name(BackboneKind k);  // text | image | joint
BackboneKind parse_backbone_kind(std::string_view name);

struct DistanceMapping {
  Direction direction = Direction::kTextToText;
  std::string backbone_id;

  // "<direction>_<backbone>", also the series file stem.
  std::string key() const;

  friend bool operator==(const DistanceMapping&,
                         const DistanceMapping&) = default;
  friend auto operator<=>(const DistanceMapping&,
                          const DistanceMapping&) = default;
};

// Throws kMappingMismatch when the backbone cannot embed both ends.
void check_backbone(const DistanceMapping& mapping, BackboneKind kind);

// The six similarity experiments of the ND400 matrix. Backbones are named by
// role; the config resolves each role to a concrete backbone id.
struct Experiment {
  int id = 0;
  Direction direction = Direction::kTextToText;
  BackboneKind role = BackboneKind::kText;
};

std::span<const Experiment> similarity_experiments();
const Experiment& find_experiment(int id);  // kConfigError when unknown

struct Pairing {
  Payload origin;
  Payload artifact;
  int k = 0;  // occurrence index of the target modality
  int g = 0;  // raw generation index
};

// Every artifact of the direction's target modality, in g order. Throws
// kMappingMismatch when the direction does not belong to the chain type.
std::vector<Pairing> pairings(const ChainRecord& chain, Direction direction);

// Number of target-modality artifacts among g = 1..num_generations.
int occurrences(StartModality start, Direction direction, int num_generations);

// dot(u, v) / (|u| |v|), clamped to [-1, 1] against rounding. Throws
// kDimensionMismatch and kZeroVector.
double cosine(std::span<const double> u, std::span<const double> v);

// Per-backbone memo keyed by payload content hash. Safe for concurrent use;
// the first insert of a key wins.
class EmbeddingCache {
 public:
  std::vector<double> get_or_compute(
      std::string_view backbone, const Payload& payload,
      const std::function<std::vector<double>()>& compute);
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<double>> entries_;
};

struct SeriesPoint {
  int k = 0;
  int g = 0;
  double s = 0;

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct SimilaritySeries {
  DistanceMapping mapping;
  std::vector<SeriesPoint> points;  // k strictly increasing from 1
  int n_items = 0;

  friend bool operator==(const SimilaritySeries&,
                         const SimilaritySeries&) = default;
};

struct SeriesOptions {
  EmbeddingCache* cache = nullptr;  // optional
  int threads = 1;
};

// S(k) = mean over chains of cosine(embed(origin), embed(k-th artifact)).
// Chains are reduced in chain_id order whatever the input order. All chains
// must be complete and share start modality and G (kIncompleteChain /
// kInvalidArgument otherwise).
SimilaritySeries similarity_series(std::vector<ChainRecord> chains,
                                   const DistanceMapping& mapping,
                                   Embedder& embedder,
                                   const SeriesOptions& options = {});

// Mean of S over all points. Throws kEmptySeries.
double mcd(const SimilaritySeries& series);

// Unweighted mean. Throws kEmptyList and kDuplicateMapping.
double mcd_avg(std::span<const std::pair<DistanceMapping, double>> summaries);

// CSV with header k,g,S,n_items.
std::string series_to_csv(const SimilaritySeries& series);
SimilaritySeries series_from_csv(std::string_view csv,
                                 const DistanceMapping& mapping);
std::string series_file_name(const DistanceMapping& mapping);
// Inverse of series_file_name; nullopt for other file names.
std::optional<DistanceMapping> mapping_from_file_name(std::string_view name);

// All metrics/series_*.csv files of a run directory, sorted by mapping.
std::vector<SimilaritySeries> read_all_series(
    const std::filesystem::path& run_dir);

}  // namespace driftline

#endif  // DRIFTLINE_SIMILARITY_H_
