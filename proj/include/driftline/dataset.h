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

#ifndef DRIFTLINE_DATASET_H_
#define DRIFTLINE_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftline/util.h"

namespace driftline {

enum class Source { kNoCaps, kDocci };

std::string_view source_name(Source s);  // "nocaps" | "docci"
Source parse_source(std::string_view name);

struct DatasetPair {
  std::string pair_id;
  Source source = Source::kNoCaps;
  std::string image_ref;   // local path or http(s) URL
  std::string caption;
  std::string image_hash;  // SHA-256 of the image bytes; empty before ingest

  friend bool operator==(const DatasetPair&, const DatasetPair&) = default;
};

Json pair_to_json(const DatasetPair& pair);
DatasetPair pair_from_json(const Json& record);

// One JSON record per line: {pair_id, source, image_ref, caption} plus an
// optional image_hash. Errors carry the 1-based line number; repeated ids
// raise kDuplicateId.
std::vector<DatasetPair> parse_index(std::string_view contents);
std::vector<DatasetPair> load_index(const std::filesystem::path& path);

// SHA-256 over "pair_id \t source \t sha256(caption) \t image_hash \n" lines
// in pair_id order.
std::string dataset_fingerprint(std::span<const DatasetPair> pairs);

inline constexpr int kPerSource = 200;

struct Nd400 {
  std::uint64_t seed = 0;
  std::vector<DatasetPair> pairs;  // sorted by pair_id
  std::string fingerprint;

  friend bool operator==(const Nd400&, const Nd400&) = default;
};

// Sorts each index by pair_id, then draws `per_source` items from NoCaps and
// then DOCCI with a partial Fisher-Yates shuffle on one seeded stream.
// A short index raises kInsufficientSource and a repeated id kDuplicateId.
// kInvalidArgument means an index holds pairs of the other source.
Nd400 sample_nd400(std::vector<DatasetPair> nocaps,
                   std::vector<DatasetPair> docci, std::uint64_t seed,
                   int per_source = kPerSource);

// Copies every image next to `out_dir`/images, verifies it decodes, records
// its hash (checked against a hash already present in the index), rewrites
// image_ref to the local copy relative to `out_dir`, recomputes the
// fingerprint and writes `out_dir`/nd400.json. Relative refs resolve against
// `ref_base`.
Nd400 ingest(Nd400 selection, const std::filesystem::path& ref_base,
             const std::filesystem::path& out_dir);

Json nd400_to_json(const Nd400& nd400);
Nd400 nd400_from_json(const Json& json);
Nd400 load_nd400(const std::filesystem::path& path);

// Fetches bytes for a local path or http(s) URL.
std::string fetch_image(const std::string& ref,
                        const std::filesystem::path& base);

}  // namespace driftline

#endif  // DRIFTLINE_DATASET_H_
