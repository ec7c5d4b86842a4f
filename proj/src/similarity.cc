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

#include "driftline/similarity.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <thread>

#include "driftline/status.h"

namespace driftline {

namespace {

constexpr std::array<std::string_view, 4> kDirectionNames = {
    "text_to_text", "text_to_image", "image_to_image", "image_to_text"};

constexpr std::array<Experiment, 6> kExperiments = {{
    {2, Direction::kTextToText, BackboneKind::kText},
    {3, Direction::kTextToText, BackboneKind::kJoint},
    {4, Direction::kTextToImage, BackboneKind::kJoint},
    {5, Direction::kImageToImage, BackboneKind::kImage},
    {6, Direction::kImageToImage, BackboneKind::kJoint},
    {7, Direction::kImageToText, BackboneKind::kJoint},
}};

bool valid_backbone_id(std::string_view id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
           c == '.' || c == '_';
  });
}

}  // namespace

std::string_view direction_name(Direction d) {
  return kDirectionNames[static_cast<std::size_t>(d)];
}

Direction parse_direction(std::string_view name) {
  for (std::size_t i = 0; i < kDirectionNames.size(); ++i) {
    if (kDirectionNames[i] == name) return static_cast<Direction>(i);
  }
  throw Error(ErrorCode::kConfigError,
              "unknown direction '" + std::string(name) + "'");
}

Modality source_modality(Direction d) {
  return d == Direction::kTextToText || d == Direction::kTextToImage
             ? Modality::kText
             : Modality::kImage;
}

Modality target_modality(Direction d) {
  return d == Direction::kTextToText || d == Direction::kImageToText
             ? Modality::kText
             : Modality::kImage;
}

StartModality start_for(Direction d) {
  return source_modality(d) == Modality::kText ? StartModality::kTextFirst
                                               : StartModality::kImageFirst;
}

std::string_view backbone_kind_name(BackboneKind k) {
  switch (k) {
    case BackboneKind::kText: return "text";
    case BackboneKind::kImage: return "image";
    case BackboneKind::kJoint: return "joint";
  }
  return "joint";
}

BackboneKind parse_backbone_kind(std::string_view name) {
  if (name == "text") return BackboneKind::kText;
  if (name == "image") return BackboneKind::kImage;
  if (name == "joint") return BackboneKind::kJoint;
  throw Error(ErrorCode::kConfigError,
              "unknown backbone kind '" + std::string(name) + "'");
}

std::string DistanceMapping::key() const {
  return std::string(direction_name(direction)) + "_" + backbone_id;
}

void check_backbone(const DistanceMapping& mapping, BackboneKind kind) {
  if (!valid_backbone_id(mapping.backbone_id)) {
    throw Error(ErrorCode::kConfigError,
                "backbone id '" + mapping.backbone_id +
                    "' must be non-empty and use only [A-Za-z0-9._-]");
  }
  const Modality a = source_modality(mapping.direction);
  const Modality b = target_modality(mapping.direction);
  bool ok = kind == BackboneKind::kJoint;
  if (kind == BackboneKind::kText) ok = a == Modality::kText && b == a;
  if (kind == BackboneKind::kImage) ok = a == Modality::kImage && b == a;
  if (!ok) {
    throw Error(ErrorCode::kMappingMismatch,
                std::string(backbone_kind_name(kind)) + " backbone '" +
                    mapping.backbone_id + "' cannot serve " +
                    std::string(direction_name(mapping.direction)));
  }
}

std::span<const Experiment> similarity_experiments() { return kExperiments; }

const Experiment& find_experiment(int id) {
  for (const auto& e : kExperiments) {
    if (e.id == id) return e;
  }
  throw Error(ErrorCode::kConfigError,
              "unknown similarity experiment " + std::to_string(id) +
                  " (expected 2..7)");
}

int occurrences(StartModality start, Direction direction, int num_generations) {
  int n = 0;
  for (int g = 1; g <= num_generations; ++g) {
    if (modality_at(start, g) == target_modality(direction)) ++n;
  }
  return n;
}

std::vector<Pairing> pairings(const ChainRecord& chain, Direction direction) {
  if (start_for(direction) != chain.spec.start) {
    throw Error(ErrorCode::kMappingMismatch,
                std::string(direction_name(direction)) + " is not defined for " +
                    std::string(start_modality_name(chain.spec.start)) +
                    " chain '" + chain.spec.chain_id + "'");
  }
  const Payload origin = chain.origin_payload();
  std::vector<Pairing> out;
  int k = 0;
  for (const auto& art : chain.artifacts) {
    if (art.modality != target_modality(direction)) continue;
    out.push_back({origin, chain.artifact_payload(art), ++k, art.g});
  }
  return out;
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "cosine of vectors with dimensions " + std::to_string(u.size()) +
                    " and " + std::to_string(v.size()));
  }
  double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  if (uu == 0 || vv == 0) {
    throw Error(ErrorCode::kZeroVector, "cosine of a zero vector");
  }
  // sqrt(uu * vv) rather than sqrt(uu) * sqrt(vv): identical inputs then give
  // exactly 1.
  return std::clamp(uv / std::sqrt(uu * vv), -1.0, 1.0);
}

std::vector<double> EmbeddingCache::get_or_compute(
    std::string_view backbone, const Payload& payload,
    const std::function<std::vector<double>()>& compute) {
  std::string key(backbone);
  key += payload.kind == Modality::kText ? ":text:" : ":image:";
  key += sha256_hex(payload.bytes);
  {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  }
  std::vector<double> value = compute();
  std::lock_guard lock(mu_);
  return entries_.emplace(std::move(key), std::move(value)).first->second;
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

SimilaritySeries similarity_series(std::vector<ChainRecord> chains,
                                   const DistanceMapping& mapping,
                                   Embedder& embedder,
                                   const SeriesOptions& options) {
  std::sort(chains.begin(), chains.end(),
            [](const ChainRecord& a, const ChainRecord& b) {
              return a.spec.chain_id < b.spec.chain_id;
            });
  SimilaritySeries series;
  series.mapping = mapping;
  series.n_items = static_cast<int>(chains.size());
  if (chains.empty()) return series;

  const StartModality start = chains.front().spec.start;
  const int num_generations = chains.front().spec.num_generations;
  for (const auto& c : chains) {
    if (c.spec.start != start || c.spec.num_generations != num_generations) {
      throw Error(ErrorCode::kInvalidArgument,
                  "chains in one series must share start modality and G");
    }
    if (c.status != ChainStatus::kComplete ||
        c.generations_done() != num_generations) {
      throw Error(ErrorCode::kIncompleteChain,
                  "chain '" + c.spec.chain_id + "' is not complete");
    }
  }
  const int K = occurrences(start, mapping.direction, num_generations);

  const auto embed = [&](const Payload& p) {
    const auto compute = [&] {
      return embedder.embed(p, mapping.backbone_id);
    };
    return options.cache
               ? options.cache->get_or_compute(mapping.backbone_id, p, compute)
               : compute();
  };

  // cosines[c * K + (k - 1)]; each slot has exactly one writer.
  std::vector<double> cosines(chains.size() * static_cast<std::size_t>(K));
  std::vector<int> raw_g(static_cast<std::size_t>(K), 0);
  std::vector<std::exception_ptr> errors(chains.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t c = next++; c < chains.size(); c = next++) {
      try {
        const auto pairs = pairings(chains[c], mapping.direction);
        if (static_cast<int>(pairs.size()) != K) {
          throw Error(ErrorCode::kIncompleteChain,
                      "chain '" + chains[c].spec.chain_id + "' lacks index k=" +
                          std::to_string(pairs.size() + 1));
        }
        const std::vector<double> origin = embed(pairs.front().origin);
        for (const Pairing& p : pairs) {
          cosines[c * K + (p.k - 1)] = cosine(origin, embed(p.artifact));
          if (c == 0) raw_g[p.k - 1] = p.g;
        }
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  };
  const int threads =
      std::clamp(options.threads, 1, static_cast<int>(chains.size()));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (int k = 1; k <= K; ++k) {
    double sum = 0;
    for (std::size_t c = 0; c < chains.size(); ++c) sum += cosines[c * K + k - 1];
    series.points.push_back({k, raw_g[k - 1],
                             sum / static_cast<double>(chains.size())});
  }
  return series;
}

double mcd(const SimilaritySeries& series) {
  if (series.points.empty()) {
    throw Error(ErrorCode::kEmptySeries,
                "series " + series.mapping.key() + " has no points");
  }
  double sum = 0;
  for (const auto& p : series.points) sum += p.s;
  return sum / static_cast<double>(series.points.size());
}

double mcd_avg(std::span<const std::pair<DistanceMapping, double>> summaries) {
  if (summaries.empty()) {
    throw Error(ErrorCode::kEmptyList, "mcd_avg of no mappings");
  }
  std::set<DistanceMapping> seen;
  double sum = 0;
  for (const auto& [mapping, value] : summaries) {
    if (!seen.insert(mapping).second) {
      throw Error(ErrorCode::kDuplicateMapping,
                  "mapping " + mapping.key() + " listed twice");
    }
    sum += value;
  }
  return sum / static_cast<double>(summaries.size());
}

std::string series_to_csv(const SimilaritySeries& series) {
  std::string out = "k,g,S,n_items\n";
  for (const auto& p : series.points) {
    out += std::to_string(p.k) + "," + std::to_string(p.g) + "," +
           format_double(p.s) + "," + std::to_string(series.n_items) + "\n";
  }
  return out;
}

SimilaritySeries series_from_csv(std::string_view csv,
                                 const DistanceMapping& mapping) {
  SimilaritySeries series;
  series.mapping = mapping;
  std::istringstream in{std::string(csv)};
  std::string line;
  int line_no = 0;
  bool n_set = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) {
      if (line != "k,g,S,n_items") {
        throw Error(ErrorCode::kParseError,
                    "series CSV: unexpected header '" + line + "'");
      }
      continue;
    }
    if (line.empty()) continue;
    int k = 0, g = 0, n = 0;
    char s_buf[64] = {0};
    if (std::sscanf(line.c_str(), "%d,%d,%63[^,],%d", &k, &g, s_buf, &n) != 4) {
      throw Error(ErrorCode::kParseError,
                  "series CSV line " + std::to_string(line_no) + ": malformed");
    }
    char* end = nullptr;
    const double s = std::strtod(s_buf, &end);
    if (end == s_buf || *end != '\0') {
      throw Error(ErrorCode::kParseError,
                  "series CSV line " + std::to_string(line_no) + ": bad S");
    }
    if (n_set && n != series.n_items) {
      throw Error(ErrorCode::kParseError,
                  "series CSV line " + std::to_string(line_no) +
                      ": n_items differs between points");
    }
    series.n_items = n;
    n_set = true;
    if (!series.points.empty() && k <= series.points.back().k) {
      throw Error(ErrorCode::kParseError,
                  "series CSV line " + std::to_string(line_no) +
                      ": k must be strictly increasing");
    }
    series.points.push_back({k, g, s});
  }
  if (line_no == 0) {
    throw Error(ErrorCode::kParseError, "series CSV is empty");
  }
  return series;
}

std::string series_file_name(const DistanceMapping& mapping) {
  return "series_" + mapping.key() + ".csv";
}

std::optional<DistanceMapping> mapping_from_file_name(std::string_view name) {
  if (!name.starts_with("series_") || !name.ends_with(".csv")) {
    return std::nullopt;
  }
  std::string_view stem = name.substr(7, name.size() - 7 - 4);
  for (std::size_t i = 0; i < kDirectionNames.size(); ++i) {
    const std::string_view d = kDirectionNames[i];
    if (stem.size() > d.size() + 1 && stem.starts_with(d) &&
        stem[d.size()] == '_') {
      return DistanceMapping{static_cast<Direction>(i),
                             std::string(stem.substr(d.size() + 1))};
    }
  }
  return std::nullopt;
}

std::vector<SimilaritySeries> read_all_series(
    const std::filesystem::path& run_dir) {
  std::vector<SimilaritySeries> out;
  const auto dir = run_dir / "metrics";
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto mapping = mapping_from_file_name(entry.path().filename().string());
    if (!mapping) continue;
    out.push_back(series_from_csv(read_file(entry.path()), *mapping));
  }
  std::sort(out.begin(), out.end(),
            [](const SimilaritySeries& a, const SimilaritySeries& b) {
              return a.mapping < b.mapping;
            });
  return out;
}

}  // namespace driftline
