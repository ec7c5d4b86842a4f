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

#include "driftline/dataset.h"

#include <algorithm>
#include <random>
#include <set>

#include "driftline/image.h"
#include "driftline/random.h"
#include "driftline/status.h"
#include "httplib.h"

namespace driftline {

std::string_view source_name(Source s) {
  return s == Source::kNoCaps ? "nocaps" : "docci";
}

Source parse_source(std::string_view name) {
  if (name == "nocaps") return Source::kNoCaps;
  if (name == "docci") return Source::kDocci;
  throw Error(ErrorCode::kParseError,
              "unknown source '" + std::string(name) + "'");
}

Json pair_to_json(const DatasetPair& p) {
  Json j = {{"pair_id", p.pair_id},
            {"source", std::string(source_name(p.source))},
            {"image_ref", p.image_ref},
            {"caption", p.caption}};
  if (!p.image_hash.empty()) j["image_hash"] = p.image_hash;
  return j;
}

namespace {

std::string string_field(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw Error(ErrorCode::kParseError, std::string("missing field '") + key + "'");
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kParseError,
                std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

DatasetPair pair_from_json(const Json& j) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kParseError, "dataset record is not an object");
  }
  DatasetPair p;
  p.pair_id = string_field(j, "pair_id");
  p.source = parse_source(string_field(j, "source"));
  p.image_ref = string_field(j, "image_ref");
  p.caption = string_field(j, "caption");
  if (j.contains("image_hash")) p.image_hash = string_field(j, "image_hash");
  if (p.pair_id.empty()) throw Error(ErrorCode::kParseError, "empty pair_id");
  if (p.caption.empty()) {
    throw Error(ErrorCode::kParseError, "field 'caption' is empty");
  }
  return p;
}

std::vector<DatasetPair> parse_index(std::string_view contents) {
  std::vector<DatasetPair> out;
  std::set<std::string> seen;
  std::size_t line_no = 0, pos = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string prefix = "line " + std::to_string(line_no) + ": ";
    const Json j = Json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::kParseError, prefix + "invalid JSON");
    }
    DatasetPair p;
    try {
      p = pair_from_json(j);
    } catch (const Error& e) {
      throw Error(e.code(), prefix + e.detail());
    }
    if (!seen.insert(p.pair_id).second) {
      throw Error(ErrorCode::kDuplicateId,
                  prefix + "duplicate pair_id '" + p.pair_id + "'");
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<DatasetPair> load_index(const std::filesystem::path& path) {
  return parse_index(read_file(path));
}

std::string dataset_fingerprint(std::span<const DatasetPair> pairs) {
  std::vector<const DatasetPair*> sorted;
  for (const auto& p : pairs) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->pair_id < b->pair_id; });
  std::string lines;
  for (const auto* p : sorted) {
    lines += p->pair_id + "\t" + std::string(source_name(p->source)) + "\t" +
             sha256_hex(p->caption) + "\t" + p->image_hash + "\n";
  }
  return sha256_hex(lines);
}

namespace {

void draw(std::vector<DatasetPair>& index, Source expected, int n,
          std::mt19937_64& rng, std::vector<DatasetPair>& out) {
  std::sort(index.begin(), index.end(),
            [](const auto& a, const auto& b) { return a.pair_id < b.pair_id; });
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i].source != expected) {
      throw Error(ErrorCode::kInvalidArgument,
                  "pair '" + index[i].pair_id + "' is not from " +
                      std::string(source_name(expected)));
    }
    if (i > 0 && index[i].pair_id == index[i - 1].pair_id) {
      throw Error(ErrorCode::kDuplicateId,
                  "duplicate pair_id '" + index[i].pair_id + "'");
    }
  }
  if (index.size() < static_cast<std::size_t>(n)) {
    throw Error(ErrorCode::kInsufficientSource,
                std::string(source_name(expected)) + " index has " +
                    std::to_string(index.size()) + " pairs, need " +
                    std::to_string(n));
  }
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    const std::size_t j = i + uniform_below(rng, index.size() - i);
    std::swap(index[i], index[j]);
    out.push_back(index[i]);
  }
}

}  // namespace

Nd400 sample_nd400(std::vector<DatasetPair> nocaps,
                   std::vector<DatasetPair> docci, std::uint64_t seed,
                   int per_source) {
  if (per_source < 0) {
    throw Error(ErrorCode::kInvalidArgument, "per_source must be >= 0");
  }
  Nd400 out;
  out.seed = seed;
  std::mt19937_64 rng(seed);
  draw(nocaps, Source::kNoCaps, per_source, rng, out.pairs);
  draw(docci, Source::kDocci, per_source, rng, out.pairs);
  std::sort(out.pairs.begin(), out.pairs.end(),
            [](const auto& a, const auto& b) { return a.pair_id < b.pair_id; });
  for (std::size_t i = 1; i < out.pairs.size(); ++i) {
    if (out.pairs[i].pair_id == out.pairs[i - 1].pair_id) {
      throw Error(ErrorCode::kDuplicateId,
                  "pair_id '" + out.pairs[i].pair_id + "' appears in both sources");
    }
  }
  out.fingerprint = dataset_fingerprint(out.pairs);
  return out;
}

std::string fetch_image(const std::string& ref,
                        const std::filesystem::path& base) {
  if (ref.starts_with("http://") || ref.starts_with("https://")) {
    const std::size_t host_end = ref.find('/', ref.find("//") + 2);
    const std::string origin = ref.substr(0, host_end);
    const std::string path =
        host_end == std::string::npos ? "/" : ref.substr(host_end);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(30);
    client.set_read_timeout(60);
    auto res = client.Get(path);
    if (!res) {
      throw Error(ErrorCode::kIoError,
                  "fetch " + ref + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::kIoError,
                  "fetch " + ref + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }
  std::filesystem::path p(ref);
  if (p.is_relative()) p = base / p;
  return read_file(p);
}

Nd400 ingest(Nd400 selection, const std::filesystem::path& ref_base,
             const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "images");
  for (auto& p : selection.pairs) {
    const std::string bytes = fetch_image(p.image_ref, ref_base);
    try {
      decode_image(bytes);
    } catch (const Error& e) {
      throw Error(ErrorCode::kIoError,
                  "image of pair '" + p.pair_id + "' does not decode: " + e.detail());
    }
    const std::string hash = sha256_hex(bytes);
    if (!p.image_hash.empty() && p.image_hash != hash) {
      throw Error(ErrorCode::kIntegrityError,
                  "image of pair '" + p.pair_id + "' does not match its hash");
    }
    const std::string ext = looks_like_png(bytes) ? ".png" : ".jpg";
    const std::string rel = "images/" + p.pair_id + ext;
    write_file_atomic(out_dir / rel, bytes);
    p.image_ref = rel;
    p.image_hash = hash;
  }
  selection.fingerprint = dataset_fingerprint(selection.pairs);
  write_file_atomic(out_dir / "nd400.json",
                    canonical_json(nd400_to_json(selection)));
  return selection;
}

Json nd400_to_json(const Nd400& nd) {
  Json pairs = Json::array();
  int nocaps = 0, docci = 0;
  for (const auto& p : nd.pairs) {
    pairs.push_back(pair_to_json(p));
    (p.source == Source::kNoCaps ? nocaps : docci)++;
  }
  return Json{{"seed", nd.seed},
              {"fingerprint", nd.fingerprint},
              {"counts", {{"nocaps", nocaps}, {"docci", docci}}},
              {"pairs", std::move(pairs)}};
}

Nd400 nd400_from_json(const Json& j) {
  Nd400 nd;
  try {
    nd.seed = j.at("seed").get<std::uint64_t>();
    nd.fingerprint = j.at("fingerprint").get<std::string>();
    for (const Json& p : j.at("pairs")) nd.pairs.push_back(pair_from_json(p));
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("malformed nd400: ") + e.what());
  }
  if (dataset_fingerprint(nd.pairs) != nd.fingerprint) {
    throw Error(ErrorCode::kIntegrityError,
                "nd400 fingerprint does not match its pairs");
  }
  return nd;
}

Nd400 load_nd400(const std::filesystem::path& path) {
  const Json j = Json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kParseError, "malformed " + path.string());
  }
  return nd400_from_json(j);
}

}  // namespace driftline
