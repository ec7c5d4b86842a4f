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

#include "driftline/backend.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include "driftline/status.h"

namespace driftline {

std::string_view modality_name(Modality m) {
  return m == Modality::kText ? "text" : "image";
}

Modality parse_modality(std::string_view name) {
  if (name == "text") return Modality::kText;
  if (name == "image") return Modality::kImage;
  throw Error(ErrorCode::kParseError,
              "unknown modality '" + std::string(name) + "'");
}

std::string finish_caption(std::string_view raw) {
  std::string text = rstrip(raw);
  if (text.empty()) {
    throw Error(ErrorCode::kProtocolError, "backend returned an empty caption");
  }
  return text;
}

std::vector<double> normalize_embedding(std::vector<double> vec,
                                        std::optional<std::size_t> dim) {
  if (vec.empty()) {
    throw Error(ErrorCode::kProtocolError, "empty embedding vector");
  }
  if (dim && vec.size() != *dim) {
    throw Error(ErrorCode::kProtocolError,
                "embedding dimension " + std::to_string(vec.size()) +
                    " does not match declared " + std::to_string(*dim));
  }
  double sum = 0;
  for (double v : vec) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::kProtocolError, "non-finite embedding component");
    }
    sum += v * v;
  }
  if (sum == 0) throw Error(ErrorCode::kProtocolError, "zero embedding vector");
  const double norm = std::sqrt(sum);
  for (double& v : vec) v /= norm;
  return vec;
}

void validate_detections(std::span<const Detection> dets,
                         std::span<const std::string> queries) {
  for (const Detection& d : dets) {
    if (std::find(queries.begin(), queries.end(), d.label) == queries.end()) {
      throw Error(ErrorCode::kProtocolError,
                  "detection label '" + d.label + "' was not queried");
    }
    if (!(d.confidence >= 0.0 && d.confidence <= 1.0)) {
      throw Error(ErrorCode::kProtocolError,
                  "detection confidence " + format_double(d.confidence) +
                      " outside [0,1]");
    }
    const Box& b = d.box;
    const bool in_unit = b.x0 >= 0 && b.y0 >= 0 && b.x1 <= 1 && b.y1 <= 1;
    if (!(b.x0 < b.x1 && b.y0 < b.y1) || !in_unit) {
      throw Error(ErrorCode::kProtocolError,
                  "detection box is not a normalized (x0<x1, y0<y1) box");
    }
  }
}

std::string conform_image(std::string_view bytes, ImageSize size, Meta& meta) {
  Image image = decode_image(bytes);
  if (image.size() == size && looks_like_png(bytes)) return std::string(bytes);
  if (image.size() != size) {
    meta["native_width"] = image.width;
    meta["native_height"] = image.height;
    image = resize_nearest(image, size);
  }
  return encode_png(image);
}

std::string_view model_family_name(ModelFamily family) {
  switch (family) {
    case ModelFamily::kSharedWeights: return "shared_weights";
    case ModelFamily::kPartiallyShared: return "partially_shared";
    case ModelFamily::kDecoupled: return "decoupled";
  }
  return "unknown";
}

std::span<const BackendProfile> known_profiles() {
  static const std::array<BackendProfile, 7> kProfiles = {{
      {"bagel", ModelFamily::kSharedWeights,
       "14B mixture-of-transformers (7B active)", {1024, 1024}, ""},
      {"show-o", ModelFamily::kSharedWeights, "1.3B", {512, 512}, ""},
      {"janus-1.3b", ModelFamily::kSharedWeights, "1.3B", {1024, 1024}, ""},
      {"janus-pro-7b", ModelFamily::kSharedWeights, "7B", {1024, 1024}, ""},
      {"vila-u", ModelFamily::kSharedWeights, "7B", {256, 256}, ""},
      {"blip-3o", ModelFamily::kPartiallyShared, "4B", {1024, 1024}, ""},
      {"llava-1.5+sdxl", ModelFamily::kDecoupled, "7B + 3.5B", {1024, 1024},
       ""},
  }};
  return kProfiles;
}

std::optional<BackendProfile> find_profile(std::string_view model_id) {
  std::string lowered(model_id);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (const BackendProfile& p : known_profiles()) {
    if (p.model_id == lowered) return p;
  }
  return std::nullopt;
}

Json profile_to_json(const BackendProfile& profile) {
  return Json{{"model_id", profile.model_id},
              {"family", model_family_name(profile.family)},
              {"param_count", profile.param_count},
              {"native_width", profile.native_resolution.width},
              {"native_height", profile.native_resolution.height},
              {"endpoint", profile.endpoint}};
}

}  // namespace driftline
