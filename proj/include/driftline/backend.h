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

#ifndef DRIFTLINE_BACKEND_H_
#define DRIFTLINE_BACKEND_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftline/image.h"
#include "driftline/util.h"

namespace driftline {

enum class Modality { kText, kImage };

std::string_view modality_name(Modality m);  // "text" | "image"
Modality parse_modality(std::string_view name);

// Free-form backend metadata (latency, versions, native sizes). Always a JSON
// object.
using Meta = Json;

struct T2IResult {
  std::string image;  // PNG bytes at the requested size
  Meta meta = Meta::object();
};

struct I2TResult {
  std::string text;  // non-empty, no trailing whitespace
  Meta meta = Meta::object();
};

// A payload handed to an embedder: caption text or encoded image bytes.
struct Payload {
  Modality kind = Modality::kText;
  std::string bytes;
};

struct Box {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // normalized to [0, 1]

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  double center_x() const { return 0.5 * (x0 + x1); }
  double center_y() const { return 0.5 * (y0 + y1); }

  friend bool operator==(const Box&, const Box&) = default;
};

struct Detection {
  Box box;
  std::string label;
  double confidence = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

// The generator side of a unified model: one T2I and one I2T capability.
// Implementations must be safe to call from several chains at once.
class ModelBackend {
 public:
  virtual ~ModelBackend() = default;

  virtual std::string model_id() const = 0;
  virtual T2IResult t2i(std::string_view prompt, std::uint64_t seed,
                        ImageSize size) = 0;
  virtual I2TResult i2t(std::string_view image,
                        std::string_view instruction) = 0;
  // Endpoints and reported versions, recorded in the run manifest.
  virtual Json describe() const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  // Returns a unit-norm vector whose dimension is fixed per backbone.
  virtual std::vector<double> embed(const Payload& payload,
                                    std::string_view backbone) = 0;
};

class Detector {
 public:
  virtual ~Detector() = default;
  // Every returned label is one of `queries`; order is unspecified.
  virtual std::vector<Detection> detect(
      std::string_view image, std::span<const std::string> queries) = 0;
};

// Contract checks shared by every adapter. Each throws kProtocolError on a
// malformed value instead of defaulting it.
std::string finish_caption(std::string_view raw);
std::vector<double> normalize_embedding(std::vector<double> vec,
                                        std::optional<std::size_t> dim);
void validate_detections(std::span<const Detection> dets,
                         std::span<const std::string> queries);
// Decodes, resizes to `size` when needed and re-encodes as PNG. Records the
// native size in `meta` when a resize happened.
std::string conform_image(std::string_view bytes, ImageSize size, Meta& meta);

enum class ModelFamily { kSharedWeights, kPartiallyShared, kDecoupled };

std::string_view model_family_name(ModelFamily family);

struct BackendProfile {
  std::string model_id;
  ModelFamily family = ModelFamily::kSharedWeights;
  std::string param_count;
  ImageSize native_resolution;
  std::string endpoint;
};

// Reference metadata for the unified models the harness was built around.
std::span<const BackendProfile> known_profiles();
std::optional<BackendProfile> find_profile(std::string_view model_id);
Json profile_to_json(const BackendProfile& profile);

}  // namespace driftline

#endif  // DRIFTLINE_BACKEND_H_
