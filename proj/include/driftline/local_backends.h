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

#ifndef DRIFTLINE_LOCAL_BACKENDS_H_
#define DRIFTLINE_LOCAL_BACKENDS_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "driftline/backend.h"
#include "driftline/geneval.h"

namespace driftline {

// Seeded stand-in for a unified model: images are random rectangles keyed by
// (prompt, seed); captions are picked from a small vocabulary keyed by the
// image bytes. Pure and reentrant.
class MockBackend : public ModelBackend {
 public:
  explicit MockBackend(std::string model_id = "mock")
      : model_id_(std::move(model_id)) {}

  std::string model_id() const override { return model_id_; }
  T2IResult t2i(std::string_view prompt, std::uint64_t seed,
                ImageSize size) override;
  I2TResult i2t(std::string_view image, std::string_view instruction) override;
  Json describe() const override;

 private:
  std::string model_id_;
};

// Deterministic test backbone. Text embeds as a normalized sum of per-token
// pseudo-random vectors (so captions sharing words are similar); images embed
// as a pseudo-random vector keyed by their bytes.
class HashEmbedder : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 64) : dim_(dim) {}

  std::vector<double> embed(const Payload& payload,
                            std::string_view backbone) override;

 private:
  std::size_t dim_;
};

// An orthonormal pair spanning a 2-plane.
struct Plane {
  std::vector<double> a;
  std::vector<double> b;
};

Plane seeded_plane(std::size_t dim, std::uint64_t seed);

// Rotation by `angle` radians in `plane`, applied to the whole vector
// (components outside the plane are untouched).
std::vector<double> rotate_in_plane(std::span<const double> v, double angle,
                                    const Plane& plane);

// Rotates a unit latent by exactly `drift_rate` radians inside the 2-plane
// spanned by the latent and a direction drawn from `step_seed`. The result is
// unit norm. A zero rate returns the input unchanged.
std::vector<double> synthetic_step(std::span<const double> latent,
                                   double drift_rate, std::uint64_t step_seed);

struct SyntheticOptions {
  std::size_t dim = 16;
  double drift_rate = 0.1;
  // When set, every origin latent lies in one seeded plane and every hop
  // rotates inside it, so similarity to the origin after k cycles is exactly
  // cos(k * drift_rate). Otherwise each hop picks a fresh plane.
  bool fixed_plane = true;
  std::uint64_t seed = 0;
  std::string model_id = "synthetic";
  // Prompts whose scenes are rendered into images and reported by detect().
  std::vector<GenEvalPrompt> scenes;
};

// Ground-truth drift channel. Every artifact carries its latent: images in a
// pixel-encoded header, captions in a trailing tag. One rotation is applied
// per T2I/I2T cycle, on the hop that leaves the origin modality, so the k-th
// text and the k-th image of a chain have both seen exactly k rotations.
// A zero-drift Text-First chain returns the origin text verbatim.
class SyntheticChannel : public ModelBackend, public Embedder, public Detector {
 public:
  explicit SyntheticChannel(SyntheticOptions options);

  std::string model_id() const override { return options_.model_id; }
  T2IResult t2i(std::string_view prompt, std::uint64_t seed,
                ImageSize size) override;
  I2TResult i2t(std::string_view image, std::string_view instruction) override;
  Json describe() const override;

  std::vector<double> embed(const Payload& payload,
                            std::string_view backbone) override;

  // Reports the scene objects with confidence equal to the (clamped) cosine
  // between the image latent and its origin, times a fixed per-object factor
  // in [0.9, 1].
  std::vector<Detection> detect(std::string_view image,
                                std::span<const std::string> queries) override;

  // Latent a payload with no drift header maps to.
  std::vector<double> origin_latent(std::string_view digest_hex) const;

  const SyntheticOptions& options() const { return options_; }

 private:
  struct State;

  State text_state(std::string_view text) const;
  State image_state(std::string_view image) const;
  std::string format_text(const State& state) const;
  std::string render_image(const State& state, ImageSize size) const;
  std::vector<double> advance(const std::vector<double>& latent,
                              std::string_view input) const;

  SyntheticOptions options_;
  Plane plane_;
  std::map<std::string, GenEvalPrompt> scenes_by_digest_;
};

// Replays recorded chains. Responses are looked up by the SHA-256 of the
// request payload, so a chain whose inputs were recorded replays verbatim,
// backend_meta included. Unrecorded inputs raise kProtocolError. Canned
// detections come from an optional detections.json mapping image SHA-256 to
// wire-format detection lists.
class ReplayBackend : public ModelBackend, public Detector {
 public:
  explicit ReplayBackend(const std::filesystem::path& fixture_root);

  std::string model_id() const override { return model_id_; }
  T2IResult t2i(std::string_view prompt, std::uint64_t seed,
                ImageSize size) override;
  I2TResult i2t(std::string_view image, std::string_view instruction) override;
  Json describe() const override;

  std::vector<Detection> detect(std::string_view image,
                                std::span<const std::string> queries) override;

  std::size_t recorded_responses() const { return responses_.size(); }

 private:
  struct Response {
    std::string payload;
    Meta meta;
  };

  std::filesystem::path root_;
  std::string model_id_;
  std::map<std::string, Response> responses_;  // "t2i:<sha>" / "i2t:<sha>"
  std::map<std::string, std::vector<Detection>> detections_;
};

}  // namespace driftline

#endif  // DRIFTLINE_LOCAL_BACKENDS_H_
