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

#include "driftline/local_backends.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstring>
#include <numbers>
#include <random>

#include "driftline/chain.h"
#include "driftline/random.h"
#include "driftline/status.h"

namespace driftline {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize_in_place(std::vector<double>& v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

std::vector<double> gaussian_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> v(dim);
  for (double& x : v) x = standard_normal(rng);
  return v;
}

std::uint64_t digest_seed(std::string_view bytes) {
  return seed_from_hex(sha256_hex(bytes));
}

}  // namespace

// ---------------------------------------------------------------------------
// MockBackend

T2IResult MockBackend::t2i(std::string_view prompt, std::uint64_t seed,
                           ImageSize size) {
  if (prompt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "t2i prompt must be non-empty");
  }
  std::mt19937_64 rng(mix_seed(digest_seed(prompt), seed));
  const auto channel = [&] { return static_cast<std::uint8_t>(rng() & 0xFF); };
  Image image(size.width, size.height, channel(), channel(), channel());
  for (int i = 0; i < 3; ++i) {
    const int x0 = static_cast<int>(uniform_below(rng, size.width));
    const int y0 = static_cast<int>(uniform_below(rng, size.height));
    const int x1 = x0 + 1 + static_cast<int>(uniform_below(rng, size.width));
    const int y1 = y0 + 1 + static_cast<int>(uniform_below(rng, size.height));
    image.fill_rect(x0, y0, x1, y1, channel(), channel(), channel());
  }
  return {encode_png(image), Meta{{"backend", "mock"}}};
}

I2TResult MockBackend::i2t(std::string_view image,
                           std::string_view /*instruction*/) {
  decode_image(image);  // contract: input must be decodable
  static constexpr std::array<std::string_view, 8> kAdjectives = {
      "red", "small", "wooden", "bright", "old", "striped", "tall", "quiet"};
  static constexpr std::array<std::string_view, 8> kNouns = {
      "dog", "bench", "clock", "bicycle", "teapot", "kite", "boat", "lamp"};
  std::mt19937_64 rng(digest_seed(image));
  std::string text = "a photo of a ";
  text += kAdjectives[uniform_below(rng, kAdjectives.size())];
  text += ' ';
  text += kNouns[uniform_below(rng, kNouns.size())];
  text += " next to a ";
  text += kAdjectives[uniform_below(rng, kAdjectives.size())];
  text += ' ';
  text += kNouns[uniform_below(rng, kNouns.size())];
  return {finish_caption(text), Meta{{"backend", "mock"}}};
}

Json MockBackend::describe() const {
  return Json{{"kind", "mock"}, {"model_id", model_id_}};
}

// ---------------------------------------------------------------------------
// HashEmbedder

std::vector<double> HashEmbedder::embed(const Payload& payload,
                                        std::string_view backbone) {
  const std::uint64_t backbone_seed = digest_seed(backbone);
  std::vector<double> sum(dim_, 0.0);
  if (payload.kind == Modality::kText) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : payload.bytes) {
      const auto uc = static_cast<unsigned char>(c);
      if (std::isalnum(uc) || uc >= 0x80) {
        current.push_back(static_cast<char>(std::tolower(uc)));
      } else if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    if (tokens.empty()) tokens.push_back(payload.bytes);
    for (const auto& token : tokens) {
      const auto v = gaussian_vector(dim_, mix_seed(digest_seed(token),
                                                    backbone_seed));
      for (std::size_t i = 0; i < dim_; ++i) sum[i] += v[i];
    }
  } else {
    sum = gaussian_vector(dim_, mix_seed(digest_seed(payload.bytes),
                                         backbone_seed));
  }
  return normalize_embedding(std::move(sum), dim_);
}

// ---------------------------------------------------------------------------
// Rotations

Plane seeded_plane(std::size_t dim, std::uint64_t seed) {
  if (dim < 2) {
    throw Error(ErrorCode::kInvalidArgument, "a plane needs dimension >= 2");
  }
  std::mt19937_64 rng(seed);
  Plane plane{std::vector<double>(dim), std::vector<double>(dim)};
  for (double& x : plane.a) x = standard_normal(rng);
  normalize_in_place(plane.a);
  for (double& x : plane.b) x = standard_normal(rng);
  const double proj = dot(plane.a, plane.b);
  for (std::size_t i = 0; i < dim; ++i) plane.b[i] -= proj * plane.a[i];
  normalize_in_place(plane.b);
  return plane;
}

std::vector<double> rotate_in_plane(std::span<const double> v, double angle,
                                    const Plane& plane) {
  if (v.size() != plane.a.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "latent/plane dimension differ");
  }
  const double pa = dot(plane.a, v);
  const double pb = dot(plane.b, v);
  const double c = std::cos(angle) - 1.0;
  const double s = std::sin(angle);
  const double da = c * pa - s * pb;
  const double db = c * pb + s * pa;
  std::vector<double> out(v.begin(), v.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += da * plane.a[i] + db * plane.b[i];
  }
  return out;
}

std::vector<double> synthetic_step(std::span<const double> latent,
                                   double drift_rate, std::uint64_t step_seed) {
  if (latent.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "latent needs dimension >= 2");
  }
  if (std::abs(std::sqrt(dot(latent, latent)) - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "latent must have unit norm");
  }
  if (!(drift_rate >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "drift_rate must be >= 0");
  }
  std::vector<double> out(latent.begin(), latent.end());
  if (drift_rate == 0.0) return out;

  std::mt19937_64 rng(step_seed);
  std::vector<double> w(latent.size());
  double norm = 0;
  while (norm < 1e-6) {
    for (double& x : w) x = standard_normal(rng);
    const double proj = dot(w, latent);
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= proj * latent[i];
    norm = std::sqrt(dot(w, w));
  }
  const double c = std::cos(drift_rate);
  const double s = std::sin(drift_rate);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = c * latent[i] + s * (w[i] / norm);
  }
  return out;
}

// ---------------------------------------------------------------------------
// SyntheticChannel

struct SyntheticChannel::State {
  char start = 'T';
  std::string anchor_digest;
  std::string anchor_text;
  std::vector<double> latent;
};

namespace {

constexpr std::string_view kTextTag = "\n[[dl ";
constexpr std::string_view kImageMagic = "DLS1";

std::string latent_to_hex(std::span<const double> latent) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(latent.size() * 16);
  for (double v : latent) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int shift = 60; shift >= 0; shift -= 4) {
      out.push_back(kHex[(bits >> shift) & 0xF]);
    }
  }
  return out;
}

std::vector<double> latent_from_hex(std::string_view hex, std::size_t dim) {
  if (hex.size() != dim * 16) {
    throw Error(ErrorCode::kProtocolError,
                "synthetic latent has the wrong dimension");
  }
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const std::string chunk(hex.substr(i * 16, 16));
    out[i] = std::bit_cast<double>(std::stoull(chunk, nullptr, 16));
  }
  return out;
}

// Parses "key=value" fields separated by `sep`.
std::map<std::string, std::string> parse_fields(std::string_view body,
                                                char sep) {
  std::map<std::string, std::string> fields;
  std::size_t pos = 0;
  while (pos < body.size()) {
    std::size_t end = body.find(sep, pos);
    if (end == std::string_view::npos) end = body.size();
    const std::string_view item = body.substr(pos, end - pos);
    const std::size_t eq = item.find('=');
    if (eq != std::string_view::npos) {
      fields[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
    }
    pos = end + 1;
  }
  return fields;
}

struct SceneObject {
  std::string label;
  Box box;
  std::size_t color = 10;  // gray
};

std::vector<SceneObject> scene_layout(const GenEvalPrompt& p) {
  const auto color_of = [&](std::size_t i) {
    return i < p.colors.size() ? color_index(p.colors[i]) : std::size_t{10};
  };
  std::vector<SceneObject> out;
  switch (p.task) {
    case Task::kSingleObject:
    case Task::kColors:
      out.push_back({p.objects[0], {0.30, 0.40, 0.70, 0.85}, color_of(0)});
      break;
    case Task::kTwoObject:
    case Task::kColorAttribute:
      out.push_back({p.objects[0], {0.06, 0.40, 0.44, 0.85}, color_of(0)});
      out.push_back({p.objects[1], {0.56, 0.40, 0.94, 0.85}, color_of(1)});
      break;
    case Task::kCounting: {
      const int n = p.count.value_or(1);
      const double slot = 0.9 / n;
      for (int i = 0; i < n; ++i) {
        const double x0 = 0.05 + slot * i + slot * 0.15;
        out.push_back({p.objects[0], {x0, 0.45, x0 + slot * 0.7, 0.80}, 10});
      }
      break;
    }
    case Task::kPosition: {
      Box subject{0.06, 0.45, 0.40, 0.80};
      Box reference{0.60, 0.45, 0.94, 0.80};
      switch (p.relation.value_or(Relation::kLeftOf)) {
        case Relation::kLeftOf: break;
        case Relation::kRightOf: std::swap(subject, reference); break;
        case Relation::kAbove:
          subject = {0.30, 0.28, 0.70, 0.55};
          reference = {0.30, 0.68, 0.70, 0.95};
          break;
        case Relation::kBelow:
          reference = {0.30, 0.28, 0.70, 0.55};
          subject = {0.30, 0.68, 0.70, 0.95};
          break;
        case Relation::kNone: break;
      }
      out.push_back({p.objects[0], subject, 10});
      out.push_back({p.objects[1], reference, 3});
      break;
    }
  }
  return out;
}

}  // namespace

SyntheticChannel::SyntheticChannel(SyntheticOptions options)
    : options_(std::move(options)) {
  if (options_.dim < 2) {
    throw Error(ErrorCode::kConfigError, "synthetic_dim must be >= 2");
  }
  if (!(options_.drift_rate >= 0.0)) {
    throw Error(ErrorCode::kConfigError, "synthetic_drift_rate must be >= 0");
  }
  plane_ = seeded_plane(options_.dim, mix_seed(options_.seed, 0x504C414E45ULL));
  for (const auto& p : options_.scenes) {
    scenes_by_digest_.emplace(sha256_hex(p.text), p);
  }
}

std::vector<double> SyntheticChannel::origin_latent(
    std::string_view digest_hex) const {
  const std::uint64_t seed = mix_seed(seed_from_hex(digest_hex), options_.seed);
  if (options_.fixed_plane) {
    std::mt19937_64 rng(seed);
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    std::vector<double> v(options_.dim);
    const double c = std::cos(phi), s = std::sin(phi);
    for (std::size_t i = 0; i < v.size(); ++i) {
      v[i] = c * plane_.a[i] + s * plane_.b[i];
    }
    return v;
  }
  auto v = gaussian_vector(options_.dim, seed);
  normalize_in_place(v);
  return v;
}

std::vector<double> SyntheticChannel::advance(const std::vector<double>& latent,
                                              std::string_view input) const {
  if (options_.fixed_plane) {
    return rotate_in_plane(latent, options_.drift_rate, plane_);
  }
  return synthetic_step(latent, options_.drift_rate,
                        mix_seed(digest_seed(input), options_.seed));
}

SyntheticChannel::State SyntheticChannel::text_state(
    std::string_view text) const {
  State state;
  const std::size_t tag = text.rfind(kTextTag);
  if (tag == std::string_view::npos || !text.ends_with("]]")) {
    state.start = 'T';
    state.anchor_text = std::string(text);
    state.anchor_digest = sha256_hex(text);
    state.latent = origin_latent(state.anchor_digest);
    return state;
  }
  const std::string_view body =
      text.substr(tag + kTextTag.size(),
                  text.size() - tag - kTextTag.size() - 2);
  auto fields = parse_fields(body, ' ');
  if (!fields.count("start") || !fields.count("anchor") ||
      !fields.count("latent") || fields["start"].size() != 1) {
    throw Error(ErrorCode::kProtocolError, "malformed synthetic caption tag");
  }
  state.start = fields["start"][0];
  state.anchor_digest = fields["anchor"];
  if (state.start == 'T') state.anchor_text = std::string(text.substr(0, tag));
  state.latent = latent_from_hex(fields["latent"], options_.dim);
  return state;
}

std::string SyntheticChannel::format_text(const State& state) const {
  if (state.start == 'T' && state.latent == origin_latent(state.anchor_digest)) {
    return state.anchor_text;
  }
  const std::string visible =
      state.start == 'T' ? state.anchor_text
                         : "a synthetic scene " + state.anchor_digest.substr(0, 12);
  return visible + std::string(kTextTag) + "start=" + state.start +
         " anchor=" + state.anchor_digest +
         " latent=" + latent_to_hex(state.latent) + "]]";
}

SyntheticChannel::State SyntheticChannel::image_state(
    std::string_view image) const {
  const Image decoded = decode_image(image);
  const auto& px = decoded.rgb;
  State state;
  if (px.size() < kImageMagic.size() ||
      std::memcmp(px.data(), kImageMagic.data(), kImageMagic.size()) != 0) {
    state.start = 'I';
    state.anchor_digest = sha256_hex(image);
    state.latent = origin_latent(state.anchor_digest);
    return state;
  }
  const auto* begin = reinterpret_cast<const char*>(px.data());
  const auto* nul = static_cast<const char*>(
      std::memchr(begin, '\0', px.size()));
  if (nul == nullptr) {
    throw Error(ErrorCode::kProtocolError, "unterminated synthetic image header");
  }
  const std::string_view header(begin + kImageMagic.size(),
                                static_cast<std::size_t>(nul - begin) -
                                    kImageMagic.size());
  auto fields = parse_fields(header, ';');
  if (!fields.count("start") || !fields.count("anchor") ||
      !fields.count("latent") || !fields.count("text") ||
      fields["start"].size() != 1) {
    throw Error(ErrorCode::kProtocolError, "malformed synthetic image header");
  }
  state.start = fields["start"][0];
  state.anchor_digest = fields["anchor"];
  state.anchor_text = base64_decode(fields["text"]);
  state.latent = latent_from_hex(fields["latent"], options_.dim);
  return state;
}

std::string SyntheticChannel::render_image(const State& state,
                                           ImageSize size) const {
  const auto shade = [&](std::size_t i) {
    const double v = i < state.latent.size() ? state.latent[i] : 0.0;
    return static_cast<std::uint8_t>(std::clamp(96.0 + 64.0 * v, 0.0, 255.0));
  };
  Image image(size.width, size.height, shade(0), shade(1), shade(2));

  std::string header(kImageMagic);
  header += "start=";
  header += state.start;
  header += ";anchor=" + state.anchor_digest;
  header += ";latent=" + latent_to_hex(state.latent);
  header += ";text=" + base64_encode(state.anchor_text);
  header.push_back('\0');
  const std::size_t capacity =
      static_cast<std::size_t>(size.width) * (size.height / 4) * 3;
  if (header.size() > capacity) {
    throw Error(ErrorCode::kProtocolError,
                "image size too small to carry the synthetic header");
  }
  std::memcpy(image.rgb.data(), header.data(), header.size());

  if (auto it = scenes_by_digest_.find(state.anchor_digest);
      it != scenes_by_digest_.end()) {
    for (const SceneObject& obj : scene_layout(it->second)) {
      const auto& rgb = kColorRgb[obj.color];
      image.fill_rect(static_cast<int>(std::floor(obj.box.x0 * size.width)),
                      static_cast<int>(std::floor(obj.box.y0 * size.height)),
                      static_cast<int>(std::ceil(obj.box.x1 * size.width)),
                      static_cast<int>(std::ceil(obj.box.y1 * size.height)),
                      rgb[0], rgb[1], rgb[2]);
    }
  }
  return encode_png(image);
}

T2IResult SyntheticChannel::t2i(std::string_view prompt,
                                std::uint64_t /*seed*/, ImageSize size) {
  if (prompt.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "t2i prompt must be non-empty");
  }
  State state = text_state(prompt);
  if (state.start == 'T') state.latent = advance(state.latent, prompt);
  return {render_image(state, size), Meta{{"backend", "synthetic"}}};
}

I2TResult SyntheticChannel::i2t(std::string_view image,
                                std::string_view /*instruction*/) {
  State state = image_state(image);
  if (state.start == 'I') state.latent = advance(state.latent, image);
  return {finish_caption(format_text(state)), Meta{{"backend", "synthetic"}}};
}

Json SyntheticChannel::describe() const {
  return Json{{"kind", "synthetic"},
              {"model_id", options_.model_id},
              {"dim", options_.dim},
              {"drift_rate", options_.drift_rate},
              {"fixed_plane", options_.fixed_plane},
              {"seed", options_.seed}};
}

std::vector<double> SyntheticChannel::embed(const Payload& payload,
                                            std::string_view /*backbone*/) {
  State state = payload.kind == Modality::kText ? text_state(payload.bytes)
                                                : image_state(payload.bytes);
  return std::move(state.latent);
}

std::vector<Detection> SyntheticChannel::detect(
    std::string_view image, std::span<const std::string> queries) {
  if (queries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "detect needs at least one query");
  }
  const State state = image_state(image);
  std::vector<Detection> out;
  auto it = scenes_by_digest_.find(state.anchor_digest);
  if (it == scenes_by_digest_.end()) return out;
  const auto origin = origin_latent(state.anchor_digest);
  const double fidelity = std::clamp(dot(state.latent, origin), 0.0, 1.0);
  const auto objects = scene_layout(it->second);
  const std::uint64_t base = seed_from_hex(state.anchor_digest);
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (std::find(queries.begin(), queries.end(), objects[i].label) ==
        queries.end()) {
      continue;
    }
    std::mt19937_64 rng(mix_seed(base, i));
    const double confidence = fidelity * (0.9 + 0.1 * uniform01(rng));
    if (confidence <= 0.0) continue;
    out.push_back({objects[i].box, objects[i].label, confidence});
  }
  validate_detections(out, queries);
  return out;
}

// ---------------------------------------------------------------------------
// ReplayBackend

namespace {

std::vector<std::filesystem::path> find_chain_dirs(
    const std::filesystem::path& root) {
  std::vector<std::filesystem::path> dirs;
  if (std::filesystem::exists(root / "record.json")) {
    dirs.push_back(root);
    return dirs;
  }
  const std::filesystem::path base =
      std::filesystem::is_directory(root / "chains") ? root / "chains" : root;
  for (const auto& entry : std::filesystem::directory_iterator(base)) {
    if (entry.is_directory() &&
        std::filesystem::exists(entry.path() / "record.json")) {
      dirs.push_back(entry.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

}  // namespace

ReplayBackend::ReplayBackend(const std::filesystem::path& fixture_root)
    : root_(fixture_root) {
  if (!std::filesystem::is_directory(fixture_root)) {
    throw Error(ErrorCode::kConfigError,
                "replay fixture directory not found: " + fixture_root.string());
  }
  for (const auto& dir : find_chain_dirs(fixture_root)) {
    const ChainRecord record = read_chain(dir);
    if (model_id_.empty()) {
      model_id_ = record.spec.model_id;
    } else if (model_id_ != record.spec.model_id) {
      throw Error(ErrorCode::kConfigError,
                  "replay fixtures mix model ids '" + model_id_ + "' and '" +
                      record.spec.model_id + "'");
    }
    std::string input = record.origin_payload().bytes;
    for (const auto& art : record.artifacts) {
      std::string output = record.artifact_payload(art).bytes;
      const std::string key =
          std::string(art.modality == Modality::kImage ? "t2i:" : "i2t:") +
          sha256_hex(input);
      responses_.emplace(key, Response{output, art.backend_meta});
      input = std::move(output);
    }
  }
  if (model_id_.empty()) {
    throw Error(ErrorCode::kConfigError,
                "no recorded chains under " + fixture_root.string());
  }
  const auto det_path = fixture_root / "detections.json";
  if (std::filesystem::exists(det_path)) {
    const Json j = Json::parse(read_file(det_path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(ErrorCode::kParseError, "malformed " + det_path.string());
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      std::vector<Detection> dets;
      for (const Json& d : it.value()) {
        const auto box = d.at("box").get<std::vector<double>>();
        if (box.size() != 4) {
          throw Error(ErrorCode::kParseError, "canned box needs 4 numbers");
        }
        dets.push_back({{box[0], box[1], box[2], box[3]},
                        d.at("label").get<std::string>(),
                        d.at("confidence").get<double>()});
      }
      detections_.emplace(it.key(), std::move(dets));
    }
  }
}

T2IResult ReplayBackend::t2i(std::string_view prompt, std::uint64_t /*seed*/,
                             ImageSize /*size*/) {
  auto it = responses_.find("t2i:" + sha256_hex(prompt));
  if (it == responses_.end()) {
    throw Error(ErrorCode::kProtocolError, "replay has no recorded t2i response");
  }
  return {it->second.payload, it->second.meta};
}

I2TResult ReplayBackend::i2t(std::string_view image,
                             std::string_view /*instruction*/) {
  auto it = responses_.find("i2t:" + sha256_hex(image));
  if (it == responses_.end()) {
    throw Error(ErrorCode::kProtocolError, "replay has no recorded i2t response");
  }
  return {finish_caption(it->second.payload), it->second.meta};
}

Json ReplayBackend::describe() const {
  return Json{{"kind", "replay"},
              {"model_id", model_id_},
              {"fixture", root_.generic_string()}};
}

std::vector<Detection> ReplayBackend::detect(
    std::string_view image, std::span<const std::string> queries) {
  if (queries.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "detect needs at least one query");
  }
  std::vector<Detection> out;
  auto it = detections_.find(sha256_hex(image));
  if (it == detections_.end()) return out;
  for (const Detection& d : it->second) {
    if (std::find(queries.begin(), queries.end(), d.label) != queries.end()) {
      out.push_back(d);
    }
  }
  validate_detections(out, queries);
  return out;
}

}  // namespace driftline
