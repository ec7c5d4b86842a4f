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

#include "driftline/engine.h"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

#include "driftline/status.h"

namespace driftline {

namespace {

constexpr const char* kRecordFile = "record.json";
constexpr const char* kSpecFile = "spec.json";
constexpr const char* kManifestFile = "manifest.json";

Json parse_json_file(const std::filesystem::path& path) {
  Json j = Json::parse(read_file(path), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kParseError, "malformed " + path.string());
  }
  return j;
}

// Hash-checks every stored artifact before the record is materialized, so a
// missing or altered text file is reported as an integrity failure rather
// than a read error.
std::optional<int> first_bad_entry(const Json& record,
                                   const std::filesystem::path& dir) {
  for (const Json& a : record.value("artifacts", Json::array())) {
    const int g = a.value("g", 0);
    const auto path = dir / a.value("file", std::string());
    if (!std::filesystem::is_regular_file(path) ||
        sha256_hex(read_file(path)) != a.value("content_hash", std::string())) {
      return g;
    }
  }
  return std::nullopt;
}

std::string integrity_message(const std::string& chain_id, int g) {
  return Error(ErrorCode::kIntegrityError,
               "chain '" + chain_id + "': artifact g=" + std::to_string(g) +
                   " is missing or does not match its content_hash")
      .what();
}

struct Loaded {
  ChainRecord record;
  bool corrupt = false;
};

// Loads a chain and verifies its artifacts. On corruption the returned
// record keeps the verified prefix and is marked kFailed.
Loaded load_verified(const std::filesystem::path& dir) {
  Json j = parse_json_file(dir / kRecordFile);
  const std::optional<int> bad = first_bad_entry(j, dir);
  if (!bad) return {record_from_json(j, dir), false};
  Json& arts = j["artifacts"];
  Json kept = Json::array();
  for (const Json& a : arts) {
    if (a.value("g", 0) >= *bad) break;
    kept.push_back(a);
  }
  arts = std::move(kept);
  ChainRecord record = record_from_json(j, dir);
  record.status = ChainStatus::kFailed;
  record.error = integrity_message(record.spec.chain_id, *bad);
  return {std::move(record), true};
}

ChainRecord continue_chain(ChainRecord record, ModelBackend& backend,
                           const RunStore& store) {
  const ChainSpec& spec = record.spec;
  if (record.generations_done() >= spec.num_generations) {
    record.status = ChainStatus::kComplete;
    record.error.reset();
    store.write_record(record);
    return record;
  }

  Payload input;
  try {
    input = record.generations_done() == 0
                ? record.origin_payload()
                : record.artifact_payload(record.artifacts.back());
  } catch (const Error& e) {
    record.status = ChainStatus::kFailed;
    record.error = e.what();
    store.write_record(record);
    return record;
  }

  for (const PlannedStep& step : plan_chain(spec)) {
    if (step.g <= record.generations_done()) continue;
    std::string bytes;
    Meta meta;
    try {
      if (step.kind == StepKind::kT2I) {
        T2IResult r = backend.t2i(input.bytes, mix_seed(spec.seed, step.g),
                                  spec.image_size);
        meta = std::move(r.meta);
        if (!meta.is_object()) meta = Meta::object();
        bytes = conform_image(r.image, spec.image_size, meta);
      } else {
        I2TResult r = backend.i2t(input.bytes, spec.i2t_instruction);
        meta = std::move(r.meta);
        if (!meta.is_object()) meta = Meta::object();
        bytes = finish_caption(r.text);
      }
    } catch (const Error& e) {
      record.status = e.code() == ErrorCode::kBackendUnavailable
                          ? ChainStatus::kPartial
                          : ChainStatus::kFailed;
      record.error = e.what();
      store.write_record(record);
      return record;
    }

    const Modality modality = modality_at(spec.start, step.g);
    store.write_artifact(record, step.g, modality, bytes);
    GenerationArtifact art;
    art.g = step.g;
    art.modality = modality;
    art.parent_g = step.g - 1;
    art.backend_meta = std::move(meta);
    art.content_hash = sha256_hex(bytes);
    art.payload = modality == Modality::kText
                      ? bytes
                      : artifact_file_name(step.g, modality);
    record.artifacts.push_back(std::move(art));
    record.status = record.generations_done() == spec.num_generations
                        ? ChainStatus::kComplete
                        : ChainStatus::kPartial;
    record.error.reset();
    store.write_record(record);
    input = Payload{modality, std::move(bytes)};
  }
  return record;
}

void check_model(const ChainSpec& spec, const ModelBackend& backend) {
  if (spec.model_id != backend.model_id()) {
    throw Error(ErrorCode::kConfigError,
                "chain '" + spec.chain_id + "' was planned for model '" +
                    spec.model_id + "' but the backend serves '" +
                    backend.model_id() + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// RunStore

RunStore::RunStore(std::filesystem::path run_dir)
    : run_dir_(std::move(run_dir)) {}

std::filesystem::path RunStore::chain_dir(const std::string& chain_id) const {
  return chains_dir() / chain_id;
}

bool RunStore::has_chain(const std::string& chain_id) const {
  return std::filesystem::exists(chain_dir(chain_id) / kRecordFile);
}

ChainRecord RunStore::load(const std::string& chain_id) const {
  return read_chain(chain_dir(chain_id));
}

ChainRecord RunStore::create(const ChainSpec& spec) const {
  const auto dir = chain_dir(spec.chain_id);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIoError,
                "cannot create " + dir.string() + ": " + ec.message());
  }
  write_file_atomic(dir / kSpecFile, canonical_json(spec_to_json(spec)));
  ChainRecord record;
  record.spec = spec;
  record.dir = dir;
  record.status = spec.num_generations == 0 ? ChainStatus::kComplete
                                            : ChainStatus::kPartial;
  write_record(record);
  return record;
}

void RunStore::write_artifact(const ChainRecord& record, int g,
                              Modality modality,
                              std::string_view bytes) const {
  write_file_atomic(chain_dir(record.spec.chain_id) /
                        artifact_file_name(g, modality),
                    bytes);
}

void RunStore::write_record(const ChainRecord& record) const {
  write_file_atomic(chain_dir(record.spec.chain_id) / kRecordFile,
                    canonical_json(record_to_json(record)));
}

std::vector<std::string> RunStore::chain_ids() const {
  std::vector<std::string> ids;
  if (!std::filesystem::is_directory(chains_dir())) return ids;
  for (const auto& entry : std::filesystem::directory_iterator(chains_dir())) {
    if (entry.is_directory() &&
        std::filesystem::exists(entry.path() / kRecordFile)) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// Chain execution

std::optional<int> first_corrupt_artifact(const ChainRecord& record) {
  for (const auto& a : record.artifacts) {
    const auto path = record.dir / artifact_file_name(a.g, a.modality);
    if (!std::filesystem::is_regular_file(path) ||
        sha256_hex(read_file(path)) != a.content_hash) {
      return a.g;
    }
  }
  return std::nullopt;
}

ChainRecord run_chain(const ChainSpec& spec, ModelBackend& backend,
                      const RunStore& store) {
  validate_spec(spec);
  check_model(spec, backend);
  if (!store.has_chain(spec.chain_id)) {
    return continue_chain(store.create(spec), backend, store);
  }
  auto [existing, corrupt] = load_verified(store.chain_dir(spec.chain_id));
  if (!(existing.spec == spec)) {
    throw Error(ErrorCode::kStoreConflict,
                "chain '" + spec.chain_id +
                    "' is already stored with a different spec");
  }
  if (existing.status == ChainStatus::kComplete) {
    throw Error(ErrorCode::kStoreConflict,
                "chain '" + spec.chain_id + "' is already complete");
  }
  if (corrupt) return existing;
  return continue_chain(std::move(existing), backend, store);
}

ChainRecord resume_chain(const std::filesystem::path& chain_dir,
                         ModelBackend& backend) {
  auto [record, corrupt] = load_verified(chain_dir);
  check_model(record.spec, backend);
  if (corrupt || record.status == ChainStatus::kComplete) return record;
  if (chain_dir.filename() != record.spec.chain_id) {
    throw Error(ErrorCode::kConfigError,
                "chain directory " + chain_dir.string() +
                    " does not match chain_id '" + record.spec.chain_id + "'");
  }
  const RunStore store(chain_dir.parent_path().parent_path());
  return continue_chain(std::move(record), backend, store);
}

// ---------------------------------------------------------------------------
// Manifest

bool RunManifest::any_failed() const {
  return count(ChainStatus::kFailed) > 0;
}

int RunManifest::count(ChainStatus status) const {
  return static_cast<int>(std::count_if(
      chains.begin(), chains.end(),
      [&](const ChainSummary& c) { return c.status == status; }));
}

Json manifest_to_json(const RunManifest& m) {
  Json chains = Json::array();
  for (const auto& c : m.chains) {
    Json j = {{"chain_id", c.chain_id},
              {"status", std::string(chain_status_name(c.status))},
              {"generations_done", c.generations_done},
              {"record_hash", c.record_hash}};
    if (c.error) j["error"] = *c.error;
    chains.push_back(std::move(j));
  }
  return Json{{"run_id", m.run_id},
              {"config", m.config},
              {"dataset_fingerprint", m.dataset_fingerprint},
              {"backend", m.backend},
              {"chains", std::move(chains)},
              {"status_counts",
               {{"complete", m.count(ChainStatus::kComplete)},
                {"partial", m.count(ChainStatus::kPartial)},
                {"failed", m.count(ChainStatus::kFailed)}}},
              {"tool_version", m.tool_version},
              {"started_at", m.started_at},
              {"finished_at", m.finished_at}};
}

RunManifest manifest_from_json(const Json& j) {
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config = j.at("config");
    m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
    m.backend = j.at("backend");
    m.tool_version = j.at("tool_version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    for (const Json& c : j.at("chains")) {
      ChainSummary s;
      s.chain_id = c.at("chain_id").get<std::string>();
      s.status = parse_chain_status(c.at("status").get<std::string>());
      s.generations_done = c.at("generations_done").get<int>();
      s.record_hash = c.at("record_hash").get<std::string>();
      if (c.contains("error")) s.error = c.at("error").get<std::string>();
      m.chains.push_back(std::move(s));
    }
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("malformed manifest: ") + e.what());
  }
}

RunManifest read_manifest(const std::filesystem::path& run_dir) {
  return manifest_from_json(parse_json_file(run_dir / kManifestFile));
}

std::uint64_t chain_seed(std::uint64_t run_seed, std::string_view chain_id) {
  return mix_seed(run_seed, seed_from_hex(sha256_hex(chain_id)));
}

RunManifest run_benchmark(const std::vector<ChainSpec>& specs,
                          ModelBackend& backend,
                          const BenchmarkOptions& options) {
  if (options.concurrency < 1) {
    throw Error(ErrorCode::kConfigError, "concurrency must be >= 1");
  }
  std::set<std::string> seen;
  for (const auto& spec : specs) {
    validate_spec(spec);
    check_model(spec, backend);
    if (!seen.insert(spec.chain_id).second) {
      throw Error(ErrorCode::kConfigError,
                  "duplicate chain_id '" + spec.chain_id + "'");
    }
  }

  RunManifest manifest;
  manifest.run_id = options.run_id;
  manifest.config = options.config;
  manifest.dataset_fingerprint = options.dataset_fingerprint;
  manifest.backend = backend.describe();
  manifest.started_at = utc_timestamp();

  const RunStore store(options.run_dir);
  std::filesystem::create_directories(store.chains_dir());

  std::vector<ChainSummary> summaries(specs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < specs.size(); i = next++) {
      const ChainSpec& spec = specs[i];
      ChainSummary& s = summaries[i];
      s.chain_id = spec.chain_id;
      try {
        ChainRecord record;
        if (store.has_chain(spec.chain_id)) {
          auto loaded = load_verified(store.chain_dir(spec.chain_id));
          record = std::move(loaded.record);
          const bool corrupt = loaded.corrupt;
          if (!(record.spec == spec)) {
            throw Error(ErrorCode::kStoreConflict,
                        "chain '" + spec.chain_id +
                            "' is already stored with a different spec");
          }
          if (record.status != ChainStatus::kComplete && !corrupt) {
            record = continue_chain(std::move(record), backend, store);
          }
        } else {
          record = continue_chain(store.create(spec), backend, store);
        }
        s.status = record.status;
        s.generations_done = record.generations_done();
        s.error = record.error;
      } catch (const std::exception& e) {
        s.status = ChainStatus::kFailed;
        s.error = e.what();
      }
      const auto record_path = store.chain_dir(spec.chain_id) / kRecordFile;
      if (std::filesystem::exists(record_path)) {
        s.record_hash = sha256_hex(read_file(record_path));
      }
    }
  };

  const int threads = std::min<int>(options.concurrency,
                                     static_cast<int>(specs.size()));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  std::sort(summaries.begin(), summaries.end(),
            [](const ChainSummary& a, const ChainSummary& b) {
              return a.chain_id < b.chain_id;
            });
  manifest.chains = std::move(summaries);
  manifest.finished_at = utc_timestamp();
  write_file_atomic(options.run_dir / kManifestFile,
                    canonical_json(manifest_to_json(manifest)));
  return manifest;
}

}  // namespace driftline
