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

#ifndef DRIFTLINE_ENGINE_H_
#define DRIFTLINE_ENGINE_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "driftline/backend.h"
#include "driftline/chain.h"
#include "driftline/util.h"

namespace driftline {

// On-disk layout of one run:
//   <run_dir>/manifest.json
//   <run_dir>/chains/<chain_id>/{spec.json, gNNNN.png|txt, record.json}
// Distinct chains may be written concurrently; each chain has one writer.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path run_dir);

  const std::filesystem::path& run_dir() const { return run_dir_; }
  std::filesystem::path chains_dir() const { return run_dir_ / "chains"; }
  std::filesystem::path chain_dir(const std::string& chain_id) const;

  bool has_chain(const std::string& chain_id) const;
  ChainRecord load(const std::string& chain_id) const;

  // Creates the chain directory, spec.json and an empty partial record.
  ChainRecord create(const ChainSpec& spec) const;
  void write_artifact(const ChainRecord& record, int g, Modality modality,
                      std::string_view bytes) const;
  void write_record(const ChainRecord& record) const;

  // Sorted chain ids present on disk.
  std::vector<std::string> chain_ids() const;

 private:
  std::filesystem::path run_dir_;
};

// Executes the remaining steps of `spec`. An existing partial chain with the
// same spec is continued after its artifacts are hash-verified.
// BackendUnavailable stops the chain as kPartial; any other driftline error
// from the backend stops it as kFailed. Throws kStoreConflict when the chain
// is already complete or was stored with a different spec.
ChainRecord run_chain(const ChainSpec& spec, ModelBackend& backend,
                      const RunStore& store);

// Continues a stored chain. A complete chain is returned untouched. Throws
// kConfigError when the stored model_id differs from the backend's. A stored
// artifact whose bytes no longer match its hash yields a kFailed record whose
// error names the generation.
ChainRecord resume_chain(const std::filesystem::path& chain_dir,
                         ModelBackend& backend);

// Returns the first generation whose stored bytes are missing or do not hash
// to the recorded content_hash.
std::optional<int> first_corrupt_artifact(const ChainRecord& record);

struct ChainSummary {
  std::string chain_id;
  ChainStatus status = ChainStatus::kPartial;
  int generations_done = 0;
  std::string record_hash;  // SHA-256 of record.json
  std::optional<std::string> error;

  friend bool operator==(const ChainSummary&, const ChainSummary&) = default;
};

struct RunManifest {
  std::string run_id;
  Json config = Json::object();
  std::string dataset_fingerprint;
  Json backend = Json::object();
  std::vector<ChainSummary> chains;  // sorted by chain_id
  std::string tool_version = std::string(kToolVersion);
  std::string started_at;
  std::string finished_at;

  bool any_failed() const;
  int count(ChainStatus status) const;
};

Json manifest_to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const Json& json);
RunManifest read_manifest(const std::filesystem::path& run_dir);

struct BenchmarkOptions {
  std::string run_id;
  std::filesystem::path run_dir;
  int concurrency = 4;
  Json config = Json::object();  // resolved config snapshot
  std::string dataset_fingerprint;
};

// Runs every chain under a bounded number of worker threads and writes
// manifest.json. Chains whose id is already complete on disk are kept as is.
RunManifest run_benchmark(const std::vector<ChainSpec>& specs,
                          ModelBackend& backend,
                          const BenchmarkOptions& options);

// Per-chain seed: mix of the run seed and the chain id.
std::uint64_t chain_seed(std::uint64_t run_seed, std::string_view chain_id);

}  // namespace driftline

#endif  // DRIFTLINE_ENGINE_H_
