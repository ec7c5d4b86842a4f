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

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include "driftline/local_backends.h"
#include "driftline/status.h"
#include "support.h"

namespace driftline {
namespace {

ChainSpec text_spec(std::string id, int g, std::string model = "mock") {
  ChainSpec s;
  s.chain_id = std::move(id);
  s.origin_text = "a photo of " + s.chain_id;
  s.num_generations = g;
  s.model_id = std::move(model);
  s.seed = 9;
  s.image_size = {32, 32};
  return s;
}

// Wraps a backend and injects failures from a given step on.
class FaultyBackend : public ModelBackend {
 public:
  FaultyBackend(ModelBackend& inner, int fail_from_call, ErrorCode code)
      : inner_(inner), fail_from_(fail_from_call), code_(code) {}

  std::string model_id() const override { return inner_.model_id(); }
  Json describe() const override { return inner_.describe(); }
  T2IResult t2i(std::string_view p, std::uint64_t s, ImageSize z) override {
    maybe_fail();
    return inner_.t2i(p, s, z);
  }
  I2TResult i2t(std::string_view i, std::string_view n) override {
    maybe_fail();
    return inner_.i2t(i, n);
  }
  int calls() const { return calls_; }

 private:
  void maybe_fail() {
    if (++calls_ >= fail_from_) throw Error(code_, "injected failure");
  }
  ModelBackend& inner_;
  int fail_from_;
  ErrorCode code_;
  int calls_ = 0;
};

// Tracks how many calls are in flight at once.
class CountingBackend : public ModelBackend {
 public:
  explicit CountingBackend(ModelBackend& inner) : inner_(inner) {}
  std::string model_id() const override { return inner_.model_id(); }
  Json describe() const override { return inner_.describe(); }
  T2IResult t2i(std::string_view p, std::uint64_t s, ImageSize z) override {
    Guard g(*this);
    return inner_.t2i(p, s, z);
  }
  I2TResult i2t(std::string_view i, std::string_view n) override {
    Guard g(*this);
    return inner_.i2t(i, n);
  }
  int peak() const { return peak_; }

 private:
  struct Guard {
    explicit Guard(CountingBackend& b) : b(b) {
      const int now = ++b.current_;
      int prev = b.peak_;
      while (now > prev && !b.peak_.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    ~Guard() { --b.current_; }
    CountingBackend& b;
  };
  ModelBackend& inner_;
  std::atomic<int> current_{0};
  std::atomic<int> peak_{0};
};

TEST(RunChain, ReplayFixtureReproducesRecordedChain) {
  const auto fixture = testing::testdata("replay/chains/ct-001");
  const ChainSpec spec = read_chain(fixture).spec;
  ASSERT_EQ(spec.num_generations, 4);
  ReplayBackend replay(testing::testdata("replay"));
  testing::TempDir dir;
  RunStore store(dir.path());
  const ChainRecord rec = run_chain(spec, replay, store);
  EXPECT_EQ(rec.status, ChainStatus::kComplete);
  EXPECT_EQ(rec, read_chain(fixture));
  EXPECT_EQ(testing::snapshot_tree(store.chain_dir(spec.chain_id)),
            testing::snapshot_tree(fixture));
}

TEST(RunChain, ZeroDriftKeepsOriginText) {
  SyntheticOptions o;
  o.drift_rate = 0;
  SyntheticChannel ch(o);
  testing::TempDir dir;
  RunStore store(dir.path());
  auto spec = text_spec("zero", 8, "synthetic");
  spec.image_size = {64, 64};
  const ChainRecord rec = run_chain(spec, ch, store);
  ASSERT_EQ(rec.status, ChainStatus::kComplete);
  for (const auto& a : rec.artifacts) {
    if (a.modality == Modality::kText) {
      EXPECT_EQ(a.payload, *spec.origin_text);
    }
  }
}

TEST(RunChain, PermanentFailureAtThirdStepIsPartial) {
  MockBackend mock;
  FaultyBackend faulty(mock, 3, ErrorCode::kBackendUnavailable);
  testing::TempDir dir;
  RunStore store(dir.path());
  const ChainRecord rec = run_chain(text_spec("p", 5), faulty, store);
  EXPECT_EQ(rec.status, ChainStatus::kPartial);
  EXPECT_EQ(rec.generations_done(), 2);
  EXPECT_TRUE(std::filesystem::exists(store.chain_dir("p") / "g0001.png"));
  EXPECT_TRUE(std::filesystem::exists(store.chain_dir("p") / "g0002.txt"));
  EXPECT_FALSE(std::filesystem::exists(store.chain_dir("p") / "g0003.png"));
  EXPECT_EQ(store.load("p"), rec);
}

TEST(RunChain, ProtocolErrorIsFailedWithDiagnostic) {
  MockBackend mock;
  FaultyBackend faulty(mock, 2, ErrorCode::kProtocolError);
  testing::TempDir dir;
  RunStore store(dir.path());
  const ChainRecord rec = run_chain(text_spec("f", 4), faulty, store);
  EXPECT_EQ(rec.status, ChainStatus::kFailed);
  EXPECT_EQ(rec.generations_done(), 1);
  ASSERT_TRUE(rec.error);
  EXPECT_NE(rec.error->find("ProtocolError"), std::string::npos);
}

TEST(RunChain, DeterministicAcrossStores) {
  MockBackend mock;
  testing::TempDir a, b;
  const auto spec = text_spec("d", 6);
  run_chain(spec, mock, RunStore(a.path()));
  run_chain(spec, mock, RunStore(b.path()));
  EXPECT_EQ(testing::snapshot_tree(a.path()), testing::snapshot_tree(b.path()));
}

TEST(RunChain, CompleteChainIsStoreConflict) {
  MockBackend mock;
  testing::TempDir dir;
  RunStore store(dir.path());
  run_chain(text_spec("c", 2), mock, store);
  try {
    run_chain(text_spec("c", 2), mock, store);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStoreConflict);
  }
}

TEST(RunChain, DifferentSpecUnderSameIdIsStoreConflict) {
  MockBackend mock;
  FaultyBackend faulty(mock, 2, ErrorCode::kBackendUnavailable);
  testing::TempDir dir;
  RunStore store(dir.path());
  run_chain(text_spec("c", 4), faulty, store);
  auto other = text_spec("c", 4);
  other.seed = 10;
  try {
    run_chain(other, mock, store);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStoreConflict);
  }
}

TEST(RunChain, ModelMismatchIsConfigError) {
  MockBackend mock("mock-b");
  testing::TempDir dir;
  try {
    run_chain(text_spec("m", 2, "mock-a"), mock, RunStore(dir.path()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfigError);
  }
}

TEST(ResumeChain, PartialResumeEqualsSingleShot) {
  MockBackend mock;
  testing::TempDir once, twice;
  const auto spec = text_spec("r", 5);
  const ChainRecord full = run_chain(spec, mock, RunStore(once.path()));

  FaultyBackend faulty(mock, 3, ErrorCode::kBackendUnavailable);
  RunStore store(twice.path());
  ASSERT_EQ(run_chain(spec, faulty, store).generations_done(), 2);
  const ChainRecord resumed = resume_chain(store.chain_dir("r"), mock);
  EXPECT_EQ(resumed, full);
  EXPECT_EQ(testing::snapshot_tree(once.path()),
            testing::snapshot_tree(twice.path()));
}

TEST(ResumeChain, CompleteChainIsNoOp) {
  MockBackend mock;
  testing::TempDir dir;
  RunStore store(dir.path());
  const ChainRecord full = run_chain(text_spec("n", 3), mock, store);
  const auto before = testing::snapshot_tree(dir.path());
  FaultyBackend never(mock, 1, ErrorCode::kProtocolError);
  EXPECT_EQ(resume_chain(store.chain_dir("n"), never), full);
  EXPECT_EQ(never.calls(), 0);
  EXPECT_EQ(testing::snapshot_tree(dir.path()), before);
}

TEST(ResumeChain, BitFlipIsIntegrityErrorNamingGeneration) {
  MockBackend mock;
  testing::TempDir dir;
  RunStore store(dir.path());
  FaultyBackend faulty(mock, 5, ErrorCode::kBackendUnavailable);
  run_chain(text_spec("b", 6), faulty, store);
  const auto victim = store.chain_dir("b") / "g0003.png";
  std::string bytes = read_file(victim);
  bytes[bytes.size() / 2] ^= 0x01;
  write_file_atomic(victim, bytes);

  const ChainRecord rec = resume_chain(store.chain_dir("b"), mock);
  EXPECT_EQ(rec.status, ChainStatus::kFailed);
  ASSERT_TRUE(rec.error);
  EXPECT_NE(rec.error->find("IntegrityError"), std::string::npos) << *rec.error;
  EXPECT_NE(rec.error->find("g=3"), std::string::npos) << *rec.error;
  EXPECT_EQ(rec.generations_done(), 2);
  EXPECT_EQ(first_corrupt_artifact(store.load("b")), 3);
}

TEST(ResumeChain, ModelMismatchIsConfigError) {
  MockBackend mock;
  FaultyBackend faulty(mock, 2, ErrorCode::kBackendUnavailable);
  testing::TempDir dir;
  RunStore store(dir.path());
  run_chain(text_spec("x", 4), faulty, store);
  MockBackend other("other");
  EXPECT_THROW(resume_chain(store.chain_dir("x"), other), Error);
}

TEST(Store, ArtifactsExistOnlyAfterPredecessorsVerify) {
  MockBackend mock;
  testing::TempDir dir;
  RunStore store(dir.path());
  const ChainRecord rec = run_chain(text_spec("v", 7), mock, store);
  for (const auto& a : rec.artifacts) {
    const auto file = store.chain_dir("v") / artifact_file_name(a.g, a.modality);
    EXPECT_EQ(sha256_hex(read_file(file)), a.content_hash);
    EXPECT_EQ(a.parent_g, a.g - 1);
  }
  EXPECT_FALSE(first_corrupt_artifact(rec));
}

TEST(Benchmark, EmptyDatasetWritesEmptyManifest) {
  MockBackend mock;
  testing::TempDir dir;
  BenchmarkOptions opts;
  opts.run_id = "empty";
  opts.run_dir = dir.path();
  const RunManifest m = run_benchmark({}, mock, opts);
  EXPECT_TRUE(m.chains.empty());
  EXPECT_FALSE(m.any_failed());
  EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
}

TEST(Benchmark, NeverExceedsConcurrencyLimit) {
  MockBackend mock;
  CountingBackend counting(mock);
  testing::TempDir dir;
  std::vector<ChainSpec> specs;
  for (int i = 0; i < 10; ++i) specs.push_back(text_spec("s" + std::to_string(i), 4));
  BenchmarkOptions opts;
  opts.run_id = "conc";
  opts.run_dir = dir.path();
  opts.concurrency = 4;
  const RunManifest m = run_benchmark(specs, counting, opts);
  EXPECT_EQ(m.count(ChainStatus::kComplete), 10);
  EXPECT_LE(counting.peak(), 4);
  EXPECT_GE(counting.peak(), 2);
}

TEST(Benchmark, RerunKeepsHashesAndFingerprint) {
  MockBackend mock;
  testing::TempDir a, b;
  std::vector<ChainSpec> specs;
  for (int i = 0; i < 5; ++i) specs.push_back(text_spec("h" + std::to_string(i), 4));
  BenchmarkOptions opts;
  opts.run_id = "same";
  opts.dataset_fingerprint = "fp";
  opts.run_dir = a.path();
  const RunManifest ma = run_benchmark(specs, mock, opts);
  opts.run_dir = b.path();
  opts.concurrency = 1;
  const RunManifest mb = run_benchmark(specs, mock, opts);
  EXPECT_EQ(ma.chains, mb.chains);
  EXPECT_EQ(ma.dataset_fingerprint, mb.dataset_fingerprint);
}

TEST(Benchmark, FailedChainIsReported) {
  MockBackend mock;
  FaultyBackend faulty(mock, 1, ErrorCode::kProtocolError);
  testing::TempDir dir;
  BenchmarkOptions opts;
  opts.run_id = "bad";
  opts.run_dir = dir.path();
  const RunManifest m = run_benchmark({text_spec("only", 2)}, faulty, opts);
  EXPECT_TRUE(m.any_failed());
  EXPECT_EQ(m.count(ChainStatus::kFailed), 1);
}

TEST(Benchmark, DuplicateIdsAreConfigError) {
  MockBackend mock;
  testing::TempDir dir;
  BenchmarkOptions opts;
  opts.run_dir = dir.path();
  EXPECT_THROW(run_benchmark({text_spec("a", 1), text_spec("a", 1)}, mock, opts),
               Error);
}

TEST(Manifest, ReserializationIsByteIdentical) {
  MockBackend mock;
  testing::TempDir dir;
  BenchmarkOptions opts;
  opts.run_id = "m";
  opts.run_dir = dir.path();
  opts.config = Json{{"tau", 0.3}, {"seed", 1}};
  run_benchmark({text_spec("a", 2), text_spec("b", 3)}, mock, opts);
  const std::string raw = read_file(dir / "manifest.json");
  EXPECT_EQ(canonical_json(manifest_to_json(manifest_from_json(Json::parse(raw)))),
            raw);
}

}  // namespace
}  // namespace driftline
