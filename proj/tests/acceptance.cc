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

// Acceptance checks. Each criterion prints one PASS/FAIL line; tolerances
// and budgets are pinned below. With no argument every criterion runs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "driftline/config.h"
#include "driftline/dataset.h"
#include "driftline/engine.h"
#include "driftline/image.h"
#include "driftline/local_backends.h"
#include "driftline/mgg.h"
#include "driftline/random.h"
#include "driftline/sdr.h"
#include "driftline/similarity.h"
#include "driftline/status.h"
#include "support.h"

namespace driftline {
namespace {

namespace fs = std::filesystem;

constexpr double kPublishedTol = 1e-3;
constexpr double kPublishedBudgetSec = 5;
constexpr double kNoisyTol = 0.02;
constexpr double kNoisySigma = 0.005;
constexpr double kNoisyBudgetSec = 30;
constexpr double kSeriesTol = 1e-9;
constexpr double kMcdTol = 1e-12;
constexpr double kReaggTol = 1e-12;
constexpr double kE2eBudgetSec = 60;
// ND400 fingerprint of the synthetic indexes below at seed 2026.
constexpr const char* kNd400Fingerprint =
    "5c3c82224eb7259395dec026bccb91cc84ad5e1f512ac38bc9a69be3fe086584";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// --- SDR ------------------------------------------------------------------

struct PublishedRow {
  const char* model;
  const char* setting;
  double alpha, beta, gamma;
};

// Fitted parameters reported for the seven models, both start modalities.
constexpr PublishedRow kPublishedRows[] = {
    {"Bagel", "text_first", 0.6092, 0.0538, 0.0},
    {"Bagel", "image_first", 0.6305, 0.0834, 0.0001},
    {"Blip-3o", "text_first", 0.5854, 0.0896, 0.0},
    {"Blip-3o", "image_first", 0.4272, 0.1984, 0.1818},
    {"Janus Pro 7B", "text_first", 0.5942, 0.1143, 0.0},
    {"Janus Pro 7B", "image_first", 0.6687, 0.1740, 0.0},
    {"Show-o", "text_first", 0.5665, 0.0965, 0.0},
    {"Show-o", "image_first", 0.3919, 0.2224, 0.1836},
    {"Janus 1.3B", "text_first", 0.5624, 0.1193, 0.0},
    {"Janus 1.3B", "image_first", 0.6647, 0.2002, 0.0},
    {"VILA-U", "text_first", 0.5341, 0.1243, 0.0},
    {"VILA-U", "image_first", 0.5323, 0.2378, 0.0873},
    {"LLaVA+SDXL", "text_first", 0.5713, 0.1369, 0.0},
    {"LLaVA+SDXL", "image_first", 0.4586, 0.2525, 0.1180},
};

std::vector<FitPoint> curve_points(double a, double b, double c) {
  std::vector<FitPoint> pts;
  for (int k = 1; k <= 10; ++k) pts.push_back({double(k), a * std::pow(k, -b) + c});
  return pts;
}

double max_param_error(const PowerLawParams& p, double a, double b, double c) {
  return std::max({std::abs(p.alpha - a), std::abs(p.beta - b), std::abs(p.gamma - c)});
}

Outcome sdr_published_recovery() {
  Stopwatch clock;
  double worst = 0;
  std::string worst_row;
  for (const auto& row : kPublishedRows) {
    const auto fit = fit_power_law(curve_points(row.alpha, row.beta, row.gamma));
    const double err = max_param_error(fit, row.alpha, row.beta, row.gamma);
    if (err > worst || worst_row.empty()) {
      worst = err;
      worst_row = std::string(row.model) + "/" + row.setting;
    }
  }
  const double t = clock.seconds();
  return {worst <= kPublishedTol && t < kPublishedBudgetSec,
          fmt("14 rows, max parameter error %.3g (%s), tolerance %g; %.2f s of %g s",
              worst, worst_row.c_str(), kPublishedTol, t, kPublishedBudgetSec)};
}

// Exact minimum of the (alpha, gamma) subproblem at fixed beta under
// alpha >= 0, 0 <= gamma <= 1: the interior solution when feasible, else the
// best of the clamped one-dimensional solutions on each face.
double oracle_rss_at(const std::vector<FitPoint>& pts, double beta) {
  const double n = static_cast<double>(pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> x;
  for (const auto& p : pts) {
    x.push_back(std::pow(p.x, -beta));
    sx += x.back();
    sy += p.y;
    sxx += x.back() * x.back();
    sxy += x.back() * p.y;
  }
  const auto rss = [&](double a, double c) {
    double r = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double e = pts[i].y - (a * x[i] + c);
      r += e * e;
    }
    return r;
  };
  double best = std::numeric_limits<double>::infinity();
  const double det = n * sxx - sx * sx;
  if (std::abs(det) > 1e-15) {
    const double a = (n * sxy - sx * sy) / det;
    const double c = (sy - a * sx) / n;
    if (a >= 0 && c >= 0 && c <= 1) best = rss(a, c);
  }
  best = std::min(best, rss(0, std::clamp(sy / n, 0.0, 1.0)));
  for (double c : {0.0, 1.0}) {
    const double a = std::max(0.0, (sxy - c * sx) / sxx);
    best = std::min(best, rss(a, c));
  }
  return best;
}

double dense_grid_rss(const std::vector<FitPoint>& pts) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 30000; ++i) best = std::min(best, oracle_rss_at(pts, i * 1e-4));
  return best;
}

Outcome sdr_noisy_recovery() {
  Stopwatch clock;
  std::mt19937_64 rng(20260101);
  int within = 0, rss_ok = 0;
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double a = 0.3 + 0.5 * uniform01(rng);
    const double b = 0.05 + 0.45 * uniform01(rng);
    const double c = 0.2 * uniform01(rng);
    auto pts = curve_points(a, b, c);
    for (auto& p : pts) p.y += kNoisySigma * standard_normal(rng);
    const auto fit = fit_power_law(pts);
    const double err = max_param_error(fit, a, b, c);
    worst = std::max(worst, err);
    if (err <= kNoisyTol) ++within;
    if (fit.rss <= dense_grid_rss(pts) + 1e-9) ++rss_ok;
  }
  const double t = clock.seconds();
  return {within == 100 && rss_ok == 100 && t < kNoisyBudgetSec,
          fmt("%d/100 fits within %g per parameter (worst %.3g); rss <= dense-grid "
              "oracle + 1e-9 in %d/100; %.2f s of %g s",
              within, kNoisyTol, worst, rss_ok, t, kNoisyBudgetSec)};
}

// --- similarity -------------------------------------------------------------

std::vector<ChainRecord> channel_chains(const fs::path& dir, StartModality start,
                                        int n, int g, SyntheticChannel& channel) {
  RunStore store(dir);
  std::vector<ChainRecord> out;
  for (int i = 0; i < n; ++i) {
    ChainSpec s;
    s.chain_id = "chain-" + zero_padded(i, 3);
    s.start = start;
    s.num_generations = g;
    s.model_id = channel.model_id();
    s.seed = static_cast<std::uint64_t>(i);
    s.image_size = {48, 48};
    if (start == StartModality::kTextFirst) {
      s.origin_text = "origin caption number " + std::to_string(i);
    } else {
      const auto png = encode_png(Image(40, 40, static_cast<std::uint8_t>(5 * i),
                                        static_cast<std::uint8_t>(250 - 3 * i), 60));
      const fs::path path = fs::absolute(dir / ("origin-" + std::to_string(i) + ".png"));
      write_file_atomic(path, png);
      s.origin_image = OriginImage{path.string(), sha256_hex(png)};
    }
    out.push_back(run_chain(s, channel, store));
  }
  return out;
}

DistanceMapping mapping_for(const Experiment& e) {
  const Json c = default_config();
  return {e.direction, config_backbone(c, e.role)};
}

Outcome similarity_oracle() {
  constexpr double kRate = 0.1;
  constexpr int kChains = 50, kG = 20;
  testing::TempDir dir;
  double series_err = 0, mcd_err = 0;
  int checked = 0;
  for (StartModality start : {StartModality::kTextFirst, StartModality::kImageFirst}) {
    SyntheticOptions o;
    o.drift_rate = kRate;
    o.fixed_plane = true;
    SyntheticChannel ch(o);
    const auto chains = channel_chains(
        dir / (start == StartModality::kTextFirst ? "tf" : "if"), start, kChains, kG, ch);
    for (const Experiment& e : similarity_experiments()) {
      if (start_for(e.direction) != start) continue;
      const auto s = similarity_series(chains, mapping_for(e), ch);
      double analytic = 0;
      for (const auto& p : s.points) {
        series_err = std::max(series_err, std::abs(p.s - std::cos(p.k * kRate)));
        analytic += std::cos(p.k * kRate);
      }
      analytic /= static_cast<double>(s.points.size());
      mcd_err = std::max(mcd_err, std::abs(mcd(s) - analytic));
      ++checked;
    }
  }

  // Zero drift: every series is identically one and MCD_avg is exactly one.
  bool all_one = true;
  std::vector<std::pair<DistanceMapping, double>> mcds;
  for (StartModality start : {StartModality::kTextFirst, StartModality::kImageFirst}) {
    SyntheticOptions o;
    o.drift_rate = 0;
    SyntheticChannel ch(o);
    const auto chains = channel_chains(
        dir / (start == StartModality::kTextFirst ? "tf0" : "if0"), start, 5, 6, ch);
    for (const Experiment& e : similarity_experiments()) {
      if (start_for(e.direction) != start) continue;
      const auto s = similarity_series(chains, mapping_for(e), ch);
      for (const auto& p : s.points) all_one = all_one && p.s == 1.0;
      mcds.emplace_back(s.mapping, mcd(s));
    }
  }
  const double avg = mcd_avg(mcds);
  return {series_err <= kSeriesTol && mcd_err <= kMcdTol && all_one && avg == 1.0,
          fmt("%d series over %d chains each: max |S(k) - cos(k*theta)| %.3g (tol %g), "
              "max |MCD - analytic| %.3g (tol %g); zero drift: series all 1 %s, "
              "MCD_avg %.17g",
              checked, kChains, series_err, kSeriesTol, mcd_err, kMcdTol,
              all_one ? "yes" : "no", avg)};
}

// --- MGG --------------------------------------------------------------------

Outcome mgg_rule_fixtures() {
  const Json corpus = testing::read_json_file(testing::testdata("mgg/corpus.json"));
  int matched = 0, total = 0;
  std::vector<std::string> mismatches;
  std::vector<PromptResult> results;
  bool monotone = true;
  for (const Json& c : corpus.at("cases")) {
    ++total;
    const GenEvalPrompt prompt = prompt_from_json(c.at("prompt"));
    const Image image = testing::corpus_image(c.at("image"));
    const auto dets = testing::detections_from_json(c.at("detections"));
    const int got = score_detections(prompt, image, dets, {});
    if (got == c.at("expected").get<int>()) {
      ++matched;
    } else {
      mismatches.push_back(prompt.prompt_id);
    }
    results.push_back({prompt.task, got});
    if (prompt.task == Task::kSingleObject || prompt.task == Task::kTwoObject) {
      int prev = 1;
      for (int i = 0; i <= 100; ++i) {
        const int s = score_detections(prompt, image, dets, {i / 100.0, 0.5});
        monotone = monotone && s <= prev;
        prev = s;
      }
    }
  }

  // Flat re-aggregation: every prompt weighs 1 / (6 * prompts in its task).
  const auto flat = [](const std::vector<PromptResult>& rs) {
    std::map<Task, int> n;
    for (const auto& r : rs) ++n[r.task];
    double sum = 0;
    for (const auto& r : rs) sum += r.correct / (6.0 * n[r.task]);
    return sum;
  };
  double reagg_err = std::abs(generation_score(results).overall - flat(results));
  // Several generations: corpus outcomes under a range of thresholds.
  std::vector<double> overalls;
  double flat_mgg = 0;
  for (int i = 1; i <= 9; ++i) {
    std::vector<PromptResult> gen;
    for (const Json& c : corpus.at("cases")) {
      const GenEvalPrompt p = prompt_from_json(c.at("prompt"));
      gen.push_back({p.task, score_detections(p, testing::corpus_image(c.at("image")),
                                              testing::detections_from_json(c.at("detections")),
                                              {i / 10.0, 0.5})});
    }
    overalls.push_back(generation_score(gen).overall);
    reagg_err = std::max(reagg_err, std::abs(overalls.back() - flat(gen)));
    flat_mgg += flat(gen) / 9.0;
  }
  reagg_err = std::max(reagg_err, std::abs(mgg(overalls) - flat_mgg));

  std::string detail = fmt("%d/%d fixtures match their labels; re-aggregation error %.3g "
                           "(tol %g); tau monotone %s",
                           matched, total, reagg_err, kReaggTol, monotone ? "yes" : "no");
  for (const auto& id : mismatches) detail += " mismatch:" + id;
  return {matched == total && total == 60 && reagg_err <= kReaggTol && monotone, detail};
}

// --- end to end ---------------------------------------------------------------

std::map<std::string, std::string> run_snapshot(const fs::path& root) {
  auto snap = testing::snapshot_tree(root);
  for (auto& [path, bytes] : snap) {
    if (fs::path(path).filename() == "manifest.json") {
      Json m = Json::parse(bytes);
      m.erase("started_at");
      m.erase("finished_at");
      bytes = canonical_json(m);
    }
  }
  return snap;
}

bool pipeline(const fs::path& config, const fs::path& run_dir, std::string& log) {
  const std::vector<std::vector<std::string>> steps = {
      {"run", "--config", config.string()},
      {"series", "--run", run_dir.string()},
      {"fit", "--run", run_dir.string()},
      {"mgg", "--run", run_dir.string()},
      {"report", "--run", run_dir.string()}};
  for (const auto& args : steps) {
    const auto r = testing::invoke_cli(args);
    if (r.code != 0) {
      log = args[0] + " exited " + std::to_string(r.code) + ": " + r.err;
      return false;
    }
  }
  return true;
}

Outcome end_to_end_determinism() {
  testing::TempDir dir;
  auto prompts = testing::sample_prompts(4);
  prompts.resize(20);
  testing::write_prompts(dir / "prompts.jsonl", prompts);
  Json c = testing::geneval_config(dir.path(), 4, 20, 0.1);
  c["seed"] = 17;
  write_file_atomic(dir / "config.json", c.dump());
  const fs::path run_dir = dir / "runs/tf";

  Stopwatch clock;
  std::string log;
  if (!pipeline(dir / "config.json", run_dir, log)) return {false, "first pass: " + log};
  const double t = clock.seconds();
  const auto first = run_snapshot(run_dir);
  fs::rename(dir / "runs", dir / "first");
  if (!pipeline(dir / "config.json", run_dir, log)) return {false, "second pass: " + log};
  const auto second = run_snapshot(run_dir);

  std::size_t differing = 0;
  for (const auto& [path, bytes] : first) {
    auto it = second.find(path);
    if (it == second.end() || it->second != bytes) ++differing;
  }
  differing += second.size() > first.size() ? second.size() - first.size() : 0;
  const int chains = static_cast<int>(read_manifest(run_dir).chains.size());
  return {differing == 0 && chains == 20 && t < kE2eBudgetSec,
          fmt("%d chains x G=20, %zu files, %zu differ outside manifest timestamps; "
              "first pass %.2f s of %g s",
              chains, first.size(), differing, t, kE2eBudgetSec)};
}

// Fails every call from `fail_from` on, as a killed process would stop.
class KillAfter : public ModelBackend {
 public:
  KillAfter(ModelBackend& inner, int fail_from) : inner_(inner), fail_from_(fail_from) {}
  std::string model_id() const override { return inner_.model_id(); }
  T2IResult t2i(std::string_view p, std::uint64_t seed, ImageSize size) override {
    tick();
    return inner_.t2i(p, seed, size);
  }
  I2TResult i2t(std::string_view image, std::string_view instruction) override {
    tick();
    return inner_.i2t(image, instruction);
  }
  Json describe() const override { return inner_.describe(); }

 private:
  void tick() {
    if (++calls_ >= fail_from_) {
      throw Error(ErrorCode::kBackendUnavailable, "killed");
    }
  }
  ModelBackend& inner_;
  int fail_from_;
  int calls_ = 0;
};

Outcome resume_equivalence() {
  constexpr int kG = 10;
  testing::TempDir dir;
  SyntheticOptions o;
  o.drift_rate = 0.15;
  o.fixed_plane = false;
  SyntheticChannel ch(o);
  const auto origin_png = encode_png(Image(40, 40, 30, 140, 220));
  const fs::path origin = fs::absolute(dir / "origin.png");
  write_file_atomic(origin, origin_png);

  int cases = 0, equal = 0;
  std::string first_bad;
  for (StartModality start : {StartModality::kTextFirst, StartModality::kImageFirst}) {
    ChainSpec s;
    s.chain_id = "c";
    s.start = start;
    s.num_generations = kG;
    s.model_id = ch.model_id();
    s.seed = 99;
    s.image_size = {48, 48};
    if (start == StartModality::kTextFirst) {
      s.origin_text = "a red cube on a wooden table";
    } else {
      s.origin_image = OriginImage{origin.string(), sha256_hex(origin_png)};
    }
    const std::string tag = start == StartModality::kTextFirst ? "tf" : "if";
    const ChainRecord ref = run_chain(s, ch, RunStore(dir / (tag + "-ref")));
    const auto ref_tree = testing::snapshot_tree(ref.dir);

    // variant 0: killed before step n+1; variant 1: killed after writing
    // artifact n+1 but before the record update; variant 2: that artifact is
    // torn (truncated).
    for (int n = 0; n < kG; ++n) {
      for (int variant = 0; variant < 3; ++variant) {
        const fs::path run = dir / (tag + "-" + std::to_string(n) + "-" + std::to_string(variant));
        KillAfter killed(ch, n + 1);
        const ChainRecord partial = run_chain(s, killed, RunStore(run));
        if (variant > 0) {
          const auto& art = ref.artifacts[n];
          const std::string file = artifact_file_name(art.g, art.modality);
          std::string bytes = read_file(ref.dir / file);
          if (variant == 2) bytes.resize(bytes.size() / 2);
          write_file_atomic(partial.dir / file, bytes);
        }
        const ChainRecord resumed = resume_chain(partial.dir, ch);
        ++cases;
        if (partial.generations_done() == n && resumed == ref &&
            testing::snapshot_tree(resumed.dir) == ref_tree) {
          ++equal;
        } else if (first_bad.empty()) {
          first_bad = " first mismatch: " + tag + " n=" + std::to_string(n) +
                      " variant=" + std::to_string(variant);
        }
      }
    }
  }
  return {equal == cases,
          fmt("%d/%d interrupted chains (G=%d, both start modalities, every step, "
              "clean kill / orphan artifact / torn artifact) resume bit-for-bit",
              equal, cases, kG) + first_bad};
}

// --- dataset --------------------------------------------------------------

std::vector<DatasetPair> synthetic_index(Source source, const char* prefix, int n) {
  std::vector<DatasetPair> out;
  for (int i = 0; i < n; ++i) {
    const std::string id = std::string(prefix) + "-" + zero_padded(i, 5);
    out.push_back({id, source, "images/" + id + ".jpg", "caption for " + id,
                   sha256_hex("image " + id)});
  }
  return out;
}

Outcome nd400_sampling() {
  auto nocaps = synthetic_index(Source::kNoCaps, "nocaps", 4500);
  auto docci = synthetic_index(Source::kDocci, "docci", 5000);
  const Nd400 a = sample_nd400(nocaps, docci, 2026);
  std::reverse(nocaps.begin(), nocaps.end());
  std::reverse(docci.begin(), docci.end());
  const Nd400 b = sample_nd400(nocaps, docci, 2026);
  int n_nocaps = 0, n_docci = 0;
  for (const auto& p : a.pairs) (p.source == Source::kNoCaps ? n_nocaps : n_docci)++;
  const bool pinned = a.fingerprint == kNd400Fingerprint;
  return {n_nocaps == 200 && n_docci == 200 && a == b && pinned,
          fmt("%d nocaps + %d docci; repeat identical %s; fingerprint %s %s pinned value",
              n_nocaps, n_docci, a == b ? "yes" : "no", a.fingerprint.c_str(),
              pinned ? "matches" : "differs from")};
}

// --- drift ordering ----------------------------------------------------------

struct DriftMetrics {
  double mcd_avg = 0;
  double beta = 0;
  double mgg = 0;
};

DriftMetrics drift_metrics(const fs::path& dir, double rate,
                           const std::vector<GenEvalPrompt>& prompts) {
  SyntheticOptions o;
  o.drift_rate = rate;
  o.fixed_plane = false;
  o.scenes = prompts;
  SyntheticChannel ch(o);
  RunStore store(dir);
  std::vector<ChainRecord> chains;
  for (const auto& p : prompts) {
    ChainSpec s;
    s.chain_id = p.prompt_id;
    s.origin_text = p.text;
    s.num_generations = 20;
    s.model_id = ch.model_id();
    s.seed = chain_seed(5, p.prompt_id);
    s.image_size = {64, 64};
    chains.push_back(run_chain(s, ch, store));
  }
  DriftMetrics m;
  std::vector<std::pair<DistanceMapping, double>> mcds;
  std::vector<PowerLawParams> fits;
  for (const Experiment& e : similarity_experiments()) {
    if (start_for(e.direction) != StartModality::kTextFirst) continue;
    const auto s = similarity_series(chains, mapping_for(e), ch);
    mcds.emplace_back(s.mapping, mcd(s));
    fits.push_back(fit_power_law(s));
  }
  m.mcd_avg = mcd_avg(mcds);
  m.beta = average_params(fits).beta;
  m.mgg = score_chains(chains, prompts, ch, {}).mgg;
  return m;
}

Outcome drift_ordering() {
  testing::TempDir dir;
  const auto prompts = testing::sample_prompts(3);
  const DriftMetrics fast = drift_metrics(dir / "fast", 0.6, prompts);
  const DriftMetrics slow = drift_metrics(dir / "slow", 0.05, prompts);
  return {slow.mcd_avg > fast.mcd_avg && slow.beta < fast.beta && slow.mgg > fast.mgg,
          fmt("MCD_avg slow %.4f vs fast %.4f; beta slow %.4f vs fast %.4f; "
              "MGG slow %.4f vs fast %.4f",
              slow.mcd_avg, fast.mcd_avg, slow.beta, fast.beta, slow.mgg, fast.mgg)};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> k = {
      {"sdr_published_recovery", sdr_published_recovery},
      {"sdr_noisy_recovery", sdr_noisy_recovery},
      {"similarity_oracle", similarity_oracle},
      {"mgg_rule_fixtures", mgg_rule_fixtures},
      {"end_to_end_determinism", end_to_end_determinism},
      {"resume_equivalence", resume_equivalence},
      {"nd400_sampling", nd400_sampling},
      {"drift_ordering", drift_ordering},
  };
  return k;
}

}  // namespace
}  // namespace driftline

int main(int argc, char** argv) {
  using driftline::criteria;
  const std::string only = argc > 1 ? argv[1] : "";
  bool known = only.empty();
  bool all_pass = true;
  for (const auto& [name, check] : criteria()) {
    if (!only.empty() && name != only) continue;
    known = true;
    driftline::Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("threw ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    all_pass = all_pass && o.pass;
  }
  if (!known) {
    std::cerr << "unknown criterion '" << only << "'\n";
    return 2;
  }
  return all_pass ? 0 : 1;
}
