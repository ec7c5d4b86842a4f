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

#include "driftline/report.h"

#include <gtest/gtest.h>

#include "driftline/cli.h"
#include "driftline/config.h"
#include "driftline/dataset.h"
#include "driftline/image.h"
#include "driftline/status.h"
#include "support.h"

namespace driftline {
namespace {

namespace fs = std::filesystem;
using testing::invoke_cli;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kConfigError;
}

void run_metrics(const fs::path& run_dir, bool with_mgg) {
  ASSERT_EQ(invoke_cli({"series", "--run", run_dir.string()}).code, kExitOk);
  ASSERT_EQ(invoke_cli({"fit", "--run", run_dir.string()}).code, kExitOk);
  if (with_mgg) {
    ASSERT_EQ(invoke_cli({"mgg", "--run", run_dir.string()}).code, kExitOk);
  }
}

// One Text-First prompt run with MGG metrics and one Image-First ND400 run
// without, sharing a model id.
class ReportTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testing::TempDir;
    const fs::path root = dir_->path();
    Json tf = testing::geneval_config(root, 1, 6, 0.2);
    write_file_atomic(root / "tf.json", tf.dump());
    ASSERT_EQ(invoke_cli({"run", "--config", (root / "tf.json").string()}).code, kExitOk);
    run_metrics(root / "runs/tf", true);

    Nd400 nd;
    for (int i = 0; i < 3; ++i) {
      const std::string id = "p" + std::to_string(i);
      write_file_atomic(root / "src" / (id + ".png"),
                        encode_png(Image(8, 8, static_cast<std::uint8_t>(40 * i), 90, 10)));
      nd.pairs.push_back({id, i % 2 ? Source::kDocci : Source::kNoCaps, id + ".png",
                          "caption " + id, ""});
    }
    ingest(nd, root / "src", root / "nd");
    Json img = tf;
    img["run_id"] = "if";
    img["dataset"] = (root / "nd/nd400.json").string();
    img["dataset_kind"] = "nd400";
    img["start_modality"] = "image_first";
    write_file_atomic(root / "if.json", img.dump());
    ASSERT_EQ(invoke_cli({"run", "--config", (root / "if.json").string()}).code, kExitOk);
    run_metrics(root / "runs/if", false);
  }
  static void TearDownTestSuite() { delete dir_; }

  static fs::path tf() { return dir_->path() / "runs/tf"; }
  static fs::path img() { return dir_->path() / "runs/if"; }

  static testing::TempDir* dir_;
};

testing::TempDir* ReportTest::dir_ = nullptr;

TEST_F(ReportTest, MergesRunsAndPassesValuesThrough) {
  testing::TempDir out;
  const std::vector<fs::path> runs = {tf(), img()};
  const ReportResult r = render_report(runs, out.path());
  EXPECT_TRUE(r.warnings.empty());
  const Json& s = r.summary;
  EXPECT_EQ(s["runs"], Json::array({"tf", "if"}));
  EXPECT_EQ(s["mcd"].size(), 6u);
  std::vector<std::pair<DistanceMapping, double>> values;
  for (const auto& run : runs) {
    const Json mcd = Json::parse(read_file(run / "metrics/mcd.json"));
    const Json sdr = Json::parse(read_file(run / "metrics/sdr.json"));
    for (auto it = mcd["mcd"].begin(); it != mcd["mcd"].end(); ++it) {
      EXPECT_EQ(s["mcd"][it.key()], it.value());
      EXPECT_EQ(s["sdr"]["mappings"][it.key()], sdr["mappings"][it.key()]);
    }
    for (const auto& series : read_all_series(run)) {
      values.emplace_back(series.mapping, mcd["mcd"][series.mapping.key()].get<double>());
    }
  }
  EXPECT_DOUBLE_EQ(s["mcd_avg"].get<double>(), mcd_avg(values));
  const MggReport mgg = mgg_from_csv(read_file(tf() / "metrics/mgg.csv"));
  EXPECT_EQ(s["mgg"].get<double>(), mgg.mgg);
  EXPECT_EQ(s["mgg_first_generation"].get<double>(), mgg.generations[0].overall);
  EXPECT_EQ(read_file(out / "summary.json"), canonical_json(s));
  EXPECT_EQ(r.files.size(), 6u + 3u);
}

TEST_F(ReportTest, RerenderIsByteIdentical) {
  testing::TempDir a, b;
  const std::vector<fs::path> runs = {tf(), img()};
  render_report(runs, a.path());
  render_report(runs, b.path());
  const auto first = testing::snapshot_tree(a.path());
  EXPECT_EQ(first.size(), 9u);
  EXPECT_EQ(testing::snapshot_tree(b.path()), first);
}

TEST_F(ReportTest, MissingMggOnlyWarns) {
  testing::TempDir out;
  const auto r = invoke_cli({"report", "--run", img().string(), "--out", out.path().string()});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.err.find("warning: MissingMetrics"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(out / "mgg_heatmap.svg"));
  EXPECT_FALSE(fs::exists(out / "mcd_vs_mgg.svg"));
  const Json s = Json::parse(read_file(out / "summary.json"));
  EXPECT_FALSE(s.contains("mgg"));
  EXPECT_EQ(s["mcd"].size(), 3u);
}

TEST_F(ReportTest, OverlappingRunsAreRejected) {
  testing::TempDir out;
  const std::vector<fs::path> runs = {tf(), tf()};
  EXPECT_EQ(code_of([&] { render_report(runs, out.path()); }),
            ErrorCode::kDuplicateMapping);
  const auto r = invoke_cli({"report", "--run", tf().string(), "--run", tf().string(),
                             "--out", out.path().string()});
  EXPECT_EQ(r.code, kExitFailure);
}

TEST_F(ReportTest, MissingSeriesOrFitIsAnError) {
  testing::TempDir copy, out;
  fs::copy(tf(), copy.path(), fs::copy_options::recursive);
  fs::remove(copy / "metrics/sdr.json");
  const std::vector<fs::path> runs = {copy.path()};
  EXPECT_EQ(code_of([&] { render_report(runs, out.path()); }),
            ErrorCode::kMissingMetrics);
  fs::copy_file(tf() / "metrics/sdr.json", copy / "metrics/sdr.json");
  fs::remove(copy / "metrics/series_text_to_text_clip.csv");
  EXPECT_EQ(code_of([&] { render_report(runs, out.path()); }),
            ErrorCode::kMissingMetrics);
}

TEST_F(ReportTest, CompareAddsScatterPoints) {
  testing::TempDir first, second;
  const std::vector<fs::path> runs = {tf(), img()};
  render_report(runs, first.path());
  Json other = Json::parse(read_file(first / "summary.json"));
  other["model_id"] = "other-model";
  other["mcd_avg"] = 0.5;
  write_file_atomic(first / "other.json", other.dump());
  const std::vector<fs::path> compare = {first / "other.json"};
  render_report(runs, second.path(), compare);
  const std::string svg = read_file(second / "mcd_vs_mgg.svg");
  EXPECT_NE(svg.find(">other-model</text>"), std::string::npos);
  EXPECT_NE(svg.find(">synthetic</text>"), std::string::npos);

  other.erase("mgg");
  write_file_atomic(first / "other.json", other.dump());
  EXPECT_EQ(code_of([&] { render_report(runs, second.path(), compare); }),
            ErrorCode::kMissingMetrics);
}

TEST(SeriesSvg, FitIsDashedAndOptional) {
  SimilaritySeries s;
  s.mapping = {Direction::kTextToText, "mpnet"};
  s.n_items = 3;
  s.points = {{1, 2, 0.9}, {2, 4, 0.8}, {3, 6, 0.75}};
  const std::string plain = series_svg(s, std::nullopt);
  EXPECT_EQ(plain.rfind("<svg", 0), 0u);
  EXPECT_EQ(plain.find("stroke-dasharray"), std::string::npos);
  const std::string fitted = series_svg(s, PowerLawParams{0.3, 0.5, 0.6});
  EXPECT_NE(fitted.find("stroke-dasharray"), std::string::npos);
  EXPECT_NE(fitted.find("beta=0.5000"), std::string::npos);
}

TEST(HeatmapSvg, OneCellPerTaskAndGeneration) {
  MggReport r;
  r.generations.resize(4);
  r.generations[0].overall = 1.0;
  const std::string svg = heatmap_svg(r);
  std::size_t cells = 0;
  for (std::size_t pos = 0; (pos = svg.find("stroke=\"#ffffff\"", pos)) != std::string::npos;
       ++pos) {
    ++cells;
  }
  EXPECT_EQ(cells, 7u * 4u);
  EXPECT_NE(svg.find("fill=\"#041c42\""), std::string::npos);  // the 1.0 bin
}

}  // namespace
}  // namespace driftline
