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

#ifndef DRIFTLINE_REPORT_H_
#define DRIFTLINE_REPORT_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "driftline/mgg.h"
#include "driftline/sdr.h"
#include "driftline/similarity.h"
#include "driftline/util.h"

namespace driftline {

// Line chart of S against k with the fitted curve overlaid (dashed).
std::string series_svg(const SimilaritySeries& series,
                       const std::optional<PowerLawParams>& fit);

// Tasks x generations grid. Colors come from ten fixed bins over [0, 1].
std::string heatmap_svg(const MggReport& report);

struct ScatterPoint {
  std::string label;
  double mcd = 0;
  double mgg = 0;
};

std::string scatter_svg(std::span<const ScatterPoint> points);

// metrics/mcd.json
Json mcd_to_json(std::span<const SimilaritySeries> series, int excluded_chains);

struct ReportResult {
  Json summary;
  std::vector<std::string> files;     // written, relative to the out dir
  std::vector<std::string> warnings;  // e.g. missing MGG metrics
};

// Reads metrics/ of each run (one run per start modality is typical) and
// writes series_*.svg, mgg_heatmap.svg, mcd_vs_mgg.svg and summary.json to
// `out_dir`. Missing series or SDR metrics raise kMissingMetrics; missing MGG
// metrics only skip the heatmap and scatter. `compare` adds the points of
// other summary.json files to the scatter.
ReportResult render_report(std::span<const std::filesystem::path> run_dirs,
                           const std::filesystem::path& out_dir,
                           std::span<const std::filesystem::path> compare = {});

}  // namespace driftline

#endif  // DRIFTLINE_REPORT_H_
