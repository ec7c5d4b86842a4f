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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "driftline/engine.h"
#include "driftline/status.h"

namespace driftline {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  std::string s = buf;
  return s == "-0.00" ? "0.00" : s;
}

std::string fixed(double v, int digits) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string escape(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

class Svg {
 public:
  Svg(int width, int height) {
    out_ = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           std::to_string(width) + "\" height=\"" + std::to_string(height) +
           "\" viewBox=\"0 0 " + std::to_string(width) + " " +
           std::to_string(height) + "\" font-family=\"sans-serif\">\n";
    rect(0, 0, width, height, "#ffffff", "none");
  }

  void line(double x1, double y1, double x2, double y2, const char* stroke,
            const char* extra = "") {
    out_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" +
            num(x2) + "\" y2=\"" + num(y2) + "\" stroke=\"" + stroke + "\"" +
            extra + "/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill,
            const char* stroke) {
    out_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
            num(w) + "\" height=\"" + num(h) + "\" fill=\"" + fill +
            "\" stroke=\"" + stroke + "\"/>\n";
  }
  void circle(double x, double y, double r, const char* fill) {
    out_ += "<circle cx=\"" + num(x) + "\" cy=\"" + num(y) + "\" r=\"" +
            num(r) + "\" fill=\"" + fill + "\"/>\n";
  }
  void text(double x, double y, std::string_view s, int size = 11,
            const char* anchor = "middle", const char* fill = "#222222") {
    out_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" +
            std::to_string(size) + "\" text-anchor=\"" + anchor +
            "\" fill=\"" + fill + "\">" + escape(s) + "</text>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts,
                const char* stroke, const char* extra = "") {
    out_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) +
            "\" stroke-width=\"1.5\"" + extra + " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) out_ += ' ';
      out_ += num(pts[i].first) + "," + num(pts[i].second);
    }
    out_ += "\"/>\n";
  }
  std::string finish() { return out_ + "</svg>\n"; }

 private:
  std::string out_;
};

// Axis frame shared by the line chart and the scatter.
struct Frame {
  double left = 56, top = 36, width = 400, height = 240;
  double x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;

  double px(double x) const { return left + (x - x_lo) / (x_hi - x_lo) * width; }
  double py(double y) const {
    return top + height - (y - y_lo) / (y_hi - y_lo) * height;
  }

  void draw(Svg& svg, double x_step, double y_step, std::string_view x_label,
            std::string_view y_label) const {
    for (double y = y_lo; y <= y_hi + 1e-9; y += y_step) {
      svg.line(left, py(y), left + width, py(y), "#e0e0e0");
      svg.text(left - 6, py(y) + 4, num(y), 10, "end");
    }
    for (double x = x_lo; x <= x_hi + 1e-9; x += x_step) {
      svg.line(px(x), top + height, px(x), top + height + 4, "#444444");
      svg.text(px(x), top + height + 16,
               x_step >= 1 ? std::to_string(std::lround(x)) : num(x), 10);
    }
    svg.line(left, top + height, left + width, top + height, "#444444");
    svg.line(left, top, left, top + height, "#444444");
    svg.text(left + width / 2, top + height + 34, x_label, 11);
    svg.text(14, top + height / 2, y_label, 11, "middle");
  }
};

constexpr std::array<const char*, 10> kHeatBins = {
    "#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6",
    "#4292c6", "#2171b5", "#08519c", "#08306b", "#041c42"};

int heat_bin(double v) {
  return std::clamp(static_cast<int>(std::floor(v * 10.0)), 0, 9);
}

Json read_json(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::kMissingMetrics, "missing " + path.string());
  }
  Json j = Json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) {
    throw Error(ErrorCode::kParseError, "malformed " + path.string());
  }
  return j;
}

}  // namespace

std::string series_svg(const SimilaritySeries& series,
                       const std::optional<PowerLawParams>& fit) {
  Svg svg(480, 330);
  Frame f;
  const int K = series.points.empty() ? 1 : series.points.back().k;
  f.x_lo = 1;
  f.x_hi = std::max(2, K);
  double y_min = 0;
  for (const auto& p : series.points) y_min = std::min(y_min, p.s);
  f.y_lo = std::floor(y_min * 5.0) / 5.0;
  f.y_hi = 1;
  const double x_step = std::max(1.0, std::ceil((f.x_hi - f.x_lo) / 10.0));
  svg.text(f.left + f.width / 2, 20,
           "similarity to origin: " + series.mapping.key() + " (n=" +
               std::to_string(series.n_items) + ")",
           13);
  f.draw(svg, x_step, 0.2, "occurrence k", "S");

  std::vector<std::pair<double, double>> pts;
  for (const auto& p : series.points) pts.emplace_back(f.px(p.k), f.py(p.s));
  svg.polyline(pts, "#1f77b4");
  for (const auto& [x, y] : pts) svg.circle(x, y, 2.5, "#1f77b4");

  if (fit) {
    std::vector<std::pair<double, double>> curve;
    const int samples = static_cast<int>((f.x_hi - 1) * 10);
    for (int i = 0; i <= samples; ++i) {
      const double k = 1 + i / 10.0;
      curve.emplace_back(f.px(k), f.py(eval_curve(*fit, k)));
    }
    svg.polyline(curve, "#d62728", " stroke-dasharray=\"5,3\"");
    svg.text(f.left + f.width, f.top + 12,
             "fit: alpha=" + fixed(fit->alpha, 4) + " beta=" +
                 fixed(fit->beta, 4) + " gamma=" + fixed(fit->gamma, 4),
             10, "end", "#d62728");
  }
  return svg.finish();
}

std::string heatmap_svg(const MggReport& report) {
  const int K = static_cast<int>(report.generations.size());
  const double cell_w = 34, cell_h = 24, left = 96, top = 40;
  const int width = static_cast<int>(left + cell_w * std::max(K, 1) + 20);
  const int height = static_cast<int>(top + cell_h * 7 + 80);
  Svg svg(width, height);
  svg.text(width / 2.0, 22, "GenEval accuracy per generation (mgg=" +
                                fixed(report.mgg, 4) + ")",
           13);
  static constexpr std::array<const char*, 7> kRows = {
      "single_object", "two_object", "counting", "colors",
      "position",      "color_attr", "overall"};
  for (int r = 0; r < 7; ++r) {
    const double y = top + r * cell_h;
    svg.text(left - 6, y + cell_h / 2 + 4, kRows[r], 10, "end");
    for (int k = 0; k < K; ++k) {
      const auto& g = report.generations[k];
      const double v = r < 6 ? g.task_accuracy[r] : g.overall;
      const double x = left + k * cell_w;
      svg.rect(x, y, cell_w, cell_h, kHeatBins[heat_bin(v)], "#ffffff");
      svg.text(x + cell_w / 2, y + cell_h / 2 + 4, num(v), 9, "middle",
               heat_bin(v) >= 5 ? "#ffffff" : "#222222");
    }
  }
  for (int k = 0; k < K; ++k) {
    svg.text(left + k * cell_w + cell_w / 2, top + 7 * cell_h + 14,
             std::to_string(k + 1), 10);
  }
  svg.text(left + cell_w * K / 2.0, top + 7 * cell_h + 30, "generation k", 11);
  // Legend: the ten fixed bins.
  const double ly = top + 7 * cell_h + 44;
  for (int b = 0; b < 10; ++b) {
    svg.rect(left + b * 16, ly, 16, 10, kHeatBins[b], "#cccccc");
  }
  svg.text(left - 6, ly + 9, "0", 9, "end");
  svg.text(left + 166, ly + 9, "1", 9, "start");
  return svg.finish();
}

std::string scatter_svg(std::span<const ScatterPoint> points) {
  Svg svg(480, 330);
  Frame f;
  svg.text(f.left + f.width / 2, 20, "MCD_avg vs MGG", 13);
  f.draw(svg, 0.2, 0.2, "MCD_avg", "MGG");
  for (const auto& p : points) {
    svg.circle(f.px(p.mcd), f.py(p.mgg), 4, "#2ca02c");
    svg.text(f.px(p.mcd) + 6, f.py(p.mgg) - 6, p.label, 10, "start");
  }
  return svg.finish();
}

Json mcd_to_json(std::span<const SimilaritySeries> series, int excluded_chains) {
  Json per = Json::object();
  std::vector<std::pair<DistanceMapping, double>> values;
  int n_items = 0;
  for (const auto& s : series) {
    const double v = mcd(s);
    per[s.mapping.key()] = v;
    values.emplace_back(s.mapping, v);
    n_items = s.n_items;
  }
  Json j = {{"mcd", std::move(per)},
            {"n_items", n_items},
            {"excluded_chains", excluded_chains}};
  if (!values.empty()) j["mcd_avg"] = mcd_avg(values);
  return j;
}

ReportResult render_report(std::span<const std::filesystem::path> run_dirs,
                           const std::filesystem::path& out_dir,
                           std::span<const std::filesystem::path> compare) {
  if (run_dirs.empty()) {
    throw Error(ErrorCode::kConfigError, "report needs at least one run");
  }
  ReportResult result;
  std::vector<std::pair<DistanceMapping, double>> mcds;
  Json mcd_obj = Json::object();
  Json sdr_mappings = Json::object();
  Json sdr_settings = Json::object();
  std::map<std::string, std::pair<SimilaritySeries, std::optional<PowerLawParams>>>
      plots;
  std::optional<MggReport> mgg_report;
  Json runs = Json::array();
  std::string model_id;

  for (const auto& dir : run_dirs) {
    const auto metrics = dir / "metrics";
    const Json mcd_json = read_json(metrics / "mcd.json");
    const Json sdr_json = read_json(metrics / "sdr.json");
    std::string run_id = dir.filename().string();
    if (std::filesystem::exists(dir / "manifest.json")) {
      const RunManifest m = read_manifest(dir);
      run_id = m.run_id;
      if (model_id.empty()) model_id = m.backend.value("model_id", std::string());
    }
    runs.push_back(run_id);

    std::map<std::string, SimilaritySeries> series_by_key;
    for (auto& s : read_all_series(dir)) series_by_key[s.mapping.key()] = std::move(s);

    for (auto it = mcd_json.at("mcd").begin(); it != mcd_json.at("mcd").end(); ++it) {
      auto s = series_by_key.find(it.key());
      if (s == series_by_key.end()) {
        throw Error(ErrorCode::kMissingMetrics,
                    "missing " + (metrics / ("series_" + it.key() + ".csv")).string());
      }
      if (mcd_obj.contains(it.key())) {
        throw Error(ErrorCode::kDuplicateMapping,
                    "mapping " + it.key() + " appears in more than one run");
      }
      mcd_obj[it.key()] = it.value();
      mcds.emplace_back(s->second.mapping, it.value().get<double>());
      std::optional<PowerLawParams> fit;
      const Json& fits = sdr_json.at("mappings");
      if (fits.contains(it.key())) {
        fit = params_from_json(fits.at(it.key()));
        sdr_mappings[it.key()] = fits.at(it.key());
      }
      plots[it.key()] = {s->second, fit};
    }
    for (auto it = sdr_json.at("settings").begin();
         it != sdr_json.at("settings").end(); ++it) {
      if (sdr_settings.contains(it.key())) {
        throw Error(ErrorCode::kDuplicateMapping,
                    "setting " + it.key() + " appears in more than one run");
      }
      sdr_settings[it.key()] = it.value();
    }
    if (std::filesystem::is_regular_file(metrics / "mgg.csv")) {
      if (mgg_report) {
        throw Error(ErrorCode::kDuplicateMapping, "more than one run has MGG metrics");
      }
      mgg_report = mgg_from_csv(read_file(metrics / "mgg.csv"));
    }
  }

  std::filesystem::create_directories(out_dir);
  for (const auto& [key, plot] : plots) {
    const std::string name = "series_" + key + ".svg";
    write_file_atomic(out_dir / name, series_svg(plot.first, plot.second));
    result.files.push_back(name);
  }

  Json summary = {{"runs", runs},
                  {"model_id", model_id},
                  {"mcd", mcd_obj},
                  {"sdr", {{"mappings", sdr_mappings}, {"settings", sdr_settings}}}};
  if (!mcds.empty()) summary["mcd_avg"] = mcd_avg(mcds);

  if (mgg_report) {
    summary["mgg"] = mgg_report->mgg;
    summary["mgg_first_generation"] = mgg_report->generations.front().overall;
    write_file_atomic(out_dir / "mgg_heatmap.svg", heatmap_svg(*mgg_report));
    result.files.push_back("mgg_heatmap.svg");
    if (!mcds.empty()) {
      std::vector<ScatterPoint> points;
      points.push_back({model_id.empty() ? "this run" : model_id,
                        summary["mcd_avg"].get<double>(), mgg_report->mgg});
      for (const auto& path : compare) {
        const Json other = read_json(path);
        if (!other.contains("mcd_avg") || !other.contains("mgg")) {
          throw Error(ErrorCode::kMissingMetrics,
                      path.string() + " lacks mcd_avg or mgg");
        }
        points.push_back({other.value("model_id", path.parent_path().string()),
                          other.at("mcd_avg").get<double>(),
                          other.at("mgg").get<double>()});
      }
      write_file_atomic(out_dir / "mcd_vs_mgg.svg", scatter_svg(points));
      result.files.push_back("mcd_vs_mgg.svg");
    }
  } else {
    result.warnings.push_back(
        Error(ErrorCode::kMissingMetrics,
              "no metrics/mgg.csv in any run; skipped mgg_heatmap.svg and "
              "mcd_vs_mgg.svg")
            .what());
  }
  write_file_atomic(out_dir / "summary.json", canonical_json(summary));
  result.files.push_back("summary.json");
  result.summary = std::move(summary);
  return result;
}

}  // namespace driftline
