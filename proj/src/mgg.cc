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

#include "driftline/mgg.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "driftline/status.h"

namespace driftline {

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x1, b.x1) - std::max(a.x0, b.x0));
  const double iy = std::max(0.0, std::min(a.y1, b.y1) - std::max(a.y0, b.y0));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

namespace {

bool by_confidence(const Detection& a, const Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  if (a.label != b.label) return a.label < b.label;
  return std::tie(a.box.x0, a.box.y0, a.box.x1, a.box.y1) <
         std::tie(b.box.x0, b.box.y0, b.box.x1, b.box.y1);
}

}  // namespace

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "nms IoU threshold must be in (0, 1]");
  }
  std::sort(dets.begin(), dets.end(), by_confidence);
  std::vector<Detection> kept;
  for (auto& d : dets) {
    const bool suppressed =
        std::any_of(kept.begin(), kept.end(), [&](const Detection& k) {
          return k.label == d.label && iou(k.box, d.box) > iou_threshold;
        });
    if (!suppressed) kept.push_back(std::move(d));
  }
  return kept;
}

namespace {

struct Lab {
  double l, a, b;
};

Lab srgb_to_lab(std::uint8_t r8, std::uint8_t g8, std::uint8_t b8) {
  const auto linear = [](std::uint8_t v) {
    const double c = v / 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  const double r = linear(r8), g = linear(g8), b = linear(b8);
  const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
  const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b) / 1.0;
  const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
  const auto f = [](double t) {
    constexpr double kDelta = 6.0 / 29.0;
    return t > kDelta * kDelta * kDelta ? std::cbrt(t)
                                        : t / (3 * kDelta * kDelta) + 4.0 / 29.0;
  };
  const double fx = f(x), fy = f(y), fz = f(z);
  return {116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)};
}

const std::array<Lab, 11>& color_centroids() {
  static const std::array<Lab, 11> kCentroids = [] {
    std::array<Lab, 11> out{};
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = srgb_to_lab(kColorRgb[i][0], kColorRgb[i][1], kColorRgb[i][2]);
    }
    return out;
  }();
  return kCentroids;
}

std::size_t nearest_color(const Lab& p) {
  const auto& centroids = color_centroids();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < centroids.size(); ++i) {
    const double dl = p.l - centroids[i].l, da = p.a - centroids[i].a,
                 db = p.b - centroids[i].b;
    const double d = dl * dl + da * da + db * db;
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

std::string classify_color(const Image& image, const Box& box) {
  const auto span_of = [](double lo, double hi, int n) {
    const int a = std::clamp(static_cast<int>(std::floor(lo * n)), 0, n);
    const int b = std::clamp(static_cast<int>(std::ceil(hi * n)), 0, n);
    return std::pair(a, std::max(a, b));
  };
  const auto [x0, x1] = span_of(box.x0, box.x1, image.width);
  const auto [y0, y1] = span_of(box.y0, box.y1, image.height);
  if (static_cast<long>(x1 - x0) * (y1 - y0) < 4) {
    throw Error(ErrorCode::kDegenerateBox, "color crop has fewer than 4 pixels");
  }
  std::array<long, 11> votes{};
  std::map<std::uint32_t, std::size_t> memo;
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      const std::uint8_t* px = image.pixel(x, y);
      const std::uint32_t key = (px[0] << 16) | (px[1] << 8) | px[2];
      auto it = memo.find(key);
      if (it == memo.end()) {
        it = memo.emplace(key, nearest_color(srgb_to_lab(px[0], px[1], px[2])))
                 .first;
      }
      ++votes[it->second];
    }
  }
  const auto winner = std::max_element(votes.begin(), votes.end());
  return std::string(kColorNames[static_cast<std::size_t>(winner - votes.begin())]);
}

std::string classify_color(std::string_view image_bytes, const Box& box) {
  return classify_color(decode_image(image_bytes), box);
}

Relation relation(const Box& subject, const Box& reference) {
  const double dx = subject.center_x() - reference.center_x();
  const double dy = subject.center_y() - reference.center_y();
  if (dx == 0 && dy == 0) return Relation::kNone;
  if (std::abs(dx) >= std::abs(dy)) {
    return dx < 0 ? Relation::kLeftOf : Relation::kRightOf;
  }
  return dy < 0 ? Relation::kAbove : Relation::kBelow;
}

int score_detections(const GenEvalPrompt& prompt, const Image& image,
                     std::span<const Detection> detections,
                     const ScoreOptions& options) {
  std::vector<Detection> kept;
  for (const auto& d : detections) {
    if (d.confidence >= options.tau) kept.push_back(d);
  }
  kept = nms(std::move(kept), options.nms_iou);

  // kept is sorted by confidence, so the first hit is the top box.
  const auto top = [&](const std::string& label) -> const Detection* {
    for (const auto& d : kept) {
      if (d.label == label) return &d;
    }
    return nullptr;
  };
  const auto color_ok = [&](std::size_t i) {
    const Detection* d = top(prompt.objects.at(i));
    if (d == nullptr) return false;
    try {
      return classify_color(image, d->box) == prompt.colors.at(i);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDegenerateBox) return false;
      throw;
    }
  };

  switch (prompt.task) {
    case Task::kSingleObject:
      return top(prompt.objects.at(0)) != nullptr;
    case Task::kTwoObject:
      return top(prompt.objects.at(0)) != nullptr &&
             top(prompt.objects.at(1)) != nullptr;
    case Task::kCounting: {
      const auto n = std::count_if(kept.begin(), kept.end(), [&](const auto& d) {
        return d.label == prompt.objects.at(0);
      });
      return n == prompt.count.value_or(-1);
    }
    case Task::kColors:
      return color_ok(0);
    case Task::kColorAttribute:
      return color_ok(0) && color_ok(1);
    case Task::kPosition: {
      const Detection* s = top(prompt.objects.at(0));
      const Detection* r = top(prompt.objects.at(1));
      if (s == nullptr || r == nullptr || !prompt.relation) return 0;
      return relation(s->box, r->box) == *prompt.relation;
    }
  }
  return 0;
}

int score_prompt(const GenEvalPrompt& prompt, std::string_view image_bytes,
                 Detector& detector, const ScoreOptions& options) {
  const std::vector<std::string> queries = prompt.queries();
  const std::vector<Detection> dets = detector.detect(image_bytes, queries);
  const bool needs_pixels =
      prompt.task == Task::kColors || prompt.task == Task::kColorAttribute;
  return score_detections(prompt, needs_pixels ? decode_image(image_bytes) : Image(),
                          dets, options);
}

GenerationScore generation_score(std::span<const PromptResult> results) {
  std::array<double, 6> sum{};
  std::array<int, 6> n{};
  for (const auto& r : results) {
    sum[task_index(r.task)] += r.correct;
    ++n[task_index(r.task)];
  }
  GenerationScore out;
  double total = 0;
  for (Task t : kAllTasks) {
    const std::size_t i = task_index(t);
    if (n[i] == 0) {
      throw Error(ErrorCode::kMissingTask,
                  "no prompts for task " + std::string(task_name(t)));
    }
    out.task_accuracy[i] = sum[i] / n[i];
    total += out.task_accuracy[i];
  }
  out.overall = total / 6.0;
  return out;
}

double mgg(std::span<const double> overalls) {
  if (overalls.empty()) throw Error(ErrorCode::kEmptyList, "mgg of no generations");
  double sum = 0;
  for (double v : overalls) sum += v;
  return sum / static_cast<double>(overalls.size());
}

MggReport score_chains(std::span<const ChainRecord> chains,
                       std::span<const GenEvalPrompt> prompts,
                       Detector& detector, const ScoreOptions& options,
                       int threads) {
  std::map<std::string, const GenEvalPrompt*> by_id;
  for (const auto& p : prompts) by_id.emplace(p.prompt_id, &p);

  std::vector<const ChainRecord*> sorted;
  for (const auto& c : chains) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return a->spec.chain_id < b->spec.chain_id;
  });
  if (sorted.empty()) throw Error(ErrorCode::kEmptyList, "no chains to score");

  const int num_generations = sorted.front()->spec.num_generations;
  int K = 0;
  for (int g = 1; g <= num_generations; ++g) {
    if (modality_at(StartModality::kTextFirst, g) == Modality::kImage) ++K;
  }
  std::vector<const GenEvalPrompt*> chain_prompt(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const ChainRecord& c = *sorted[i];
    if (c.spec.start != StartModality::kTextFirst) {
      throw Error(ErrorCode::kMappingMismatch,
                  "MGG scores Text-First chains; '" + c.spec.chain_id +
                      "' is Image-First");
    }
    if (c.status != ChainStatus::kComplete ||
        c.spec.num_generations != num_generations) {
      throw Error(ErrorCode::kIncompleteChain,
                  "chain '" + c.spec.chain_id + "' is not complete");
    }
    auto it = by_id.find(c.spec.chain_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "no prompt with id '" + c.spec.chain_id + "'");
    }
    chain_prompt[i] = it->second;
  }

  // correct[i * K + k - 1]
  std::vector<int> correct(sorted.size() * static_cast<std::size_t>(K), 0);
  std::vector<std::exception_ptr> errors(sorted.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < sorted.size(); i = next++) {
      try {
        int k = 0;
        for (const auto& art : sorted[i]->artifacts) {
          if (art.modality != Modality::kImage) continue;
          correct[i * K + k] =
              score_prompt(*chain_prompt[i],
                           sorted[i]->artifact_payload(art).bytes, detector,
                           options);
          ++k;
        }
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const int n = std::clamp(threads, 1, static_cast<int>(sorted.size()));
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MggReport report;
  std::vector<double> overalls;
  for (int k = 0; k < K; ++k) {
    std::vector<PromptResult> results;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      results.push_back({chain_prompt[i]->task, correct[i * K + k]});
    }
    report.generations.push_back(generation_score(results));
    overalls.push_back(report.generations.back().overall);
  }
  report.mgg = mgg(overalls);
  return report;
}

std::string mgg_csv(const MggReport& report) {
  std::string out =
      "k,single_object,two_object,counting,colors,position,color_attr,overall\n";
  for (std::size_t k = 0; k < report.generations.size(); ++k) {
    out += std::to_string(k + 1);
    for (double v : report.generations[k].task_accuracy) {
      out += "," + format_double(v);
    }
    out += "," + format_double(report.generations[k].overall) + "\n";
  }
  return out;
}

std::string mgg_summary_line(const MggReport& report) {
  return "mgg=" + format_double(report.mgg) + "\n";
}

MggReport mgg_from_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) ||
      line != "k,single_object,two_object,counting,colors,position,color_attr,"
              "overall") {
    throw Error(ErrorCode::kParseError, "mgg CSV: unexpected header");
  }
  MggReport report;
  std::vector<double> overalls;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0') {
        throw Error(ErrorCode::kParseError,
                    "mgg CSV line " + std::to_string(line_no) + ": bad number");
      }
      cells.push_back(v);
    }
    if (cells.size() != 8 ||
        cells[0] != static_cast<double>(report.generations.size() + 1)) {
      throw Error(ErrorCode::kParseError,
                  "mgg CSV line " + std::to_string(line_no) + ": malformed row");
    }
    GenerationScore g;
    std::copy(cells.begin() + 1, cells.begin() + 7, g.task_accuracy.begin());
    g.overall = cells[7];
    report.generations.push_back(g);
    overalls.push_back(g.overall);
  }
  report.mgg = mgg(overalls);
  return report;
}

}  // namespace driftline
