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

#ifndef DRIFTLINE_SDR_H_
#define DRIFTLINE_SDR_H_

#include <span>
#include <string>
#include <vector>

#include "driftline/similarity.h"
#include "driftline/util.h"

namespace driftline {

// y = alpha * k^(-beta) + gamma.
struct PowerLawParams {
  double alpha = 0;
  double beta = 0;
  double gamma = 0;
  double rss = 0;

  friend bool operator==(const PowerLawParams&,
                         const PowerLawParams&) = default;
};

// Throws kDomainError for k < 1.
double eval_curve(const PowerLawParams& p, double k);

struct FitPoint {
  double x = 0;  // k (or raw g), >= 1
  double y = 0;
};

double power_law_rss(std::span<const FitPoint> points, double alpha,
                     double beta, double gamma);

// Best (alpha, gamma) for a fixed beta under alpha >= 0, 0 <= gamma <= 1.
PowerLawParams fit_fixed_beta(std::span<const FitPoint> points, double beta);

struct FitSettings {
  double beta_max = 3.0;
  double beta_step = 0.01;
  double refine_tolerance = 1e-6;
  double degenerate_tolerance = 1e-12;
};

// Constrained least squares: a beta grid with the (alpha, gamma) subproblem
// solved exactly at each node, then golden-section refinement of beta around
// the best node. A flat optimum returns (0, 0, mean(y)). Throws kTooFewPoints
// below three points.
PowerLawParams fit_power_law(std::span<const FitPoint> points,
                             const FitSettings& settings = {});

enum class FitDomain { kOccurrence, kRawGeneration };

std::string_view fit_domain_name(FitDomain d);  // "k" | "g"
FitDomain parse_fit_domain(std::string_view name);

std::vector<FitPoint> fit_points(const SimilaritySeries& series,
                                 FitDomain domain = FitDomain::kOccurrence);
PowerLawParams fit_power_law(const SimilaritySeries& series,
                             FitDomain domain = FitDomain::kOccurrence);

// Component-wise mean, rss included. Throws kEmptyList.
PowerLawParams average_params(std::span<const PowerLawParams> params);

Json params_to_json(const PowerLawParams& p);
PowerLawParams params_from_json(const Json& j);

struct MappingFit {
  DistanceMapping mapping;
  PowerLawParams params;
};

// metrics/sdr.json: every mapping fit plus the per-setting averages
// (text_first over the text-sourced mappings, image_first over the
// image-sourced ones).
Json sdr_to_json(std::span<const MappingFit> fits, FitDomain domain);

}  // namespace driftline

#endif  // DRIFTLINE_SDR_H_
