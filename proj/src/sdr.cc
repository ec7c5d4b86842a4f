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

#include "driftline/sdr.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "driftline/status.h"

namespace driftline {

double eval_curve(const PowerLawParams& p, double k) {
  if (!(k >= 1.0)) {
    throw Error(ErrorCode::kDomainError, "eval_curve needs k >= 1");
  }
  return p.alpha * std::pow(k, -p.beta) + p.gamma;
}

double power_law_rss(std::span<const FitPoint> points, double alpha,
                     double beta, double gamma) {
  double rss = 0;
  for (const auto& p : points) {
    const double r = alpha * std::pow(p.x, -beta) + gamma - p.y;
    rss += r * r;
  }
  return rss;
}

PowerLawParams fit_fixed_beta(std::span<const FitPoint> points, double beta) {
  // Minimize |alpha * u + gamma - y|^2 with u_i = x_i^(-beta). The problem is
  // a convex QP in two variables, so the optimum is either the unconstrained
  // solution or lies on one of the box edges alpha = 0, gamma = 0, gamma = 1.
  const double n = static_cast<double>(points.size());
  double su = 0, sy = 0;
  std::vector<double> u(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    u[i] = std::pow(points[i].x, -beta);
    su += u[i];
    sy += points[i].y;
  }
  const double mu = su / n, my = sy / n;
  double suu = 0, suy = 0, sum_uu = 0, sum_uy = 0, sum_y1 = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    suy += (u[i] - mu) * (points[i].y - my);
    sum_uu += u[i] * u[i];
    sum_uy += u[i] * points[i].y;
    sum_y1 += u[i] * (points[i].y - 1.0);
  }

  PowerLawParams best;
  best.rss = std::numeric_limits<double>::infinity();
  const auto consider = [&](double alpha, double gamma) {
    const double rss = power_law_rss(points, alpha, beta, gamma);
    if (rss < best.rss) best = {alpha, beta, gamma, rss};
  };

  if (suu > 1e-14 * std::max(1.0, sum_uu)) {
    const double alpha = suy / suu;
    const double gamma = my - alpha * mu;
    if (alpha >= 0 && gamma >= 0 && gamma <= 1) consider(alpha, gamma);
  }
  consider(0.0, std::clamp(my, 0.0, 1.0));
  if (sum_uu > 0) {
    consider(std::max(0.0, sum_uy / sum_uu), 0.0);
    consider(std::max(0.0, sum_y1 / sum_uu), 1.0);
  }
  return best;
}

PowerLawParams fit_power_law(std::span<const FitPoint> input,
                             const FitSettings& settings) {
  if (input.size() < 3) {
    throw Error(ErrorCode::kTooFewPoints,
                "power-law fit needs >= 3 points, got " +
                    std::to_string(input.size()));
  }
  for (const auto& p : input) {
    if (!(p.x >= 1.0) || !std::isfinite(p.y)) {
      throw Error(ErrorCode::kDomainError,
                  "fit points need x >= 1 and finite y");
    }
  }
  // Canonical order so the floating-point sums do not depend on input order.
  std::vector<FitPoint> points(input.begin(), input.end());
  std::sort(points.begin(), points.end(), [](const FitPoint& a, const FitPoint& b) {
    return a.x != b.x ? a.x < b.x : a.y < b.y;
  });

  const int steps =
      static_cast<int>(std::lround(settings.beta_max / settings.beta_step));
  PowerLawParams best = fit_fixed_beta(points, 0.0);
  const PowerLawParams flat = best;
  int best_step = 0;
  for (int i = 1; i <= steps; ++i) {
    const PowerLawParams cand = fit_fixed_beta(points, i * settings.beta_step);
    if (cand.rss < best.rss) {
      best = cand;
      best_step = i;
    }
  }

  // Golden-section search on the neighbouring grid cells.
  double lo = std::max(0.0, (best_step - 1) * settings.beta_step);
  double hi = (best_step + 1) * settings.beta_step;
  constexpr double kInvPhi = 0.6180339887498949;
  double c = hi - kInvPhi * (hi - lo);
  double d = lo + kInvPhi * (hi - lo);
  PowerLawParams fc = fit_fixed_beta(points, c);
  PowerLawParams fd = fit_fixed_beta(points, d);
  while (hi - lo > settings.refine_tolerance) {
    if (fc.rss <= fd.rss) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = fit_fixed_beta(points, c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = fit_fixed_beta(points, d);
    }
  }
  for (const auto& cand : {fc, fd, fit_fixed_beta(points, 0.5 * (lo + hi))}) {
    if (cand.rss < best.rss) best = cand;
  }

  if (flat.rss - best.rss <= settings.degenerate_tolerance) {
    double mean = 0;
    for (const auto& p : points) mean += p.y;
    mean /= static_cast<double>(points.size());
    const double gamma = std::clamp(mean, 0.0, 1.0);
    return {0.0, 0.0, gamma, power_law_rss(points, 0.0, 0.0, gamma)};
  }
  return best;
}

std::string_view fit_domain_name(FitDomain d) {
  return d == FitDomain::kOccurrence ? "k" : "g";
}

FitDomain parse_fit_domain(std::string_view name) {
  if (name == "k") return FitDomain::kOccurrence;
  if (name == "g") return FitDomain::kRawGeneration;
  throw Error(ErrorCode::kConfigError,
              "fit_domain must be 'k' or 'g', got '" + std::string(name) + "'");
}

std::vector<FitPoint> fit_points(const SimilaritySeries& series,
                                 FitDomain domain) {
  std::vector<FitPoint> out;
  out.reserve(series.points.size());
  for (const auto& p : series.points) {
    out.push_back({static_cast<double>(
                       domain == FitDomain::kOccurrence ? p.k : p.g),
                   p.s});
  }
  return out;
}

PowerLawParams fit_power_law(const SimilaritySeries& series, FitDomain domain) {
  return fit_power_law(fit_points(series, domain));
}

PowerLawParams average_params(std::span<const PowerLawParams> params) {
  if (params.empty()) {
    throw Error(ErrorCode::kEmptyList, "average_params of an empty list");
  }
  PowerLawParams out;
  for (const auto& p : params) {
    out.alpha += p.alpha;
    out.beta += p.beta;
    out.gamma += p.gamma;
    out.rss += p.rss;
  }
  const double n = static_cast<double>(params.size());
  out.alpha /= n;
  out.beta /= n;
  out.gamma /= n;
  out.rss /= n;
  return out;
}

Json params_to_json(const PowerLawParams& p) {
  return Json{{"alpha", p.alpha}, {"beta", p.beta}, {"gamma", p.gamma},
              {"rss", p.rss}};
}

PowerLawParams params_from_json(const Json& j) {
  try {
    return {j.at("alpha").get<double>(), j.at("beta").get<double>(),
            j.at("gamma").get<double>(), j.at("rss").get<double>()};
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kParseError,
                std::string("malformed power-law params: ") + e.what());
  }
}

Json sdr_to_json(std::span<const MappingFit> fits, FitDomain domain) {
  Json mappings = Json::object();
  std::vector<PowerLawParams> text_first, image_first;
  for (const auto& f : fits) {
    Json j = params_to_json(f.params);
    j["direction"] = std::string(direction_name(f.mapping.direction));
    j["backbone"] = f.mapping.backbone_id;
    mappings[f.mapping.key()] = std::move(j);
    (start_for(f.mapping.direction) == StartModality::kTextFirst ? text_first
                                                                 : image_first)
        .push_back(f.params);
  }
  Json settings = Json::object();
  if (!text_first.empty()) {
    settings["text_first"] = params_to_json(average_params(text_first));
  }
  if (!image_first.empty()) {
    settings["image_first"] = params_to_json(average_params(image_first));
  }
  return Json{{"fit_domain", std::string(fit_domain_name(domain))},
              {"mappings", std::move(mappings)},
              {"settings", std::move(settings)}};
}

}  // namespace driftline
