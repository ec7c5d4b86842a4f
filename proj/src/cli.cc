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

#include "driftline/cli.h"

#include <cstdlib>
#include <optional>

#include "CLI11.hpp"
#include "driftline/config.h"
#include "driftline/dataset.h"
#include "driftline/engine.h"
#include "driftline/mgg.h"
#include "driftline/report.h"
#include "driftline/sdr.h"
#include "driftline/similarity.h"
#include "driftline/status.h"

namespace driftline {

namespace {

constexpr const char* kUsage =
    "usage: driftline <command> [options] [--<config-key> <value> ...]\n"
    "\n"
    "commands:\n"
    "  ingest   sample ND400 from NoCaps/DOCCI indexes and copy the images\n"
    "  run      run every chain of the configured dataset\n"
    "  resume   continue one stored chain\n"
    "  series   similarity series and MCD for a run\n"
    "  fit      power-law fits of a run's series\n"
    "  mgg      GenEval scores of a Text-First prompt run\n"
    "  report   SVG figures and summary.json for one or more runs\n"
    "\n"
    "exit codes: 0 ok, 1 failed chain or metric error, 2 config error\n";

// Turns leftover "--key value" / "--key=value" tokens into overrides.
Overrides collect_overrides(const std::vector<std::string>& extras) {
  Overrides out;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (!tok.starts_with("--") || tok.size() < 3) {
      throw Error(ErrorCode::kConfigError, "unexpected argument '" + tok + "'");
    }
    std::string key = tok.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= extras.size()) {
        throw Error(ErrorCode::kConfigError, "missing value for --" + key);
      }
      value = extras[++i];
    }
    std::replace(key.begin(), key.end(), '-', '_');
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

Json run_config(const std::filesystem::path& run_dir, const Overrides& overrides) {
  if (!std::filesystem::is_regular_file(run_dir / "manifest.json")) {
    throw Error(ErrorCode::kConfigError,
                "not a run directory (no manifest.json): " + run_dir.string());
  }
  Json config = apply_overrides(read_manifest(run_dir).config, overrides);
  validate_config(config);
  return config;
}

struct LoadedChains {
  std::vector<ChainRecord> complete;
  int excluded = 0;
};

LoadedChains load_chains(const std::filesystem::path& run_dir) {
  LoadedChains out;
  const RunStore store(run_dir);
  for (const auto& id : store.chain_ids()) {
    ChainRecord r = store.load(id);
    if (r.status == ChainStatus::kComplete) {
      out.complete.push_back(std::move(r));
    } else {
      ++out.excluded;
    }
  }
  return out;
}

std::vector<DatasetPair> load_index_resolved(const std::filesystem::path& path) {
  std::vector<DatasetPair> pairs = load_index(path);
  for (auto& p : pairs) {
    const bool url = p.image_ref.starts_with("http://") ||
                     p.image_ref.starts_with("https://");
    if (!url && std::filesystem::path(p.image_ref).is_relative()) {
      p.image_ref = std::filesystem::absolute(path.parent_path() / p.image_ref)
                        .lexically_normal()
                        .string();
    }
  }
  return pairs;
}

int cmd_ingest(const std::string& nocaps, const std::string& docci,
               std::uint64_t seed, int per_source, const std::string& out_dir,
               std::ostream& out) {
  Nd400 selection = sample_nd400(load_index_resolved(nocaps),
                                 load_index_resolved(docci), seed, per_source);
  out << "selected " << selection.pairs.size() << " pairs, selection fingerprint "
      << selection.fingerprint << "\n";
  selection = ingest(std::move(selection), {}, out_dir);
  out << "wrote " << (std::filesystem::path(out_dir) / "nd400.json").string()
      << ", dataset fingerprint " << selection.fingerprint << "\n";
  return kExitOk;
}

int cmd_run(const std::optional<std::filesystem::path>& config_path,
            const Overrides& overrides, std::ostream& out) {
  const Json config = resolve_config(config_path, overrides);
  const auto prompts = load_config_prompts(config);
  Backends backends = make_backends(config, prompts);
  const DatasetInput input = load_dataset_input(config, backends.model->model_id());
  BenchmarkOptions options;
  options.run_id = config.at("run_id").get<std::string>();
  options.run_dir = config_run_dir(config);
  options.concurrency = config.at("concurrency").get<int>();
  options.config = config;
  options.dataset_fingerprint = input.fingerprint;
  const RunManifest m = run_benchmark(input.specs, *backends.model, options);
  out << "run " << m.run_id << ": " << m.chains.size() << " chains ("
      << m.count(ChainStatus::kComplete) << " complete, "
      << m.count(ChainStatus::kPartial) << " partial, "
      << m.count(ChainStatus::kFailed) << " failed)\n";
  for (const auto& c : m.chains) {
    if (c.error) out << "  " << c.chain_id << ": " << *c.error << "\n";
  }
  return m.any_failed() ? kExitFailure : kExitOk;
}

int cmd_resume(const std::filesystem::path& chain_dir, const Overrides& overrides,
               std::ostream& out) {
  const Json config = run_config(chain_dir.parent_path().parent_path(), overrides);
  Backends backends = make_backends(config, load_config_prompts(config));
  const ChainRecord r = resume_chain(chain_dir, *backends.model);
  out << r.spec.chain_id << ": " << chain_status_name(r.status) << " ("
      << r.generations_done() << "/" << r.spec.num_generations << ")\n";
  if (r.error) out << "  " << *r.error << "\n";
  return r.status == ChainStatus::kFailed ? kExitFailure : kExitOk;
}

int cmd_series(const std::filesystem::path& run_dir, const Overrides& overrides,
               std::ostream& out) {
  const Json config = run_config(run_dir, overrides);
  Backends backends = make_backends(config, load_config_prompts(config));
  if (!backends.embedder) {
    throw Error(ErrorCode::kConfigError, "no embedder configured");
  }
  const auto mappings = config_mappings(config, config_start(config));
  if (mappings.empty()) {
    throw Error(ErrorCode::kConfigError,
                "no configured experiment applies to " +
                    config.at("start_modality").get<std::string>() + " runs");
  }
  const LoadedChains chains = load_chains(run_dir);
  EmbeddingCache cache;
  SeriesOptions options;
  options.cache = config.at("embedding_cache").get<bool>() ? &cache : nullptr;
  options.threads = config.at("concurrency").get<int>();

  std::vector<SimilaritySeries> all;
  for (const auto& m : mappings) {
    all.push_back(similarity_series(chains.complete, m, *backends.embedder, options));
    write_file_atomic(run_dir / "metrics" / series_file_name(m),
                      series_to_csv(all.back()));
  }
  const Json mcd_json = mcd_to_json(all, chains.excluded);
  write_file_atomic(run_dir / "metrics" / "mcd.json", canonical_json(mcd_json));
  for (auto it = mcd_json.at("mcd").begin(); it != mcd_json.at("mcd").end(); ++it) {
    out << "mcd " << it.key() << " = " << format_double(it.value()) << "\n";
  }
  out << "mcd_avg = " << format_double(mcd_json.at("mcd_avg")) << " over "
      << chains.complete.size() << " chains (" << chains.excluded
      << " incomplete excluded)\n";
  return kExitOk;
}

int cmd_fit(const std::filesystem::path& run_dir, const Overrides& overrides,
            std::ostream& out) {
  const Json config = run_config(run_dir, overrides);
  const FitDomain domain = config_fit_domain(config);
  const auto series = read_all_series(run_dir);
  if (series.empty()) {
    throw Error(ErrorCode::kMissingMetrics,
                "missing " + (run_dir / "metrics" / "series_*.csv").string());
  }
  std::vector<MappingFit> fits;
  for (const auto& s : series) {
    fits.push_back({s.mapping, fit_power_law(s, domain)});
    out << "sdr " << s.mapping.key() << ": alpha=" << format_double(fits.back().params.alpha)
        << " beta=" << format_double(fits.back().params.beta)
        << " gamma=" << format_double(fits.back().params.gamma) << "\n";
  }
  write_file_atomic(run_dir / "metrics" / "sdr.json",
                    canonical_json(sdr_to_json(fits, domain)));
  return kExitOk;
}

int cmd_mgg(const std::filesystem::path& run_dir, const Overrides& overrides,
            std::ostream& out) {
  const Json config = run_config(run_dir, overrides);
  if (config.at("dataset_kind").get<std::string>() != "geneval") {
    throw Error(ErrorCode::kConfigError, "mgg needs a run over a GenEval prompt file");
  }
  const auto prompts = load_config_prompts(config);
  Backends backends = make_backends(config, prompts);
  if (!backends.detector) {
    throw Error(ErrorCode::kConfigError, "no detector configured");
  }
  const LoadedChains chains = load_chains(run_dir);
  const MggReport report =
      score_chains(chains.complete, prompts, *backends.detector,
                   config_score_options(config), config.at("concurrency").get<int>());
  write_file_atomic(run_dir / "metrics" / "mgg.csv", mgg_csv(report));
  write_file_atomic(run_dir / "metrics" / "mgg.txt", mgg_summary_line(report));
  out << "mgg = " << format_double(report.mgg) << " (first generation "
      << format_double(report.generations.front().overall) << ")\n";
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& out_dir,
               const std::vector<std::string>& compare, std::ostream& out,
               std::ostream& err) {
  std::vector<std::filesystem::path> run_paths(runs.begin(), runs.end());
  std::vector<std::filesystem::path> compare_paths(compare.begin(), compare.end());
  const std::filesystem::path target =
      out_dir.empty() ? run_paths.front() / "report" : std::filesystem::path(out_dir);
  const ReportResult r = render_report(run_paths, target, compare_paths);
  for (const auto& w : r.warnings) err << "driftline: warning: " << w << "\n";
  for (const auto& f : r.files) out << (target / f).string() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"driftline: semantic drift harness for unified models"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::vector<std::string> runs, compare;
  std::string run, chain, out_dir, nocaps, docci, ingest_out;
  std::uint64_t seed = 0;
  int per_source = kPerSource;

  auto* ingest_cmd = app.add_subcommand("ingest", "sample ND400 and copy images");
  ingest_cmd->add_option("--nocaps", nocaps, "NoCaps index (JSONL)")->required();
  ingest_cmd->add_option("--docci", docci, "DOCCI index (JSONL)")->required();
  ingest_cmd->add_option("--seed", seed, "sampling seed");
  ingest_cmd->add_option("--per-source", per_source, "pairs per source");
  ingest_cmd->add_option("--out", ingest_out, "output directory")->required();

  auto* run_cmd = app.add_subcommand("run", "run the configured chains");
  run_cmd->add_option("--config", config_path, "JSON config file");
  run_cmd->allow_extras();

  auto* resume_cmd = app.add_subcommand("resume", "continue a stored chain");
  resume_cmd->add_option("--chain", chain, "chain directory")->required();
  resume_cmd->allow_extras();

  std::vector<CLI::App*> run_scoped;
  for (const char* name : {"series", "fit", "mgg"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--run", run, "run directory")->required();
    sub->allow_extras();
    run_scoped.push_back(sub);
  }
  run_scoped[0]->description("similarity series and MCD");
  run_scoped[1]->description("power-law fits");
  run_scoped[2]->description("GenEval scores across generations");

  auto* report_cmd = app.add_subcommand("report", "render figures and summary");
  report_cmd->add_option("--run", runs, "run directory (repeatable)")->required();
  report_cmd->add_option("--out", out_dir, "output directory");
  report_cmd->add_option("--compare", compare, "other summary.json files");

  std::vector<const char*> argv = {"driftline"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "driftline: " << e.what() << "\n\n" << kUsage;
    return kExitConfig;
  }

  try {
    if (ingest_cmd->parsed()) {
      return cmd_ingest(nocaps, docci, seed, per_source, ingest_out, out);
    }
    if (run_cmd->parsed()) {
      if (!config_path) {
        if (const char* env = std::getenv("DRIFTLINE_CONFIG"); env && *env) {
          config_path = env;
        }
      }
      std::optional<std::filesystem::path> path;
      if (config_path) path = *config_path;
      return cmd_run(path, collect_overrides(run_cmd->remaining()), out);
    }
    if (resume_cmd->parsed()) {
      return cmd_resume(chain, collect_overrides(resume_cmd->remaining()), out);
    }
    if (run_scoped[0]->parsed()) {
      return cmd_series(run, collect_overrides(run_scoped[0]->remaining()), out);
    }
    if (run_scoped[1]->parsed()) {
      return cmd_fit(run, collect_overrides(run_scoped[1]->remaining()), out);
    }
    if (run_scoped[2]->parsed()) {
      return cmd_mgg(run, collect_overrides(run_scoped[2]->remaining()), out);
    }
    if (report_cmd->parsed()) {
      return cmd_report(runs, out_dir, compare, out, err);
    }
  } catch (const Error& e) {
    err << "driftline: " << e.what() << "\n";
    return e.code() == ErrorCode::kConfigError ? kExitConfig : kExitFailure;
  } catch (const std::exception& e) {
    err << "driftline: " << e.what() << "\n";
    return kExitFailure;
  }
  err << kUsage;
  return kExitConfig;
}

}  // namespace driftline
