/*
 * Copyright 2026 The ensemble-lens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// ensemble_lens: batch access to every analysis, and the HTTP service.
//
// Exit status: 0 ok, 2 input or validation error, 3 task mismatch,
// 4 predictor unavailable, 5 environment (bind refused, port in use).

#include <signal.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "ensemble_lens/analysis.h"
#include "ensemble_lens/metrics.h"
#include "ensemble_lens/service.h"
#include "ensemble_lens/weights.h"

namespace {

namespace el = ensemble_lens;
using el::analysis::ordered_json;

constexpr int kExitEnvironment = 5;

struct Output {
  std::string format = "json";
  std::string out;
};

void AddOutput(CLI::App* command, Output& output, bool table) {
  if (table) {
    command->add_option("--format", output.format, "table or json")
        ->check(CLI::IsMember({"table", "json"}));
  }
  command->add_option("--out", output.out, "write the JSON document to FILE");
}

std::string Cell(const std::optional<double>& value) {
  if (!value || !std::isfinite(*value)) return "-";
  char text[64];
  std::snprintf(text, sizeof text, "%.4f", *value);
  return text;
}

std::string Pad(const std::string& text, size_t width) {
  return text.size() >= width ? text : text + std::string(width - text.size(), ' ');
}

std::string RenderTable(const std::vector<std::string>& header,
                        const std::vector<std::vector<std::string>>& rows) {
  std::vector<size_t> widths(header.size());
  for (size_t c = 0; c < header.size(); ++c) widths[c] = header[c].size();
  for (const auto& row : rows) {
    for (size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], row[c].size());
  }
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t c = 0; c < cells.size(); ++c) {
      out += c + 1 == cells.size() ? cells[c] : Pad(cells[c], widths[c] + 2);
    }
    out += '\n';
  };
  line(header);
  for (const auto& row : rows) line(row);
  return out;
}

std::string MetricsTableText(const std::vector<el::metrics::MetricReport>& reports) {
  std::vector<std::string> header{"model"};
  for (const auto& metric : reports.front().metrics) header.push_back(metric.name);
  std::vector<std::vector<std::string>> rows;
  for (const auto& report : reports) {
    std::vector<std::string> row{report.model_id};
    for (const auto& metric : report.metrics) row.push_back(Cell(metric.value));
    rows.push_back(std::move(row));
  }
  return RenderTable(header, rows);
}

std::string MatrixTableText(const ordered_json& matrix) {
  std::vector<std::string> header{matrix["metric"].get<std::string>()};
  const auto ids = matrix["ids"].get<std::vector<std::string>>();
  header.insert(header.end(), ids.begin(), ids.end());
  std::vector<std::vector<std::string>> rows;
  for (size_t i = 0; i < ids.size(); ++i) {
    std::vector<std::string> row{ids[i]};
    for (const auto& v : matrix["values"][i]) {
      row.push_back(v.is_number() ? Cell(v.get<double>()) : "-");
    }
    rows.push_back(std::move(row));
  }
  return RenderTable(header, rows);
}

void Emit(const Output& output, const ordered_json& document,
          const std::string& table = {}) {
  const std::string body = el::analysis::Serialize(document);
  if (!output.out.empty()) {
    std::ofstream file(output.out, std::ios::binary | std::ios::trunc);
    if (!file) throw el::Error(el::ErrorCode::kIo, "cannot write " + output.out);
    file << body;
    if (!file) throw el::Error(el::ErrorCode::kIo, "cannot write " + output.out);
  }
  if (output.format == "table" && !table.empty()) {
    std::cout << table;
  } else if (output.out.empty()) {
    std::cout << body << '\n';
  }
}

int Fail(const std::exception& error, int status) {
  std::cerr << el::analysis::Serialize(el::analysis::ErrorDocument(error)) << '\n';
  return status;
}

int Serve(el::service::ServiceOptions options) {
  if (const char* dir = std::getenv("ENSEMBLE_LENS_CACHE_DIR"); dir && *dir) {
    options.spill_dir = dir;
  }
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  el::service::AnalysisService service(options);
  int port = 0;
  try {
    port = service.Bind();
  } catch (const el::Error& e) {
    return Fail(e, kExitEnvironment);
  }
  std::thread([&service, signals] {
    int received = 0;
    sigwait(&signals, &received);
    service.Stop();
  }).detach();
  std::cerr << "ensemble_lens: listening on http://" << options.bind << ":" << port
            << std::endl;
  service.Run();
  std::cerr << "ensemble_lens: stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diagnostics for weighted model ensembles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ensemble_lens 0.1.0");

  std::string bundle_path;
  Output output;

  auto* metrics = app.add_subcommand("metrics", "per-model and ensemble metrics");
  metrics->add_option("--bundle", bundle_path, "bundle directory or document")->required();
  AddOutput(metrics, output, true);

  auto* compare = app.add_subcommand("compare", "per-observation compare matrix");
  compare->add_option("--bundle", bundle_path)->required();
  AddOutput(compare, output, false);

  std::string method;
  auto* correlation = app.add_subcommand("correlation", "prediction correlation matrix");
  correlation->add_option("--bundle", bundle_path)->required();
  correlation->add_option("--method", method, "pearson, spearman or kappa");
  AddOutput(correlation, output, true);

  std::string metric;
  std::vector<std::string> pair;
  std::optional<double> threshold;
  double xi = el::compat::kDefaultXi;
  size_t bins = 20;
  auto* compat = app.add_subcommand("compat", "pairwise compatimetrics");
  compat->add_option("--bundle", bundle_path)->required();
  compat->add_option("--metric", metric, "matrix metric");
  compat->add_option("--pair", pair, "pair detail for models A B")->expected(2);
  compat->add_option("--threshold", threshold, "SDR threshold (default SD(y))");
  compat->add_option("--xi", xi, "AR divisor");
  compat->add_option("--bins", bins, "histogram bins")->check(CLI::PositiveNumber);
  AddOutput(compat, output, true);

  auto* weights = app.add_subcommand("weights", "what-if weights and weight search");
  weights->require_subcommand(1);
  std::string assignments, holdout_path;
  auto* evaluate = weights->add_subcommand("evaluate", "metrics under new weights");
  evaluate->add_option("--bundle", bundle_path)->required();
  evaluate->add_option("--set", assignments, "id=weight,...")->required();
  evaluate->add_option("--holdout", holdout_path, "holdout bundle");
  AddOutput(evaluate, output, false);
  el::analysis::SuggestRequest suggest_request;
  std::string direction;
  auto* suggest = weights->add_subcommand("suggest", "coordinate-ascent weight search");
  suggest->add_option("--bundle", bundle_path)->required();
  suggest->add_option("--objective", suggest_request.objective)->required();
  suggest->add_option("--direction", direction, "minimize or maximize");
  suggest->add_option("--budget", suggest_request.budget, "objective evaluations");
  suggest->add_option("--seed", suggest_request.seed);
  AddOutput(suggest, output, false);

  auto* xai = app.add_subcommand("xai", "permutation importance and partial dependence");
  xai->require_subcommand(1);
  std::string model, feature;
  el::xai::ImportanceOptions importance_options;
  std::string importance_metric;
  auto* importance = xai->add_subcommand("importance", "permutation importance");
  importance->add_option("--bundle", bundle_path)->required();
  importance->add_option("--model", model, "model id or \"ensemble\"")->required();
  importance->add_option("--repeats", importance_options.repeats)
      ->check(CLI::PositiveNumber);
  importance->add_option("--seed", importance_options.seed);
  importance->add_option("--metric", importance_metric);
  importance->add_flag("--normalize", importance_options.normalize);
  AddOutput(importance, output, false);
  el::xai::PdpOptions pdp_options;
  std::optional<size_t> row_cap;
  auto* pdp = xai->add_subcommand("pdp", "partial dependence");
  pdp->add_option("--bundle", bundle_path)->required();
  pdp->add_option("--model", model)->required();
  pdp->add_option("--feature", feature)->required();
  pdp->add_option("--grid", pdp_options.grid_size);
  pdp->add_option("--row-cap", row_cap);
  AddOutput(pdp, output, false);

  el::service::ServiceOptions service_options;
  auto* serve = app.add_subcommand("serve", "run the HTTP analysis service");
  serve->add_option("--port", service_options.port)->check(CLI::Range(0, 65535));
  serve->add_option("--bind", service_options.bind);
  serve->add_option("--cache-mb", service_options.cache_mb);
  serve->add_option("--max-upload-mb", service_options.max_upload_mb);
  serve->add_flag("--allow-remote", service_options.allow_remote);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int status = app.exit(e);
    return status == 0 ? 0 : 2;
  }

  try {
    if (serve->parsed()) return Serve(service_options);

    const el::EnsembleBundle bundle = el::LoadBundle(bundle_path);
    if (metrics->parsed()) {
      const auto table = el::metrics::MetricsTable(bundle);
      Emit(output, el::metrics::ToJson(table), MetricsTableText(table));
    } else if (compare->parsed()) {
      Emit(output, el::analysis::CompareDocument(bundle));
    } else if (correlation->parsed()) {
      std::optional<std::string_view> view;
      if (!method.empty()) view = method;
      const ordered_json document = el::analysis::CorrelationDocument(bundle, view);
      Emit(output, document, MatrixTableText(document));
    } else if (compat->parsed()) {
      el::compat::PairOptions options;
      options.sdr_threshold = threshold;
      options.xi = xi;
      options.histogram_bins = bins;
      if (!pair.empty()) {
        Emit(output, el::analysis::PairDocument(bundle, pair[0], pair[1], options));
      } else {
        if (metric.empty()) {
          throw el::Error(el::ErrorCode::kInvalidArgument,
                          "compat needs --metric or --pair A B");
        }
        const ordered_json document = el::analysis::CompatDocument(bundle, metric, options);
        Emit(output, document, MatrixTableText(document));
      }
    } else if (evaluate->parsed()) {
      std::map<std::string, double> map;
      try {
        map = el::weights::ParseWeightAssignments(assignments);
      } catch (const el::Error&) {
        std::cerr << evaluate->help();
        throw;
      }
      std::optional<el::EnsembleBundle> holdout;
      if (!holdout_path.empty()) holdout = el::LoadBundle(holdout_path);
      Emit(output, el::analysis::EvaluateDocument(bundle, map,
                                                  holdout ? &*holdout : nullptr));
    } else if (suggest->parsed()) {
      if (!direction.empty()) suggest_request.direction = direction;
      Emit(output, el::analysis::SuggestDocument(bundle, suggest_request));
    } else if (importance->parsed() || pdp->parsed()) {
      auto shared = std::make_shared<const el::EnsembleBundle>(bundle);
      el::analysis::PredictorPool predictors(shared);
      if (importance->parsed()) {
        if (!importance_metric.empty()) importance_options.metric = importance_metric;
        Emit(output, el::analysis::ImportanceDocument(predictors, *shared, model,
                                                      importance_options));
      } else {
        pdp_options.row_cap = row_cap;
        Emit(output, el::analysis::PdpDocument(predictors, *shared, model, feature,
                                               pdp_options));
      }
    }
    return 0;
  } catch (const el::Error& e) {
    return Fail(e, el::analysis::ExitCode(e.code()));
  } catch (const std::exception& e) {
    return Fail(e, 2);
  }
}
