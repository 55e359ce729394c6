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

#include "ensemble_lens/bundle.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include "ensemble_lens/csv.h"

namespace ensemble_lens {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kStochasticTolerance = 1e-9;

// Intermediate string-cell view shared by the directory and document forms.
struct StringColumn {
  std::string name;
  std::vector<std::string> cells;
};

struct RawBundle {
  json manifest;
  std::vector<StringColumn> dataset;
  size_t dataset_rows = 0;
  std::unordered_map<std::string, std::vector<std::string>> predictions;
  // Probability tables keyed by model id; header holds class labels.
  std::unordered_map<std::string, csv::Table> probabilities;
  std::optional<std::vector<std::string>> ensemble;
  fs::path base_dir;
};

[[noreturn]] void Schema(const std::string& message) {
  throw Error(ErrorCode::kSchemaMismatch, message);
}

std::string JsonCellToString(const json& cell) {
  if (cell.is_string()) return cell.get<std::string>();
  if (cell.is_number_integer()) return std::to_string(cell.get<int64_t>());
  if (cell.is_number_unsigned()) return std::to_string(cell.get<uint64_t>());
  if (cell.is_number_float()) return csv::FormatNumber(cell.get<double>());
  if (cell.is_boolean()) return cell.get<bool>() ? "true" : "false";
  if (cell.is_null()) return "";
  Schema("unsupported cell value " + cell.dump());
}

std::vector<std::string> TrimTrailingEmpty(std::vector<std::string> cells) {
  while (!cells.empty() && cells.back().empty()) cells.pop_back();
  return cells;
}

std::string ReadText(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

json ParseJsonText(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    Schema(what + ": invalid JSON: " + e.what());
  }
}

std::vector<StringColumn> TableToColumns(const csv::Table& table) {
  std::vector<StringColumn> columns(table.header.size());
  for (size_t j = 0; j < table.header.size(); ++j) {
    columns[j].name = table.header[j];
    columns[j].cells.reserve(table.rows.size());
    for (const auto& row : table.rows) columns[j].cells.push_back(row[j]);
  }
  return columns;
}

RawBundle ReadDirectory(const fs::path& dir) {
  RawBundle raw;
  raw.base_dir = dir;
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorCode::kMissingManifest,
                "no manifest.json in " + dir.string());
  }
  raw.manifest = ParseJsonText(ReadText(manifest_path), "manifest.json");

  const fs::path dataset_path = dir / "dataset.csv";
  if (!fs::exists(dataset_path)) Schema("missing dataset.csv");
  const csv::Table dataset = csv::ReadFile(dataset_path);
  raw.dataset_rows = dataset.rows.size();
  raw.dataset = TableToColumns(dataset);

  const fs::path predictions_path = dir / "predictions.csv";
  if (!fs::exists(predictions_path)) Schema("missing predictions.csv");
  for (auto& column : TableToColumns(csv::ReadFile(predictions_path))) {
    raw.predictions[column.name] = TrimTrailingEmpty(std::move(column.cells));
  }

  if (raw.manifest.is_object() && raw.manifest.contains("models") &&
      raw.manifest["models"].is_array()) {
    for (const auto& model : raw.manifest["models"]) {
      if (!model.is_object() || !model.contains("id")) continue;
      const std::string id = JsonCellToString(model["id"]);
      const fs::path proba_path = dir / ("proba_" + id + ".csv");
      if (fs::exists(proba_path)) {
        raw.probabilities[id] = csv::ReadFile(proba_path);
      }
    }
  }

  if (raw.manifest.is_object() &&
      raw.manifest.contains("ensemble_prediction_file")) {
    const fs::path path =
        dir / raw.manifest["ensemble_prediction_file"].get<std::string>();
    const csv::Table table = csv::ReadFile(path);
    if (table.header.empty()) Schema("empty ensemble prediction file");
    std::vector<std::string> cells;
    for (const auto& row : table.rows) cells.push_back(row[0]);
    raw.ensemble = TrimTrailingEmpty(std::move(cells));
  }
  return raw;
}

RawBundle ReadDocument(const json& document, const fs::path& base_dir) {
  if (!document.is_object()) Schema("bundle document must be a JSON object");
  RawBundle raw;
  raw.base_dir = base_dir;
  if (!document.contains("manifest")) {
    throw Error(ErrorCode::kMissingManifest,
                "bundle document has no \"manifest\" key");
  }
  raw.manifest = document["manifest"];

  if (!document.contains("dataset")) Schema("bundle document has no dataset");
  const json& dataset = document["dataset"];
  if (!dataset.is_object() || !dataset.contains("columns") ||
      !dataset.contains("rows")) {
    Schema("dataset must be {\"columns\": [...], \"rows\": [[...]]}");
  }
  for (const auto& name : dataset["columns"]) {
    raw.dataset.push_back({JsonCellToString(name), {}});
  }
  for (const auto& row : dataset["rows"]) {
    if (!row.is_array() || row.size() != raw.dataset.size()) {
      Schema("dataset row " + std::to_string(raw.dataset_rows) + " has " +
             std::to_string(row.is_array() ? row.size() : 0) +
             " cells, expected " + std::to_string(raw.dataset.size()));
    }
    for (size_t j = 0; j < row.size(); ++j) {
      raw.dataset[j].cells.push_back(JsonCellToString(row[j]));
    }
    ++raw.dataset_rows;
  }

  if (!document.contains("predictions") || !document["predictions"].is_object())
    Schema("bundle document has no predictions object");
  for (const auto& [id, cells] : document["predictions"].items()) {
    if (!cells.is_array()) Schema("predictions of " + id + " must be an array");
    std::vector<std::string> values;
    for (const auto& cell : cells) values.push_back(JsonCellToString(cell));
    raw.predictions[id] = std::move(values);
  }

  if (document.contains("probabilities")) {
    const json& probabilities = document["probabilities"];
    if (!probabilities.is_object()) Schema("probabilities must be an object");
    std::vector<std::string> labels;
    if (raw.manifest.contains("class_labels")) {
      for (const auto& label : raw.manifest["class_labels"]) {
        labels.push_back(JsonCellToString(label));
      }
    }
    for (const auto& [id, rows] : probabilities.items()) {
      csv::Table table;
      table.header = labels;
      for (const auto& row : rows) {
        std::vector<std::string> cells;
        for (const auto& cell : row) cells.push_back(JsonCellToString(cell));
        table.rows.push_back(std::move(cells));
      }
      raw.probabilities[id] = std::move(table);
    }
  }

  if (document.contains("ensemble_prediction")) {
    std::vector<std::string> cells;
    for (const auto& cell : document["ensemble_prediction"]) {
      cells.push_back(JsonCellToString(cell));
    }
    raw.ensemble = std::move(cells);
  }
  return raw;
}

double ParseNumericCell(const std::string& cell, const std::string& where) {
  const auto value = csv::ParseNumber(cell);
  if (!value) Schema(where + ": \"" + cell + "\" is not a number");
  return *value;
}

bool AllNumeric(const std::vector<std::string>& cells) {
  if (cells.empty()) return false;
  for (const auto& cell : cells) {
    const auto value = csv::ParseNumber(cell);
    if (!value || !std::isfinite(*value)) return false;
  }
  return true;
}

// Sorted distinct labels; numerically when every label is a number.
std::vector<std::string> InferClassLabels(
    const std::vector<std::string>& cells) {
  std::vector<std::string> labels(cells.begin(), cells.end());
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  if (AllNumeric(labels)) {
    std::stable_sort(labels.begin(), labels.end(),
                     [](const std::string& a, const std::string& b) {
                       return *csv::ParseNumber(a) < *csv::ParseNumber(b);
                     });
  }
  return labels;
}

ordered_json ResolvePredictor(const json& ref, const fs::path& base_dir) {
  if (!ref.is_object()) Schema("predictor reference must be an object");
  ordered_json resolved = ordered_json::parse(ref.dump());
  if (resolved.contains("file") && !resolved.contains("spec")) {
    const fs::path path = base_dir / resolved["file"].get<std::string>();
    resolved["spec"] = ordered_json::parse(ReadText(path));
    resolved.erase("file");
  }
  return resolved;
}

EnsembleBundle Materialize(const RawBundle& raw) {
  const json& manifest = raw.manifest;
  if (!manifest.is_object()) Schema("manifest must be a JSON object");
  if (!manifest.contains("task") || !manifest["task"].is_string()) {
    Schema("manifest has no task");
  }
  EnsembleBundle bundle;
  bundle.task = ParseTaskKind(manifest["task"].get<std::string>());

  if (!manifest.contains("target_column")) Schema("manifest has no target_column");
  const std::string target_column =
      JsonCellToString(manifest["target_column"]);
  bundle.dataset.target_column = target_column;

  const StringColumn* target = nullptr;
  for (const auto& column : raw.dataset) {
    if (column.name == target_column) target = &column;
  }
  if (target == nullptr) {
    Schema("target column \"" + target_column + "\" not in dataset.csv");
  }

  if (manifest.contains("class_labels")) {
    for (const auto& label : manifest["class_labels"]) {
      bundle.class_labels.push_back(JsonCellToString(label));
    }
  } else if (IsClassification(bundle.task)) {
    bundle.class_labels = InferClassLabels(target->cells);
  }

  std::unordered_map<std::string, int> label_codes;
  for (size_t c = 0; c < bundle.class_labels.size(); ++c) {
    label_codes.emplace(bundle.class_labels[c], static_cast<int>(c));
  }
  auto encode = [&](const std::string& label) {
    const auto it = label_codes.find(label);
    return it == label_codes.end() ? -1 : it->second;
  };

  if (manifest.contains("positive_label")) {
    const std::string positive = JsonCellToString(manifest["positive_label"]);
    bundle.positive_code = encode(positive);
    if (bundle.positive_code < 0) {
      Schema("positive_label \"" + positive + "\" is not a class label");
    }
  }

  // Feature metadata: declared entries win, the rest is inferred.
  std::unordered_map<std::string, FeatureMeta> declared;
  if (manifest.contains("features")) {
    for (const auto& entry : manifest["features"]) {
      FeatureMeta meta;
      meta.name = JsonCellToString(entry.at("name"));
      const std::string kind = entry.value("kind", std::string("numeric"));
      if (kind == "numeric") {
        meta.kind = FeatureKind::kNumeric;
      } else if (kind == "categorical") {
        meta.kind = FeatureKind::kCategorical;
      } else {
        Schema("feature " + meta.name + ": unknown kind \"" + kind + "\"");
      }
      if (entry.contains("levels")) {
        for (const auto& level : entry["levels"]) {
          meta.levels.push_back(JsonCellToString(level));
        }
      }
      declared.emplace(meta.name, std::move(meta));
    }
  }

  FeatureTable& features = bundle.dataset.features;
  features.num_rows = raw.dataset_rows;
  for (const auto& column : raw.dataset) {
    if (column.name == target_column) continue;
    FeatureColumn out;
    const auto it = declared.find(column.name);
    if (it != declared.end()) {
      out.meta = it->second;
    } else {
      out.meta.name = column.name;
      out.meta.kind = AllNumeric(column.cells) ? FeatureKind::kNumeric
                                               : FeatureKind::kCategorical;
    }
    if (out.meta.kind == FeatureKind::kNumeric) {
      out.numeric.reserve(column.cells.size());
      for (size_t i = 0; i < column.cells.size(); ++i) {
        out.numeric.push_back(ParseNumericCell(
            column.cells[i],
            "dataset column " + column.name + " row " + std::to_string(i)));
      }
    } else {
      out.categorical = column.cells;
      if (it == declared.end() || out.meta.levels.empty()) {
        // Levels in order of first appearance.
        std::unordered_set<std::string> seen;
        for (const auto& cell : out.categorical) {
          if (seen.insert(cell).second) out.meta.levels.push_back(cell);
        }
      }
    }
    features.columns.push_back(std::move(out));
  }
  for (const auto& [name, meta] : declared) {
    if (!features.FindColumn(name)) {
      Schema("declared feature \"" + name + "\" not in dataset.csv");
    }
  }

  if (bundle.task == TaskKind::kRegression) {
    for (size_t i = 0; i < target->cells.size(); ++i) {
      bundle.dataset.target_values.push_back(ParseNumericCell(
          target->cells[i], "target row " + std::to_string(i)));
    }
  } else {
    for (const auto& cell : target->cells) {
      bundle.dataset.target_codes.push_back(encode(cell));
    }
  }

  if (!manifest.contains("models") || !manifest["models"].is_array()) {
    Schema("manifest has no models array");
  }
  for (const auto& entry : manifest["models"]) {
    if (!entry.is_object() || !entry.contains("id")) {
      Schema("every manifest model needs an id");
    }
    ModelEntry model;
    model.id = JsonCellToString(entry["id"]);
    model.display_name =
        entry.contains("name") ? JsonCellToString(entry["name"]) : model.id;
    if (entry.contains("weight")) {
      if (!entry["weight"].is_number()) {
        Schema("model " + model.id + ": weight must be a number");
      }
      model.weight = entry["weight"].get<double>();
    } else {
      model.weight = 1.0;
    }

    const auto cells = raw.predictions.find(model.id);
    if (cells == raw.predictions.end()) {
      Schema("no predictions column for model " + model.id);
    }
    if (bundle.task == TaskKind::kRegression) {
      for (size_t i = 0; i < cells->second.size(); ++i) {
        model.values.push_back(ParseNumericCell(
            cells->second[i],
            "predictions of " + model.id + " row " + std::to_string(i)));
      }
    } else {
      for (const auto& cell : cells->second) model.codes.push_back(encode(cell));
    }

    const auto proba = raw.probabilities.find(model.id);
    if (proba != raw.probabilities.end()) {
      csv::Table table = proba->second;
      const size_t k = bundle.class_labels.size();
      if (table.header.empty()) table.header = bundle.class_labels;
      std::vector<size_t> order(k);
      if (table.header.size() != k) {
        Schema("probabilities of " + model.id + " have " +
               std::to_string(table.header.size()) + " columns for " +
               std::to_string(k) + " class labels");
      }
      for (size_t c = 0; c < k; ++c) {
        const int code = encode(table.header[c]);
        if (code < 0) {
          Schema("probabilities of " + model.id + ": column \"" +
                 table.header[c] + "\" is not a class label");
        }
        order[c] = static_cast<size_t>(code);
      }
      ProbabilityMatrix matrix(table.rows.size(), k);
      for (size_t i = 0; i < table.rows.size(); ++i) {
        if (table.rows[i].size() != k) {
          Schema("probabilities of " + model.id + " row " + std::to_string(i) +
                 " has " + std::to_string(table.rows[i].size()) + " cells");
        }
        for (size_t c = 0; c < k; ++c) {
          matrix.at(i, order[c]) = ParseNumericCell(
              table.rows[i][c], "probabilities of " + model.id + " row " +
                                    std::to_string(i));
        }
      }
      model.probabilities = std::move(matrix);
    }

    if (entry.contains("predictor")) {
      model.predictor = ResolvePredictor(entry["predictor"], raw.base_dir);
    }
    bundle.models.push_back(std::move(model));
  }

  if (raw.ensemble) {
    if (bundle.task == TaskKind::kRegression) {
      std::vector<double> values;
      for (size_t i = 0; i < raw.ensemble->size(); ++i) {
        values.push_back(ParseNumericCell((*raw.ensemble)[i],
                                          "ensemble row " + std::to_string(i)));
      }
      bundle.ensemble_values = std::move(values);
    } else {
      std::vector<int> codes;
      for (const auto& cell : *raw.ensemble) codes.push_back(encode(cell));
      bundle.ensemble_codes = std::move(codes);
    }
  }

  if (bundle.task == TaskKind::kRegression &&
      !bundle.dataset.target_values.empty()) {
    bundle.dataset.target_std = TargetStd(bundle.dataset.target_values);
  }
  return bundle;
}

// Collects row-level issues per (location, code) so a bad column yields one
// entry with the first offending row and a count.
class RowIssueCollector {
 public:
  void Add(const std::string& code, const std::string& location, size_t row,
           const std::string& detail) {
    auto [it, inserted] = entries_.try_emplace({location, code});
    if (inserted) {
      it->second.first_row = row;
      it->second.detail = detail;
      order_.push_back(it->first);
    }
    ++it->second.count;
  }

  void Flush(std::vector<ValidationIssue>& out) {
    for (const auto& key : order_) {
      const Entry& entry = entries_.at(key);
      std::string message = entry.detail;
      if (entry.count > 1) {
        message += " (" + std::to_string(entry.count) + " rows affected)";
      }
      out.push_back({key.second, message,
                     key.first + "[row " + std::to_string(entry.first_row) +
                         "]"});
    }
    entries_.clear();
    order_.clear();
  }

 private:
  struct Entry {
    size_t first_row = 0;
    size_t count = 0;
    std::string detail;
  };
  std::map<std::pair<std::string, std::string>, Entry> entries_;
  std::vector<std::pair<std::string, std::string>> order_;
};

ErrorCode IssueToErrorCode(const std::string& code) {
  if (code == "LengthMismatch") return ErrorCode::kLengthMismatch;
  if (code == "NonStochasticProbabilityRow") {
    return ErrorCode::kNonStochasticProbabilityRow;
  }
  if (code == "ZeroWeightSum") return ErrorCode::kZeroWeightSum;
  if (code == "UnknownLabel") return ErrorCode::kUnknownLabel;
  if (code == "SchemaMismatch" || code == "ClassCountMismatch" ||
      code == "ProbabilityShape") {
    return ErrorCode::kSchemaMismatch;
  }
  return ErrorCode::kValidationFailed;
}

std::string ValidationMessage(const ValidationReport& report) {
  if (report.errors.empty()) return "bundle is valid";
  const ValidationIssue& first = report.errors.front();
  std::string message = "bundle validation failed: " + first.code + " at " +
                        first.location + ": " + first.message;
  if (report.errors.size() > 1) {
    message += " (+" + std::to_string(report.errors.size() - 1) +
               " more errors)";
  }
  return message;
}

}  // namespace

std::string_view TaskKindName(TaskKind task) {
  switch (task) {
    case TaskKind::kRegression:
      return "regression";
    case TaskKind::kBinary:
      return "binary";
    case TaskKind::kMulticlass:
      return "multiclass";
  }
  return "regression";
}

TaskKind ParseTaskKind(std::string_view name) {
  if (name == "regression") return TaskKind::kRegression;
  if (name == "binary") return TaskKind::kBinary;
  if (name == "multiclass") return TaskKind::kMulticlass;
  throw Error(ErrorCode::kSchemaMismatch,
              "unknown task \"" + std::string(name) + "\"");
}

std::optional<size_t> FeatureTable::FindColumn(std::string_view name) const {
  for (size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].meta.name == name) return j;
  }
  return std::nullopt;
}

FeatureTable FeatureTable::SelectRows(std::span<const size_t> rows) const {
  FeatureTable out;
  out.num_rows = rows.size();
  out.columns.reserve(columns.size());
  for (const auto& column : columns) {
    FeatureColumn copy;
    copy.meta = column.meta;
    if (column.meta.kind == FeatureKind::kNumeric) {
      copy.numeric.reserve(rows.size());
      for (size_t r : rows) copy.numeric.push_back(column.numeric[r]);
    } else {
      copy.categorical.reserve(rows.size());
      for (size_t r : rows) copy.categorical.push_back(column.categorical[r]);
    }
    out.columns.push_back(std::move(copy));
  }
  return out;
}

FeatureTable FeatureTable::Slice(size_t begin, size_t end) const {
  FeatureTable out;
  out.num_rows = end - begin;
  out.columns.reserve(columns.size());
  for (const auto& column : columns) {
    FeatureColumn copy;
    copy.meta = column.meta;
    if (column.meta.kind == FeatureKind::kNumeric) {
      copy.numeric.assign(column.numeric.begin() + begin,
                          column.numeric.begin() + end);
    } else {
      copy.categorical.assign(column.categorical.begin() + begin,
                              column.categorical.begin() + end);
    }
    out.columns.push_back(std::move(copy));
  }
  return out;
}

int ArgMax(std::span<const double> row) {
  int best = 0;
  for (size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = static_cast<int>(c);
  }
  return best;
}

double TargetStd(std::span<const double> target) {
  if (target.empty()) {
    throw Error(ErrorCode::kEmptyTarget, "target vector is empty");
  }
  const double n = static_cast<double>(target.size());
  double sum = 0.0;
  for (double y : target) sum += y;
  const double mean = sum / n;
  double squares = 0.0;
  for (double y : target) squares += (y - mean) * (y - mean);
  return std::sqrt(squares / n);
}

size_t EnsembleBundle::ModelIndex(std::string_view id) const {
  for (size_t j = 0; j < models.size(); ++j) {
    if (models[j].id == id) return j;
  }
  throw Error(ErrorCode::kUnknownModel,
              "unknown model id \"" + std::string(id) + "\"");
}

std::vector<double> EnsembleBundle::Weights() const {
  std::vector<double> weights;
  weights.reserve(models.size());
  for (const auto& model : models) weights.push_back(model.weight);
  return weights;
}

std::vector<std::string> EnsembleBundle::ModelIds() const {
  std::vector<std::string> ids;
  ids.reserve(models.size());
  for (const auto& model : models) ids.push_back(model.id);
  return ids;
}

bool EnsembleBundle::HasAllProbabilities() const {
  return std::all_of(models.begin(), models.end(), [](const ModelEntry& m) {
    return m.probabilities.has_value();
  });
}

const std::string& EnsembleBundle::LabelName(int code) const {
  static const std::string kUnknown = "<unknown>";
  if (code < 0 || static_cast<size_t>(code) >= class_labels.size()) {
    return kUnknown;
  }
  return class_labels[static_cast<size_t>(code)];
}

nlohmann::ordered_json ToJson(const ValidationReport& report) {
  auto issues = [](const std::vector<ValidationIssue>& list) {
    ordered_json out = ordered_json::array();
    for (const auto& issue : list) {
      out.push_back({{"code", issue.code},
                     {"message", issue.message},
                     {"location", issue.location}});
    }
    return out;
  };
  ordered_json out;
  out["errors"] = issues(report.errors);
  out["warnings"] = issues(report.warnings);
  return out;
}

ValidationError::ValidationError(ValidationReport report)
    : Error(report.errors.empty() ? ErrorCode::kValidationFailed
                                  : IssueToErrorCode(report.errors[0].code),
            ValidationMessage(report)),
      report_(std::move(report)) {}

ValidationReport ValidateBundle(const EnsembleBundle& bundle) {
  ValidationReport report;
  auto& errors = report.errors;
  RowIssueCollector rows;
  const size_t n = bundle.num_rows();
  const size_t k = bundle.class_labels.size();

  // Task and labels.
  if (bundle.task == TaskKind::kRegression && k != 0) {
    errors.push_back({"ClassCountMismatch",
                      "regression bundles take no class labels", "manifest"});
  }
  if (bundle.task == TaskKind::kBinary && k != 2) {
    errors.push_back({"ClassCountMismatch",
                      "binary task needs exactly 2 class labels, got " +
                          std::to_string(k),
                      "manifest.class_labels"});
  }
  if (bundle.task == TaskKind::kMulticlass && k < 3) {
    errors.push_back({"ClassCountMismatch",
                      "multiclass task needs at least 3 class labels, got " +
                          std::to_string(k),
                      "manifest.class_labels"});
  }
  {
    std::set<std::string> distinct(bundle.class_labels.begin(),
                                   bundle.class_labels.end());
    if (distinct.size() != k) {
      errors.push_back({"DuplicateClassLabel", "class labels must be distinct",
                        "manifest.class_labels"});
    }
  }
  if (bundle.task == TaskKind::kBinary &&
      (bundle.positive_code < 0 || static_cast<size_t>(bundle.positive_code) >= k)) {
    errors.push_back({"SchemaMismatch", "positive class is out of range",
                      "manifest.positive_label"});
  }

  // Dataset.
  if (n == 0) {
    errors.push_back({"EmptyDataset", "dataset has no observations",
                      "dataset"});
  }
  const FeatureTable& features = bundle.dataset.features;
  if (features.num_rows != n) {
    errors.push_back({"LengthMismatch",
                      "feature table has " + std::to_string(features.num_rows) +
                          " rows, target has " + std::to_string(n),
                      "dataset"});
  }
  for (const auto& column : features.columns) {
    const std::string location = "dataset.columns[" + column.meta.name + "]";
    if (column.size() != n) {
      errors.push_back({"LengthMismatch",
                        "column " + column.meta.name + " has " +
                            std::to_string(column.size()) + " cells, expected " +
                            std::to_string(n),
                        location});
    }
    if (column.meta.kind == FeatureKind::kNumeric) {
      for (size_t i = 0; i < column.numeric.size(); ++i) {
        if (!std::isfinite(column.numeric[i])) {
          rows.Add("NonFiniteValue", location, i,
                   "numeric feature holds a non-finite value");
        }
      }
    } else {
      std::unordered_set<std::string> levels(column.meta.levels.begin(),
                                             column.meta.levels.end());
      for (size_t i = 0; i < column.categorical.size(); ++i) {
        if (!levels.contains(column.categorical[i])) {
          rows.Add("UndeclaredLevel", location, i,
                   "value \"" + column.categorical[i] +
                       "\" is not a declared level");
        }
      }
    }
  }
  if (bundle.task == TaskKind::kRegression) {
    for (size_t i = 0; i < bundle.dataset.target_values.size(); ++i) {
      if (!std::isfinite(bundle.dataset.target_values[i])) {
        rows.Add("NonFiniteValue", "dataset.target", i,
                 "target holds a non-finite value");
      }
    }
    if (!bundle.dataset.target_codes.empty()) {
      errors.push_back({"SchemaMismatch",
                        "regression target stored as labels", "dataset.target"});
    }
  } else {
    for (size_t i = 0; i < bundle.dataset.target_codes.size(); ++i) {
      if (bundle.dataset.target_codes[i] < 0 ||
          static_cast<size_t>(bundle.dataset.target_codes[i]) >= k) {
        rows.Add("UnknownLabel", "dataset.target", i,
                 "target label is not a declared class label");
      }
    }
  }
  rows.Flush(errors);

  // Models.
  if (bundle.models.size() < 2) {
    errors.push_back({"TooFewModels",
                      "an ensemble needs at least 2 component models, got " +
                          std::to_string(bundle.models.size()),
                      "manifest.models"});
  }
  std::set<std::string> ids;
  double weight_sum = 0.0;
  for (const auto& model : bundle.models) {
    const std::string location = "models[" + model.id + "]";
    if (model.id.empty()) {
      errors.push_back({"SchemaMismatch", "model id is empty", location});
    }
    if (!ids.insert(model.id).second) {
      errors.push_back(
          {"DuplicateModelId", "model id " + model.id + " repeats", location});
    }
    if (!std::isfinite(model.weight) || model.weight < 0) {
      errors.push_back({"NegativeWeight",
                        "weight of " + model.id + " must be finite and >= 0",
                        location + ".weight"});
    } else {
      weight_sum += model.weight;
    }

    if (model.size() != n) {
      errors.push_back({"LengthMismatch",
                        "model " + model.id + " has " +
                            std::to_string(model.size()) +
                            " predictions, dataset has " + std::to_string(n),
                        location + ".predictions"});
    }
    if (bundle.task == TaskKind::kRegression) {
      if (!model.codes.empty()) {
        errors.push_back({"SchemaMismatch",
                          "regression model stores labels", location});
      }
      if (model.probabilities) {
        errors.push_back({"SchemaMismatch",
                          "regression model stores probabilities", location});
      }
      for (size_t i = 0; i < model.values.size(); ++i) {
        if (!std::isfinite(model.values[i])) {
          rows.Add("NonFiniteValue", location + ".predictions", i,
                   "prediction of " + model.id + " is not finite");
        }
      }
      rows.Flush(errors);
      continue;
    }

    for (size_t i = 0; i < model.codes.size(); ++i) {
      if (model.codes[i] < 0 || static_cast<size_t>(model.codes[i]) >= k) {
        rows.Add("UnknownLabel", location + ".predictions", i,
                 "prediction of " + model.id +
                     " is not a declared class label");
      }
    }
    if (!model.probabilities) {
      report.warnings.push_back(
          {"MissingProbabilities",
           "model " + model.id +
               " has no probabilities; weights analysis and probability-averaged "
               "conjunctive metrics are unavailable",
           location + ".probabilities"});
      rows.Flush(errors);
      continue;
    }
    const ProbabilityMatrix& proba = *model.probabilities;
    if (proba.rows() != n) {
      errors.push_back({"LengthMismatch",
                        "probabilities of " + model.id + " have " +
                            std::to_string(proba.rows()) + " rows, expected " +
                            std::to_string(n),
                        location + ".probabilities"});
    }
    if (proba.cols() != k) {
      errors.push_back({"ProbabilityShape",
                        "probabilities of " + model.id + " have " +
                            std::to_string(proba.cols()) + " columns for " +
                            std::to_string(k) + " classes",
                        location + ".probabilities"});
      rows.Flush(errors);
      continue;
    }
    for (size_t i = 0; i < proba.rows(); ++i) {
      const auto row = proba.row(i);
      double sum = 0.0;
      bool in_range = true;
      for (double p : row) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0 + kStochasticTolerance) {
          in_range = false;
        }
        sum += p;
      }
      if (!in_range || std::abs(sum - 1.0) > kStochasticTolerance) {
        std::ostringstream detail;
        detail.precision(17);
        detail << "probability row of " << model.id << " sums to " << sum;
        rows.Add("NonStochasticProbabilityRow", location + ".probabilities", i,
                 detail.str());
        continue;
      }
      if (i < model.codes.size() && model.codes[i] >= 0 &&
          static_cast<size_t>(model.codes[i]) < k) {
        const double max_p = row[static_cast<size_t>(ArgMax(row))];
        if (row[static_cast<size_t>(model.codes[i])] != max_p) {
          rows.Add("LabelArgmaxMismatch", location + ".predictions", i,
                   "stored label of " + model.id +
                       " differs from the argmax of its probability row");
        }
      }
    }
    rows.Flush(errors);
  }
  if (!bundle.models.empty() && !(weight_sum > 0.0)) {
    errors.push_back(
        {"ZeroWeightSum", "model weights sum to zero", "manifest.models"});
  }

  if (bundle.ensemble_values && bundle.ensemble_values->size() != n) {
    errors.push_back({"LengthMismatch",
                      "stored ensemble prediction has " +
                          std::to_string(bundle.ensemble_values->size()) +
                          " rows, expected " + std::to_string(n),
                      "ensemble_prediction"});
  }
  if (bundle.ensemble_codes) {
    if (bundle.ensemble_codes->size() != n) {
      errors.push_back({"LengthMismatch",
                        "stored ensemble prediction has " +
                            std::to_string(bundle.ensemble_codes->size()) +
                            " rows, expected " + std::to_string(n),
                        "ensemble_prediction"});
    }
    for (size_t i = 0; i < bundle.ensemble_codes->size(); ++i) {
      const int code = (*bundle.ensemble_codes)[i];
      if (code < 0 || static_cast<size_t>(code) >= k) {
        rows.Add("UnknownLabel", "ensemble_prediction", i,
                 "stored ensemble label is not a declared class label");
      }
    }
    rows.Flush(errors);
  }
  return report;
}

EnsembleBundle ParseBundleDocument(const nlohmann::json& document,
                                   const std::filesystem::path& base_dir) {
  EnsembleBundle bundle = Materialize(ReadDocument(document, base_dir));
  ValidationReport report = ValidateBundle(bundle);
  if (!report.ok()) throw ValidationError(std::move(report));
  return bundle;
}

EnsembleBundle LoadBundle(const std::filesystem::path& path) {
  if (fs::is_directory(path)) {
    EnsembleBundle bundle = Materialize(ReadDirectory(path));
    ValidationReport report = ValidateBundle(bundle);
    if (!report.ok()) throw ValidationError(std::move(report));
    return bundle;
  }
  if (!fs::exists(path)) {
    throw Error(ErrorCode::kMissingManifest,
                "bundle path " + path.string() + " does not exist");
  }
  const json document = ParseJsonText(ReadText(path), path.filename().string());
  return ParseBundleDocument(document, path.parent_path());
}

namespace {

ordered_json ManifestJson(const EnsembleBundle& bundle,
                          bool with_ensemble_file) {
  ordered_json manifest;
  manifest["task"] = std::string(TaskKindName(bundle.task));
  manifest["target_column"] = bundle.dataset.target_column;
  if (IsClassification(bundle.task)) {
    manifest["class_labels"] = bundle.class_labels;
    if (bundle.task == TaskKind::kBinary) {
      manifest["positive_label"] = bundle.LabelName(bundle.positive_code);
    }
  }
  ordered_json features = ordered_json::array();
  for (const auto& column : bundle.dataset.features.columns) {
    ordered_json entry;
    entry["name"] = column.meta.name;
    entry["kind"] = column.meta.kind == FeatureKind::kNumeric ? "numeric"
                                                              : "categorical";
    if (column.meta.kind == FeatureKind::kCategorical) {
      entry["levels"] = column.meta.levels;
    }
    features.push_back(std::move(entry));
  }
  manifest["features"] = std::move(features);
  ordered_json models = ordered_json::array();
  for (const auto& model : bundle.models) {
    ordered_json entry;
    entry["id"] = model.id;
    entry["name"] = model.display_name;
    entry["weight"] = model.weight;
    if (model.predictor) entry["predictor"] = *model.predictor;
    models.push_back(std::move(entry));
  }
  manifest["models"] = std::move(models);
  if (with_ensemble_file &&
      (bundle.ensemble_values || bundle.ensemble_codes)) {
    manifest["ensemble_prediction_file"] = "ensemble.csv";
  }
  return manifest;
}

std::string FeatureCell(const FeatureColumn& column, size_t row) {
  return column.meta.kind == FeatureKind::kNumeric
             ? csv::FormatNumber(column.numeric[row])
             : column.categorical[row];
}

std::string TargetCell(const EnsembleBundle& bundle, size_t row) {
  return bundle.task == TaskKind::kRegression
             ? csv::FormatNumber(bundle.dataset.target_values[row])
             : bundle.LabelName(bundle.dataset.target_codes[row]);
}

void WriteText(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace

void SaveBundleDirectory(const EnsembleBundle& bundle,
                         const std::filesystem::path& dir) {
  fs::create_directories(dir);
  WriteText(dir / "manifest.json",
            ManifestJson(bundle, /*with_ensemble_file=*/true).dump(2) + "\n");

  const size_t n = bundle.num_rows();
  csv::Table dataset;
  for (const auto& column : bundle.dataset.features.columns) {
    dataset.header.push_back(column.meta.name);
  }
  dataset.header.push_back(bundle.dataset.target_column);
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::string> row;
    for (const auto& column : bundle.dataset.features.columns) {
      row.push_back(FeatureCell(column, i));
    }
    row.push_back(TargetCell(bundle, i));
    dataset.rows.push_back(std::move(row));
  }
  WriteText(dir / "dataset.csv", csv::Write(dataset));

  csv::Table predictions;
  predictions.header = bundle.ModelIds();
  for (size_t i = 0; i < n; ++i) {
    std::vector<std::string> row;
    for (const auto& model : bundle.models) {
      row.push_back(bundle.task == TaskKind::kRegression
                        ? csv::FormatNumber(model.values[i])
                        : bundle.LabelName(model.codes[i]));
    }
    predictions.rows.push_back(std::move(row));
  }
  WriteText(dir / "predictions.csv", csv::Write(predictions));

  for (const auto& model : bundle.models) {
    if (!model.probabilities) continue;
    csv::Table table;
    table.header = bundle.class_labels;
    for (size_t i = 0; i < model.probabilities->rows(); ++i) {
      std::vector<std::string> row;
      for (double p : model.probabilities->row(i)) {
        row.push_back(csv::FormatNumber(p));
      }
      table.rows.push_back(std::move(row));
    }
    WriteText(dir / ("proba_" + model.id + ".csv"), csv::Write(table));
  }

  if (bundle.ensemble_values || bundle.ensemble_codes) {
    csv::Table table;
    table.header = {"ensemble"};
    for (size_t i = 0; i < n; ++i) {
      table.rows.push_back({bundle.ensemble_values
                                ? csv::FormatNumber((*bundle.ensemble_values)[i])
                                : bundle.LabelName((*bundle.ensemble_codes)[i])});
    }
    WriteText(dir / "ensemble.csv", csv::Write(table));
  }
}

nlohmann::ordered_json BundleToDocument(const EnsembleBundle& bundle) {
  ordered_json document;
  document["manifest"] = ManifestJson(bundle, /*with_ensemble_file=*/false);

  const size_t n = bundle.num_rows();
  ordered_json columns = ordered_json::array();
  for (const auto& column : bundle.dataset.features.columns) {
    columns.push_back(column.meta.name);
  }
  columns.push_back(bundle.dataset.target_column);
  ordered_json rows = ordered_json::array();
  for (size_t i = 0; i < n; ++i) {
    ordered_json row = ordered_json::array();
    for (const auto& column : bundle.dataset.features.columns) {
      if (column.meta.kind == FeatureKind::kNumeric) {
        row.push_back(column.numeric[i]);
      } else {
        row.push_back(column.categorical[i]);
      }
    }
    if (bundle.task == TaskKind::kRegression) {
      row.push_back(bundle.dataset.target_values[i]);
    } else {
      row.push_back(bundle.LabelName(bundle.dataset.target_codes[i]));
    }
    rows.push_back(std::move(row));
  }
  document["dataset"] = {{"columns", std::move(columns)},
                         {"rows", std::move(rows)}};

  ordered_json predictions = ordered_json::object();
  for (const auto& model : bundle.models) {
    ordered_json cells = ordered_json::array();
    if (bundle.task == TaskKind::kRegression) {
      for (double v : model.values) cells.push_back(v);
    } else {
      for (int code : model.codes) cells.push_back(bundle.LabelName(code));
    }
    predictions[model.id] = std::move(cells);
  }
  document["predictions"] = std::move(predictions);

  ordered_json probabilities = ordered_json::object();
  for (const auto& model : bundle.models) {
    if (!model.probabilities) continue;
    ordered_json matrix = ordered_json::array();
    for (size_t i = 0; i < model.probabilities->rows(); ++i) {
      const auto row = model.probabilities->row(i);
      matrix.push_back(std::vector<double>(row.begin(), row.end()));
    }
    probabilities[model.id] = std::move(matrix);
  }
  if (!probabilities.empty()) document["probabilities"] = std::move(probabilities);

  if (bundle.ensemble_values) {
    document["ensemble_prediction"] = *bundle.ensemble_values;
  } else if (bundle.ensemble_codes) {
    ordered_json cells = ordered_json::array();
    for (int code : *bundle.ensemble_codes) cells.push_back(bundle.LabelName(code));
    document["ensemble_prediction"] = std::move(cells);
  }
  return document;
}

}  // namespace ensemble_lens
