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

// Data model of an ensemble bundle: the evaluation dataset, the component
// models' stored predictions and weights, and the on-disk format.
//
// A bundle is either a directory
//
//   manifest.json      task, target column, class labels, models, weights
//   dataset.csv        features plus the target column
//   predictions.csv    one column per model id
//   proba_<id>.csv     optional, one column per class label
//
// or a single JSON document with the keys "manifest", "dataset",
// "predictions" and "probabilities".
//
// Classification labels are held as integer codes into `class_labels`. A code
// of -1 marks a label that is not declared; validation reports it.

#ifndef ENSEMBLE_LENS_BUNDLE_H_
#define ENSEMBLE_LENS_BUNDLE_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ensemble_lens/error.h"
#include "json.hpp"

namespace ensemble_lens {

enum class TaskKind { kRegression, kBinary, kMulticlass };

std::string_view TaskKindName(TaskKind task);
// Throws Error(kSchemaMismatch) for an unknown name.
TaskKind ParseTaskKind(std::string_view name);
inline bool IsClassification(TaskKind task) {
  return task != TaskKind::kRegression;
}

enum class FeatureKind { kNumeric, kCategorical };

struct FeatureMeta {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  // Declared levels of a categorical feature, in display order.
  std::vector<std::string> levels;
};

// One feature column. Only the vector matching `meta.kind` is populated.
struct FeatureColumn {
  FeatureMeta meta;
  std::vector<double> numeric;
  std::vector<std::string> categorical;

  size_t size() const {
    return meta.kind == FeatureKind::kNumeric ? numeric.size()
                                              : categorical.size();
  }
};

// Column-major feature matrix.
struct FeatureTable {
  std::vector<FeatureColumn> columns;
  size_t num_rows = 0;

  size_t num_columns() const { return columns.size(); }
  std::optional<size_t> FindColumn(std::string_view name) const;
  // Copy with rows re-ordered (or sub-sampled) by `rows`.
  FeatureTable SelectRows(std::span<const size_t> rows) const;
  // Copy of rows [begin, end).
  FeatureTable Slice(size_t begin, size_t end) const;
};

// Dense row-major n x k matrix of class probabilities.
class ProbabilityMatrix {
 public:
  ProbabilityMatrix() = default;
  ProbabilityMatrix(size_t rows, size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }

  std::span<const double> row(size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(size_t i) { return {data_.data() + i * cols_, cols_}; }
  double at(size_t i, size_t j) const { return data_[i * cols_ + j]; }
  double& at(size_t i, size_t j) { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const ProbabilityMatrix&) const = default;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> data_;
};

// Index of the largest entry; ties go to the lowest index.
int ArgMax(std::span<const double> row);

struct Dataset {
  FeatureTable features;
  std::string target_column;
  // Regression target.
  std::vector<double> target_values;
  // Classification target, codes into the bundle's class labels.
  std::vector<int> target_codes;
  // Population standard deviation of `target_values`; 0 for classification.
  double target_std = 0.0;

  size_t size() const {
    return target_values.empty() ? target_codes.size() : target_values.size();
  }
};

// Population standard deviation (divides by n). Throws Error(kEmptyTarget).
double TargetStd(std::span<const double> target);

struct ModelEntry {
  std::string id;
  std::string display_name;
  double weight = 0.0;
  // Regression predictions.
  std::vector<double> values;
  // Classification predictions, codes into the bundle's class labels.
  std::vector<int> codes;
  std::optional<ProbabilityMatrix> probabilities;
  // Predictor reference from the manifest, with any referenced spec file
  // already inlined under "spec".
  std::optional<nlohmann::ordered_json> predictor;

  size_t size() const { return values.empty() ? codes.size() : values.size(); }
};

struct EnsembleBundle {
  TaskKind task = TaskKind::kRegression;
  Dataset dataset;
  std::vector<ModelEntry> models;
  std::vector<std::string> class_labels;
  // Code of the positive class for binary tasks.
  int positive_code = 1;
  // Optional stored ensemble prediction.
  std::optional<std::vector<double>> ensemble_values;
  std::optional<std::vector<int>> ensemble_codes;

  size_t num_rows() const { return dataset.size(); }
  size_t num_models() const { return models.size(); }
  // Throws Error(kUnknownModel).
  size_t ModelIndex(std::string_view id) const;
  std::vector<double> Weights() const;
  std::vector<std::string> ModelIds() const;
  // True when every model carries a probability matrix.
  bool HasAllProbabilities() const;
  // Class label text for a code; "<unknown>" for -1.
  const std::string& LabelName(int code) const;
};

// Output of an ensemble combination or a predictor call. Regression fills
// `values`; classification fills `codes` and, when available,
// `probabilities`.
struct PredictionSet {
  std::vector<double> values;
  std::vector<int> codes;
  std::optional<ProbabilityMatrix> probabilities;

  size_t size() const { return values.empty() ? codes.size() : values.size(); }
};

struct ValidationIssue {
  std::string code;
  std::string message;
  std::string location;
};

struct ValidationReport {
  std::vector<ValidationIssue> errors;
  std::vector<ValidationIssue> warnings;

  bool ok() const { return errors.empty(); }
};

nlohmann::ordered_json ToJson(const ValidationReport& report);

// Raised when a bundle parses but violates an invariant. code() carries the
// first error's category.
class ValidationError : public Error {
 public:
  explicit ValidationError(ValidationReport report);
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

// Lists every violated invariant. Never throws on a constructed bundle.
ValidationReport ValidateBundle(const EnsembleBundle& bundle);

// Loads a bundle directory or single-file JSON bundle, validates it and caches
// the target standard deviation. Throws Error(kMissingManifest,
// kSchemaMismatch, kIo) and ValidationError.
EnsembleBundle LoadBundle(const std::filesystem::path& path);

// Builds a bundle from the single-file JSON form. `base_dir` resolves
// relative predictor spec files.
EnsembleBundle ParseBundleDocument(const nlohmann::json& document,
                                   const std::filesystem::path& base_dir = {});

// Writes the directory form. Numbers use shortest round-trip text, so a reload
// is bit-exact.
void SaveBundleDirectory(const EnsembleBundle& bundle,
                         const std::filesystem::path& dir);

// Single-file JSON form.
nlohmann::ordered_json BundleToDocument(const EnsembleBundle& bundle);

}  // namespace ensemble_lens

#endif  // ENSEMBLE_LENS_BUNDLE_H_
