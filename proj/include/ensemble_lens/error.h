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

#ifndef ENSEMBLE_LENS_ERROR_H_
#define ENSEMBLE_LENS_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace ensemble_lens {

// Machine-readable failure categories. The string form (ErrorCodeName) is
// what appears in JSON error documents and validation reports.
enum class ErrorCode {
  kInvalidArgument,
  kIo,
  kMissingManifest,
  kSchemaMismatch,
  kLengthMismatch,
  kNonStochasticProbabilityRow,
  kValidationFailed,
  kEmptyTarget,
  kZeroWeightSum,
  kUnknownLabel,
  kUnknownModel,
  kMethodTaskMismatch,
  kMetricTaskMismatch,
  kNonRegressionTask,
  kNonClassificationTask,
  kNonBinaryTask,
  kNegativeThreshold,
  kXiOutOfRange,
  kMissingProbabilities,
  kBundleMismatch,
  kInvalidObjective,
  kBudgetTooSmall,
  kPredictorUnavailable,
  kUnknownFeature,
  kEmptyColumn,
  kMalformedSpec,
  kCoefficientArityMismatch,
  kHandshakeTimeout,
  kProtocolViolation,
  kRemoteError,
  kCancelled,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }
  std::string_view code_name() const { return ErrorCodeName(code_); }

 private:
  ErrorCode code_;
};

}  // namespace ensemble_lens

#endif  // ENSEMBLE_LENS_ERROR_H_
