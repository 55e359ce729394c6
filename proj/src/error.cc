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

#include "ensemble_lens/error.h"

namespace ensemble_lens {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "InvalidArgument";
    case ErrorCode::kIo:
      return "Io";
    case ErrorCode::kMissingManifest:
      return "MissingManifest";
    case ErrorCode::kSchemaMismatch:
      return "SchemaMismatch";
    case ErrorCode::kLengthMismatch:
      return "LengthMismatch";
    case ErrorCode::kNonStochasticProbabilityRow:
      return "NonStochasticProbabilityRow";
    case ErrorCode::kValidationFailed:
      return "ValidationFailed";
    case ErrorCode::kEmptyTarget:
      return "EmptyTarget";
    case ErrorCode::kZeroWeightSum:
      return "ZeroWeightSum";
    case ErrorCode::kUnknownLabel:
      return "UnknownLabel";
    case ErrorCode::kUnknownModel:
      return "UnknownModel";
    case ErrorCode::kMethodTaskMismatch:
      return "MethodTaskMismatch";
    case ErrorCode::kMetricTaskMismatch:
      return "MetricTaskMismatch";
    case ErrorCode::kNonRegressionTask:
      return "NonRegressionTask";
    case ErrorCode::kNonClassificationTask:
      return "NonClassificationTask";
    case ErrorCode::kNonBinaryTask:
      return "NonBinaryTask";
    case ErrorCode::kNegativeThreshold:
      return "NegativeThreshold";
    case ErrorCode::kXiOutOfRange:
      return "XiOutOfRange";
    case ErrorCode::kMissingProbabilities:
      return "MissingProbabilities";
    case ErrorCode::kBundleMismatch:
      return "BundleMismatch";
    case ErrorCode::kInvalidObjective:
      return "InvalidObjective";
    case ErrorCode::kBudgetTooSmall:
      return "BudgetTooSmall";
    case ErrorCode::kPredictorUnavailable:
      return "PredictorUnavailable";
    case ErrorCode::kUnknownFeature:
      return "UnknownFeature";
    case ErrorCode::kEmptyColumn:
      return "EmptyColumn";
    case ErrorCode::kMalformedSpec:
      return "MalformedSpec";
    case ErrorCode::kCoefficientArityMismatch:
      return "CoefficientArityMismatch";
    case ErrorCode::kHandshakeTimeout:
      return "HandshakeTimeout";
    case ErrorCode::kProtocolViolation:
      return "ProtocolViolation";
    case ErrorCode::kRemoteError:
      return "RemoteError";
    case ErrorCode::kCancelled:
      return "Cancelled";
  }
  return "Unknown";
}

}  // namespace ensemble_lens
