// Copyright 2026 The Pilotlet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pilotlet {

enum class ErrorCode {
  kValidation,
  kIllegalTransition,
  kDuplicateId,
  kUnknownPilot,
  kUnknownUnit,
  kUnknownJob,
  kUnknownApp,
  kSubmitFailed,
  kAlreadyTerminal,
  kNoActivePilot,
  kTimeout,
  kMissingEnv,
  kMalformedNodefile,
  kBootFailed,
  kConnectFailed,
  kNeverFits,
  kMetricsUnavailable,
  kSpawnFailed,
  kStagingFailed,
  kIoFailed,
  kPortInUse,
  kUnreachable,
  kImpossibleRequest,
  kShapeMismatch,
  kMalformedInput,
  kStoreFailed,
};

std::string_view ToString(ErrorCode code);
/// Inverse of ToString; unknown names map to kMalformedInput.
ErrorCode ErrorCodeFromString(std::string_view name);

/// Every failure in the framework surfaces as an Error. `details` carries
/// one entry per violation for kValidation, and (from, to) for
/// kIllegalTransition.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message,
        std::vector<std::string> details = {});

  ErrorCode code() const { return code_; }
  const std::vector<std::string> &details() const { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace pilotlet
