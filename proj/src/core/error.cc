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

#include "pilotlet/core/error.h"

#include <array>
#include <utility>

namespace pilotlet {

namespace {

constexpr std::array<std::pair<ErrorCode, std::string_view>, 26> kNames{{
    {ErrorCode::kValidation, "VALIDATION"},
    {ErrorCode::kIllegalTransition, "ILLEGAL_TRANSITION"},
    {ErrorCode::kDuplicateId, "DUPLICATE_ID"},
    {ErrorCode::kUnknownPilot, "UNKNOWN_PILOT"},
    {ErrorCode::kUnknownUnit, "UNKNOWN_UNIT"},
    {ErrorCode::kUnknownJob, "UNKNOWN_JOB"},
    {ErrorCode::kUnknownApp, "UNKNOWN_APP"},
    {ErrorCode::kSubmitFailed, "SUBMIT_FAILED"},
    {ErrorCode::kAlreadyTerminal, "ALREADY_TERMINAL"},
    {ErrorCode::kNoActivePilot, "NO_ACTIVE_PILOT"},
    {ErrorCode::kTimeout, "TIMEOUT"},
    {ErrorCode::kMissingEnv, "MISSING_ENV"},
    {ErrorCode::kMalformedNodefile, "MALFORMED_NODEFILE"},
    {ErrorCode::kBootFailed, "BOOT_FAILED"},
    {ErrorCode::kConnectFailed, "CONNECT_FAILED"},
    {ErrorCode::kNeverFits, "NEVER_FITS"},
    {ErrorCode::kMetricsUnavailable, "METRICS_UNAVAILABLE"},
    {ErrorCode::kSpawnFailed, "SPAWN_FAILED"},
    {ErrorCode::kStagingFailed, "STAGING_FAILED"},
    {ErrorCode::kIoFailed, "IO_FAILED"},
    {ErrorCode::kPortInUse, "PORT_IN_USE"},
    {ErrorCode::kUnreachable, "UNREACHABLE"},
    {ErrorCode::kImpossibleRequest, "IMPOSSIBLE_REQUEST"},
    {ErrorCode::kShapeMismatch, "SHAPE_MISMATCH"},
    {ErrorCode::kMalformedInput, "MALFORMED_INPUT"},
    {ErrorCode::kStoreFailed, "STORE_FAILED"},
}};

}  // namespace

std::string_view ToString(ErrorCode code) {
  for (const auto &[c, name] : kNames) {
    if (c == code) return name;
  }
  return "UNKNOWN";
}

ErrorCode ErrorCodeFromString(std::string_view name) {
  for (const auto &[c, n] : kNames) {
    if (n == name) return c;
  }
  return ErrorCode::kMalformedInput;
}

Error::Error(ErrorCode code, const std::string &message, std::vector<std::string> details)
    : std::runtime_error(std::string(ToString(code)) + ": " + message),
      code_(code),
      details_(std::move(details)) {}

}  // namespace pilotlet
