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

#ifndef DRIFTLINE_STATUS_H_
#define DRIFTLINE_STATUS_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace driftline {

// Error taxonomy shared by every module. The CLI maps codes to exit status.
enum class ErrorCode {
  kConfigError,
  kInvalidArgument,
  kIoError,
  kBackendUnavailable,
  kProtocolError,
  kStoreConflict,
  kIntegrityError,
  kMappingMismatch,
  kDimensionMismatch,
  kZeroVector,
  kIncompleteChain,
  kEmptySeries,
  kDuplicateMapping,
  kDomainError,
  kTooFewPoints,
  kEmptyList,
  kDegenerateBox,
  kMissingTask,
  kInsufficientSource,
  kParseError,
  kDuplicateId,
  kMissingMetrics,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " +
                           message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const { return code_; }
  // The message without the error-code prefix.
  const std::string& detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace driftline

#endif  // DRIFTLINE_STATUS_H_
