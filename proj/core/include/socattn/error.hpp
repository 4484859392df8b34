// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace socattn {

// Stable, machine-parsable error categories. The CLI prints them as the
// prefix of its single-line diagnostics.
enum class ErrorCode {
  kContract,
  kUsage,
  kIo,
  kScene,
  kDumpVersion,
  kDumpShape,
  kDumpTruncated,
  kDumpInconsistent,
  kVerify,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Raised when a caller breaks an operation's precondition (shape mismatch,
// out-of-range index, fully masked softmax row, ...).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& message)
      : Error(ErrorCode::kContract, message) {}
};

}  // namespace socattn
