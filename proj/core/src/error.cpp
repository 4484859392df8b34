// Copyright 2026 The socattn Authors
// SPDX-License-Identifier: Apache-2.0

#include "socattn/error.hpp"

namespace socattn {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kContract:
      return "E_CONTRACT";
    case ErrorCode::kUsage:
      return "E_USAGE";
    case ErrorCode::kIo:
      return "E_IO";
    case ErrorCode::kScene:
      return "E_SCENE";
    case ErrorCode::kDumpVersion:
      return "E_DUMP_VERSION";
    case ErrorCode::kDumpShape:
      return "E_DUMP_SHAPE";
    case ErrorCode::kDumpTruncated:
      return "E_DUMP_TRUNCATED";
    case ErrorCode::kDumpInconsistent:
      return "E_DUMP_INCONSISTENT";
    case ErrorCode::kVerify:
      return "E_VERIFY";
  }
  return "E_UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code) {}

}  // namespace socattn
