/*
 * Copyright 2026 The NNTC Authors. All Rights Reserved.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef NNTC_ERROR_HPP
#define NNTC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace nntc {

// Values mirror NNTC_STATUS in nntc.h; keep them in sync.
enum class ErrorCode {
  kInvalidArgument = 1,
  kShapeMismatch = 2,
  kOutOfRange = 3,
  kIo = 4,
  kTruncated = 5,
  kVersionMismatch = 6,
  kConfigMismatch = 7,
  kBadMagic = 8,
  kModelMismatch = 9,
  kShortPayload = 10,
  kMalformed = 11,
  kNonFinite = 12,
  kParse = 13,
  kState = 14,
};

const char *error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string &message) {
  throw Error(code, message);
}

}  // namespace nntc

#endif  // NNTC_ERROR_HPP
