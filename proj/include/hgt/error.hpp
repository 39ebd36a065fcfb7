// Copyright 2026 The hgt-normals Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace hgt {

enum class ErrorCode {
  kInvalidArgument,
  kDimension,
  kConfiguration,
  kDegenerate,
  kContract,
  kIo,
  kParse,
  kNumeric,
};

// Base of every exception thrown by the core. The C API maps the code onto
// its status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define HGT_DEFINE_ERROR(Name, Code)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Code, what) {}      \
  };

HGT_DEFINE_ERROR(InvalidArgumentError, ErrorCode::kInvalidArgument)
HGT_DEFINE_ERROR(DimensionError, ErrorCode::kDimension)
HGT_DEFINE_ERROR(ConfigError, ErrorCode::kConfiguration)
HGT_DEFINE_ERROR(DegenerateError, ErrorCode::kDegenerate)
HGT_DEFINE_ERROR(ContractError, ErrorCode::kContract)
HGT_DEFINE_ERROR(IoError, ErrorCode::kIo)
HGT_DEFINE_ERROR(ParseError, ErrorCode::kParse)
HGT_DEFINE_ERROR(NumericError, ErrorCode::kNumeric)

#undef HGT_DEFINE_ERROR

}  // namespace hgt
